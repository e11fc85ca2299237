"""Command-line interface.

    semiclassic <path|detj|kernel|evolve|reduce> --config FILE [--out DIR]
                [--oracle] [--strict]

Exit codes: 0 success, 2 numerical failure, 3 configuration error,
4 focal or turning point.  Errors are reported on stderr as one JSON object.
Every JSON summary carries the configuration under ``config`` and can be
passed back with ``--config`` to repeat the run.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .classical_path import integrate_ivp, solve_bvp_shooting
from .closed_form import gauge_reduction, picard_vessiot_report, quadrature_J
from .config import load_config
from .errors import (BoundaryLeak, ConfigError, HypothesisViolation, NoConvergence,
                     NotOneDof, NumericalError)
from .export import (write_csv, write_focal_scan, write_gauge_csv, write_json,
                     write_trajectory_csv, write_wavepacket)
from .gelfand_yaglom import det_J, focal_scan
from .propagator import (SemiclassicalKernel, coherent_state_evolved, exact_kernel_forced,
                         exact_kernel_free, exact_kernel_ho, free_gaussian_evolved,
                         free_kernel_fn, gaussian_wavepacket, harmonic_kernel_fn, k_wkb,
                         propagate_wavepacket)

__all__ = ["main", "build_parser", "COMMANDS"]

EXIT_OK = 0
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3
EXIT_HYPOTHESIS = 4


class _Escalated(NumericalError):
    pass


def _trajectory(cfg):
    if cfg.bvp is not None:
        return solve_bvp_shooting(cfg.spec, cfg.bvp, cfg.shooting)
    return integrate_ivp(cfg.spec, cfg.initial, cfg.t1, tol=cfg.shooting.ivp_tol)


def _warning_list(caught):
    return [{"category": w.category.__name__, "message": str(w.message)} for w in caught]


def cmd_path(cfg, out, args):
    traj = _trajectory(cfg)
    write_trajectory_csv(traj, out / "trajectory.csv")
    info = traj.shooting
    summary = {
        "y0": traj.state(cfg.t0).y,
        "S": traj.action,
        "converged": True if info is None else info.converged,
        "iterations": 0 if info is None else info.iterations,
        "residual": 0.0 if info is None else info.residual,
        "energy_drift": traj.energy_drift,
        "config": cfg.echo(),
    }
    write_json(out / "path.json", summary)
    return summary


def cmd_detj(cfg, out, args):
    traj = _trajectory(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = focal_scan(traj, cfg.n_grid)
    extra = {"warnings": _warning_list(caught), "config": cfg.echo()}
    write_focal_scan(report, out / "detj.csv", out / "detj.json", extra)
    return {**report.summary(), **extra}


def _oracle_kernel(cfg):
    """Exact kernel at the configured endpoints, or None without an oracle."""
    spec = cfg.spec
    kind = spec.potential.kind
    if kind == "free":
        return exact_kernel_free(spec.mass, cfg.hbar, cfg.bvp)
    if kind == "harmonic" and spec.drive is None:
        return exact_kernel_ho(spec.mass, spec.potential.omega, cfg.hbar, cfg.bvp)
    if kind == "harmonic":
        return exact_kernel_forced(spec.mass[0], spec.potential.omega[0], spec.drive,
                                   cfg.hbar, cfg.bvp, cfg.shooting)
    return None


def _oracle_kernel_fn(spec, hbar):
    if spec.drive is not None or spec.n != 1:
        return None
    if spec.potential.kind == "free":
        return free_kernel_fn(spec.mass[0], hbar)
    if spec.potential.kind == "harmonic":
        return harmonic_kernel_fn(spec.mass[0], spec.potential.omega[0], hbar)
    return None


def cmd_kernel(cfg, out, args):
    if cfg.bvp is None:
        raise ConfigError("the kernel needs boundary values", key="problem.x1")
    res = k_wkb(cfg.spec, cfg.bvp, cfg.hbar, cfg.shooting, n_scan=cfg.n_grid,
                det_route=cfg.det_route)
    summary = res.as_dict()
    if args.oracle:
        exact = _oracle_kernel(cfg)
        if exact is None:
            summary["oracle"] = None
        else:
            summary["oracle"] = {
                "exact_re": exact.real,
                "exact_im": exact.imag,
                "deviation": abs(res.amplitude - exact) / abs(exact),
            }
    if cfg.grid is not None:
        if cfg.spec.n != 1:
            raise NotOneDof("kernel grids need n = 1")
        lo, hi, npts = cfg.grid
        x = np.linspace(lo, hi, npts)
        kern = SemiclassicalKernel(cfg.spec, cfg.hbar, n_fan=cfg.n_fan, tol=cfg.shooting.ivp_tol)
        K = kern(x, cfg.bvp.x0, cfg.t0, cfg.t1)[:, 0]
        rows = [[a, k.real, k.imag, abs(k) ** 2] for a, k in zip(x, K)]
        header = ["x", "re", "im", "abs2"]
        oracle_fn = _oracle_kernel_fn(cfg.spec, cfg.hbar) if args.oracle else None
        grid_info = {"x_min": lo, "x_max": hi, "n_points": npts,
                     "uncovered": kern.last_uncovered}
        if oracle_fn is not None:
            E = oracle_fn(x, cfg.bvp.x0, cfg.t0, cfg.t1)[:, 0]
            rows = [r + [e.real, e.imag] for r, e in zip(rows, E)]
            header += ["exact_re", "exact_im"]
            grid_info["max_deviation"] = float(np.max(np.abs(K - E) / np.abs(E)))
        write_csv(out / "kernel_grid.csv", header, rows)
        summary["grid"] = grid_info
    summary["config"] = cfg.echo()
    write_json(out / "kernel.json", summary)
    return summary


def _wavepacket_oracle(cfg):
    """Analytic psi(x, t) for free Gaussians and harmonic coherent states."""
    spec = cfg.spec
    wp = cfg.wavepacket
    if spec.n != 1 or spec.drive is not None:
        return None
    m = spec.mass[0]
    if spec.potential.kind == "free":
        return lambda x, t: free_gaussian_evolved(x, t - cfg.t0, m, cfg.hbar, wp["center"],
                                                  wp["width"], wp["momentum"])
    if spec.potential.kind == "harmonic":
        w = spec.potential.omega[0]
        if abs(wp["width"] - np.sqrt(cfg.hbar / (m * w))) <= 1e-12 * wp["width"]:
            return lambda x, t: coherent_state_evolved(x, t - cfg.t0, m, w, cfg.hbar,
                                                       wp["center"], wp["momentum"])
    return None


def _analytic_width(cfg, t):
    """Standard deviation of |psi|^2 for a freely spreading Gaussian."""
    spec = cfg.spec
    if spec.potential.kind != "free" or spec.n != 1:
        return None
    s = cfg.wavepacket["width"]
    return s / np.sqrt(2.0) * np.sqrt(1.0 + (cfg.hbar * (t - cfg.t0) / (spec.mass[0] * s ** 2))
                                      ** 2)


def cmd_evolve(cfg, out, args):
    if cfg.wavepacket is None or cfg.grid is None:
        raise ConfigError("evolve needs wavepacket.* and grid.* keys", key="wavepacket.times")
    if cfg.spec.n != 1:
        raise NotOneDof("wavepacket evolution needs n = 1")
    wp = cfg.wavepacket
    lo, hi, npts = cfg.grid
    psi = gaussian_wavepacket(lo, hi, npts, wp["center"], wp["width"], wp["momentum"],
                              cfg.hbar, t=cfg.t0)
    kern = SemiclassicalKernel(cfg.spec, cfg.hbar, n_fan=cfg.n_fan, tol=cfg.shooting.ivp_tol)
    oracle = _wavepacket_oracle(cfg)
    meta = {"hbar": cfg.hbar, "config": cfg.echo()}
    rows = []
    all_warnings = []
    for k, t in enumerate(wp["times"]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            psi = propagate_wavepacket(kern, psi, float(t))
        leaks = [w for w in caught if issubclass(w.category, BoundaryLeak)]
        if leaks and args.strict:
            raise _Escalated(f"t={t}: {leaks[0].message}")
        all_warnings += _warning_list(caught)
        write_wavepacket(psi, out / f"psi_{k:03d}.csv", out / f"psi_{k:03d}.json",
                         {**meta, "uncovered": kern.last_uncovered})
        err = None if oracle is None else psi.l2_distance(oracle(psi.x, float(t)))
        rows.append({
            "t": float(t),
            "norm": psi.norm(),
            "mean": psi.mean_position(),
            "width": psi.rms_width(),
            "width_analytic": _analytic_width(cfg, float(t)),
            "oracle_l2": err,
        })
    header = ["t", "norm", "mean", "width", "width_analytic", "oracle_l2"]
    write_csv(out / "evolve.csv", header,
              ([r[h] if r[h] is not None else "" for h in header] for r in rows))
    summary = {"times": rows, "warnings": all_warnings, "config": cfg.echo()}
    write_json(out / "evolve.json", summary)
    return summary


def cmd_reduce(cfg, out, args):
    if cfg.spec.n != 1:
        raise NotOneDof("the gauge reduction needs n = 1")
    traj = _trajectory(cfg)
    red = gauge_reduction(traj, n_grid=cfg.n_grid)
    write_gauge_csv(red, out / "gauge.csv")
    qj = quadrature_J(traj, cfg.t1)
    dj = det_J(traj, cfg.t1)
    dev = abs(qj - dj) / abs(dj)
    write_csv(out / "compare.csv", ["t", "quadrature_J", "det_J", "relative_deviation"],
              [[cfg.t1, qj, dj, dev]])
    m = cfg.spec.mass[0]
    y = traj.dense_y(red.taus)[:, 0]
    expected = -m / y ** 2
    pa10 = float(np.max(np.abs(red.PA[:, 1, 0] - expected) / np.abs(expected)))
    pv = picard_vessiot_report(traj, cfg.t1)
    write_json(out / "picard_vessiot.json", pv.as_dict())
    summary = {
        "structure_residual": red.structure_residual(),
        "pa10_relative_error": pa10,
        "comparison": {"t": cfg.t1, "quadrature_J": qj, "det_J": dj,
                       "relative_deviation": dev},
        "picard_vessiot": pv.as_dict(),
        "config": cfg.echo(),
    }
    write_json(out / "reduce.json", summary)
    return summary


COMMANDS = {
    "path": cmd_path,
    "detj": cmd_detj,
    "kernel": cmd_kernel,
    "evolve": cmd_evolve,
    "reduce": cmd_reduce,
}


def build_parser():
    p = argparse.ArgumentParser(prog="semiclassic",
                                description="Semiclassical propagators from classical paths.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="key=value or JSON config file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--oracle", action="store_true", help="compare against exact kernels")
    p.add_argument("--strict", action="store_true", help="treat boundary leaks as failures")
    return p


def _fail(code, exc):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("key", "time", "iterations", "residual"):
        v = getattr(exc, attr, None)
        if v is not None:
            payload[attr] = float(v) if isinstance(v, (float, np.floating)) else v
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory: {exc}", key="output.dir")
        COMMANDS[args.command](cfg, out, args)
    except (ConfigError, NotOneDof) as exc:
        return _fail(EXIT_CONFIG, exc)
    except HypothesisViolation as exc:
        return _fail(EXIT_HYPOTHESIS, exc)
    except (NumericalError, NoConvergence, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, exc)
    print(json.dumps({"command": args.command, "out": str(out), "status": "ok"}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
