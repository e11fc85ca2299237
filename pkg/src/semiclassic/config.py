"""Run configuration: flat ``key=value`` files with dotted keys.

    # harmonic fixture
    n = 1
    mass = 1.0
    potential.kind = harmonic
    potential.omega = 1.0
    problem.x0 = 0.0
    problem.x1 = 1.0
    problem.t1 = 0.7853981633974483

Vectors are comma separated.  A ``.json`` file holding either a flat object
or a run summary with a ``config`` member is accepted as well, so every
summary the CLI writes can be fed back to reproduce the run.  The raw value
strings are kept and echoed verbatim, which makes the round trip exact.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classical_path import BvpProblem, ShootingConfig
from .errors import ConfigError
from .hamiltonian import Drive, HamiltonianSpec, PhaseState, Potential

__all__ = ["RunConfig", "KNOWN_KEYS", "parse_text", "load_config", "format_value"]

KNOWN_KEYS = {
    "n", "mass",
    "potential.kind", "potential.omega", "potential.lambda", "potential.coefficients",
    "drive.kind", "drive.value", "drive.amplitude", "drive.frequency", "drive.phase",
    "drive.coefficients",
    "problem.x0", "problem.x1", "problem.t0", "problem.t1", "problem.y0",
    "numerics.hbar", "numerics.atol", "numerics.rtol", "numerics.residual_tol",
    "numerics.max_iter", "numerics.n_grid", "numerics.det_route", "numerics.n_fan",
    "grid.x_min", "grid.x_max", "grid.n_points",
    "wavepacket.center", "wavepacket.width", "wavepacket.momentum", "wavepacket.times",
    "output.dir",
}


def format_value(v):
    """Canonical text for a config value; floats use the shortest exact repr."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def parse_text(text):
    """Parse ``key=value`` lines into an ordered dict of raw strings."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value", key=line)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key", key=key)
        raw[key] = value
    return raw


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", key="config") from exc
    if path.suffix == ".json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", key="config") from exc
        if not isinstance(obj, dict):
            raise ConfigError("JSON config must be an object", key="config")
        if isinstance(obj.get("config"), dict):
            obj = obj["config"]
        raw = {str(k): format_value(v) for k, v in obj.items()}
    else:
        raw = parse_text(text)
    return RunConfig.from_raw(raw)


class _Reader:
    def __init__(self, raw):
        self.raw = raw

    def has(self, key):
        return key in self.raw

    def text(self, key, default=None):
        if key not in self.raw:
            if default is None:
                raise ConfigError("missing required key", key=key)
            return default
        return self.raw[key]

    def floats(self, key, default=None):
        if key not in self.raw:
            if default is None:
                raise ConfigError("missing required key", key=key)
            return np.atleast_1d(np.asarray(default, dtype=float))
        try:
            vals = [float(s) for s in self.raw[key].split(",")]
        except ValueError:
            raise ConfigError(f"not a number list: {self.raw[key]!r}", key=key) from None
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("values must be finite", key=key)
        return np.array(vals)

    def float(self, key, default=None, positive=False):
        v = self.floats(key, default)
        if v.size != 1:
            raise ConfigError("expected a single number", key=key)
        v = float(v[0])
        if positive and not v > 0:
            raise ConfigError("must be positive", key=key)
        return v

    def int(self, key, default=None, minimum=1):
        if key not in self.raw:
            if default is None:
                raise ConfigError("missing required key", key=key)
            return default
        try:
            v = int(self.raw[key])
        except ValueError:
            raise ConfigError(f"not an integer: {self.raw[key]!r}", key=key) from None
        if v < minimum:
            raise ConfigError(f"must be at least {minimum}", key=key)
        return v


def _spec_from(r):
    n = r.int("n", 1)
    kind = r.text("potential.kind")
    if kind == "harmonic":
        pot = Potential("harmonic", omega=tuple(r.floats("potential.omega")))
    elif kind in ("cubic", "quartic"):
        pot = Potential(kind, lam=r.float("potential.lambda"))
    elif kind == "polynomial":
        pot = Potential("polynomial", coefficients=tuple(r.floats("potential.coefficients")))
    else:
        pot = Potential(kind)
    drive = None
    if r.has("drive.kind"):
        dk = r.text("drive.kind")
        if dk == "polynomial":
            drive = Drive("polynomial", coefficients=tuple(r.floats("drive.coefficients")))
        elif dk == "constant":
            drive = Drive("constant", value=r.float("drive.value"))
        elif dk == "sinusoidal":
            drive = Drive("sinusoidal", amplitude=r.float("drive.amplitude"),
                          frequency=r.float("drive.frequency"),
                          phase=r.float("drive.phase", 0.0))
        else:
            Drive(dk)
    mass = r.floats("mass", 1.0)
    if np.any(mass <= 0):
        raise ConfigError("mass must be positive", key="mass")
    return HamiltonianSpec(n, mass, pot, drive)


def _vector(r, key, n):
    v = r.floats(key)
    if v.size == 1:
        v = np.full(n, v[0])
    if v.shape != (n,):
        raise ConfigError(f"expected 1 or {n} values", key=key)
    return v


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Parsed run configuration.

    ``bvp`` is set when ``problem.x1`` is given; otherwise ``initial`` holds
    the IVP state (x0, y0) and ``t1`` the end time.  ``raw`` is the exact
    key/value text the run was built from.
    """

    raw: dict
    spec: HamiltonianSpec
    t0: float
    t1: float
    bvp: BvpProblem
    initial: PhaseState
    shooting: ShootingConfig
    hbar: float
    n_grid: int
    det_route: str
    n_fan: int
    grid: tuple
    wavepacket: dict
    output_dir: str

    @classmethod
    def from_raw(cls, raw):
        unknown = sorted(set(raw) - KNOWN_KEYS)
        if unknown:
            raise ConfigError("unknown key", key=unknown[0])
        r = _Reader(raw)
        spec = _spec_from(r)
        n = spec.n
        t0 = r.float("problem.t0", 0.0)
        t1 = r.float("problem.t1")
        if not t1 > t0:
            raise ConfigError("need problem.t1 > problem.t0", key="problem.t1")
        x0 = _vector(r, "problem.x0", n)
        y0 = _vector(r, "problem.y0", n) if r.has("problem.y0") else None
        bvp = initial = None
        if r.has("problem.x1"):
            bvp = BvpProblem(x0, _vector(r, "problem.x1", n), t0, t1)
        elif y0 is not None:
            initial = PhaseState(x0, y0, t0)
        else:
            raise ConfigError("need problem.x1 (boundary values) or problem.y0 (initial "
                              "momentum)", key="problem.x1")
        atol = r.float("numerics.atol", 1e-12, positive=True)
        rtol = r.float("numerics.rtol", 1e-10, positive=True)
        shooting = ShootingConfig(
            y0_guess=y0 if bvp is not None else None,
            max_iter=r.int("numerics.max_iter", 50),
            residual_tol=r.float("numerics.residual_tol", 1e-10, positive=True),
            ivp_tol=(atol, rtol),
        )
        det_route = r.text("numerics.det_route", "variational")
        if det_route not in ("variational", "quadrature"):
            raise ConfigError(f"unknown route {det_route!r}", key="numerics.det_route")

        grid = None
        if any(r.has(k) for k in ("grid.x_min", "grid.x_max", "grid.n_points")):
            lo = r.float("grid.x_min")
            hi = r.float("grid.x_max")
            if not hi > lo:
                raise ConfigError("need grid.x_max > grid.x_min", key="grid.x_max")
            grid = (lo, hi, r.int("grid.n_points", minimum=2))

        wp = None
        if r.has("wavepacket.width") or r.has("wavepacket.times"):
            times = r.floats("wavepacket.times")
            if np.any(np.diff(times) <= 0) or times[0] <= t0:
                raise ConfigError("output times must increase and follow problem.t0",
                                  key="wavepacket.times")
            wp = {
                "center": r.float("wavepacket.center", 0.0),
                "width": r.float("wavepacket.width", 1.0, positive=True),
                "momentum": r.float("wavepacket.momentum", 0.0),
                "times": times,
            }
        return cls(
            raw=dict(raw), spec=spec, t0=t0, t1=t1, bvp=bvp, initial=initial,
            shooting=shooting,
            hbar=r.float("numerics.hbar", 1.0, positive=True),
            n_grid=r.int("numerics.n_grid", 200, minimum=2),
            det_route=det_route,
            n_fan=r.int("numerics.n_fan", 65, minimum=4),
            grid=grid, wavepacket=wp,
            output_dir=r.text("output.dir", "."),
        )

    def echo(self):
        """Key/value strings that rebuild this configuration."""
        return dict(self.raw)
