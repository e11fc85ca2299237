"""det J, focal-point scans and the Van Vleck-Morette matrix.

The Van Vleck-Morette matrix M(t0, t) = d^2 S / dx_i dx0_j is obtained two
ways: from the J block via J(t, t0) M(t0, t) = -1, and by finite differences
of the shooting action S(x, t; x0, t0).  Agreement of the two is the
end-to-end check of that identity.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ._parallel import pmap
from .classical_path import BvpProblem, ShootingConfig, solve_bvp_shooting
from .errors import FocalPoint, GridTooCoarse
from .variational import integrate_variational, j_is_singular

__all__ = [
    "FocalScanReport",
    "VanVleckMatrix",
    "det_J",
    "focal_scan",
    "van_vleck_from_J",
    "van_vleck_fd",
    "action_gradient_fd",
]

ROOT_TOL = 1e-10
FOCAL_VALUE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FocalScanReport:
    t0: float
    t1: float
    grid: np.ndarray
    detJ_values: np.ndarray
    focal_times: tuple
    turning_times: tuple = ()
    grid_too_coarse: bool = False

    def summary(self):
        return {
            "t0": self.t0,
            "t1": self.t1,
            "n_grid": int(len(self.grid)),
            "focal_times": list(self.focal_times),
            "turning_times": list(self.turning_times),
            "grid_too_coarse": self.grid_too_coarse,
        }


@dataclass(frozen=True, eq=False)
class VanVleckMatrix:
    matrix: np.ndarray
    source: str = field(default="from_J")

    def __post_init__(self):
        if self.source not in ("from_J", "finite_difference"):
            raise ValueError(f"unknown source {self.source!r}")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("Van Vleck matrix has non-finite entries")


def det_J(traj, tau):
    """det J(tau, t0) along ``traj``."""
    return float(np.linalg.det(integrate_variational(traj, tau).J))


def _bisect(f, a, b, fa, tol=ROOT_TOL):
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def _sign_change_roots(f, grid, vals):
    """Roots of ``f`` in the open interval (grid[0], grid[-1]).

    Exact zeros at the two ends are ignored; interior exact zeros count as
    roots.
    """
    roots = []
    signs = np.sign(vals)
    if signs[0] == 0 and len(signs) > 1:
        nz = np.flatnonzero(signs)
        signs = signs.copy()
        signs[0] = signs[nz[0]] if nz.size else 0
    for i in range(len(grid) - 1):
        s0, s1 = signs[i], signs[i + 1]
        if s1 == 0:
            if 0 < i + 1 < len(grid) - 1:
                roots.append(float(grid[i + 1]))
                signs[i + 1] = s0
            continue
        if s0 != 0 and s0 != s1:
            roots.append(_bisect(f, grid[i], grid[i + 1], vals[i]))
    return roots


def _touching_roots(f, grid, vals, exclude):
    """Double roots: interior local minima of |f| that reach zero without a sign change."""
    roots = []
    a = np.abs(vals)
    for i in range(1, len(grid) - 1):
        if not (a[i] <= a[i - 1] and a[i] <= a[i + 1]):
            continue
        if np.sign(vals[i - 1]) != np.sign(vals[i + 1]):
            continue
        res = minimize_scalar(lambda t: abs(f(t)), bounds=(grid[i - 1], grid[i + 1]),
                              method="bounded", options={"xatol": ROOT_TOL})
        if res.fun < FOCAL_VALUE_TOL and all(abs(res.x - r) > 2 * (grid[1] - grid[0])
                                             for r in exclude + roots):
            roots.append(float(res.x))
    return roots


def focal_scan(traj, n_grid=200):
    """Locate the zeros of det J(tau, t0) and, for n = 1, of y(tau) on (t0, t1].

    Sign changes on a uniform grid are refined by bisection to 1e-10 in tau.
    Even-order zeros of det J (e.g. isotropic n = 2 oscillators, where
    det J = J_1^2) have no sign change; they are picked up from local minima
    of |det J| that drop below 1e-8.

    The report's ``grid_too_coarse`` flag is raised, with a ``GridTooCoarse``
    warning, when two consecutive roots are less than two grid cells apart,
    so further root pairs could hide inside single cells.
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    grid = np.linspace(traj.t0, traj.t1, int(n_grid))

    def dj(t):
        return det_J(traj, t)

    vals = np.array([dj(t) for t in grid])
    # J(t0, t0) = 0; det J leaves it with the sign of det(1/m) > 0
    signed = vals.copy()
    signed[0] = 0.0
    focal = _sign_change_roots(dj, grid, signed)
    if traj.t1 not in focal and j_is_singular(traj.phi(traj.t1)):
        focal.append(float(traj.t1))
    focal += _touching_roots(dj, grid, vals, focal)
    focal = sorted(focal)

    turning = []
    if traj.n == 1:
        def yf(t):
            return float(traj.z(t)[1])
        yvals = np.array([yf(t) for t in grid])
        turning = sorted(_sign_change_roots(yf, grid, yvals))

    h = grid[1] - grid[0]
    coarse = any(np.diff(r).min() < 2 * h for r in (focal, turning) if len(r) > 1)
    if coarse:
        warnings.warn("adjacent roots within two grid cells; refine n_grid", GridTooCoarse,
                      stacklevel=2)
    return FocalScanReport(traj.t0, traj.t1, grid, vals, tuple(focal), tuple(turning), coarse)


def van_vleck_from_J(phi):
    """M(t0, t) = -J(t, t0)^{-1}.

    Raises
    ------
    FocalPoint
        J is singular: t is a focal time.
    """
    if j_is_singular(phi.matrix):
        raise FocalPoint(f"det J = {np.linalg.det(phi.J):.3g}: focal point at t={phi.tau}",
                         time=phi.tau)
    return VanVleckMatrix(-np.linalg.inv(phi.J), source="from_J")


def _default_step(v):
    return 1e-3 * np.maximum(1.0, np.abs(v))


def _warm(cfg, traj):
    return ShootingConfig(y0_guess=traj.shooting.y0, max_iter=cfg.max_iter,
                          residual_tol=cfg.residual_tol, ivp_tol=cfg.ivp_tol)


def van_vleck_fd(spec, bvp, cfg=None, h=None):
    """M_ij = d^2 S / dx_i dx0_j by central differences of shooting actions.

    Each of the 4 n^2 stencil corners is an independent boundary-value solve
    warm-started from the base path.  ``h`` may be a scalar or None for the
    default 1e-3 max(1, |x|) per coordinate.
    """
    cfg = cfg or ShootingConfig()
    n = spec.n
    base = solve_bvp_shooting(spec, bvp, cfg)
    warm = _warm(cfg, base)
    hx = _default_step(bvp.x1) if h is None else np.full(n, float(h))
    hx0 = _default_step(bvp.x0) if h is None else np.full(n, float(h))

    jobs = []
    for i in range(n):
        for j in range(n):
            for si in (1, -1):
                for sj in (1, -1):
                    x1 = bvp.x1.copy()
                    x0 = bvp.x0.copy()
                    x1[i] += si * hx[i]
                    x0[j] += sj * hx0[j]
                    jobs.append((i, j, si * sj, BvpProblem(x0, x1, bvp.t0, bvp.t1)))

    actions = pmap(lambda job: solve_bvp_shooting(spec, job[3], warm).action, jobs)
    M = np.zeros((n, n))
    for (i, j, sgn, _), s in zip(jobs, actions):
        M[i, j] += sgn * s
    M /= 4.0 * np.outer(hx, hx0)
    return VanVleckMatrix(M, source="finite_difference")


def action_gradient_fd(spec, bvp, cfg=None, h=None):
    """(dS/dx, dS/dx0) by central differences of shooting actions.

    Classical mechanics gives dS/dx = y(t1) and dS/dx0 = -y(t0).
    """
    cfg = cfg or ShootingConfig()
    n = spec.n
    base = solve_bvp_shooting(spec, bvp, cfg)
    warm = _warm(cfg, base)
    grads = []
    for which, pt in (("x1", bvp.x1), ("x0", bvp.x0)):
        step = _default_step(pt) if h is None else np.full(n, float(h))
        g = np.zeros(n)
        for k in range(n):
            vals = []
            for sgn in (1, -1):
                x0 = bvp.x0.copy()
                x1 = bvp.x1.copy()
                (x1 if which == "x1" else x0)[k] += sgn * step[k]
                vals.append(solve_bvp_shooting(spec, BvpProblem(x0, x1, bvp.t0, bvp.t1),
                                               warm).action)
            g[k] = (vals[0] - vals[1]) / (2 * step[k])
        grads.append(g)
    return grads[0], grads[1]
