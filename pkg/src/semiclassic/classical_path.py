"""Classical trajectories: initial-value integration and Newton shooting.

Hamilton's equations are integrated together with the running action
S(tau) = int (y.xdot - H) dtau and, optionally, the fundamental matrix of the
variational equation, all in one adaptive DOP853 loop.  The augmented state
vector is laid out as

    [x (n), y (n), S (1), Phi (2n*2n, row-major)]

so the Hessian along the path never has to be interpolated.
"""

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import (NoConvergence, SingularShootingJacobian, StepSizeUnderflow)
from .hamiltonian import PhaseState, eval_lagrangian

__all__ = [
    "ClassicalTrajectory",
    "BvpProblem",
    "ShootingConfig",
    "ShootingInfo",
    "integrate_ivp",
    "solve_bvp_shooting",
    "compute_action",
    "lagrangian_quadrature",
]

logger = logging.getLogger(__name__)

DEFAULT_TOL = (1e-12, 1e-10)  # (atol, rtol)
SINGULAR_DET = 1e-12
# integration noise leaves J ~ rtol * |Phi| at a true focal time
SINGULAR_REL = 1e-9
MAX_HALVINGS = 8


def j_is_singular(phi):
    """True when the J block of ``phi`` vanishes to within integration accuracy."""
    n = phi.shape[0] // 2
    J = phi[:n, n:]
    if abs(np.linalg.det(J)) < SINGULAR_DET:
        return True
    smin = np.linalg.svd(J, compute_uv=False)[-1]
    return smin < SINGULAR_REL * np.linalg.norm(phi, 2)


@dataclass(frozen=True)
class BvpProblem:
    x0: np.ndarray
    x1: np.ndarray
    t0: float
    t1: float

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        x1 = np.atleast_1d(np.asarray(self.x1, dtype=float))
        if x0.shape != x1.shape:
            raise ValueError("x0 and x1 must have the same length")
        dt = float(self.t1) - float(self.t0)
        if not (np.isfinite(dt) and dt > 0):
            raise ValueError("need finite t1 > t0")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))

    @property
    def duration(self):
        return self.t1 - self.t0


@dataclass(frozen=True)
class ShootingConfig:
    """Newton shooting settings.

    ``y0_guess=None`` selects the free-particle guess m (x1 - x0) / (t1 - t0).
    ``ivp_tol`` is the (absolute, relative) integrator tolerance pair.
    """

    y0_guess: np.ndarray = None
    max_iter: int = 50
    residual_tol: float = 1e-10
    ivp_tol: tuple = DEFAULT_TOL

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not (self.residual_tol > 0 and min(self.ivp_tol) > 0):
            raise ValueError("tolerances must be positive")
        if self.y0_guess is not None:
            g = np.atleast_1d(np.asarray(self.y0_guess, dtype=float))
            if not np.all(np.isfinite(g)):
                raise ValueError("y0_guess must be finite")
            object.__setattr__(self, "y0_guess", g)


@dataclass(frozen=True)
class ShootingInfo:
    y0: np.ndarray
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True, eq=False)
class ClassicalTrajectory:
    """A sampled integral curve with dense output.

    ``times``/``states``/``actions`` are the integrator steps; ``phis`` holds
    the co-integrated fundamental matrix Phi(tau, t0) at those steps (None
    when the trajectory was integrated without the variational block).
    """

    spec: object
    t0: float
    t1: float
    times: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    phis: np.ndarray
    sol: object
    energy_drift: float = 0.0
    shooting: ShootingInfo = None

    @property
    def n(self):
        return self.spec.n

    @property
    def action(self):
        return float(self.actions[-1])

    @property
    def has_variational(self):
        return self.phis is not None

    def _raw(self, tau):
        tau = float(tau)
        if not (self.t0 - 1e-12 * max(1.0, abs(self.t0)) <= tau
                <= self.t1 + 1e-12 * max(1.0, abs(self.t1))):
            raise ValueError(f"tau={tau} outside trajectory span [{self.t0}, {self.t1}]")
        i = np.searchsorted(self.times, tau)
        if i < len(self.times) and self.times[i] == tau:
            return i, None
        return None, self.sol(tau)

    def z(self, tau):
        """Phase-space point (x, y) at ``tau`` as a 2n vector."""
        i, raw = self._raw(tau)
        if raw is None:
            return self.states[i].copy()
        return raw[: 2 * self.n]

    def state(self, tau):
        z = self.z(tau)
        return PhaseState(z[: self.n], z[self.n:], tau)

    def x(self, tau):
        return self.z(tau)[: self.n]

    def y(self, tau):
        return self.z(tau)[self.n:]

    def running_action(self, tau):
        i, raw = self._raw(tau)
        if raw is None:
            return float(self.actions[i])
        return float(raw[2 * self.n])

    def phi(self, tau):
        if self.phis is None:
            raise ValueError("trajectory was integrated without the variational equation")
        i, raw = self._raw(tau)
        if raw is None:
            return self.phis[i].copy()
        d = 2 * self.n
        return raw[d + 1:].reshape(d, d)

    def dense_y(self, taus):
        """Momenta at an array of times, shape (len(taus), n), from the interpolant."""
        taus = np.asarray(taus, dtype=float)
        return self.sol(taus)[self.n: 2 * self.n].T


def _make_rhs(spec, variational):
    n = spec.n
    m = spec.mass
    inv_m = 1.0 / m
    drive = spec.drive

    def rhs(t, u):
        x = u[:n]
        y = u[n:2 * n]
        g = drive(t) if drive is not None else 0.0
        dv = spec.dV(x)
        out = np.empty_like(u)
        out[:n] = y * inv_m
        out[n:2 * n] = -dv + g
        kin = np.sum(y * y * inv_m)
        h = 0.5 * kin + spec.V(x)
        if drive is not None:
            h = h - g * x[0]
        out[2 * n] = kin - h
        if variational:
            d = 2 * n
            phi = u[d + 1:].reshape(d, d)
            dphi = out[d + 1:].reshape(d, d)
            dphi[:n] = inv_m[:, None] * phi[n:]
            dphi[n:] = -spec.d2V(x)[:, None] * phi[:n]
        return out

    return rhs


def _energy_drift(spec, states, times):
    n = spec.n
    x = states[:, :n].T
    y = states[:, n:].T
    kin = np.sum(y ** 2 / (2.0 * spec.mass[:, None]), axis=0)
    h = kin + spec.V(x)
    scale = max(abs(h[0]), float(np.max(kin)), float(np.max(np.abs(h))), 1e-300)
    return float(np.max(np.abs(h - h[0])) / scale)


def integrate_ivp(spec, z0, t1, tol=DEFAULT_TOL, variational=True, energy_tol=1e-9):
    """Integrate Hamilton's equations from the phase state ``z0`` up to ``t1``.

    Parameters
    ----------
    spec : HamiltonianSpec
    z0 : PhaseState
        Initial state; ``z0.tau`` is the start time.
    t1 : float
        Final time, must exceed ``z0.tau``.
    tol : (float, float)
        Absolute and relative local error tolerance.
    variational : bool
        Co-integrate the fundamental matrix Phi(tau, t0).
    energy_tol : float
        Allowed relative energy drift for autonomous systems.  One retry at a
        100x tighter tolerance is made before a warning is issued.

    Returns
    -------
    ClassicalTrajectory

    Raises
    ------
    StepSizeUnderflow
        The adaptive step collapsed or the solution left the finite range.
    """
    t0 = float(z0.tau)
    t1 = float(t1)
    if not t1 > t0:
        raise ValueError("t1 must be greater than the initial time")
    n = spec.n
    d = 2 * n
    u0 = np.concatenate([z0.x, z0.y, [0.0]])
    if variational:
        u0 = np.concatenate([u0, np.eye(d).ravel()])
    rhs = _make_rhs(spec, variational)
    atol, rtol = tol

    for attempt in range(2):
        with np.errstate(over="ignore", invalid="ignore"):
            res = solve_ivp(rhs, (t0, t1), u0, method="DOP853", rtol=rtol, atol=atol,
                            dense_output=True)
        if res.status != 0 or not np.all(np.isfinite(res.y)):
            raise StepSizeUnderflow(f"integration stalled at tau={res.t[-1]:.6g}: {res.message}")
        states = res.y[:d].T.copy()
        drift = _energy_drift(spec, states, res.t) if spec.autonomous else 0.0
        if drift <= energy_tol or not spec.autonomous:
            break
        if attempt == 0:
            logger.debug("energy drift %.3g > %.3g, retrying tighter", drift, energy_tol)
            atol, rtol = atol / 100.0, max(rtol / 100.0, 1e-14)
    else:
        warnings.warn(f"relative energy drift {drift:.3g} exceeds {energy_tol:.3g}",
                      RuntimeWarning, stacklevel=2)

    phis = res.y[d + 1:].T.reshape(-1, d, d).copy() if variational else None
    return ClassicalTrajectory(
        spec=spec, t0=t0, t1=t1, times=res.t.copy(), states=states,
        actions=res.y[d].copy(), phis=phis, sol=res.sol, energy_drift=drift,
    )


def solve_bvp_shooting(spec, bvp, cfg=None):
    """Find the classical path from (x0, t0) to (x1, t1) by Newton shooting.

    The Newton matrix d x(t1) / d y0 is the J block of the co-integrated
    fundamental matrix.  Steps are halved (at most 8 times) when the residual
    does not decrease.  The returned trajectory carries a ``ShootingInfo``.

    Raises
    ------
    SingularShootingJacobian
        |det J(t1, t0)| < 1e-12 (or J is singular to integration accuracy)
        at an iterate: t1 is a focal time of the path.
    NoConvergence
        Residual still above ``cfg.residual_tol`` after ``cfg.max_iter`` steps.
    """
    cfg = cfg or ShootingConfig()
    n = spec.n
    if bvp.x0.shape != (n,):
        raise ValueError(f"BVP endpoints must have {n} components")
    if cfg.y0_guess is None:
        y0 = spec.mass * (bvp.x1 - bvp.x0) / bvp.duration
    else:
        y0 = np.broadcast_to(cfg.y0_guess, (n,)).astype(float)

    def shoot(p):
        traj = integrate_ivp(spec, PhaseState(bvp.x0, p, bvp.t0), bvp.t1, tol=cfg.ivp_tol)
        return traj, traj.states[-1, :n] - bvp.x1

    traj, r = shoot(y0)
    rn = float(np.max(np.abs(r)))
    for it in range(cfg.max_iter + 1):
        J = traj.phis[-1][:n, n:]
        if j_is_singular(traj.phis[-1]):
            detj = np.linalg.det(J)
            raise SingularShootingJacobian(
                f"det J(t1,t0) = {detj:.3g} at iteration {it}: focal point at t1={bvp.t1}",
                time=bvp.t1)
        if rn <= cfg.residual_tol:
            info = ShootingInfo(y0=y0.copy(), iterations=it, residual=rn, converged=True)
            return replace(traj, shooting=info)
        if it == cfg.max_iter:
            break
        step = np.linalg.solve(J, r)
        lam = 1.0
        best = None
        for _ in range(MAX_HALVINGS + 1):
            cand = y0 - lam * step
            try:
                ctraj, cr = shoot(cand)
            except StepSizeUnderflow:
                lam *= 0.5
                continue
            crn = float(np.max(np.abs(cr)))
            if best is None or crn < best[3]:
                best = (cand, ctraj, cr, crn)
            if crn < rn:
                break
            lam *= 0.5
        if best is None:
            raise NoConvergence("every damped Newton step left the integrable region",
                                iterations=it + 1, residual=rn)
        y0, traj, r, rn = best
    raise NoConvergence(f"shooting residual {rn:.3g} after {cfg.max_iter} iterations",
                        iterations=cfg.max_iter, residual=rn)


def compute_action(traj):
    """Classical action S = int (y.xdot - H) dtau accumulated along ``traj``."""
    return traj.action


def lagrangian_quadrature(traj, t_a=None, t_b=None, epsrel=1e-12):
    """Recompute the action by adaptive quadrature of the on-shell Lagrangian.

    Uses only the interpolated (x, y) and the Hamiltonian, never the
    co-integrated action component.
    """
    t_a = traj.t0 if t_a is None else float(t_a)
    t_b = traj.t1 if t_b is None else float(t_b)
    spec = traj.spec
    n = spec.n

    def f(tau):
        u = traj.sol(tau)
        return eval_lagrangian(spec, PhaseState(u[:n], u[n:2 * n], tau))

    inner = traj.times[(traj.times > t_a) & (traj.times < t_b)]
    edges = np.concatenate([[t_a], inner, [t_b]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=100)
        total += val
    return total
