"""Closed-form solution of the 1-DOF variational equation by quadrature.

For H = y^2/2m + V(x) the variational system

    d/dtau (xi, eta) = [[0, 1/m], [-V'', 0]] (xi, eta)

has the particular solution (y/m, -V').  Taking it as the second column of
the symplectic gauge matrix

    P = [[0, y/m], [-m/y, -V']]

turns the system lower triangular, P[A] = P^-1 A P - P^-1 P' =
[[0, 0], [-m/y^2, 0]], so everything follows from one quadrature

    q(tau) = int_{t0}^{tau} dsigma / y(sigma)^2

and in particular J(t, t0) = y(t0) y(t) q(t) / m.  All of this needs
y != 0 on the interval (no turning points).
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import NotOneDof, TurningPoint, TurningPointInInterval

__all__ = [
    "GaugeReduction",
    "PicardVessiotReport",
    "particular_solution",
    "gauge_matrix_P",
    "reduced_matrix",
    "inverse_momentum_quadrature",
    "quadrature_J",
    "general_solution",
    "solution_matrix",
    "closed_form_phi",
    "gauge_reduction",
    "picard_vessiot_report",
    "harmonic_quadrature_closed_form",
]

Y_FLOOR = 1e-10
QUAD_TOL = 1e-10
_SCAN_POINTS = 512


def _check_natural(traj):
    spec = traj.spec
    if spec.n != 1:
        raise NotOneDof(f"closed-form reduction needs n = 1, got n = {spec.n}")
    if not spec.autonomous:
        raise NotOneDof("closed-form reduction needs an autonomous natural Hamiltonian")
    return spec


def _xy(traj, tau):
    z = traj.z(tau)
    return float(z[0]), float(z[1])


def particular_solution(traj, tau):
    """(y/m, -V'(x)) at ``tau``: the phase velocity, a solution of the VE."""
    spec = _check_natural(traj)
    x, y = _xy(traj, tau)
    return np.array([y / spec.mass[0], -float(spec.dV(np.array([x]))[0])])


def gauge_matrix_P(traj, tau, y_floor=Y_FLOOR):
    spec = _check_natural(traj)
    m = spec.mass[0]
    x, y = _xy(traj, tau)
    if abs(y) < y_floor:
        raise TurningPoint(f"|y| = {abs(y):.3g} below {y_floor:.1g} at tau={tau}", time=tau)
    dv = float(spec.dV(np.array([x]))[0])
    return np.array([[0.0, y / m], [-m / y, -dv]])


def reduced_matrix(traj, tau, y_floor=Y_FLOOR):
    """P^-1 A P - P^-1 dP/dtau, with dP/dtau from the chain rule along the flow."""
    spec = _check_natural(traj)
    m = spec.mass[0]
    x, y = _xy(traj, tau)
    P = gauge_matrix_P(traj, tau, y_floor)
    xa = np.array([x])
    dv = float(spec.dV(xa)[0])
    d2v = float(spec.d2V(xa)[0])
    xdot = y / m
    ydot = -dv
    A = np.array([[0.0, 1.0 / m], [-d2v, 0.0]])
    Pdot = np.array([[0.0, ydot / m], [m * ydot / y ** 2, -d2v * xdot]])
    return np.linalg.solve(P, A @ P - Pdot)


def _check_no_turning(traj, t_a, t_b, y_floor):
    taus = np.union1d(np.linspace(t_a, t_b, _SCAN_POINTS),
                      traj.times[(traj.times >= t_a) & (traj.times <= t_b)])
    y = traj.dense_y(taus)[:, 0]
    i_min = int(np.argmin(np.abs(y)))
    if abs(y[i_min]) < y_floor:
        raise TurningPointInInterval(f"|y| = {abs(y[i_min]):.3g} at tau={taus[i_min]:.6g}",
                                     time=float(taus[i_min]))
    flips = np.flatnonzero(np.sign(y[1:]) != np.sign(y[:-1]))
    if flips.size:
        t = float(taus[flips[0]])
        raise TurningPointInInterval(f"momentum changes sign near tau={t:.6g}", time=t)


def inverse_momentum_quadrature(traj, t, t_a=None, y_floor=Y_FLOOR):
    """int_{t_a}^{t} dtau / y(tau)^2 by adaptive quadrature of the dense output."""
    _check_natural(traj)
    t_a = traj.t0 if t_a is None else float(t_a)
    t = float(t)
    if t == t_a:
        return 0.0
    _check_no_turning(traj, t_a, t, y_floor)

    def f(tau):
        return 1.0 / traj.sol(tau)[1] ** 2

    inner = traj.times[(traj.times > t_a) & (traj.times < t)]
    edges = np.concatenate([[t_a], inner, [t]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(f, a, b, epsabs=0.0, epsrel=QUAD_TOL, limit=200)
        total += val
    return total


def quadrature_J(traj, t, y_floor=Y_FLOOR):
    """J(t, t0) = y(t0) y(t) int_{t0}^{t} dtau/y^2 / m.

    Raises
    ------
    TurningPointInInterval
        y vanishes (|y| < y_floor) somewhere on [t0, t].
    """
    spec = _check_natural(traj)
    q = inverse_momentum_quadrature(traj, t, y_floor=y_floor)
    _, y0 = _xy(traj, traj.t0)
    _, yt = _xy(traj, t)
    return y0 * yt * q / spec.mass[0]


def solution_matrix(traj, tau, q=None, y_floor=Y_FLOOR):
    """Symplectic fundamental matrix of the VE built from the quadrature q(tau).

    Columns are P applied to the reduced fundamental matrix [[1, 0], [-m q, 1]]:

        [[-y q,              y/m],
         [-m/y + m V' q,     -V']]
    """
    spec = _check_natural(traj)
    m = spec.mass[0]
    x, y = _xy(traj, tau)
    if abs(y) < y_floor:
        raise TurningPoint(f"|y| = {abs(y):.3g} at tau={tau}", time=tau)
    if q is None:
        q = inverse_momentum_quadrature(traj, tau, y_floor=y_floor)
    dv = float(spec.dV(np.array([x]))[0])
    return np.array([[-y * q, y / m], [-m / y + m * dv * q, -dv]])


def general_solution(traj, tau, c1, c2, y_floor=Y_FLOOR):
    """(xi, eta)(tau) for integration constants (c1, c2)."""
    return solution_matrix(traj, tau, y_floor=y_floor) @ np.array([c1, c2], dtype=float)


def closed_form_phi(traj, tau, y_floor=Y_FLOOR):
    """Phi(tau, t0) from the quadrature route: F(tau) F(t0)^-1."""
    F0 = solution_matrix(traj, traj.t0, q=0.0, y_floor=y_floor)
    F = solution_matrix(traj, tau, y_floor=y_floor)
    # det F0 = 1
    F0_inv = np.array([[F0[1, 1], -F0[0, 1]], [-F0[1, 0], F0[0, 0]]])
    return F @ F0_inv


@dataclass(frozen=True, eq=False)
class GaugeReduction:
    taus: np.ndarray
    P: np.ndarray
    PA: np.ndarray
    quad: np.ndarray

    def structure_residual(self):
        """Largest |entry| of P[A] outside the (1, 0) slot."""
        return float(np.max(np.abs(self.PA[:, [0, 0, 1], [0, 1, 1]])))

    def rows(self):
        for i, tau in enumerate(self.taus):
            yield [tau, *self.P[i].ravel(), *self.PA[i].ravel(), self.quad[i]]


def gauge_reduction(traj, n_grid=50, t=None, y_floor=Y_FLOOR):
    """Sample P, P[A] and the running quadrature on a uniform grid over [t0, t]."""
    _check_natural(traj)
    t = traj.t1 if t is None else float(t)
    _check_no_turning(traj, traj.t0, t, y_floor)
    taus = np.linspace(traj.t0, t, int(n_grid))
    Ps = np.array([gauge_matrix_P(traj, s, y_floor) for s in taus])
    PAs = np.array([reduced_matrix(traj, s, y_floor) for s in taus])
    q = np.zeros(len(taus))
    for i in range(1, len(taus)):
        q[i] = q[i - 1] + inverse_momentum_quadrature(traj, taus[i], t_a=taus[i - 1],
                                                      y_floor=y_floor)
    return GaugeReduction(taus, Ps, PAs, q)


def harmonic_quadrature_closed_form(m, omega, x0, x, t):
    """Elementary value of int_0^t dtau / y^2 for the oscillator path x0 -> x."""
    c = np.cos(omega * t)
    s = np.sin(omega * t)
    den = m ** 2 * omega ** 3 * (x ** 2 * c - x * x0 - x * x0 * c ** 2 + x0 ** 2 * c)
    return s ** 3 / den


@dataclass(frozen=True)
class PicardVessiotReport:
    """Bookkeeping of the Liouvillian tower K subset K(int dtau/y^2).

    ``elementary`` is True when the adjoined integral is known to be
    elementary for the potential family, None when unknown.
    """

    family: str
    base_elements: tuple
    adjoined_integral: str
    tower_depth: int
    elementary: object
    numeric_value: float
    closed_form_value: object = None
    closed_form_expression: str = None

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def picard_vessiot_report(traj, t, y_floor=Y_FLOOR):
    spec = _check_natural(traj)
    q = inverse_momentum_quadrature(traj, t, y_floor=y_floor)
    kind = spec.potential.kind
    m = float(spec.mass[0])
    x0, y0 = _xy(traj, traj.t0)
    x1, _ = _xy(traj, t)
    dt = float(t) - traj.t0
    closed = expr = None
    elementary = None
    if kind == "free":
        elementary = True
        closed = dt / y0 ** 2
        expr = "(t - t0) / y0^2"
    elif kind == "harmonic":
        elementary = True
        w = spec.potential.omega[0]
        closed = float(harmonic_quadrature_closed_form(m, w, x0, x1, dt))
        expr = ("sin^3(w t) / (m^2 w^3 (x^2 cos(w t) - x x0 - x x0 cos^2(w t)"
                " + x0^2 cos(w t)))")
    return PicardVessiotReport(
        family=kind,
        base_elements=("y(tau)", "V'(x(tau))"),
        adjoined_integral="int dtau / y(tau)^2",
        tower_depth=1,
        elementary=elementary,
        numeric_value=float(q),
        closed_form_value=closed,
        closed_form_expression=expr,
    )
