"""Fundamental matrix of the variational (Jacobi) equation.

    d/dtau Phi = Jsym H''(x(tau), y(tau)) Phi,    Phi(t0, t0) = 1

Phi is split into n x n blocks

    Phi = [[H, J],
           [L, P]]

in state order (x, y): J = d x(tau) / d y0 is the position response to an
initial momentum kick.  Phi itself is co-integrated with the trajectory in
`classical_path`; this module reads it back and supplies the checks.
"""

from dataclasses import dataclass

import numpy as np

from .classical_path import integrate_ivp, j_is_singular
from .hamiltonian import PhaseState

__all__ = [
    "FundamentalMatrix",
    "symplectic_form",
    "integrate_variational",
    "block_J",
    "flow_jacobian_fd",
    "j_is_singular",
]


def symplectic_form(n):
    """The 2n x 2n matrix [[0, 1], [-1, 0]]."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True, eq=False)
class FundamentalMatrix:
    t0: float
    tau: float
    matrix: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0] // 2

    @property
    def H(self):
        return self.matrix[: self.n, : self.n]

    @property
    def J(self):
        return self.matrix[: self.n, self.n:]

    @property
    def L(self):
        return self.matrix[self.n:, : self.n]

    @property
    def P(self):
        return self.matrix[self.n:, self.n:]

    def symplectic_defect(self):
        """max |Phi^T Jsym Phi - Jsym|."""
        w = symplectic_form(self.n)
        return float(np.max(np.abs(self.matrix.T @ w @ self.matrix - w)))

    def det(self):
        return float(np.linalg.det(self.matrix))

    def as_dict(self):
        return {
            "t0": self.t0,
            "tau": self.tau,
            "n": self.n,
            "phi": self.matrix.ravel().tolist(),
            "blocks": {k: getattr(self, k).tolist() for k in "HJLP"},
        }


def integrate_variational(traj, tau):
    """Phi(tau, t0) along ``traj``.

    Uses the matrix co-integrated with the trajectory.  Trajectories built
    without it are re-integrated from their initial state with the
    variational block switched on.
    """
    if not traj.has_variational:
        traj = integrate_ivp(traj.spec, traj.state(traj.t0), traj.t1)
    return FundamentalMatrix(traj.t0, float(tau), traj.phi(tau))


def block_J(phi):
    """Upper-right n x n block of a fundamental matrix."""
    return phi.J.copy()


def flow_jacobian_fd(spec, z0, t1, h=1e-4, tol=(1e-13, 1e-12)):
    """Central-difference Jacobian of the flow map z0 -> z(t1).

    Independent of the variational integration; the trajectories are run
    without the Phi block and at a tighter tolerance than the default so the
    differencing noise (tol / h) stays below the O(h^2) truncation error.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    n = spec.n
    base = z0.z
    out = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = h
        ends = []
        for sgn in (1.0, -1.0):
            z = base + sgn * e
            traj = integrate_ivp(spec, PhaseState(z[:n], z[n:], z0.tau), t1, tol=tol,
                                 variational=False)
            ends.append(traj.states[-1])
        out[:, k] = (ends[0] - ends[1]) / (2.0 * h)
    return out
