"""Natural Hamiltonians  H = sum y_i^2 / 2 m_i + V(x) - gamma(tau) x.

Potentials come from a closed family (free, harmonic, cubic, quartic,
polynomial) so that V, V' and V'' are exact polynomial evaluations.  For
n > 1 only the free and harmonic potentials are allowed; both are separable,
so the potential Hessian is diagonal and is handled as a vector throughout.

State ordering is always (x_1..x_n, y_1..y_n).
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError

__all__ = [
    "Potential",
    "Drive",
    "HamiltonianSpec",
    "PhaseState",
    "eval_hamiltonian",
    "eval_vector_field",
    "eval_hessian",
    "eval_lagrangian",
]

POTENTIAL_KINDS = ("free", "harmonic", "cubic", "quartic", "polynomial")
DRIVE_KINDS = ("constant", "sinusoidal", "polynomial")


@dataclass(frozen=True)
class Potential:
    """Member of the potential family.

    ``omega`` is used by the harmonic variant (scalar, or one value per
    coordinate for n > 1), ``coefficients`` holds c_0..c_d of
    V(x) = sum c_k x^k for the polynomial variant and ``lam`` the cubic or
    quartic coupling (V = lam x^3 or lam x^4).
    """

    kind: str = "free"
    omega: tuple = ()
    lam: float = 0.0
    coefficients: tuple = ()

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}", key="potential.kind")
        if self.kind == "harmonic":
            om = np.atleast_1d(np.asarray(self.omega, dtype=float))
            if om.size == 0 or not np.all(np.isfinite(om)) or np.any(om <= 0):
                raise ConfigError("harmonic potential needs omega > 0", key="potential.omega")
            object.__setattr__(self, "omega", tuple(om.tolist()))
        if self.kind in ("cubic", "quartic") and not np.isfinite(self.lam):
            raise ConfigError("coupling must be finite", key="potential.lambda")
        if self.kind == "polynomial":
            c = np.asarray(self.coefficients, dtype=float)
            if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
                raise ConfigError("polynomial potential needs finite coefficients c0..cd",
                                  key="potential.coefficients")
            object.__setattr__(self, "coefficients", tuple(c.tolist()))

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def harmonic(cls, omega):
        return cls("harmonic", omega=omega)

    @classmethod
    def cubic(cls, lam):
        return cls("cubic", lam=float(lam))

    @classmethod
    def quartic(cls, lam):
        return cls("quartic", lam=float(lam))

    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", coefficients=tuple(coefficients))

    @property
    def separable(self):
        return self.kind in ("free", "harmonic")

    def poly_coefficients(self, mass):
        """Coefficients c_0..c_d of the 1-D potential for a particle of mass ``mass``."""
        if self.kind == "free":
            return np.zeros(1)
        if self.kind == "harmonic":
            return np.array([0.0, 0.0, 0.5 * float(mass) * self.omega[0] ** 2])
        if self.kind == "cubic":
            return np.array([0.0, 0.0, 0.0, self.lam])
        if self.kind == "quartic":
            return np.array([0.0, 0.0, 0.0, 0.0, self.lam])
        return np.array(self.coefficients)


@dataclass(frozen=True)
class Drive:
    """Time-dependent force gamma(tau) entering H as -gamma(tau) x."""

    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    coefficients: tuple = ()

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise ConfigError(f"unknown drive kind {self.kind!r}", key="drive.kind")
        if self.kind == "polynomial":
            c = np.asarray(self.coefficients, dtype=float)
            if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
                raise ConfigError("polynomial drive needs finite coefficients",
                                  key="drive.coefficients")
            object.__setattr__(self, "coefficients", tuple(c.tolist()))
        vals = (self.value, self.amplitude, self.frequency, self.phase)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigError("drive parameters must be finite", key="drive.params")

    @classmethod
    def constant(cls, value):
        return cls("constant", value=float(value))

    @classmethod
    def sinusoidal(cls, amplitude, frequency, phase=0.0):
        return cls("sinusoidal", amplitude=float(amplitude), frequency=float(frequency),
                   phase=float(phase))

    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", coefficients=tuple(coefficients))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.kind == "constant":
            return np.full_like(tau, self.value)
        if self.kind == "sinusoidal":
            return self.amplitude * np.sin(self.frequency * tau + self.phase)
        return P.polyval(tau, np.array(self.coefficients))


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    y: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be vectors of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(self.tau)):
            raise ValueError("phase state entries must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def z(self):
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A classical Hamiltonian system with ``n`` degrees of freedom.

    Parameters
    ----------
    n : int
        Degrees of freedom.
    mass : float or sequence
        Positive mass, or the diagonal of the mass matrix.
    potential : Potential
    drive : Drive, optional
        Forcing gamma(tau); only allowed with a harmonic potential and n = 1.
    """

    n: int
    mass: np.ndarray
    potential: Potential = field(default_factory=Potential.free)
    drive: Drive = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer", key="n")
        n = int(self.n)
        m = np.atleast_1d(np.asarray(self.mass, dtype=float))
        if m.size == 1:
            m = np.full(n, m[0])
        if m.shape != (n,):
            raise ConfigError(f"mass must be a scalar or have {n} entries", key="mass")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ConfigError("mass must be positive", key="mass")
        m.flags.writeable = False
        pot = self.potential
        if n > 1 and not pot.separable:
            raise ConfigError("n > 1 supports only free and harmonic potentials",
                              key="potential.kind")
        if pot.kind == "harmonic":
            om = np.asarray(pot.omega)
            if om.size not in (1, n):
                raise ConfigError(f"omega must be a scalar or have {n} entries",
                                  key="potential.omega")
        if self.drive is not None and (pot.kind != "harmonic" or n != 1):
            raise ConfigError("a drive is only supported for the 1-DOF harmonic oscillator",
                              key="drive.kind")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mass", m)
        if pot.separable:
            om = np.zeros(n) if pot.kind == "free" else np.broadcast_to(
                np.asarray(pot.omega, dtype=float), (n,))
            stiff = m * om ** 2
            object.__setattr__(self, "_stiffness", stiff)
        else:
            c = pot.poly_coefficients(m[0])
            object.__setattr__(self, "_c", c)
            object.__setattr__(self, "_dc", P.polyder(c))
            object.__setattr__(self, "_ddc", P.polyder(c, 2))

    @property
    def autonomous(self):
        return self.drive is None

    # Potential derivatives.  ``x`` has shape (n, ...) so that trajectory
    # fans can be evaluated in one call.

    def V(self, x):
        x = np.asarray(x, dtype=float)
        if self.potential.separable:
            k = self._stiffness.reshape((-1,) + (1,) * (x.ndim - 1))
            return 0.5 * np.sum(k * x ** 2, axis=0)
        return P.polyval(x[0], self._c)

    def dV(self, x):
        x = np.asarray(x, dtype=float)
        if self.potential.separable:
            k = self._stiffness.reshape((-1,) + (1,) * (x.ndim - 1))
            return k * x
        return P.polyval(x, self._dc)

    def d2V(self, x):
        """Diagonal of the potential Hessian, same shape as ``x``."""
        x = np.asarray(x, dtype=float)
        if self.potential.separable:
            k = self._stiffness.reshape((-1,) + (1,) * (x.ndim - 1))
            return np.broadcast_to(k, x.shape).copy()
        return P.polyval(x, self._ddc)

    def gamma(self, tau):
        if self.drive is None:
            return 0.0
        return self.drive(tau)


def eval_hamiltonian(spec, s):
    """Energy sum y^2/2m + V(x) - gamma(tau) x at the phase state ``s``."""
    h = float(np.sum(s.y ** 2 / (2.0 * spec.mass)) + spec.V(s.x))
    if spec.drive is not None:
        h -= float(spec.gamma(s.tau) * s.x[0])
    return h


def eval_vector_field(spec, s):
    """Hamilton's equations: returns (dx/dtau, dy/dtau) stacked as a 2n vector."""
    xdot = s.y / spec.mass
    ydot = -spec.dV(s.x) + spec.gamma(s.tau)
    return np.concatenate([xdot, ydot])


def eval_hessian(spec, s):
    """2n x 2n Hessian of H in (x, y) ordering: diag(V''(x), 1/m)."""
    return np.diag(np.concatenate([spec.d2V(s.x), 1.0 / spec.mass]))


def eval_lagrangian(spec, s):
    """On-shell Lagrangian y . dx/dtau - H with dx/dtau = y/m."""
    return float(np.sum(s.y ** 2 / spec.mass)) - eval_hamiltonian(spec, s)
