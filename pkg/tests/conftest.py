from pathlib import Path

import numpy as np
import pytest

from semiclassic import (BvpProblem, Drive, HamiltonianSpec, PhaseState, Potential,
                         integrate_ivp, solve_bvp_shooting)

FIXTURES = Path(__file__).parent / "fixtures"


def spec_free(m=1.0, n=1):
    return HamiltonianSpec(n, m, Potential.free())


def spec_ho(m=1.0, omega=1.0, n=1, drive=None):
    return HamiltonianSpec(n, m, Potential.harmonic(omega), drive)


def spec_quartic(lam=1.0, m=1.0):
    return HamiltonianSpec(1, m, Potential.quartic(lam))


def spec_cubic(lam=0.5, m=1.0):
    return HamiltonianSpec(1, m, Potential.cubic(lam))


def ivp(spec, x, y, t1, t0=0.0, **kw):
    return integrate_ivp(spec, PhaseState(x, y, t0), t1, **kw)


def bvp(spec, x0, x1, t1, t0=0.0, cfg=None):
    return solve_bvp_shooting(spec, BvpProblem(x0, x1, t0, t1), cfg)


# Turning-point-free 1-DOF trajectories: (spec, x0, y0, t1)
TRAJECTORY_CORPUS = [
    (spec_free(1.0), 0.0, 1.0, 2.0),
    (spec_free(2.5), -1.0, -0.7, 3.0),
    (spec_ho(1.0, 1.0), 0.0, 1.0, 1.2),
    (spec_ho(1.3, 0.7), 0.4, 1.1, 1.0),
    (spec_ho(0.8, 2.0), -0.5, -2.0, 0.5),
    (spec_quartic(0.2, 1.0), 0.0, 2.0, 0.5),
    (spec_quartic(1.0, 1.0), 0.2, 1.5, 0.4),
    (spec_quartic(0.5, 2.0), -0.3, -2.5, 0.6),
    (spec_cubic(0.5, 1.3), -0.2, 1.0, 0.5),
    (spec_cubic(0.3, 1.0), 0.1, 0.9, 0.8),
    (spec_cubic(-0.4, 1.0), 0.0, -1.2, 0.6),
]


@pytest.fixture(params=range(len(TRAJECTORY_CORPUS)),
                ids=[f"{c[0].potential.kind}-{i}" for i, c in enumerate(TRAJECTORY_CORPUS)])
def corpus_traj(request):
    spec, x0, y0, t1 = TRAJECTORY_CORPUS[request.param]
    return ivp(spec, x0, y0, t1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def forced(c=1.0, m=1.0, omega=1.0):
    return spec_ho(m, omega, drive=Drive.constant(c))


def forced_action(m, w, c, x0, x1, T):
    """Feynman-Hibbs action of the oscillator driven by a constant force c.

    Its omega -> 0 limit is m dx^2 / 2T + c T (x0 + x1) / 2 - c^2 T^3 / 24 m.
    """
    s, co = np.sin(w * T), np.cos(w * T)
    return (m * w / (2 * s) * ((x0 ** 2 + x1 ** 2) * co - 2 * x0 * x1)
            + c * (x0 + x1) * (1 - co) / (w * s)
            + c ** 2 * (w * T * s - 2 * (1 - co)) / (2 * m * w ** 3 * s))
