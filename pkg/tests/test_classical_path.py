import warnings

import numpy as np
import pytest

from semiclassic import (BvpProblem, ShootingConfig, SingularShootingJacobian,
                         StepSizeUnderflow, NoConvergence, compute_action, eval_hamiltonian,
                         lagrangian_quadrature, solve_bvp_shooting)
from semiclassic.hamiltonian import PhaseState

from conftest import bvp, forced, forced_action, ivp, spec_cubic, spec_free, spec_ho, spec_quartic


def test_free_ivp():
    tr = ivp(spec_free(), 0.0, 1.0, 2.0)
    np.testing.assert_allclose(tr.states[-1], [2.0, 1.0], atol=1e-12)
    assert tr.action == pytest.approx(1.0, abs=1e-12)


def test_harmonic_ivp_quarter_period():
    tr = ivp(spec_ho(), 1.0, 0.0, np.pi / 2)
    np.testing.assert_allclose(tr.states[-1], [0.0, -1.0], atol=1e-9)
    taus = np.linspace(0, np.pi / 2, 17)
    np.testing.assert_allclose([tr.x(t)[0] for t in taus], np.cos(taus), atol=1e-9)


def test_quartic_energy_conservation():
    sp = spec_quartic(1.0)
    tr = ivp(sp, 1.0, 0.0, 1.0)
    e0 = eval_hamiltonian(sp, PhaseState(1.0, 0.0))
    drift = max(abs(eval_hamiltonian(sp, PhaseState(s[:1], s[1:])) - e0) for s in tr.states)
    assert drift < 1e-9
    # endpoint stable under a tighter integrator tolerance
    fine = ivp(sp, 1.0, 0.0, 1.0, tol=(1e-13, 1e-12))
    np.testing.assert_allclose(tr.states[-1], fine.states[-1], atol=1e-8)


def test_long_run_energy_drift():
    tr = ivp(spec_quartic(0.5), 1.0, 0.0, 10.0)
    assert tr.energy_drift < 1e-9


def test_cubic_escape_underflows():
    with pytest.raises(StepSizeUnderflow):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ivp(spec_cubic(1.0), 1.0, 3.0, 10.0)


def test_free_bvp():
    tr = bvp(spec_free(), 0.0, 1.0, 1.0)
    assert tr.shooting.converged
    assert tr.shooting.y0[0] == pytest.approx(1.0, abs=1e-10)
    assert compute_action(tr) == pytest.approx(0.5, abs=1e-12)


def test_harmonic_bvp_matches_textbook():
    t = np.pi / 4
    tr = bvp(spec_ho(), 0.0, 1.0, t)
    assert tr.shooting.y0[0] == pytest.approx(np.sqrt(2.0), abs=1e-9)
    assert compute_action(tr) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("m, w, x0, x1, t", [
    (1.0, 1.0, 0.3, -0.8, 1.1),
    (2.0, 0.5, -1.0, 1.0, 2.0),
    (0.7, 3.0, 0.5, 0.1, 0.6),
])
def test_harmonic_action_formula(m, w, x0, x1, t):
    tr = bvp(spec_ho(m, w), x0, x1, t)
    s = m * w * ((x0 ** 2 + x1 ** 2) * np.cos(w * t) - 2 * x0 * x1) / (2 * np.sin(w * t))
    assert compute_action(tr) == pytest.approx(s, abs=1e-9)


def test_focal_target_is_singular():
    with pytest.raises(SingularShootingJacobian) as err:
        bvp(spec_ho(), 0.0, 0.0, np.pi)
    assert err.value.time == pytest.approx(np.pi)


def test_no_convergence_reported():
    cfg = ShootingConfig(y0_guess=0.0, max_iter=1)
    with pytest.raises(NoConvergence) as err:
        bvp(spec_quartic(1.0), 0.0, 2.0, 1.0, cfg=cfg)
    assert err.value.iterations == 1


def test_action_matches_lagrangian_quadrature():
    for tr in (bvp(spec_ho(), 0.2, 0.9, 1.0), bvp(spec_quartic(1.0), 1.0, 1.1, 0.3),
               bvp(forced(0.7), 0.0, 1.0, 1.5)):
        assert lagrangian_quadrature(tr) == pytest.approx(tr.action, abs=1e-8)


def test_forced_action_feynman_closed_form():
    m, w, c, x0, x1, T = 1.2, 0.9, 0.7, 0.3, -0.4, 1.3
    tr = bvp(forced(c, m, w), x0, x1, T)
    assert tr.action == pytest.approx(forced_action(m, w, c, x0, x1, T), abs=1e-9)


def test_shooting_consistency():
    tr = bvp(spec_quartic(1.0), 0.2, 0.9, 0.7)
    again = ivp(tr.spec, 0.2, tr.shooting.y0, 0.7)
    assert abs(again.states[-1, 0] - 0.9) <= 1e-10


def test_action_additivity():
    tr = bvp(spec_quartic(0.5), -0.3, 0.8, 1.0)
    t1 = 0.37
    s01 = tr.running_action(t1)
    second = ivp(tr.spec, tr.x(t1), tr.y(t1), 1.0, t0=t1)
    assert s01 + second.action == pytest.approx(tr.action, abs=1e-9)


def test_guess_robustness():
    w, t = 1.0, 1.4
    tr = bvp(spec_ho(1.0, w), -1.0, 2.0, t)
    assert tr.shooting.iterations <= 10


def test_dense_output_and_sampling():
    tr = ivp(spec_ho(), 1.0, 0.0, 1.0)
    assert np.all(np.diff(tr.times) > 0)
    assert tr.times[0] == 0.0 and tr.times[-1] == 1.0
    taus = np.linspace(0, 1, 7)
    np.testing.assert_allclose(tr.dense_y(taus)[:, 0], -np.sin(taus), atol=1e-9)


def test_bvp_validation():
    with pytest.raises(ValueError):
        BvpProblem([0.0], [1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        solve_bvp_shooting(spec_free(n=2), BvpProblem([0.0], [1.0], 0.0, 1.0))
    with pytest.raises(ValueError):
        ShootingConfig(residual_tol=0.0)
