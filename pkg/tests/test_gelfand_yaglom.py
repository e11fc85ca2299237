import warnings

import numpy as np
import pytest

from semiclassic import (BvpProblem, FocalPoint, GridTooCoarse, ShootingConfig,
                         VanVleckMatrix, action_gradient_fd, det_J, focal_scan,
                         integrate_variational, van_vleck_fd, van_vleck_from_J)

from conftest import bvp, ivp, spec_free, spec_ho, spec_quartic


def test_det_J_values():
    assert det_J(ivp(spec_free(), 0, 1, 2.0), 2.0) == pytest.approx(2.0, abs=1e-12)
    assert det_J(ivp(spec_ho(), 0, 1, np.pi / 2), np.pi / 2) == pytest.approx(1.0, abs=1e-9)
    tr = ivp(spec_ho(n=2), [0.0, 0.1], [1.0, 0.3], np.pi / 4)
    assert det_J(tr, np.pi / 4) == pytest.approx(0.5, abs=1e-9)


def test_scan_free_has_no_focal_times():
    rep = focal_scan(ivp(spec_free(), 0, 1, 5.0), 100)
    assert rep.focal_times == ()
    assert rep.turning_times == ()
    assert np.all(rep.detJ_values[1:] > 0)


def test_scan_harmonic_omega_two():
    rep = focal_scan(ivp(spec_ho(1.0, 2.0), 0.3, 0.5, 2.0), 200)
    assert len(rep.focal_times) == 1
    assert rep.focal_times[0] == pytest.approx(np.pi / 2, abs=1e-10)
    assert abs(det_J(ivp(spec_ho(1.0, 2.0), 0.3, 0.5, 2.0), rep.focal_times[0])) < 1e-8


def test_turning_time_at_endpoint_not_reported():
    rep = focal_scan(ivp(spec_ho(), 1.0, 0.0, 2.0), 100)
    assert rep.turning_times == ()


def test_turning_times_interior():
    rep = focal_scan(ivp(spec_ho(), 0.0, 1.0, 2.0), 100)
    assert rep.turning_times == pytest.approx((np.pi / 2,), abs=1e-9)


def test_isotropic_double_root():
    rep = focal_scan(ivp(spec_ho(n=2), [0.0, 0.0], [1.0, 0.5], 4.0), 200)
    assert rep.focal_times == pytest.approx((np.pi,), abs=1e-7)


def test_multiple_focal_times_increasing():
    rep = focal_scan(ivp(spec_ho(1.0, 3.0), 0.0, 1.0, 3.0), 400)
    np.testing.assert_allclose(rep.focal_times, np.pi / 3 * np.arange(1, 3), atol=1e-9)
    assert np.all(np.diff(rep.focal_times) > 0)


def test_grid_too_coarse_flag():
    with pytest.warns(GridTooCoarse):
        rep = focal_scan(ivp(spec_ho(1.0, 25.0), 0.0, 1.0, 1.0), 15)
    assert rep.grid_too_coarse


def test_focal_at_end_of_interval():
    rep = focal_scan(ivp(spec_ho(), 0.0, 1.0, np.pi), 50)
    assert rep.focal_times[-1] == pytest.approx(np.pi)


def test_van_vleck_from_J():
    phi = integrate_variational(ivp(spec_free(), 0, 1, 2.0), 2.0)
    assert van_vleck_from_J(phi).matrix[0, 0] == pytest.approx(-0.5, abs=1e-12)
    phi = integrate_variational(bvp(spec_ho(), 0.0, 1.0, np.pi / 4), np.pi / 4)
    assert van_vleck_from_J(phi).matrix[0, 0] == pytest.approx(-np.sqrt(2), abs=1e-9)
    phi = integrate_variational(ivp(spec_ho(), 0.0, 1.0, np.pi), np.pi)
    with pytest.raises(FocalPoint):
        van_vleck_from_J(phi)


def test_van_vleck_fd_free():
    M = van_vleck_fd(spec_free(), BvpProblem(0.0, 1.0, 0.0, 1.0), h=1e-3)
    assert M.source == "finite_difference"
    assert M.matrix[0, 0] == pytest.approx(-1.0, abs=1e-5)


def test_van_vleck_fd_harmonic():
    M = van_vleck_fd(spec_ho(), BvpProblem(0.0, 1.0, 0.0, np.pi / 4))
    assert M.matrix[0, 0] == pytest.approx(-np.sqrt(2), abs=1e-4)


def test_van_vleck_fd_quartic_lemma():
    sp = spec_quartic(1.0)
    b = BvpProblem(1.0, 1.1, 0.0, 0.3)
    fd = van_vleck_fd(sp, b)
    phi = integrate_variational(bvp(sp, 1.0, 1.1, 0.3), 0.3)
    np.testing.assert_allclose(fd.matrix, van_vleck_from_J(phi).matrix, atol=1e-4)


def test_lemma_two_dof():
    sp = spec_ho(1.0, [0.7, 1.3], n=2)
    b = BvpProblem([0.1, -0.2], [0.5, 0.4], 0.0, 0.9)
    M = van_vleck_fd(sp, b).matrix
    J = integrate_variational(bvp(sp, b.x0, b.x1, 0.9), 0.9).J
    assert np.max(np.abs(J @ M + np.eye(2))) <= 1e-4


def test_initial_momentum_gradient():
    sp = spec_quartic(0.5)
    b = BvpProblem(0.2, 0.9, 0.0, 0.6)
    tr = bvp(sp, 0.2, 0.9, 0.6)
    dS_dx, dS_dx0 = action_gradient_fd(sp, b, ShootingConfig())
    assert dS_dx0[0] == pytest.approx(-tr.shooting.y0[0], abs=1e-4)
    assert dS_dx[0] == pytest.approx(tr.y(0.6)[0], abs=1e-4)


def test_van_vleck_matrix_validation():
    with pytest.raises(ValueError):
        VanVleckMatrix(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        VanVleckMatrix(np.eye(1), source="guess")


def test_scan_summary_types():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = focal_scan(ivp(spec_ho(1.0, 2.0), 0.3, 0.5, 2.0), 60)
    s = rep.summary()
    assert s["n_grid"] == 60
    assert all(isinstance(t, float) for t in s["focal_times"])
