import warnings

import numpy as np
import pytest

from semiclassic import (BoundaryLeak, BvpProblem, Drive, FocalPoint, FocalPointInInterior,
                         NotOneDof, SemiclassicalKernel, WavepacketGrid, coherent_state_evolved,
                         exact_kernel_forced, exact_kernel_free, exact_kernel_ho,
                         free_gaussian_evolved, gaussian_wavepacket, k_wkb,
                         propagate_wavepacket, split_operator_evolve)
from semiclassic.propagator import (free_kernel, free_kernel_fn, harmonic_kernel,
                                    harmonic_kernel_fn, nyquist_taper, wkb_amplitude)

from conftest import forced, spec_free, spec_ho, spec_quartic


def B(x0, x1, t1, t0=0.0):
    return BvpProblem(x0, x1, t0, t1)


def test_k_wkb_free():
    r = k_wkb(spec_free(), B(0.0, 1.0, 1.0), 1.0)
    assert r.amplitude == pytest.approx((2j * np.pi) ** -0.5 * np.exp(0.5j), abs=1e-12)
    assert r.modulus == pytest.approx(0.39894, abs=1e-5)
    assert r.phase == pytest.approx(0.5 - np.pi / 4, abs=1e-10)


def test_k_wkb_harmonic():
    r = k_wkb(spec_ho(), B(0.0, 1.0, np.pi / 4), 1.0)
    assert r.modulus == pytest.approx((2 * np.pi * np.sin(np.pi / 4)) ** -0.5, rel=1e-9)
    assert r.modulus == pytest.approx(0.47463, abs=1e-3)
    assert r.phase == pytest.approx(0.5 - np.pi / 4, abs=1e-9)
    assert r.prefactor_branch["maslov_phase"] == 0.0


def test_k_wkb_focal_errors():
    with pytest.raises(FocalPoint):
        k_wkb(spec_ho(), B(0.0, 0.0, np.pi), 1.0)
    with pytest.raises(FocalPointInInterior) as err:
        k_wkb(spec_ho(), B(0.0, 1.0, 1.5 * np.pi), 1.0)
    assert err.value.time == pytest.approx(np.pi, abs=1e-9)


def test_amplitude_invariants(rng):
    for _ in range(10):
        S, d, h = rng.normal(), rng.uniform(0.1, 3) * rng.choice([-1, 1]), rng.uniform(0.1, 2)
        n = int(rng.integers(1, 4))
        a = wkb_amplitude(S, d, h, n)
        assert abs(a) == pytest.approx((2 * np.pi * h) ** (-n / 2) * abs(d) ** -0.5, rel=1e-12)
        dphase = np.angle(a) - (S / h - n * np.pi / 4)
        assert abs(np.angle(np.exp(1j * dphase))) <= 1e-10


def test_exact_free_examples():
    assert exact_kernel_free(1.0, 1.0, B(0.3, 0.3, 1.0)) == pytest.approx((2j * np.pi) ** -0.5)
    r = k_wkb(spec_free(), B(0.2, -0.7, 1.3), 0.8)
    e = exact_kernel_free(1.0, 0.8, B(0.2, -0.7, 1.3))
    assert abs(r.amplitude - e) <= 1e-10 * abs(e)


def test_exact_ho_examples():
    b = B(0.4, -0.3, 1.2)
    assert exact_kernel_ho(1.0, 1e-6, 1.0, b) == pytest.approx(exact_kernel_free(1.0, 1.0, b),
                                                               rel=1e-8)
    k = exact_kernel_ho(1.0, 1.0, 1.0, B(0.0, 0.0, np.pi / 2))
    assert abs(k) == pytest.approx((2 * np.pi) ** -0.5)
    assert np.angle(k) == pytest.approx(-np.pi / 4)
    r = k_wkb(spec_ho(), B(0.0, 1.0, np.pi / 4), 1.0)
    e = exact_kernel_ho(1.0, 1.0, 1.0, B(0.0, 1.0, np.pi / 4))
    assert abs(r.amplitude - e) <= 1e-9 * abs(e)
    with pytest.raises(FocalPoint):
        exact_kernel_ho(1.0, 2.0, 1.0, B(0.0, 1.0, np.pi / 2))


def test_exact_ho_two_dof_product():
    b = BvpProblem([0.1, 0.2], [0.3, -0.4], 0.0, 0.8)
    k = exact_kernel_ho(1.0, [1.0, 2.0], 0.9, b)
    k1 = exact_kernel_ho(1.0, 1.0, 0.9, B(0.1, 0.3, 0.8))
    k2 = exact_kernel_ho(1.0, 2.0, 0.9, B(0.2, -0.4, 0.8))
    assert k == pytest.approx(k1 * k2, rel=1e-13)
    r = k_wkb(spec_ho(1.0, [1.0, 2.0], n=2), b, 0.9)
    assert abs(r.amplitude - k) <= 1e-8 * abs(k)


def test_forced_kernels():
    b = B(0.3, -0.2, 1.1)
    assert exact_kernel_forced(1.0, 1.0, Drive.constant(0.0), 0.7, b) == pytest.approx(
        exact_kernel_ho(1.0, 1.0, 0.7, b), rel=1e-12)
    for drive, tol in ((Drive.constant(0.8), 1e-9), (Drive.sinusoidal(0.6, 2.3, 0.2), 1e-8)):
        sp = spec_ho(1.0, 1.0, drive=drive)
        e = exact_kernel_forced(1.0, 1.0, drive, 0.7, b)
        assert abs(k_wkb(sp, b, 0.7).amplitude - e) <= tol * abs(e)


def _rotated_grid(c, half=12.0, n=4001):
    u = np.linspace(-half, half, n)
    rot = np.exp(1j * np.pi / 4)
    return c + rot * u, rot * (u[1] - u[0])


@pytest.mark.parametrize("kind", ["free", "harmonic"])
def test_chapman_kolmogorov(kind):
    # x' = c + e^{i pi / 4} u turns the oscillatory middle integral into a Gaussian one
    m, w, h = 1.0, 0.9, 0.6
    t1, t2 = 0.5, 1.2
    x0, x = 0.3, -0.5
    if kind == "free":
        def K(a, b, dt):
            return free_kernel(a, b, dt, m, h)
    else:
        def K(a, b, dt):
            return harmonic_kernel(a, b, dt, m, w, h)
    xp, dxp = _rotated_grid(0.0)
    f = K(x, xp, t2 - t1) * K(xp, x0, t1)
    total = np.trapezoid(f) * dxp
    assert abs(total - K(x, x0, t2)) <= 1e-6 * abs(K(x, x0, t2))


def test_quadrature_route_matches_variational():
    for sp, b in ((spec_quartic(0.5), B(0.1, 0.9, 0.6)), (spec_ho(1.3, 0.7), B(0.2, 1.0, 1.0))):
        a = k_wkb(sp, b, 0.3).amplitude
        q = k_wkb(sp, b, 0.3, det_route="quadrature").amplitude
        assert abs(a - q) <= 1e-8 * abs(a)


def test_semiclassical_kernel_matches_k_wkb():
    sp = spec_quartic(0.3)
    kern = SemiclassicalKernel(sp, 0.5)
    x = np.array([-0.6, 0.1, 0.9])
    x0 = np.array([-0.2, 0.4])
    K = kern(x, x0, 0.0, 0.7)
    for i, a in enumerate(x):
        for j, b in enumerate(x0):
            r = k_wkb(sp, B(b, a, 0.7), 0.5).amplitude
            assert abs(K[i, j] - r) <= 1e-6 * abs(r)
    assert kern.last_uncovered == 0


def test_semiclassical_kernel_matches_mehler():
    kern = SemiclassicalKernel(spec_ho(1.2, 0.8), 0.7)
    x = np.linspace(-3, 3, 31)
    x0 = np.linspace(-2, 2, 9)
    exact = harmonic_kernel_fn(1.2, 0.8, 0.7)(x, x0, 0.0, 1.3)
    np.testing.assert_allclose(kern(x, x0, 0.0, 1.3), exact, rtol=1e-8)


def test_semiclassical_kernel_needs_one_dof():
    with pytest.raises(NotOneDof):
        SemiclassicalKernel(spec_free(n=2), 1.0)


def test_free_gaussian_spreading():
    psi0 = gaussian_wavepacket(-20, 20, 2048, 0.0, 1.0)
    out = propagate_wavepacket(free_kernel_fn(1.0, 1.0), psi0, 1.0)
    exact = free_gaussian_evolved(out.x, 1.0, 1.0, 1.0, 0.0, 1.0)
    assert out.l2_distance(exact) < 1e-4
    assert out.rms_width() == pytest.approx(np.sqrt(0.5) * np.sqrt(2.0), abs=1e-4)


def test_coherent_state_quarter_period():
    psi0 = gaussian_wavepacket(-10, 10, 2048, 1.0, 1.0)
    out = propagate_wavepacket(harmonic_kernel_fn(1.0, 1.0, 1.0), psi0, np.pi / 2)
    exact = coherent_state_evolved(out.x, np.pi / 2, 1.0, 1.0, 1.0, 1.0)
    assert out.l2_distance(exact) < 1e-3
    assert out.mean_position() == pytest.approx(0.0, abs=1e-9)


def test_identity_limit_with_nyquist_taper():
    psi0 = gaussian_wavepacket(-10, 10, 4096, 0.3, 1.0, 0.5)
    out = propagate_wavepacket(free_kernel_fn(1.0, 1.0, dx=psi0.dx), psi0, 1e-3)
    assert out.l2_distance(psi0) < 1e-3
    exact = free_gaussian_evolved(out.x, 1e-3, 1.0, 1.0, 0.3, 1.0, 0.5)
    assert out.l2_distance(exact) < 1e-5


def test_nyquist_taper_profile():
    p = np.array([0.0, 0.4, 0.5, 0.7, 0.9, 2.0]) * np.pi
    w = nyquist_taper(p, 1.0, 1.0)
    np.testing.assert_allclose(w[[0, 1, 2]], 1.0)
    np.testing.assert_allclose(w[[4, 5]], 0.0)
    assert w[3] == pytest.approx(0.5)


def test_unitarity_proxy():
    psi = gaussian_wavepacket(-12, 12, 1024, 0.5, 0.8, 1.0, hbar=0.7)
    kern = harmonic_kernel_fn(1.1, 0.9, 0.7)
    for t in (0.4, 0.8, 1.2):
        psi = propagate_wavepacket(kern, psi, t)
        assert psi.norm() == pytest.approx(1.0, abs=1e-3)


def test_schrodinger_residual():
    m, w, h = 1.0, 1.0, 1.0
    kern = harmonic_kernel_fn(m, w, h)
    psi0 = gaussian_wavepacket(-10, 10, 1024, 1.0, 1.0, 0.5)
    t, dt = 0.6, 1e-4
    a = propagate_wavepacket(kern, psi0, t)
    b = propagate_wavepacket(kern, psi0, t + dt)
    dx = a.dx
    v = a.values
    lap = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx ** 2
    x = a.x[1:-1]
    Hpsi = -h ** 2 / (2 * m) * lap + 0.5 * m * w ** 2 * x ** 2 * v[1:-1]
    res = 1j * h * (b.values[1:-1] - v[1:-1]) / dt - Hpsi
    assert np.sqrt(np.trapezoid(np.abs(res) ** 2, dx=dx)) <= 1e-2 * a.norm()


def test_boundary_leak_warning():
    psi0 = gaussian_wavepacket(-3, 3, 256, 2.5, 1.0)
    with pytest.warns(BoundaryLeak):
        out = propagate_wavepacket(free_kernel_fn(1.0, 1.0), psi0, 1.0)
    assert out.boundary_leak


def test_split_operator_reference():
    psi0 = gaussian_wavepacket(-10, 10, 512, 1.0, 1.0, 0.5)
    out = split_operator_evolve(psi0, np.pi / 2, 1.0, lambda x: 0.5 * x ** 2, 1.0, 2000)
    exact = coherent_state_evolved(out.x, np.pi / 2, 1.0, 1.0, 1.0, 1.0, 0.5)
    assert out.l2_distance(exact) < 1e-5


def test_wavepacket_grid_validation():
    with pytest.raises(ValueError):
        WavepacketGrid(0.0, 1.0, 3, np.zeros(4))
    with pytest.raises(ValueError):
        WavepacketGrid(1.0, 0.0, 3, np.zeros(3))
    with pytest.raises(ValueError):
        WavepacketGrid(0.0, 1.0, 3, [0, np.nan, 0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g = gaussian_wavepacket(-8, 8, 400)
    assert g.norm() == pytest.approx(1.0, abs=1e-12)


def test_forced_spec_kernel_via_fan():
    sp = forced(0.5, 1.0, 1.0)
    kern = SemiclassicalKernel(sp, 0.8)
    K = kern(np.array([0.4]), np.array([-0.3]), 0.0, 0.9)[0, 0]
    e = exact_kernel_forced(1.0, 1.0, Drive.constant(0.5), 0.8, B(-0.3, 0.4, 0.9))
    assert abs(K - e) <= 1e-7 * abs(e)
