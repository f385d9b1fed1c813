import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublap import extension as ex
from sublap import quad as q
from sublap import testfunctions as tf
from sublap.errors import ParameterOutOfRange
from sublap.fractional import FracParams, balakrishnan
from sublap.models import ModelSpace, sublaplacian_fd

A_GRID = (-0.5, 0.0, 0.5)


def test_extension_point_requires_positive_z():
    assert ex.ExtensionPoint((0.0,), 0.5).z == 0.5
    with pytest.raises(ParameterOutOfRange):
        ex.ExtensionPoint((0.0,), 0.0)


def test_constants():
    assert ex.trace_constant(0.0) == pytest.approx(1.0, rel=1e-14)
    assert ex.trace_constant(0.5) == pytest.approx(2 ** -0.5 * math.gamma(0.25) / math.gamma(0.75), rel=1e-13)
    assert ex.poisson_constant(0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-14)


def test_bessel_kernel_reflection_case():
    exact = (4 * math.pi) ** -0.5 * (1 + math.exp(-1))
    assert ex.bessel_heat_kernel(0.0, 1.0, 1.0, 1.0) == pytest.approx(exact, rel=1e-10)
    assert exact == pytest.approx(0.385868, abs=1e-5)


@settings(max_examples=40)
@given(st.floats(min_value=-0.9, max_value=0.9), st.floats(min_value=0.01, max_value=5.0),
       st.floats(min_value=0.01, max_value=5.0), st.floats(min_value=0.05, max_value=5.0))
def test_bessel_kernel_symmetric(a, z, zeta, t):
    assert ex.bessel_heat_kernel(a, z, zeta, t) == pytest.approx(ex.bessel_heat_kernel(a, zeta, z, t), rel=1e-13)


def test_bessel_kernel_no_overflow():
    v = ex.bessel_heat_kernel(-0.5, 400.0, 400.5, 1e-3)
    assert math.isfinite(v) and v > 0


@pytest.mark.parametrize("a", A_GRID)
@pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.1, 1.0])
def test_bessel_stochastic_completeness(a, z, t):
    assert ex.bessel_mass(a, z, t) == pytest.approx(1.0, abs=1e-8)


def test_bessel_semigroup_of_one():
    for a in A_GRID:
        assert ex.bessel_semigroup(a, lambda r: np.ones_like(r), 0.7, 0.4) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("a", [-0.5, 0.5])
def test_chapman_kolmogorov(a):
    lhs, rhs = ex.chapman_kolmogorov(a, 1.0, 0.7, 0.3, 0.5)
    assert lhs == pytest.approx(rhs, rel=1e-8)


@pytest.mark.parametrize("a", [-0.5, 0.5])
def test_neumann_condition(a):
    phi = lambda r: np.exp(-r * r)
    flux = []
    for z in (1e-2, 1e-3, 1e-4):
        h = 1e-2 * z
        d = (ex.bessel_semigroup(a, phi, z + h, 0.5) - ex.bessel_semigroup(a, phi, z - h, 0.5)) / (2 * h)
        flux.append(abs(z ** a * d))
    # the Neumann solution is even in z, so the weighted flux decays like z^(1 + a)
    assert flux[0] > flux[1] > flux[2]
    assert flux[2] / flux[0] == pytest.approx(1e-2 ** (1 + a), rel=2e-2)


@pytest.mark.parametrize("name", ["E1", "E3", "H1"])
@pytest.mark.parametrize("a", A_GRID)
@pytest.mark.parametrize("z", [0.5, 1.0])
def test_parabolic_normalisation(request, name, a, z):
    model = request.getfixturevalue(name)
    tol = 1e-3 if name == "H1" else 1e-6
    assert ex.parabolic_mass(model, a, z) == pytest.approx(1.0, abs=tol)


def _heat_residual(model, a, x, y, z, t, h=1e-3):
    P = lambda xx=x, zz=z, tt=t: ex.parabolic_poisson(model, a, xx, y, zz, tt)
    p0 = P()
    dt = (P(tt=t + h) - P(tt=t - h)) / (2 * h)
    dzz = (P(zz=z + h) - 2 * p0 + P(zz=z - h)) / h ** 2
    dz = (P(zz=z + h) - P(zz=z - h)) / (2 * h)
    lx = sublaplacian_fd(model, lambda xx: P(xx=xx), np.asarray(x, dtype=float), h)
    scale = abs(dt) + abs(dzz) + abs(a / z * dz) + abs(lx)
    return dt - dzz - a / z * dz - lx, scale


@pytest.mark.parametrize("name", ["E1", "E2", "H1"])
def test_parabolic_pde_residual(request, name, rng):
    model = request.getfixturevalue(name)
    n = model.n
    for _ in range(10):
        a = rng.uniform(-0.8, 0.8)
        x, y = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
        z, t = rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5)
        res, scale = _heat_residual(model, a, x, y, z, t)
        assert abs(res) <= 1e-4 * scale


def test_dz_identity(E3, rng):
    for _ in range(10):
        a = rng.uniform(-0.9, 0.9)
        x, y = rng.normal(size=3), rng.normal(size=3)
        z, t = rng.uniform(0.2, 2), rng.uniform(0.2, 2)
        h = 1e-5 * z
        fd = (ex.parabolic_poisson(E3, a, x, y, z + h, t) - ex.parabolic_poisson(E3, a, x, y, z - h, t)) / (2 * h)
        assert ex.parabolic_poisson_dz(E3, a, x, y, z, t) == pytest.approx(fd, rel=1e-6, abs=1e-14)


@pytest.mark.parametrize("name", ["E1", "H1"])
def test_adjoint_kernel_identity(request, name):
    model = request.getfixturevalue(name)
    n = model.n
    x, y = np.full(n, 0.1), np.full(n, -0.3)
    for a in A_GRID:
        direct = ex.parabolic_poisson(model, a, x, y, 0.7, 0.4)
        assert ex.poisson_via_adjoint(model, a, x, y, 0.7, 0.4) == pytest.approx(direct, rel=1e-7)


def test_caffarelli_silvestre_example(E1):
    assert ex.elliptic_poisson(E1, 0.0, [0.0], [1.0], 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-8)
    assert ex.caffarelli_silvestre(1, 0.5, [0.0], [1.0], 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.floats(min_value=0.1, max_value=0.9), st.floats(min_value=0.2, max_value=2.0),
       st.floats(min_value=-2.0, max_value=2.0))
def test_caffarelli_silvestre_property(n, s, z, d):
    m = ModelSpace.euclidean(n)
    x, y = np.zeros(n), np.array([d] + [0.3] * (n - 1))
    K = ex.elliptic_poisson(m, None, x, y, z, s=s)
    assert K == pytest.approx(ex.caffarelli_silvestre(n, s, x, y, z), rel=1e-8)


@pytest.mark.parametrize("name", ["E1", "E3", "H1"])
@pytest.mark.parametrize("a", A_GRID)
def test_elliptic_normalisation(request, name, a):
    model = request.getfixturevalue(name)
    tol = 1e-3 if name == "H1" else 1e-6
    for z in (0.5, 1.0):
        assert ex.poisson_mass(model, a, z) == pytest.approx(1.0, abs=tol)


@pytest.mark.parametrize("name", ["E1", "E2", "H1"])
def test_elliptic_kernel_harmonic(request, name):
    model = request.getfixturevalue(name)
    n = model.n
    y = np.zeros(n)
    h = 2e-3
    for a in A_GRID:
        x, z = np.full(n, 0.4), 0.8
        K = lambda xx=x, zz=z: ex.elliptic_poisson(model, a, xx, y, zz)
        k0 = K()
        kzz = (K(zz=z + h) - 2 * k0 + K(zz=z - h)) / h ** 2
        kz = (K(zz=z + h) - K(zz=z - h)) / (2 * h)
        lx = sublaplacian_fd(model, lambda xx: K(xx=xx), x, h)
        scale = abs(kzz) + abs(a / z * kz) + abs(lx)
        assert abs(lx + kzz + a / z * kz) <= 1e-3 * scale


@pytest.mark.parametrize("a", A_GRID)
def test_duality_with_time_integral(E1, H1, a):
    for model, x, y in ((E1, [0.0], [0.7]), (H1, np.zeros(3), np.array([0.3, -0.2, 0.1]))):
        z = 0.6
        f = lambda t: ex.parabolic_poisson(model, a, x, y, z, t)
        ref = q.integrate_halfline(f, 0.0, q.HalfLineDE(levels=10, rel_tol=1e-13), decay=(3 - a) / 2,
                                   split=0.25 * (z * z + float(model.gauge(np.asarray(x, float), np.asarray(y, float))) ** 2),
                                   raise_on_fail=False).value
        assert ex.elliptic_poisson(model, a, x, y, z) == pytest.approx(ref, rel=1e-6)


def test_polar_kernel_matches_pointwise(E3, H1):
    for model in (E3, H1):
        pp = ex.PolarPoisson(model, 0.2, 0.5)
        assert pp.mass() == pytest.approx(1.0, abs=1e-6 if model is E3 else 1e-3)


def test_constant_extension(E1, H1):
    assert ex.solve_extension(E1, 0.3, tf.constant(1), [0.3], 0.5) == 1.0
    assert ex.solve_extension(H1, -0.2, tf.constant(3), np.zeros(3), 0.5) == 1.0


@pytest.mark.parametrize("z", [0.25, 1.0])
def test_half_plane_poisson_integral(E1, z):
    x = 0.5
    U = ex.solve_extension(E1, 0.0, tf.cauchy_bump(), [x], z, method="kernel")
    # independent oracle: direct quadrature of the half-plane Poisson integral
    f = lambda y: z / np.pi / (z * z + (x - y) ** 2) / (1 + y * y)
    ref = q.integrate_interval(f, -1e4, 1e4, q.PanelGL(rel_tol=1e-13)).value + 2 * z / np.pi / 1e4 ** 3 / 3
    assert U == pytest.approx(ref, rel=1e-6)
    assert U == pytest.approx((1 + z) / ((1 + z) ** 2 + x * x), rel=1e-6)


def test_boundary_attainment(E1, H1):
    for model, u, x in ((E1, tf.gaussian_bump(1, 0.5), [0.3]), (H1, tf.heis_gaussian(0.7, 0.5), np.zeros(3))):
        gaps = [abs(ex.solve_extension(model, 0.3, u, x, z) - float(u(np.asarray(x, float))))
                for z in (0.5, 0.25, 0.125, 0.0625)]
        assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))


def test_kernel_and_semigroup_routes_agree(E1):
    u = tf.gaussian_bump(1, 0.5)
    for a in A_GRID:
        k = ex.solve_extension(E1, a, u, [0.2], 0.4, method="kernel")
        s = ex.solve_extension(E1, a, u, [0.2], 0.4, method="semigroup")
        assert k == pytest.approx(s, rel=1e-8)


def test_extension_is_harmonic(E1):
    u = tf.gaussian_bump(1, 0.5)
    a, x, z, h = 0.3, 0.2, 0.5, 1e-2
    U = lambda xx=x, zz=z: ex.solve_extension(E1, a, u, [xx], zz)
    u0 = U()
    uzz = (U(zz=z + h) - 2 * u0 + U(zz=z - h)) / h ** 2
    uz = (U(zz=z + h) - U(zz=z - h)) / (2 * h)
    uxx = (U(xx=x + h) - 2 * u0 + U(xx=x - h)) / h ** 2
    assert abs(uxx + uzz + a / z * uz) <= 1e-3 * (abs(uxx) + abs(uzz) + abs(a / z * uz))


def test_dtn_half_power(E1):
    u = tf.plane_wave(1, [2.0])
    d = ex.dtn_trace(E1, 0.0, u, [0.0])
    b = balakrishnan(E1, u, [0.0], FracParams(0.5))
    assert d == pytest.approx(2.0, abs=1e-3)
    assert abs(d - b) <= 1e-3


def test_dtn_constant(E1):
    assert ex.dtn_trace(E1, 0.0, tf.constant(1), [0.0]) == 0.0


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_dtn_matches_balakrishnan_euclidean(E3, s):
    u, x = tf.gaussian_bump(3, 0.5), np.full(3, 0.2)
    full = ex.dtn_trace_full(E3, None, u, x, s=s)
    b = balakrishnan(E3, u, x, FracParams(s))
    assert abs(full.value - b) <= 1e-3 * (1 + abs(b))
    assert full.error < 1e-3
    assert full.fd_discrepancy < 1e-4


def test_dtn_rejects_coarse_grid(E1):
    with pytest.raises(ParameterOutOfRange):
        ex.dtn_trace(E1, 0.0, tf.plane_wave(1, [1.0]), [0.0], z_grid=(0.4, 0.2))


def test_a_and_s_give_identical_results(E1):
    s, a = 0.3, 0.4
    assert ex.bessel_heat_kernel(a, 0.5, 0.7, 0.3) == ex.bessel_heat_kernel(None, 0.5, 0.7, 0.3, s=s)
    assert ex.parabolic_poisson(E1, a, [0.0], [0.4], 0.6, 0.3) == ex.parabolic_poisson(E1, None, [0.0], [0.4], 0.6, 0.3, s=s)
    assert ex.elliptic_poisson(E1, a, [0.0], [0.4], 0.6) == ex.elliptic_poisson(E1, None, [0.0], [0.4], 0.6, s=s)
    u = tf.gaussian_bump(1, 0.5)
    assert ex.solve_extension(E1, a, u, [0.1], 0.3) == ex.solve_extension(E1, None, u, [0.1], 0.3, s=s)
    assert ex.dtn_trace(E1, a, u, [0.1]) == ex.dtn_trace(E1, None, u, [0.1], s=s)
    assert ex.bessel_mass(a, 0.5, 1.0) == ex.bessel_mass(None, 0.5, 1.0, s=s)
    with pytest.raises(ParameterOutOfRange):
        ex.elliptic_poisson(E1, 0.5, [0.0], [0.4], 0.6, s=s)


@pytest.mark.parametrize("a", A_GRID)
def test_l2_boundary_slope(a):
    slope, norms = ex.boundary_l2_slope(a, tf.gaussian_bump(1, 0.5))
    assert np.all(np.diff(norms) < 0)
    assert slope >= min(1 - a, 0.8) - 0.1


def test_l2_boundary_slope_lattice_route():
    a = 0.0
    s1, _ = ex.boundary_l2_slope(a, tf.gaussian_bump(1, 0.5))
    s2, _ = ex.boundary_l2_slope(a, tf.gaussian_bump(1, 0.5), method="lattice")
    assert s1 == pytest.approx(s2, abs=1e-3)
