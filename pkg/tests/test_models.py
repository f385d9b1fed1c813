import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sci

from sublap import models as M
from sublap import testfunctions as tf
from sublap.errors import ConfigError, NonpositiveTime, ParameterOutOfRange, PoleError, UnsupportedModel

coord = st.floats(min_value=-3.0, max_value=3.0)
point3 = st.tuples(coord, coord, coord).map(np.array)


def test_fundamental_solution_e3(E3):
    assert M.fundamental_solution(E3, np.zeros(3), np.array([1.0, 0, 0])) == pytest.approx(1 / (4 * math.pi))


def test_fundamental_solution_is_harmonic(E3, H1):
    y = np.zeros(3)
    for model, x in ((E3, np.array([0.7, -0.3, 0.4])), (H1, np.array([0.6, 0.2, -0.3]))):
        f = lambda p: M.fundamental_solution(model, p, y)
        g = M.fundamental_solution(model, x, y)
        assert abs(M.sublaplacian_fd(model, f, x, h=1e-3)) <= 1e-3 * g


@given(point3, point3)
def test_fundamental_solution_symmetric(x, y):
    E3 = M.ModelSpace.euclidean(3)
    if np.array_equal(x, y):
        return
    assert M.fundamental_solution(E3, x, y) == M.fundamental_solution(E3, y, x)


@settings(max_examples=50)
@given(point3, point3)
def test_heisenberg_fundamental_solution_symmetric(x, y):
    H = M.ModelSpace.heisenberg()
    if np.allclose(x, y):
        return
    assert M.fundamental_solution(H, x, y) == pytest.approx(M.fundamental_solution(H, y, x), rel=1e-14)


@pytest.mark.parametrize("lam", [2.0, 3.0])
def test_heisenberg_fundamental_solution_homogeneous(H1, lam):
    x = np.array([0.3, -0.5, 0.2])
    big = M.fundamental_solution(H1, M.heis_dilate(x, lam), np.zeros(3))
    assert big == pytest.approx(lam ** (2 - H1.Q) * M.fundamental_solution(H1, x, np.zeros(3)), rel=1e-12)


def test_fundamental_solution_errors(E2, E3):
    with pytest.raises(PoleError):
        M.fundamental_solution(E3, np.ones(3), np.ones(3))
    with pytest.raises(UnsupportedModel):
        M.fundamental_solution(E2, np.zeros(2), np.ones(2))


def test_heat_kernel_examples(E1, E2):
    assert M.heat_kernel(E1, [0.0], [0.0], 1 / (4 * math.pi)) == pytest.approx(1.0)
    # closed form e^{-1} / (4 pi)
    assert M.heat_kernel(E2, np.zeros(2), np.array([2.0, 0.0]), 1.0) == pytest.approx(math.exp(-1) / (4 * math.pi))
    with pytest.raises(NonpositiveTime):
        M.heat_kernel(E1, [0.0], [0.0], 0.0)


def test_heisenberg_kernel_peak(H1):
    assert M.heat_kernel(H1, np.zeros(3), np.zeros(3), 1.0) == pytest.approx(1 / 16, rel=1e-12)
    assert M.heat_kernel(H1, np.zeros(3), np.zeros(3), 0.5) == pytest.approx(H1.heat_peak(0.5), rel=1e-12)


def _gaveau_scipy(w, v):
    f = lambda lam: (lam / math.sinh(lam) if lam else 1.0) * math.exp(
        -0.25 * w * (lam / math.tanh(lam) if lam else 1.0)) * math.cos(lam * v)
    val, _ = sci.quad(f, 0.0, 60.0, limit=400, epsabs=1e-14, epsrel=1e-12)
    return val / (4 * math.pi ** 2)


@pytest.mark.parametrize("w,v", [(0.0, 0.0), (1.0, 0.3), (4.0, -1.2), (0.2, 3.0), (9.0, 0.0)])
def test_heisenberg_kernel_vs_independent_quadrature(H1, w, v):
    x = np.array([math.sqrt(w), 0.0, v])
    assert M.heat_kernel(H1, x, np.zeros(3), 1.0) == pytest.approx(_gaveau_scipy(w, v), rel=1e-9, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(point3, point3, st.floats(min_value=0.1, max_value=3.0))
def test_heat_kernel_symmetric(x, y, t):
    H = M.ModelSpace.heisenberg()
    a, b = M.heat_kernel(H, x, y, t), M.heat_kernel(H, y, x, t)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(point3, st.floats(min_value=0.2, max_value=5.0))
def test_heisenberg_kernel_scaling(g, lam):
    H = M.ModelSpace.heisenberg()
    lhs = M.heat_kernel(H, M.heis_dilate(g, lam), np.zeros(3), lam * lam)
    rhs = lam ** -4 * M.heat_kernel(H, g, np.zeros(3), 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


def test_euclidean_semigroup_law(E2):
    x, y, t, s = np.array([0.3, -0.2]), np.array([-0.5, 0.4]), 0.3, 0.5
    h = 0.05
    ax = np.arange(-8, 8 + h / 2, h)
    Z = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    lhs = np.sum(M.heat_kernel(E2, x, Z, t) * M.heat_kernel(E2, Z, y, s)) * h * h
    assert lhs == pytest.approx(M.heat_kernel(E2, x, y, t + s), rel=1e-3)


def test_euclidean_gaussian_bounds(E3, rng):
    # (4 pi t)^{-n/2} e^{-d^2/4t} between C^{-1} t^{-n/2} e^{-M d^2/t} and C t^{-n/2} e^{-d^2/(M t)}
    C, Mc = (4 * math.pi) ** 1.5, 4.0
    for _ in range(200):
        x, y = rng.normal(size=3), rng.normal(size=3) * 2
        t = rng.uniform(0.05, 5.0)
        d2 = float(np.sum((x - y) ** 2))
        p = M.heat_kernel(E3, x, y, t)
        assert p >= t ** -1.5 * math.exp(-Mc * d2 / t) / C
        assert p <= C * t ** -1.5 * math.exp(-d2 / (Mc * t))


def test_calibration_constants():
    cq, beta, info = M.calibrate_heisenberg()
    # independent oracles: the unit Koranyi ball has volume pi^2 / 8 and the
    # fundamental solution of this gauge has constant 1 / (2 pi)
    assert beta == pytest.approx(math.pi ** 2 / 8, rel=1e-3)
    assert cq == pytest.approx(1 / (2 * math.pi), rel=1e-3)
    assert cq > 0
    again = M.calibrate_heisenberg.__wrapped__()
    assert again[1] == pytest.approx(beta, rel=1e-3)


def test_heisenberg_ball_homogeneity(H1):
    rng = np.random.default_rng(3)
    pts = rng.uniform([-2, -2, -1], [2, 2, 1], size=(400000, 3))
    inside = M.heis_gauge(pts) < 2.0
    vol = 32.0 * inside.mean()
    assert vol == pytest.approx(2 ** 4 * H1.gauge_ball_beta, rel=1e-2)


@given(point3, point3, point3)
def test_group_law_associative(a, b, c):
    lhs = M.heis_mul(M.heis_mul(a, b), c)
    rhs = M.heis_mul(a, M.heis_mul(b, c))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@given(point3)
def test_group_inverse(a):
    np.testing.assert_allclose(M.heis_mul(a, M.heis_inv(a)), 0.0, atol=1e-12)


@given(point3, point3, st.floats(min_value=0.1, max_value=10.0))
def test_dilation_is_automorphism(a, b, lam):
    lhs = M.heis_dilate(M.heis_mul(a, b), lam)
    rhs = M.heis_mul(M.heis_dilate(a, lam), M.heis_dilate(b, lam))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)
    assert M.heis_gauge(M.heis_dilate(a, lam)) == pytest.approx(lam * M.heis_gauge(a), rel=1e-12, abs=1e-300)


@given(point3, point3)
def test_gauge_positive_off_diagonal(x, y):
    H = M.ModelSpace.heisenberg()
    d = H.gauge(x, y)
    assert H.gauge(x, x) == 0.0
    if not np.array_equal(x, y):
        assert d > 0


def test_model_invariants():
    with pytest.raises(ParameterOutOfRange):
        M.ModelSpace(M.ModelKind.EUCLIDEAN, 3, 4, 1.0, 1.0)
    with pytest.raises(ParameterOutOfRange):
        M.ModelSpace(M.ModelKind.HEISENBERG, 3, 5, 1.0, 1.0)
    with pytest.raises(ParameterOutOfRange):
        M.ModelSpace.carnot_scaling(4, -1.0, 1.0)
    with pytest.raises(ParameterOutOfRange):
        M.ModelSpace.euclidean(0)


def test_config_roundtrip(tmp_path, H1):
    path = tmp_path / "model.cfg"
    H1.save(path)
    back = M.ModelSpace.from_config(path)
    assert back == H1
    text = path.read_text()
    assert "cq" in text and "beta" in text
    E = M.ModelSpace.from_config({"kind": "euclidean", "n": "3"})
    assert E == M.ModelSpace.euclidean(3)
    with pytest.raises(ConfigError):
        M.ModelSpace.from_config({"kind": "torus"})
    with pytest.raises(ConfigError):
        M.ModelSpace.from_config({"kind": "euclidean", "n": "three"})


@pytest.mark.parametrize("psi", tf.euclidean_battery(3) + [tf.gaussian_bump(3, 0.5)], ids=lambda p: p.name)
def test_euclidean_test_function_laplacians(E3, psi, rng):
    for _ in range(5):
        x = rng.uniform(-1, 1, size=3)
        fd = M.sublaplacian_fd(E3, psi.eval, x, h=1e-3)
        assert fd == pytest.approx(psi.lap(x), rel=1e-4, abs=1e-4)


@pytest.mark.parametrize("psi", tf.heisenberg_battery() + [tf.heis_gaussian(0.7, 0.5)], ids=lambda p: p.name)
def test_heisenberg_test_function_laplacians(H1, psi, rng):
    for _ in range(5):
        x = rng.uniform(-1, 1, size=3)
        fd = M.sublaplacian_fd(H1, psi.eval, x, h=1e-3)
        assert fd == pytest.approx(psi.lap(x), rel=1e-4, abs=1e-4)
        np.testing.assert_allclose(M.horizontal_gradient_fd(H1, psi.eval, x), psi.grad_X(x), rtol=1e-6, atol=1e-7)
