import math

import numpy as np
import pytest

from sublap import meanvalue as mv
from sublap import testfunctions as tf
from sublap.errors import HypothesisViolated
from sublap.nsw import ScalingData

XH = np.array([0.2, -0.1, 0.05])


def test_constant_mean_is_one(E3):
    for r in (0.3, 1.0, 2.5):
        assert mv.surface_mean(E3, None, tf.constant(3), np.zeros(3), r) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("r", [0.3, 0.7, 1.5])
def test_spherical_mean_of_r2(E3, r):
    val, gap = mv.surface_mean(E3, None, tf.euclidean_polynomial(3, "r2"), np.zeros(3), r, return_discrepancy=True)
    assert val == pytest.approx(r * r, rel=1e-12)
    assert gap <= 1e-4 * (1 + val)


def test_heisenberg_constant_through_mass_identity(H1):
    sq = mv.surface_quadrature(H1, None, XH, 1.0)
    lhs, rhs = mv.surface_mass_identity(H1, None, XH, 1.0)
    assert sq.mean(tf.constant(3)) == pytest.approx(1.0, rel=1e-4)
    assert lhs / rhs == pytest.approx(1.0, rel=1e-4)


def test_mass_identity_sphere_area(E3):
    lhs, rhs = mv.surface_mass_identity(E3, None, np.zeros(3), 1.0)
    assert lhs == pytest.approx(4 * math.pi, rel=1e-6)
    assert rhs == pytest.approx(4 * math.pi, rel=1e-14)


def test_mass_identity_heisenberg_unit_radius(H1):
    lhs, rhs = mv.surface_mass_identity(H1, None, np.zeros(3), 1.0)
    assert rhs == pytest.approx(H1.omega / 2, rel=1e-14)
    assert lhs == pytest.approx(H1.omega / 2, rel=1e-4)


@pytest.mark.parametrize("lam", [2.0, 0.5])
def test_mass_identity_homogeneous(H1, lam):
    l1, r1 = mv.surface_mass_identity(H1, None, XH, 0.8)
    l2, r2 = mv.surface_mass_identity(H1, None, XH, 0.8 * lam)
    assert l2 / l1 == pytest.approx(lam ** (H1.Q - 1), rel=1e-6)
    assert r2 / r1 == pytest.approx(lam ** (H1.Q - 1), rel=1e-12)


def test_solid_and_surface_routes_agree(E3, H1):
    for model, x, psi in ((E3, np.array([0.1, 0.2, -0.3]), tf.euclidean_polynomial(3, "x1^3+x2x2")),
                          (E3, np.zeros(3), tf.euclidean_polynomial(3, "x1^4")),
                          (H1, XH, tf.heis_polynomial("w")),
                          (H1, XH, tf.heis_polynomial("u^2"))):
        surf = mv.surface_quadrature(model, None, x, 0.6).mean(psi)
        solid = mv.solid_mean(model, None, psi, x, 0.6)
        assert surf == pytest.approx(solid, abs=1e-4 * (1 + abs(surf)))


@pytest.mark.parametrize("which", ["x1", "x1x1-x2x2", "expcos", "x1x2x3"])
def test_harmonic_mean_value_euclidean(E3, which):
    psi = tf.euclidean_polynomial(3, which)
    x = np.array([0.3, -0.2, 0.1])
    for r in (0.25, 0.5, 1.0):
        assert mv.surface_mean(E3, None, psi, x, r) == pytest.approx(float(psi(x)), rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("which", ["z1", "z1z2", "u"])
def test_harmonic_mean_value_heisenberg(H1, which):
    psi = tf.heis_polynomial(which)
    for r in (0.25, 0.5, 1.0):
        assert mv.surface_mean(H1, None, psi, XH, r) == pytest.approx(float(psi(XH)), rel=1e-6, abs=1e-6)


def test_blaschke_privalov_classical_factor(E3):
    # (r^2 - 0) / (r^2 / 6) = 6 = 2n
    q = mv.bp_quotients(E3, None, tf.euclidean_polynomial(3, "r2"), np.zeros(3), [0.5, 0.25])
    np.testing.assert_allclose(q, 6.0, rtol=1e-12)
    assert mv.zeta(E3, None, 0.5) == pytest.approx(0.25 / 6, rel=1e-12)


def test_blaschke_privalov_constant(E3, H1):
    assert mv.blaschke_privalov(E3, None, tf.constant(3), np.zeros(3)) == pytest.approx(0.0, abs=1e-10)
    assert mv.blaschke_privalov(H1, None, tf.constant(3), XH) == pytest.approx(0.0, abs=1e-10)


def test_blaschke_privalov_heisenberg_w(H1):
    assert mv.blaschke_privalov(H1, None, tf.heis_polynomial("w"), np.zeros(3)) == pytest.approx(4.0, abs=4e-2)


@pytest.mark.parametrize("psi", tf.euclidean_battery(3), ids=lambda p: p.name)
def test_blaschke_privalov_battery_euclidean(E3, psi):
    x = np.array([0.1, 0.0, -0.1])
    assert mv.blaschke_privalov(E3, None, psi, x) == pytest.approx(float(psi.lap(x)), rel=1e-2)


@pytest.mark.parametrize("psi", tf.heisenberg_battery(), ids=lambda p: p.name)
def test_blaschke_privalov_battery_heisenberg(H1, psi):
    assert mv.blaschke_privalov(H1, None, psi, XH) == pytest.approx(float(psi.lap(XH)), rel=1e-2)


def test_caccioppoli_linear(E3):
    s, t = 0.5, 1.0
    lhs, rhs, C = mv.caccioppoli_check(E3, None, tf.euclidean_polynomial(3, "x1"), np.zeros(3), s, t)
    assert lhs == pytest.approx(4 / 3 * math.pi * s ** 3, rel=1e-6)
    # E(t) = 4 pi t and M psi^2 = t^2 / 3
    assert rhs == pytest.approx(4 * math.pi * t / (t - s) * t * t / 3, rel=1e-6)
    assert C <= s ** 3 * (t - s) / t ** 3 * (1 + 1e-6)
    assert C <= 1.0


def test_caccioppoli_constant_function(H1):
    lhs, rhs, C = mv.caccioppoli_check(H1, None, tf.constant(3), XH, 0.5, 1.0)
    assert lhs == 0.0 and C == 0.0


def test_caccioppoli_rejects_subharmonic_sign(E3):
    # psi = -r2 + 10 > 0 with L psi = -6: psi L psi < 0
    base = tf.euclidean_polynomial(3, "r2")
    neg = tf.TestFunction(lambda y: 10.0 - base(y), lambda y: -base.grad_X(y), lambda y: -base.lap(y))
    with pytest.raises(HypothesisViolated):
        mv.caccioppoli_check(E3, None, neg, np.zeros(3), 0.5, 1.0)


@pytest.mark.parametrize("model_name", ["E3", "H1"])
def test_mean_square_derivative_identity_and_monotonicity(request, model_name):
    model = request.getfixturevalue(model_name)
    if model_name == "E3":
        psi, x = tf.euclidean_polynomial(3, "x1x1-x2x2"), np.array([0.1, 0.0, -0.1])
    else:
        psi, x = tf.heis_polynomial("z1z2"), XH
    for r in (0.25, 0.5, 1.0, 1.5):
        d, ident, lower = mv.mean_square_derivative(model, None, psi, x, r)
        assert d == pytest.approx(ident, rel=1e-3, abs=1e-10)
        assert d >= 0.0
        assert d >= lower * (1 - 1e-3)


def test_explicit_scaling_data_matches_default(E3):
    sd = ScalingData.from_model(E3)
    psi = tf.euclidean_polynomial(3, "x1^4")
    a = mv.surface_mean(E3, sd, psi, np.zeros(3), 0.4)
    b = mv.surface_mean(E3, None, psi, np.zeros(3), 0.4)
    assert a == b
