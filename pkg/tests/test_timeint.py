"""Time-integral engine against closed-form Laplace-type integrals."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from sublap import testfunctions as tf
from sublap.timeint import TimeIntegralEngine, WeightTerm, _tail_integral, choose_eps


@given(s=st.floats(0.05, 0.95), lap2=st.floats(1e-3, 1e6), tol=st.floats(1e-12, 1e-6))
@settings(max_examples=60, deadline=None)
def test_choose_eps_meets_truncation_rule(s, lap2, tol):
    eps = choose_eps(s, lap2, tol)
    assert 1e-9 <= eps <= 1e-3
    if 1e-9 < eps < 1e-3:
        assert eps ** (2 - s) * lap2 / (2 * (2 - s)) == pytest.approx(tol, rel=1e-9)


def test_choose_eps_zero_bilaplacian():
    assert choose_eps(0.5, 0.0, 1e-10) == 1e-3


@pytest.mark.parametrize("p,q,T", [(-1.5, 0.0, 50.0), (-1.25, 0.3, 50.0), (-2.0, 2.0, 10.0)])
def test_tail_integral_closed_form(p, q, T):
    ref, _ = integrate.quad(lambda t: t ** p * math.exp(-q / t), T, np.inf, epsabs=0, epsrel=1e-12)
    assert _tail_integral([WeightTerm(1.0, p, q)], T) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_plane_wave_power_weight(E1, s):
    # int_0^inf t^{-1-s} (e^{-k t} - 1) dt = Gamma(-s) k^s
    xi = 1.3
    eng = TimeIntegralEngine(E1, tf.plane_wave(1, [xi]), np.zeros(1), s)
    res = eng.integrate([WeightTerm(1.0, -1.0 - s)])
    exact = special.gamma(-s) * xi ** (2 * s)
    assert res.value == pytest.approx(exact, rel=1e-9)
    # the reported error covers series and far tail, not panel quadrature
    assert abs(res.value - exact) <= res.error + eng.rel_tol * abs(exact)


@pytest.mark.parametrize("p,q", [(-1.25, 0.5), (-1.75, 0.2), (-1.5, 1.0)])
def test_plane_wave_exponential_weight(E1, p, q):
    # int t^p e^{-q/t - k t} dt = 2 (q/k)^{(p+1)/2} K_{p+1}(2 sqrt(q k))
    xi = 0.9
    k = xi * xi
    full = 2 * (q / k) ** ((p + 1) / 2) * special.kv(p + 1, 2 * math.sqrt(q * k))
    exact = full - q ** (p + 1) * special.gamma(-p - 1)
    eng = TimeIntegralEngine(E1, tf.plane_wave(1, [xi]), np.zeros(1), 0.5)
    assert eng.integrate([WeightTerm(1.0, p, q)]).value == pytest.approx(exact, rel=1e-9)


def test_weights_share_nodes(E1):
    eng = TimeIntegralEngine(E1, tf.plane_wave(1, [1.0]), np.zeros(1), 0.5)
    a = eng.integrate([WeightTerm(1.0, -1.5)]).value
    b = eng.integrate([WeightTerm(2.0, -1.5)]).value
    c = eng.integrate([WeightTerm(1.0, -1.5), WeightTerm(1.0, -1.5)]).value
    assert b == pytest.approx(2 * a, rel=1e-14)
    assert c == pytest.approx(b, rel=1e-14)


def test_constant_gives_zero(E3):
    eng = TimeIntegralEngine(E3, tf.constant(3), np.zeros(3), 0.5)
    assert eng.integrate([WeightTerm(1.0, -1.5)]).value == 0.0
