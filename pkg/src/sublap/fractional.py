"""Fractional powers ``(-L)^s``: the Balakrishnan formula, the Riesz-kernel
route and a Fourier oracle for Euclidean test functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import jv

from .errors import (ParameterOutOfRange, RegimeRejected, UnsupportedFunction,
                     UnsupportedModel)
from .models import ModelKind, ModelSpace, heis_gauge, heis_inv
from .quad import HalfLineDE, integrate_halfline, integrate_interval_de, sphere_area
from .specfun import gamma
from .testfunctions import TestFunction
from .timeint import T_SPLIT, TimeIntegralEngine, WeightTerm

__all__ = [
    "TailBoundMode",
    "FracParams",
    "FracResult",
    "balakrishnan",
    "balakrishnan_full",
    "balakrishnan_weight",
    "riesz_kernel",
    "riesz_constant",
    "riesz_apply",
    "fourier_oracle",
]


class TailBoundMode(str, Enum):
    SUP_NORM = "sup_norm"   # bound |P_t u| by sup |u| beyond T
    DECLARED = "declared"   # follow P_t u out to a far cut using its declared decay


@dataclass(frozen=True)
class FracParams:
    """Order ``s`` in (0, 1) with ``a = 1 - 2s``.

    ``t_split = (eps, T)``; ``eps = None`` selects it from the series rule.
    """
    s: float
    t_split: Tuple[Optional[float], float] = (None, T_SPLIT)
    tail_bound_mode: TailBoundMode = TailBoundMode.DECLARED
    rel_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ParameterOutOfRange("s must lie in (0, 1)")
        object.__setattr__(self, "tail_bound_mode", TailBoundMode(self.tail_bound_mode))

    @property
    def a(self) -> float:
        return 1.0 - 2.0 * self.s

    @classmethod
    def from_a(cls, a: float, **kw) -> "FracParams":
        if not -1.0 < a < 1.0:
            raise ParameterOutOfRange("a must lie in (-1, 1)")
        return cls((1.0 - a) / 2.0, **kw)


class FracResult(NamedTuple):
    value: float
    error: float
    flags: tuple
    eps: float
    T: float


def balakrishnan_weight(s: float):
    """``t^{-s-1} / Gamma(-s)`` written with ``-s / Gamma(1 - s)``."""
    return [WeightTerm(-s / gamma(1.0 - s), -s - 1.0)]


def _regime(model: ModelSpace, u: TestFunction, s: float) -> tuple:
    if model.kind is ModelKind.EUCLIDEAN:
        return ()
    if s >= 0.5:
        if u.hessian_bound is None:
            raise RegimeRejected("s >= 1/2 off Euclidean space needs a Hessian-type bound on u")
        return ("relies_on_group_decay",)
    return ()


def make_engine(model, u, x, fp: FracParams, method: str = "auto") -> TimeIntegralEngine:
    eps, T = fp.t_split
    T_hi = T if fp.tail_bound_mode is TailBoundMode.SUP_NORM else None
    return TimeIntegralEngine(model, u, np.asarray(x, dtype=float), fp.s, fp.rel_tol, T,
                              method, eps=eps, T_hi=T_hi)


def balakrishnan_full(model: ModelSpace, u: TestFunction, x, fp: FracParams,
                      method: str = "auto", engine: Optional[TimeIntegralEngine] = None) -> FracResult:
    """Balakrishnan formula with value, error budget and regime flags.

    Raises
    ------
    RegimeRejected
        For ``s >= 1/2`` on a non-Euclidean model when ``u`` has no
        Hessian-type bound.
    """
    flags = _regime(model, u, fp.s)
    eng = engine or make_engine(model, u, x, fp, method)
    res = eng.integrate(balakrishnan_weight(fp.s))
    return FracResult(res.value, res.error, flags, eng.eps, eng.T)


def balakrishnan(model: ModelSpace, u: TestFunction, x, fp: FracParams, method: str = "auto") -> float:
    """``(-L)^s u(x) = (1 / Gamma(-s)) int_0^inf t^{-s-1} (P_t u(x) - u(x)) dt``."""
    return balakrishnan_full(model, u, x, fp, method).value


# --------------------------------------------------------------------------
# Riesz route
# --------------------------------------------------------------------------

def riesz_constant(n: int, beta: float) -> float:
    """``c(n, beta) = Gamma((n - beta)/2) / (2^beta pi^{n/2} Gamma(beta/2))``."""
    return gamma((n - beta) / 2.0) / (2.0 ** beta * math.pi ** (n / 2.0) * gamma(beta / 2.0))


def _check_beta(model: ModelSpace, beta: float):
    if not model.is_group or not model.has_points:
        raise UnsupportedModel("Riesz kernels are defined here on the group models")
    if not 0.0 < beta < model.Q:
        raise ParameterOutOfRange(f"beta = {beta:g} must lie in (0, Q = {model.Q})")


def _riesz_point(model: ModelSpace, beta: float, g) -> float:
    """``(1/Gamma(beta/2)) int_0^inf t^{beta/2 - 1} p(g, t) dt`` at one group element."""
    from .models import heat_kernel
    zero = np.zeros(model.n)
    g = np.asarray(g, dtype=float)
    scale = float(heis_gauge(g) if model.kind is ModelKind.HEISENBERG else np.linalg.norm(g)) ** 2

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = t[pos] ** (beta / 2.0 - 1.0) * heat_kernel(model, g[None, :].repeat(pos.sum(), 0),
                                                              zero, t[pos])
        return out

    q = model.Q / 2.0 + 1.0 - beta / 2.0
    res = integrate_halfline(f, 0.0, HalfLineDE(levels=9, rel_tol=1e-12), decay=q,
                             split=max(scale, 1e-300) / 4.0)
    return res.value / gamma(beta / 2.0)


def riesz_kernel(model: ModelSpace, beta: float, g) -> np.ndarray:
    """Riesz kernel ``R_beta`` at group elements ``g`` by time quadrature of
    the heat kernel (one half-line integral per point)."""
    _check_beta(model, beta)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    return np.array([_riesz_point(model, beta, gi) for gi in g])


def _angular_profile(model: ModelSpace, beta: float, S: np.ndarray) -> np.ndarray:
    """``R_beta`` on the unit gauge sphere nodes ``S``."""
    if model.kind is ModelKind.EUCLIDEAN:
        return np.full(len(S), _riesz_point(model, beta, S[0]))
    # rotation invariance: the profile depends on the latitude only
    lat = np.round(S[:, 2], 14)
    uniq, inv = np.unique(lat, return_inverse=True)
    vals = np.empty(len(uniq))
    for i, uu in enumerate(uniq):
        # point with this latitude at azimuth 0
        w = math.sqrt(max(0.0, 1.0 - 16.0 * uu * uu))
        vals[i] = _riesz_point(model, beta, np.array([math.sqrt(w), 0.0, uu]))
    return vals[inv]


def _reach(model: ModelSpace, u: TestFunction, x) -> float:
    """Gauge radius beyond which ``L u(x o g^{-1})`` vanishes."""
    x = np.asarray(x, dtype=float)
    if not math.isfinite(u.support_radius):
        raise UnsupportedFunction("the Riesz route needs a function with finite support radius")
    if model.kind is ModelKind.EUCLIDEAN:
        return float(np.linalg.norm(x)) + u.support_radius
    box = u.support_box or (u.support_radius,) * 3
    xz = float(np.hypot(x[0], x[1]))
    Rz = xz + box[0]
    V = box[2] + abs(x[2]) + 0.5 * xz * box[0]
    return float((Rz ** 4 + 16.0 * V * V) ** 0.25)


def riesz_apply(model: ModelSpace, u: TestFunction, x, fp: FracParams) -> float:
    """``(-L)^s u(x) = ((-L u) * R_{2-2s})(x)``.

    The kernel is homogeneous of degree ``beta - Q``; its values on the unit
    gauge sphere come from :func:`riesz_kernel`, and the convolution is done
    in homogeneous polar coordinates around ``x``.
    """
    from .meanvalue import _unit_sphere, _default_orders
    beta = 2.0 - 2.0 * fp.s
    _check_beta(model, beta)
    x = np.asarray(x, dtype=float)
    if u.kind == "constant":
        return 0.0
    S, c = _unit_sphere(model, *_default_orders(model))
    prof = _angular_profile(model, beta, S)
    cw = c * prof
    R_max = _reach(model, u, x)

    def radial(R):
        R = np.asarray(R, dtype=float)
        out = np.zeros_like(R)
        for i, r in enumerate(R):
            if r <= 0:
                continue
            if model.kind is ModelKind.EUCLIDEAN:
                y = x - r * S
            else:
                y = model.translate(x, heis_inv(model.dilate(S, r)))
            out[i] = r ** (beta - 1.0) * np.sum(cw * (-u.lap(y)))
        return out

    res = integrate_interval_de(radial, 0.0, R_max, HalfLineDE(levels=8, rel_tol=1e-10),
                                singularity_exponent=beta - 1.0, raise_on_fail=False)
    return float(res.value)


# --------------------------------------------------------------------------
# Fourier oracle
# --------------------------------------------------------------------------

def fourier_oracle(u: TestFunction, s: float, x) -> float:
    """``(-Delta)^s u(x)`` in the frequency domain (Euclidean only).

    Plane waves use the multiplier ``|xi|^{2s}``. Centred Gaussians
    ``exp(-a |x|^2)`` use the radial Hankel-transform integral
    ``(2 pi)^{-n/2} r^{1 - n/2} int k^{2s} u_hat(k) J_{n/2-1}(k r) k^{n/2} dk``.
    """
    x = np.asarray(x, dtype=float)
    if u.kind == "plane_wave":
        k2 = float(np.sum(u.params["xi"] ** 2))
        return float(k2 ** s * u(x))
    if u.kind != "gaussian":
        raise UnsupportedFunction(f"no Fourier oracle for {u.name}")
    a, n = u.params["a"], u.params["n"]
    amp = (math.pi / a) ** (n / 2.0)
    r = float(np.linalg.norm(x))
    nu = n / 2.0 - 1.0
    if r == 0.0:
        f = lambda k: k ** (2 * s + n - 1) * amp * np.exp(-k * k / (4 * a))
        val = integrate_halfline(f, 2 * s + n - 1, split=2 * math.sqrt(a)).value
        return float(val * sphere_area(n) / (2 * math.pi) ** n)
    f = lambda k: k ** (2 * s) * amp * np.exp(-k * k / (4 * a)) * jv(nu, k * r) * k ** (n / 2.0)
    val = integrate_halfline(f, 2 * s + n - 1, HalfLineDE(levels=9), split=2 * math.sqrt(a)).value
    return float(val * (2 * math.pi) ** (-n / 2.0) * r ** (1.0 - n / 2.0))
