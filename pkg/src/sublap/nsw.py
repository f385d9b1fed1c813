"""Scaling layer: the volume polynomial, its modification E, the inverse F,
the pointwise dimension diagnostic and the density function zeta."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .config import parse_lambda
from .errors import DomainError, ExtrapolationUnstable, InvalidScalingData, ParameterOutOfRange
from .models import ModelKind, ModelSpace
from .quad import PanelGL, HalfLineDE, integrate_interval, integrate_interval_de

__all__ = [
    "ScalingData",
    "eval_Lambda",
    "eval_E",
    "eval_dE",
    "invert_E",
    "pointwise_dimension_diagnostic",
    "ratio_bound_check",
    "ball_volume",
    "density_zeta",
    "zeta_reparametrized",
]


@dataclass(frozen=True)
class ScalingData:
    """Polynomial ``Lambda(r) = sum_k c_k r^{d_k}`` and derived scaling data.

    Parameters
    ----------
    coeffs : sequence of (exponent, coefficient)
        Nonnegative coefficients, at least one positive, exponents > 2.
    beta : float, optional
        Group mode: X-ball volume ``beta r^Q``. When omitted (and no
        ``volume`` is given) ``|B_X(r)|`` is modelled by ``Lambda(r)``.
    volume : callable, optional
        Explicit ``r -> |B_X(x, r)|``.
    elliptic : bool
        Enforce ``3 <= Qx``.
    """
    coeffs: Tuple[Tuple[float, float], ...]
    beta: Optional[float] = None
    volume: Optional[Callable] = None
    elliptic: bool = True

    def __post_init__(self):
        terms = tuple(sorted((float(d), float(c)) for d, c in self.coeffs if float(c) != 0.0))
        raw = [(float(d), float(c)) for d, c in self.coeffs]
        if any(c < 0 for _, c in raw):
            raise InvalidScalingData("coefficients must be nonnegative")
        if not terms:
            raise InvalidScalingData("at least one positive coefficient is required")
        if any(d <= 2.0 for d, _ in terms):
            raise InvalidScalingData("exponents must exceed 2 so that E is increasing")
        if self.elliptic and terms[0][0] < 3.0:
            raise InvalidScalingData("elliptic mode needs 3 <= Qx")
        object.__setattr__(self, "coeffs", terms)
        object.__setattr__(self, "_d", np.array([d for d, _ in terms]))
        object.__setattr__(self, "_c", np.array([c for _, c in terms]))

    # constructors ---------------------------------------------------------------
    @classmethod
    def monomial(cls, Q: float, omega: float, beta: Optional[float] = None) -> "ScalingData":
        return cls(((Q, omega),), beta=beta)

    @classmethod
    def from_model(cls, model: ModelSpace) -> "ScalingData":
        """Single-term data ``(Q, omega)`` with the model's X-ball volume."""
        if model.lambda_terms:
            return cls(tuple(model.lambda_terms))
        return cls(((model.Q, model.omega),), beta=model.beta, elliptic=model.Q >= 3)

    @classmethod
    def from_string(cls, text: str) -> "ScalingData":
        return cls(tuple(parse_lambda(text)))

    def to_config(self) -> dict:
        return {"lambda": ", ".join(f"{d:g}:{c!r}" for d, c in self.coeffs)}

    # properties -----------------------------------------------------------------
    @property
    def Qx(self) -> float:
        return self.coeffs[0][0]

    @property
    def Qmax(self) -> float:
        return self.coeffs[-1][0]

    @property
    def is_monomial(self) -> bool:
        return len(self.coeffs) == 1


def _as_pos(r, name="r"):
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be positive")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def eval_Lambda(sd: ScalingData, r):
    r = _as_pos(r)
    return _out(np.sum(sd._c * r[..., None] ** sd._d, axis=-1))


def eval_E(sd: ScalingData, r):
    """``E(r) = Lambda(r) / r^2``."""
    r = _as_pos(r)
    return _out(np.sum(sd._c * r[..., None] ** (sd._d - 2.0), axis=-1))


def eval_dE(sd: ScalingData, r):
    r = _as_pos(r)
    return _out(np.sum(sd._c * (sd._d - 2.0) * r[..., None] ** (sd._d - 3.0), axis=-1))


def _invert_scalar(sd: ScalingData, s: float) -> float:
    if sd.is_monomial:
        d, c = sd.coeffs[0]
        return (s / c) ** (1.0 / (d - 2.0))
    # bracket, bisect, then polish with Newton in log variables
    lo, hi = 1.0, 1.0
    while eval_E(sd, lo) > s:
        lo *= 0.5
    while eval_E(sd, hi) < s:
        hi *= 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if eval_E(sd, mid) < s:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-6:
            break
    r = math.sqrt(lo * hi)
    for _ in range(8):
        e = eval_E(sd, r)
        step = (e - s) / eval_dE(sd, r)
        r_new = r - step
        if not (lo * 0.5 < r_new < hi * 2.0):
            break
        r = r_new
        if abs(step) <= 1e-16 * r:
            break
    return r


def invert_E(sd: ScalingData, s):
    """``F = E^{-1}``: closed form for monomials, bisection + Newton otherwise."""
    s = _as_pos(s, "s")
    if s.ndim == 0:
        return _invert_scalar(sd, float(s))
    if sd.is_monomial:
        d, c = sd.coeffs[0]
        return (s / c) ** (1.0 / (d - 2.0))
    return np.vectorize(lambda v: _invert_scalar(sd, float(v)))(s)


def pointwise_dimension_diagnostic(sd: ScalingData, r_grid: Sequence[float]) -> float:
    """Estimate ``lim_{r->0} log E(r) / log r = Qx - 2``.

    The limit is approached through secant log-slopes of ``E`` between
    consecutive grid points (the de l'Hospital form of the same limit,
    which converges like a power of ``r`` instead of ``1 / log r``), and the
    three smallest slopes are accelerated by Aitken's delta-squared step.

    Raises
    ------
    ExtrapolationUnstable
        If the last slope increments grow instead of shrinking.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.size < 4 or np.any(np.diff(r) >= 0) or np.any(r <= 0):
        raise ParameterOutOfRange("r_grid must be >= 4 strictly decreasing positive values")
    logE = np.log(eval_E(sd, r))
    logr = np.log(r)
    slopes = np.diff(logE) / np.diff(logr)
    s1, s2, s3 = slopes[-3:]
    d1, d2 = s2 - s1, s3 - s2
    scale = max(1.0, abs(s3))
    if abs(d2) <= 1e-13 * scale:
        return float(s3)
    if abs(d2) > abs(d1) * (1.0 + 1e-9):
        raise ExtrapolationUnstable("log-slope increments are not shrinking")
    denom = d2 - d1
    if abs(denom) <= 1e-300:
        return float(s3)
    return float(s3 - d2 * d2 / denom)


def ratio_bound_check(sd: ScalingData, r_range=(1e-3, 1e3), samples: int = 2001):
    """Extremes of ``r E'(r) / E(r)`` on a logarithmic grid over ``r_range``."""
    lo, hi = r_range
    r = np.geomspace(lo, hi, samples)
    ratio = r * eval_dE(sd, r) / eval_E(sd, r)
    return float(ratio.min()), float(ratio.max())


def ball_volume(model: Optional[ModelSpace], sd: ScalingData, r):
    """``|B_X(x, r)|``: closed form in group mode, ``Lambda`` otherwise.

    Lookup order: an explicit ``sd.volume``, then ``sd.beta``, then the exact
    gauge-ball volume of a model with a fundamental solution, then
    ``model.beta r^Q`` for scaling-only group models, then ``Lambda``.
    """
    r = _as_pos(r)
    if sd.volume is not None:
        return sd.volume(r)
    if sd.beta is not None:
        return _out(sd.beta * r ** sd.Qx)
    if model is not None and model.has_points and model.cq is not None:
        # X-balls are gauge balls of radius (cq E(r))^{1/(Q-2)}
        D = (model.cq * np.asarray(eval_E(sd, r))) ** (1.0 / (model.Q - 2.0))
        return _out(model.gauge_ball_beta * D ** model.Q)
    if model is not None and model.is_group and sd.is_monomial:
        return _out(model.beta * r ** model.Q)
    return eval_Lambda(sd, r)


def density_zeta(model: Optional[ModelSpace], sd: ScalingData, r: float,
                 scheme: Optional[PanelGL] = None) -> float:
    """``zeta(r) = int_0^r E'(t) |B_X(t)| / E(t)^2 dt`` by adaptive quadrature.

    In group mode the result equals ``alpha r^2`` with
    ``alpha = (Q - 2) beta / (2 omega)``.
    """
    r = float(_as_pos(r))
    scheme = scheme or PanelGL(order=16, rel_tol=1e-13)

    def integrand(t):
        e = eval_E(sd, t)
        return eval_dE(sd, t) * ball_volume(model, sd, t) / (e * e)

    return integrate_interval(integrand, 0.0, r, scheme).value


def zeta_reparametrized(model: Optional[ModelSpace], sd: ScalingData, r: float) -> float:
    """``int_0^{E(r)} |B_X(F(s))| / s^2 ds``, the same quantity in the
    variable ``s = E(t)``."""
    r = float(_as_pos(r))
    top = float(eval_E(sd, r))
    Q = sd.Qx
    # |B(F(s))| / s^2 ~ s^{Q/(Q-2) - 2} near s = 0
    expo = Q / (Q - 2.0) - 2.0

    def integrand(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        if np.any(pos):
            out[pos] = ball_volume(model, sd, invert_E(sd, s[pos])) / s[pos] ** 2
        return out

    return integrate_interval_de(integrand, 0.0, top, HalfLineDE(levels=9, rel_tol=1e-12),
                                 singularity_exponent=expo).value
