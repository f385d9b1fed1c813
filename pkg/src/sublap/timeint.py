r"""Time integrals ``int_0^inf w(t) [P_t u(x) - u(x)] dt`` shared by the
Balakrishnan formula and the extension traces.

Weights are finite sums of terms ``c t^p exp(-q / t)``. The half-line is
split in three:

* ``(0, eps)``: ``P_t u - u`` is replaced by ``t L u + t^2 L^2 u / 2``.
* ``(eps, T)``: composite Gauss-Legendre panels in ``log t``.
* ``(T, inf)``: ``-u(x) int_T^inf w`` in closed form (incomplete gamma),
  ``int_T^{T_hi} w P_t u`` on further log panels, and beyond ``T_hi`` a
  bound from the declared decay of ``P_t u``.

The semigroup differences on the shared nodes are computed once per
engine, so several weights cost no further semigroup evaluations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammainc

from .heat import semigroup_differences
from .models import ModelKind, ModelSpace
from .quad import HalfLineDE, gauss_legendre, integrate_interval_de
from .specfun import gamma
from .testfunctions import TestFunction

__all__ = ["WeightTerm", "TimeIntegral", "TimeIntegralEngine", "choose_eps"]

EPS_MIN, EPS_MAX = 1e-9, 1e-3
PANEL_WIDTH = 1.5          # in log t
T_SPLIT = 50.0


class WeightTerm(NamedTuple):
    """``coef * t^power * exp(-q / t)``."""
    coef: float
    power: float
    q: float = 0.0


class TimeIntegral(NamedTuple):
    value: float
    error: float
    series: float
    middle: float
    tail: float
    tail_bound: float


def _eval_weight(terms: Sequence[WeightTerm], t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for c, p, q in terms:
        if q > 0:
            with np.errstate(under="ignore"):
                out = out + c * t ** p * np.exp(-q / t)
        else:
            out = out + c * t ** p
    return out


def _tail_integral(terms: Sequence[WeightTerm], T: float) -> float:
    """``int_T^inf w(t) dt`` in closed form."""
    acc = 0.0
    for c, p, q in terms:
        a = -p - 1.0
        if a <= 0:
            raise ValueError("weight is not integrable at infinity")
        if q > 0:
            # int_T^inf t^p e^{-q/t} dt = q^{p+1} gamma_lower(a, q / T)
            acc += c * q ** (p + 1.0) * gamma(a) * float(gammainc(a, q / T))
        else:
            acc += c * T ** (p + 1.0) / a
    return acc


def _abs_tail(terms: Sequence[WeightTerm], T: float, extra_power: float = 0.0) -> float:
    """``int_T^inf |w(t)| t^extra_power dt`` bound (``exp(-q/t) <= 1``)."""
    acc = 0.0
    for c, p, q in terms:
        a = -(p + extra_power) - 1.0
        if a <= 0:
            return math.inf
        acc += abs(c) * T ** (p + extra_power + 1.0) / a
    return acc


def _series_moment(terms: Sequence[WeightTerm], eps: float, k: int) -> float:
    """``int_0^eps w(t) t^k dt``."""
    acc = 0.0
    for c, p, q in terms:
        e = p + k
        if q == 0.0:
            if e <= -1.0:
                raise ValueError("weight too singular at t = 0 for the series part")
            acc += c * eps ** (e + 1.0) / (e + 1.0)
        elif q / eps > 700.0:
            continue
        else:
            f = lambda t, e=e, q=q: np.where(t > 0, np.asarray(t, float) ** e *
                                           np.exp(-q / np.maximum(t, 1e-300)), 0.0)
            acc += c * integrate_interval_de(f, 0.0, eps, HalfLineDE(levels=8, rel_tol=1e-13),
                                             singularity_exponent=0.0, raise_on_fail=False).value
    return acc


def choose_eps(s: float, lap2: float, rel_tol: float, scale: float = 1.0) -> float:
    """Largest ``eps`` with ``eps^{2-s} |L^2 u| / (2 (2 - s)) <= rel_tol * scale``,
    clamped to ``[1e-9, 1e-3]``."""
    if lap2 == 0.0 or not math.isfinite(lap2):
        return EPS_MAX
    eps = (2.0 * (2.0 - s) * rel_tol * scale / abs(lap2)) ** (1.0 / (2.0 - s))
    return float(min(EPS_MAX, max(EPS_MIN, eps)))


def _log_nodes(lo: float, hi: float, width: float, order: int = 16):
    a, b = math.log(lo), math.log(hi)
    n = max(1, int(math.ceil((b - a) / width)))
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    tau = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    t = np.exp(tau)
    return t, wt * t


def _decay_bound_power(model: ModelSpace, u: TestFunction):
    """``(A, r)`` with ``|P_t u(x)| <= A t^{-r}`` for large ``t``, or ``None``."""
    if u.l1_norm is not None:
        if model.kind is ModelKind.EUCLIDEAN:
            return u.l1_norm * (4.0 * math.pi) ** (-model.n / 2.0), model.n / 2.0
        if model.kind is ModelKind.HEISENBERG:
            return u.l1_norm / 16.0, 2.0
    return None


@dataclass
class TimeIntegralEngine:
    """Semigroup differences of ``u`` at ``x`` on shared time nodes.

    Parameters
    ----------
    s : float
        Fractional order used by the ``eps`` rule.
    rel_tol : float
        Target accuracy of the series truncation and of the far tail.
    method : str
        Passed to :func:`sublap.heat.semigroup_differences`.
    """
    model: ModelSpace
    u: TestFunction
    x: np.ndarray
    s: float
    rel_tol: float = 1e-10
    T: float = T_SPLIT
    method: str = "auto"
    eps: Optional[float] = None
    T_hi: Optional[float] = None
    width: float = PANEL_WIDTH

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u0 = float(self.u(self.x))
        self.lap1 = float(self.u.lap(self.x))
        self.lap2 = float(self.u.lap2_at(self.model, self.x))
        if self.eps is None:
            self.eps = choose_eps(self.s, self.lap2, self.rel_tol,
                                  max(1.0, abs(self.lap1), abs(self.u0)))
        self.constant = self.u.kind == "constant"
        self.t_mid, self.w_mid = _log_nodes(self.eps, self.T, self.width)
        self.decay = _decay_bound_power(self.model, self.u)
        self._plane = self.u.kind == "plane_wave"
        if self.T_hi is None:
            self.T_hi = self._choose_T_hi()
        if self.T_hi > self.T:
            self.t_far, self.w_far = _log_nodes(self.T, self.T_hi, self.width)
        else:
            self.t_far, self.w_far = np.zeros(0), np.zeros(0)
        if self.constant:
            self.g_mid = np.zeros_like(self.t_mid)
            self.p_far = np.full_like(self.t_far, self.u0)
        else:
            self.g_mid = semigroup_differences(self.model, self.u, self.x, self.t_mid, self.method)
            self.p_far = (semigroup_differences(self.model, self.u, self.x, self.t_far, self.method)
                          + self.u0) if self.t_far.size else self.t_far

    def _choose_T_hi(self) -> float:
        if self.constant:
            return self.T
        if self._plane:
            k2 = float(np.sum(self.u.params["xi"] ** 2))
            # e^{-k2 t} is negligible once k2 t > 40
            return max(self.T, min(1e8, 40.0 / max(k2, 1e-12)))
        if self.decay is not None:
            A, r = self.decay
            # make A T_hi^{-r - s} / (r + s) small; cheap closed forms go far
            target = self.rel_tol * max(1.0, abs(self.u0))
            T_hi = (A / ((r + self.s) * target)) ** (1.0 / (r + self.s))
            cap = 1e12 if self.u.semigroup is not None else 1e4 * self.T
            return float(min(max(T_hi, self.T), cap))
        return self.T

    def _far_bound(self, terms) -> float:
        """``int_{T_hi}^inf |w| |P_t u(x)|``."""
        if self.constant:
            return 0.0
        if self._plane:
            k2 = float(np.sum(self.u.params["xi"] ** 2))
            return math.exp(-k2 * self.T_hi) * _abs_tail(terms, self.T_hi)
        if self.decay is not None:
            A, r = self.decay
            return A * _abs_tail(terms, self.T_hi, -r)
        return (self.u.sup_norm if math.isfinite(self.u.sup_norm) else math.inf) * _abs_tail(terms, self.T_hi)

    def integrate(self, terms: Iterable[WeightTerm]) -> TimeIntegral:
        terms = list(terms)
        if self.constant:
            return TimeIntegral(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        m1 = _series_moment(terms, self.eps, 1)
        m2 = _series_moment(terms, self.eps, 2)
        second = 0.5 * self.lap2 * m2
        series = self.lap1 * m1 + second
        if self.lap1 != 0.0:
            ratio = abs(self.lap2 / self.lap1)
        else:
            ratio = 1.0 / self.eps
        series_err = abs(second) * min(1.0, self.eps * ratio / 3.0)
        middle = float(np.sum(_eval_weight(terms, self.t_mid) * self.w_mid * self.g_mid))
        tail = -self.u0 * _tail_integral(terms, self.T)
        if self.t_far.size:
            tail += float(np.sum(_eval_weight(terms, self.t_far) * self.w_far * self.p_far))
        bound = self._far_bound(terms)
        value = series + middle + tail
        err = series_err + bound + 1e-13 * (abs(series) + abs(middle) + abs(tail))
        return TimeIntegral(value, err, series, middle, tail, bound)
