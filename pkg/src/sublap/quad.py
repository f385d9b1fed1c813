"""Quadrature engines.

Three schemes are provided:

* :class:`PanelGL` -- adaptive Gauss-Legendre panels on a bounded interval;
* :class:`HalfLineDE` -- double-exponential rules on ``[0, inf)``: tanh-sinh on
  ``[0, split]`` (absorbs an algebraic endpoint singularity) and exp-sinh on
  ``[split, inf)``;
* :class:`LatticeRn` -- a trapezoidal lattice over a ball in R^n with an
  analytic tail bound from a declared decay.

Integrands are always called with numpy arrays of nodes and must be
vectorised.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy import special as _sp

from .errors import NonConvergence, ParameterOutOfRange, TailDominates

__all__ = [
    "PanelGL",
    "HalfLineDE",
    "LatticeRn",
    "QuadResult",
    "GaussianDecay",
    "PowerDecay",
    "gauss_legendre",
    "panel_nodes",
    "log_panel_nodes",
    "integrate_interval",
    "integrate_interval_de",
    "integrate_halfline",
    "integrate_rn",
    "sphere_area",
]


@dataclass(frozen=True)
class PanelGL:
    order: int = 16
    max_panels: int = 512
    rel_tol: float = 1e-11
    abs_tol: float = 1e-15

    def __post_init__(self):
        if self.order < 4:
            raise ParameterOutOfRange("PanelGL order must be >= 4")
        _check_tols(self)


@dataclass(frozen=True)
class HalfLineDE:
    levels: int = 8
    rel_tol: float = 1e-11
    abs_tol: float = 1e-15

    def __post_init__(self):
        if self.levels < 3:
            raise ParameterOutOfRange("HalfLineDE needs at least 3 levels")
        _check_tols(self)


@dataclass(frozen=True)
class LatticeRn:
    h: float = 0.05
    R: float = 20.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-15

    def __post_init__(self):
        if not (self.h > 0 and self.R > 0):
            raise ParameterOutOfRange("LatticeRn needs h > 0 and R > 0")
        _check_tols(self)


QuadratureScheme = Union[PanelGL, HalfLineDE, LatticeRn]


def _check_tols(s):
    if not (s.rel_tol > 0 and s.abs_tol > 0):
        raise ParameterOutOfRange("tolerances must be positive")


class QuadResult(NamedTuple):
    value: float
    error: float


@dataclass(frozen=True)
class GaussianDecay:
    """``|f(y)| <= A exp(-M |y - center|^2)`` outside the lattice ball."""
    M: float
    A: float = 1.0


@dataclass(frozen=True)
class PowerDecay:
    """``|f(y)| <= A |y - center|^(-p)`` outside the lattice ball."""
    p: float
    A: float = 1.0


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


# --------------------------------------------------------------------------
# Gauss-Legendre
# --------------------------------------------------------------------------

@lru_cache(maxsize=64)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(a: float, b: float, n_panels: int, order: int = 16):
    """Composite Gauss-Legendre nodes/weights for ``n_panels`` equal panels."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def log_panel_nodes(t_lo: float, t_hi: float, width: float = 1.0, order: int = 16):
    """Nodes/weights for ``int_{t_lo}^{t_hi} g(t) dt`` with panels in log t.

    The returned weights already include the Jacobian ``dt = t d(log t)``.
    """
    lo, hi = math.log(t_lo), math.log(t_hi)
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    tau, w = panel_nodes(lo, hi, n_panels, order)
    t = np.exp(tau)
    return t, w * t


def integrate_interval(f: Callable, a: float, b: float,
                       scheme: Optional[PanelGL] = None,
                       raise_on_fail: bool = True) -> QuadResult:
    """Adaptive Gauss-Legendre quadrature on ``[a, b]``.

    Each panel is compared with the sum over its two halves; panels whose
    difference exceeds their share of the tolerance are bisected.
    """
    scheme = scheme or PanelGL()
    x, w = gauss_legendre(scheme.order)

    def rule(lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        return half * float(np.dot(w, f(mid + half * x)))

    total_len = abs(b - a)
    if total_len == 0.0:
        return QuadResult(0.0, 0.0)
    stack = [(a, b, rule(a, b))]
    value = 0.0
    error = 0.0
    panels = 1
    while stack:
        lo, hi, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        fine = left + right
        diff = abs(fine - coarse)
        share = abs(hi - lo) / total_len
        tol = max(scheme.abs_tol, scheme.rel_tol * abs(fine)) * max(share, 1e-3)
        if diff <= tol or panels >= scheme.max_panels:
            value += fine
            error += diff
            continue
        panels += 1
        stack.append((mid, hi, right))
        stack.append((lo, mid, left))
    target = max(scheme.abs_tol, scheme.rel_tol * abs(value))
    if error > 10.0 * target and raise_on_fail:
        raise NonConvergence("panel budget exhausted", value, error)
    return QuadResult(value, error)


# --------------------------------------------------------------------------
# double-exponential rules
# --------------------------------------------------------------------------

_T_MIN = 1e-290
_T_MAX = 1e290


def _tanh_sinh_map(tau, a, b):
    # t in (a, b); returns t, dt/dtau and the distance to the nearer end
    y = 0.5 * math.pi * np.sinh(tau)
    ey = np.exp(-2.0 * np.abs(y))
    dist_frac = ey / (1.0 + ey)          # fraction of (b - a) from the near end
    length = b - a
    t = np.where(tau < 0, a + length * dist_frac, b - length * dist_frac)
    jac = length * 0.5 * math.pi * np.cosh(tau) * 2.0 * ey / (1.0 + ey) ** 2
    return t, jac


def _de_sum(eval_nodes, tau_lo, tau_hi, scheme: HalfLineDE):
    """Trapezoid in tau with successive halving; returns (value, error)."""
    h = 0.5
    j = np.arange(math.ceil(tau_lo / h), math.floor(tau_hi / h) + 1)
    total = float(np.sum(eval_nodes(j * h)))
    prev = h * total
    est = prev
    err = math.inf
    for level in range(1, scheme.levels + 1):
        h *= 0.5
        j = np.arange(math.ceil(tau_lo / h), math.floor(tau_hi / h) + 1)
        j = j[j % 2 != 0]
        total += float(np.sum(eval_nodes(j * h)))
        est = h * total
        err = abs(est - prev)
        if level >= 3 and err <= max(scheme.abs_tol, scheme.rel_tol * abs(est)):
            return est, err
        prev = est
    return est, err


def _clean(vals, tau):
    vals = np.asarray(vals, dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        if np.any(bad & (np.abs(tau) < 2.5)):
            raise NonConvergence("integrand not finite at an interior node")
        vals = np.where(bad, 0.0, vals)
    return vals


def integrate_interval_de(f: Callable, a: float, b: float,
                          scheme: Optional[HalfLineDE] = None,
                          singularity_exponent: float = 0.0,
                          raise_on_fail: bool = True) -> QuadResult:
    """Tanh-sinh quadrature on ``[a, b]``; tolerates ``(t - a)^p`` with p > -1
    and an integrable singularity at ``b`` as well.

    Nodes near ``b`` are passed as floats, so a singularity there is only
    resolved down to ``eps * |b|``; for ``(b - t)^p`` the lost mass is about
    ``(eps |b|)^(p + 1) / (p + 1)``. Put strong singularities at ``a``.
    """
    scheme = scheme or HalfLineDE()
    if b <= a:
        if b == a:
            return QuadResult(0.0, 0.0)
        r = integrate_interval_de(f, b, a, scheme, singularity_exponent, raise_on_fail)
        return QuadResult(-r.value, r.error)
    p1 = singularity_exponent + 1.0
    if not p1 > 0:
        raise ParameterOutOfRange("singularity_exponent must exceed -1")
    if p1 < 0.25:
        # strong singularity: t = a + (b - a) w^k makes the integrand bounded
        k = min(5, math.ceil(0.5 / p1))
        length = b - a

        def g(w):
            return f(a + length * w ** k) * (length * k) * w ** (k - 1)

        return integrate_interval_de(g, 0.0, 1.0, scheme, k * p1 - 1.0, raise_on_fail)
    length = b - a
    # smallest distance to an endpoint we resolve explicitly
    want = min(280.0, 17.0 / min(p1, 1.0))
    frac_min = max(_T_MIN / max(length, 1e-300), 10.0 ** (-want))
    tau_max = math.asinh(-math.log(frac_min) / math.pi)

    def nodes(tau):
        t, jac = _tanh_sinh_map(tau, a, b)
        return _clean(f(t) * jac, tau)

    val, err = _de_sum(nodes, -tau_max, tau_max, scheme)
    # analytic remainder on [a, a + frac_min*length] from the declared power
    t0 = a + frac_min * length
    corr = float(np.asarray(f(np.array([t0])))[0]) * (t0 - a) / p1
    if math.isfinite(corr):
        val += corr
        err += 1e-3 * abs(corr)
    if raise_on_fail and err > 10.0 * max(scheme.abs_tol, scheme.rel_tol * abs(val)):
        raise NonConvergence("tanh-sinh did not converge", val, err)
    return QuadResult(val, err)


def integrate_halfline(f: Callable, singularity_exponent: float = 0.0,
                       scheme: Optional[HalfLineDE] = None,
                       decay: Union[str, float] = "exp",
                       split: float = 1.0,
                       raise_on_fail: bool = True) -> QuadResult:
    """Integrate ``f`` over ``(0, inf)``.

    Parameters
    ----------
    f : callable
        Vectorised integrand.
    singularity_exponent : float
        ``p`` with ``f(t) ~ t^p`` as ``t -> 0``; must exceed -1.
    scheme : HalfLineDE, optional
    decay : "exp" or float
        Declared behaviour at infinity: ``"exp"`` for exponential decay, or
        ``q > 1`` for ``f(t) ~ t^(-q)``. A power law adds the analytic
        remainder beyond the last node.
    split : float
        The interval is split at ``t = split`` (tanh-sinh below, exp-sinh
        above).

    Returns
    -------
    QuadResult
        Value and a conservative error estimate.

    Raises
    ------
    NonConvergence
        Carries the best value and its error estimate.
    """
    scheme = scheme or HalfLineDE()
    if not singularity_exponent > -1.0:
        raise ParameterOutOfRange("singularity_exponent must exceed -1")
    left = integrate_interval_de(f, 0.0, split, scheme, singularity_exponent,
                                 raise_on_fail=False)

    # exp-sinh on [split, inf): t = split + split * exp(pi/2 sinh tau)
    c = split
    if decay == "exp":
        t_hi = _T_MAX
        q = None
    else:
        q = float(decay)
        if not q > 1.0:
            raise ParameterOutOfRange("power decay exponent must exceed 1")
        t_hi = min(_T_MAX, c * 10.0 ** min(280.0, 17.0 / (q - 1.0)))
    tau_hi = math.asinh(2.0 / math.pi * math.log(t_hi / c))
    tau_lo = -math.asinh(2.0 / math.pi * math.log(1.0 / 1e-30))

    def nodes(tau):
        e = np.exp(0.5 * math.pi * np.sinh(tau))
        t = c + c * e
        jac = c * e * 0.5 * math.pi * np.cosh(tau)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            return _clean(f(t) * jac, tau)

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        val, err = _de_sum(nodes, tau_lo, tau_hi, scheme)
    if q is not None:
        t_end = c + c * math.exp(0.5 * math.pi * math.sinh(tau_hi))
        corr = float(np.asarray(f(np.array([t_end])))[0]) * t_end / (q - 1.0)
        if math.isfinite(corr):
            val += corr
            err += 1e-3 * abs(corr)
    value = left.value + val
    error = left.error + err
    if raise_on_fail and error > 10.0 * max(scheme.abs_tol, scheme.rel_tol * abs(value)):
        raise NonConvergence("half-line quadrature did not converge", value, error)
    return QuadResult(value, error)


# --------------------------------------------------------------------------
# lattice over R^n
# --------------------------------------------------------------------------

def _tail_bound(decay, n: int, R: float) -> float:
    if isinstance(decay, GaussianDecay):
        M = decay.M
        return decay.A * (math.pi / M) ** (n / 2.0) * float(_sp.gammaincc(n / 2.0, M * R * R))
    if isinstance(decay, PowerDecay):
        if not decay.p > n:
            raise ParameterOutOfRange("PowerDecay needs p > n for integrability")
        return decay.A * sphere_area(n) * R ** (n - decay.p) / (decay.p - n)
    raise ParameterOutOfRange(f"unknown decay {decay!r}")


def _decay_value(decay, r):
    if isinstance(decay, GaussianDecay):
        return decay.A * math.exp(-decay.M * r * r)
    return decay.A * r ** (-decay.p)


def integrate_rn(f: Callable, n: int, scheme: Optional[LatticeRn] = None,
                 decay=None, center=None, chunk: int = 1 << 18,
                 raise_on_fail: bool = True) -> QuadResult:
    """Trapezoidal lattice sum of ``f`` over ``|y - center| <= R``.

    ``f`` receives an ``(m, n)`` array of points. The reported error is the
    analytic tail bound implied by ``decay``.

    Raises
    ------
    TailDominates
        If the tail bound exceeds ``rel_tol * |value| + abs_tol``.
    """
    scheme = scheme or LatticeRn()
    decay = decay if decay is not None else GaussianDecay(1.0)
    h, R = scheme.h, scheme.R
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    m = int(math.floor(R / h + 1e-12))
    axis = h * np.arange(-m, m + 1)
    # decay sanity check on the truncation sphere
    dirs = np.vstack([np.eye(n), -np.eye(n)])
    probe = np.abs(np.asarray(f(c + R * dirs), dtype=float))
    if np.any(probe > _decay_value(decay, R) * (1 + 1e-6) + 1e-300):
        warnings.warn("declared decay is violated on the truncation sphere", RuntimeWarning)
    total = 0.0
    # iterate over the first coordinate in blocks so memory stays bounded
    rest = None
    if n > 1:
        rest = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    block = max(1, chunk // (1 if rest is None else rest.shape[0]))
    for start in range(0, axis.size, block):
        first = axis[start:start + block]
        if rest is None:
            pts = first[:, None]
        else:
            pts = np.concatenate([np.repeat(first, rest.shape[0])[:, None],
                                  np.tile(rest, (first.size, 1))], axis=1)
        keep = np.einsum("ij,ij->i", pts, pts) <= R * R * (1 + 1e-14)
        pts = pts[keep] + c
        if pts.size:
            total += float(np.sum(f(pts)))
    value = total * h ** n
    tail = _tail_bound(decay, n, R)
    if raise_on_fail and tail > scheme.rel_tol * abs(value) + scheme.abs_tol:
        raise TailDominates(f"tail bound {tail:.3e} exceeds tolerance")
    return QuadResult(value, tail)
