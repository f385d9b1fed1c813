r"""Extension problem for ``(-L)^s``: Bessel heat kernel on the half-line,
parabolic and elliptic Poisson kernels, the extension ``U(x, z)`` and its
weighted normal derivative at ``z = 0``.

Throughout ``a = 1 - 2s`` and every public operation accepts either ``a``
or the keyword ``s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import roots_genlaguerre

from .errors import (ExtrapolationUnstable, NonpositiveTime, ParameterOutOfRange,
                     UnsupportedFunction, UnsupportedModel)
from .heat import apply_semigroup_full
from .kernels import heis_p1
from .models import ModelKind, ModelSpace, heat_kernel, heis_inv
from .quad import HalfLineDE, gauss_legendre, integrate_halfline
from .specfun import bessel_i_scaled, gamma
from .testfunctions import TestFunction, constant
from .timeint import TimeIntegralEngine, WeightTerm, _log_nodes

__all__ = [
    "ExtensionPoint",
    "DtnResult",
    "poisson_constant",
    "trace_constant",
    "bessel_heat_kernel",
    "bessel_semigroup",
    "bessel_mass",
    "chapman_kolmogorov",
    "heat_mass",
    "parabolic_poisson",
    "parabolic_poisson_dz",
    "poisson_via_adjoint",
    "parabolic_mass",
    "elliptic_poisson",
    "caffarelli_silvestre",
    "PolarPoisson",
    "poisson_mass",
    "solve_extension",
    "extension_derivative",
    "dtn_trace",
    "boundary_l2_slope",
]


def _resolve_a(a, s) -> float:
    if s is not None:
        a_s = 1.0 - 2.0 * float(s)
        if a is not None and abs(float(a) - a_s) > 1e-14:
            raise ParameterOutOfRange(f"a = {a} and s = {s} disagree")
        a = a_s
    if a is None:
        raise ParameterOutOfRange("give a or s")
    a = float(a)
    if not -1.0 < a < 1.0:
        raise ParameterOutOfRange("a must lie in (-1, 1)")
    return a


@dataclass(frozen=True)
class ExtensionPoint:
    """A point ``(x, z)`` of the upper half-space; ``z > 0`` strictly."""
    x: tuple
    z: float

    def __post_init__(self):
        if not self.z > 0:
            raise ParameterOutOfRange("extension points need z > 0")
        object.__setattr__(self, "x", tuple(float(v) for v in np.ravel(self.x)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.x)


def poisson_constant(a: float) -> float:
    """``1 / (2^{1-a} Gamma((1-a)/2))``."""
    return 1.0 / (2.0 ** (1.0 - a) * gamma((1.0 - a) / 2.0))


def trace_constant(a: float) -> float:
    """``2^{-a} Gamma((1-a)/2) / Gamma((1+a)/2)``; the trace is minus this
    times ``lim z^a dU/dz``."""
    return 2.0 ** (-a) * gamma((1.0 - a) / 2.0) / gamma((1.0 + a) / 2.0)


# --------------------------------------------------------------------------
# Bessel heat kernel on (0, inf) with measure z^a dz
# --------------------------------------------------------------------------

def bessel_heat_kernel(a, z, zeta, t, *, s=None):
    """``p^(a)(z, zeta, t)``, the Neumann heat kernel of ``d_zz + (a/z) d_z``.

    Written with the scaled Bessel function so that large ``z zeta / 2t``
    cannot overflow. Vectorised over ``z``, ``zeta`` and ``t``.
    """
    a = _resolve_a(a, s)
    z, zeta, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (z, zeta, t)))
    if np.any(t <= 0):
        raise NonpositiveTime("t must be positive")
    if np.any(z < 0) or np.any(zeta < 0):
        raise ParameterOutOfRange("z and zeta must be nonnegative")
    nu = (a - 1.0) / 2.0
    arg = z * zeta / (2.0 * t)
    small = arg < 1e-280
    safe = np.where(small, 1.0, arg)
    with np.errstate(under="ignore"):
        val = (1.0 / (2.0 * t)) * (z * zeta) ** ((1.0 - a) / 2.0) \
            * np.asarray(bessel_i_scaled(nu, safe)) * np.exp(-(z - zeta) ** 2 / (4.0 * t))
        # the z zeta -> 0 limit of (z zeta)^{-nu} I_nu(z zeta / 2t)
        lim = (1.0 / (2.0 * t)) * (4.0 * t) ** (-nu) / gamma(nu + 1.0) \
            * np.exp(-(z * z + zeta * zeta) / (4.0 * t))
    out = np.where(small, lim, val)
    return float(out) if out.ndim == 0 else out


def bessel_semigroup(a, phi: Callable, z: float, t: float, *, s=None,
                     scheme: Optional[HalfLineDE] = None) -> float:
    """``int_0^inf phi(zeta) p^(a)(z, zeta, t) zeta^a dzeta``.

    ``phi`` must be bounded; the Gaussian factor of the kernel supplies the
    decay at infinity.
    """
    a = _resolve_a(a, s)
    scheme = scheme or HalfLineDE(levels=9, rel_tol=1e-13)

    def f(zeta):
        zeta = np.asarray(zeta, dtype=float)
        out = np.zeros_like(zeta)
        pos = zeta > 0
        zp = zeta[pos]
        out[pos] = np.asarray(phi(zp)) * bessel_heat_kernel(a, z, zp, t) * zp ** a
        return out

    # split at the far edge of the Gaussian bump so both halves are smooth
    split = z + 2.0 * math.sqrt(t)
    return integrate_halfline(f, a, scheme, "exp", split, raise_on_fail=False).value


def bessel_mass(a, z: float, t: float, *, s=None) -> float:
    """``int_0^inf p^(a)(z, zeta, t) zeta^a dzeta`` (equals 1)."""
    return bessel_semigroup(a, lambda zeta: np.ones_like(zeta), z, t, s=s)


def chapman_kolmogorov(a, z: float, eta: float, t: float, tau: float, *, s=None):
    """Both sides of ``int p(z, zeta, t) p(zeta, eta, tau) zeta^a dzeta = p(z, eta, t + tau)``."""
    a = _resolve_a(a, s)
    lhs = bessel_semigroup(a, lambda zeta: bessel_heat_kernel(a, zeta, eta, tau), z, t)
    rhs = bessel_heat_kernel(a, z, eta, t + tau)
    return lhs, rhs


# --------------------------------------------------------------------------
# parabolic Poisson kernel
# --------------------------------------------------------------------------

def heat_mass(model: ModelSpace, t: float) -> float:
    """``int p(0, y, t) dy`` summed on the semigroup lattice."""
    one = constant(model.n, 1.0, box=math.inf)
    return apply_semigroup_full(model, one, np.zeros(model.n), t, method="lattice").value


def _time_factor(a, z, t):
    return poisson_constant(a) * z ** (1.0 - a) * t ** (-(3.0 - a) / 2.0) * np.exp(-z * z / (4.0 * t))


def parabolic_poisson(model: ModelSpace, a, x, y, z, t, *, s=None):
    """``P_z^(a)(x, y, t) = c_a z^{1-a} t^{-(3-a)/2} exp(-z^2/4t) p(x, y, t)``."""
    a = _resolve_a(a, s)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ParameterOutOfRange("z must be positive")
    t = np.asarray(t, dtype=float)
    out = _time_factor(a, z, t) * heat_kernel(model, x, y, t)
    return float(out) if np.ndim(out) == 0 else out


def parabolic_poisson_dz(model: ModelSpace, a, x, y, z, t, *, s=None):
    """``d/dz P_z^(a) = ((1 - a)/z - z/2t) P_z^(a)``."""
    a = _resolve_a(a, s)
    return ((1.0 - a) / z - z / (2.0 * t)) * parabolic_poisson(model, a, x, y, z, t)


def poisson_via_adjoint(model: ModelSpace, a, x, y, z: float, t: float, *, s=None,
                        zeta: float = 1e-7, h: Optional[float] = None) -> float:
    """``P_z^(a)`` rebuilt as ``-z^{-a} d/dz [p(x, y, t) p^(-a)(z, zeta, t)]`` with
    ``zeta -> 0``: the Neumann fundamental solution of the adjoint weight
    evaluated near the boundary and differentiated by centred differences.
    """
    a = _resolve_a(a, s)
    h = h if h is not None else 1e-4 * z
    g = lambda zz: bessel_heat_kernel(-a, zz, zeta, t)
    dz = (g(z + h) - g(z - h)) / (2.0 * h)
    return float(-z ** (-a) * dz * heat_kernel(model, x, y, t))


def parabolic_mass(model: ModelSpace, a, z: float, *, s=None, nodes: int = 16) -> float:
    """``int_0^inf int P_z^(a)(0, y, t) dy dt``.

    The inner integral is the lattice heat mass. With ``sigma = z^2 / 4t``
    the outer integral is a generalised Gauss-Laguerre rule with weight
    ``sigma^{(1-a)/2 - 1} e^{-sigma}``.
    """
    a = _resolve_a(a, s)
    xs, ws = roots_genlaguerre(nodes, (1.0 - a) / 2.0 - 1.0)
    masses = np.array([heat_mass(model, z * z / (4.0 * sg)) for sg in xs])
    return float(np.sum(ws * masses) / gamma((1.0 - a) / 2.0))


# --------------------------------------------------------------------------
# elliptic Poisson kernel
# --------------------------------------------------------------------------

def _gauge_sq(model: ModelSpace, g) -> float:
    if model.kind is ModelKind.HEISENBERG:
        w = g[0] * g[0] + g[1] * g[1]
        return math.sqrt(w * w + 16.0 * g[2] * g[2])
    return float(np.dot(g, g))


def _elliptic_point(model: ModelSpace, a: float, x, y, z: float, levels: int) -> float:
    g = np.asarray(model.difference(np.asarray(x, float), np.asarray(y, float)), dtype=float)
    x0 = np.zeros(model.n)
    gg = np.broadcast_to(g, (1, model.n))

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        with np.errstate(under="ignore"):
            out[pos] = _time_factor(a, z, tp) * heat_kernel(model, np.repeat(gg, tp.size, 0), x0, tp)
        return out

    q = (3.0 - a) / 2.0 + model.Q / 2.0
    split = (z * z + _gauge_sq(model, g)) / 4.0
    res = integrate_halfline(f, 0.0, HalfLineDE(levels=levels, rel_tol=1e-13), decay=q,
                             split=split, raise_on_fail=False)
    return res.value


def elliptic_poisson(model: ModelSpace, a, x, y, z: float, *, s=None, levels: int = 9):
    """``K_z^(a)(x, y) = int_0^inf P_z^(a)(x, y, t) dt`` by half-line quadrature.

    Vectorised over the rows of ``y`` (one quadrature per point).
    """
    a = _resolve_a(a, s)
    if not z > 0:
        raise ParameterOutOfRange("z must be positive")
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        return _elliptic_point(model, a, x, y, z, levels)
    return np.array([_elliptic_point(model, a, x, yi, z, levels) for yi in y])


def caffarelli_silvestre(n: int, s: float, x, y, z: float):
    """Closed-form Euclidean extension kernel
    ``Gamma(n/2 + s) / (pi^{n/2} Gamma(s)) z^{2s} / (z^2 + |x - y|^2)^{(n + 2s)/2}``."""
    d2 = np.sum((np.asarray(x, float) - np.asarray(y, float)) ** 2, axis=-1)
    c = gamma(n / 2.0 + s) / (math.pi ** (n / 2.0) * gamma(s))
    out = c * z ** (2.0 * s) / (z * z + d2) ** ((n + 2.0 * s) / 2.0)
    return float(out) if np.ndim(out) == 0 else out


XI_LO, XI_HI = 1e-14, 400.0
R_SPAN = 1e4          # radial grid of the polar kernel covers [z / R_SPAN, z R_SPAN]


def _xi_nodes(width: float = 0.5):
    return _log_nodes(XI_LO, XI_HI, width)


class PolarPoisson:
    r"""``K_z^(a)`` on rays ``delta_R S_k`` from the unit gauge sphere.

    Homogeneity ``p_t(delta_R w) = R^{-Q} xi^{Q/2} p_1(delta_{sqrt xi} w)``
    with ``xi = R^2 / t`` turns the time integral into

    ``K(R, w) = c_a z^{1-a} R^{a-1-Q} int_0^inf xi^{(Q-1-a)/2}
    exp(-z^2 xi / 4R^2) p_1(delta_{sqrt xi} w) dxi``

    whose ``xi`` nodes do not depend on ``R``. The unit-time kernel is
    tabulated once per latitude and every radius is a matrix product.
    """

    def __init__(self, model: ModelSpace, a: float, z: float, orders=None):
        from .meanvalue import _default_orders, _unit_sphere
        if not model.is_group or not model.has_points:
            raise UnsupportedModel("polar Poisson kernel needs a group model with points")
        self.model, self.a, self.z = model, float(a), float(z)
        self.S, self.c = _unit_sphere(model, *(orders or _default_orders(model)))
        Q = model.Q
        self.p = (Q - 1.0 - a) / 2.0
        xi, wxi = _xi_nodes()
        if model.kind is ModelKind.EUCLIDEAN:
            self.index = np.zeros(len(self.S), dtype=int)
            table = ((4.0 * math.pi) ** (-model.n / 2.0) * np.exp(-xi / 4.0))[:, None]
        else:
            w_s = self.S[:, 0] ** 2 + self.S[:, 1] ** 2
            key = np.round(self.S[:, 2], 14)
            uniq, first, self.index = np.unique(key, return_index=True, return_inverse=True)
            table = heis_p1(xi[:, None] * w_s[first][None, :], xi[:, None] * uniq[None, :])
        self.xi = xi
        self.base = (wxi * xi ** self.p)[:, None] * table          # (n_xi, n_profiles)
        self.pref = poisson_constant(a) * z ** (1.0 - a)
        p1_0 = float(model.heat_peak(1.0))
        self.small = p1_0 * XI_LO ** (self.p + 1.0) / (self.p + 1.0)
        # R -> infinity profile: K ~ A(w) R^{a-1-Q}
        self.asym = self.pref * (self.base.sum(axis=0) + self.small)

    def profiles(self, R) -> np.ndarray:
        """``K`` at radii ``R`` for each distinct angular profile, shape ``(len(R), m)``."""
        R = np.asarray(R, dtype=float)
        with np.errstate(under="ignore"):
            damp = np.exp(-np.outer(self.z * self.z / (4.0 * R * R), self.xi))
        near = np.exp(-self.z * self.z * XI_LO / (4.0 * R * R)) * self.small
        body = damp @ self.base + near[:, None]
        return self.pref * R[:, None] ** (self.a - 1.0 - self.model.Q) * body

    def kernel(self, R) -> np.ndarray:
        """``K`` at ``delta_R S_k`` for all sphere nodes, shape ``(len(R), len(S))``."""
        return self.profiles(R)[:, self.index]

    def radial_nodes(self, width: float = 0.5):
        return _log_nodes(self.z / R_SPAN, self.z * R_SPAN, width)

    def mass(self) -> float:
        """``int K dy``: log-panel radial rule, a constant-kernel core below
        the first node and the homogeneous tail beyond the last."""
        Q, a = self.model.Q, self.a
        R, wR = self.radial_nodes()
        K = self.profiles(R)[:, self.index] @ self.c
        body = float(np.sum(wR * R ** (Q - 1) * K))
        R_lo, R_hi = self.z / R_SPAN, self.z * R_SPAN
        core = float(self.profiles([R_lo])[0, self.index] @ self.c) * R_lo ** Q / Q
        tail = float(self.asym[self.index] @ self.c) * R_hi ** (a - 1.0) / (1.0 - a)
        return body + core + tail


def poisson_mass(model: ModelSpace, a, z: float, *, s=None) -> float:
    """``int K_z^(a)(x, y) dy`` (equals 1)."""
    return PolarPoisson(model, _resolve_a(a, s), z).mass()


# --------------------------------------------------------------------------
# extension and its trace
# --------------------------------------------------------------------------

def _check_z(z):
    if not z > 0:
        raise ParameterOutOfRange("z must be positive; boundary values are limits")


def _extension_kernel(model: ModelSpace, a: float, u: TestFunction, x, z: float) -> float:
    if not math.isfinite(u.sup_norm):
        raise UnsupportedFunction("the kernel route needs a bounded function")
    pp = PolarPoisson(model, a, z)
    R, wR = pp.radial_nodes()
    K = pp.kernel(R)
    u0 = float(u(x))
    acc = 0.0
    for i in range(R.size):
        g = model.dilate(pp.S, R[i])
        y = x - g if model.kind is ModelKind.EUCLIDEAN else model.translate(x, heis_inv(g))
        acc += wR[i] * R[i] ** (model.Q - 1) * float(np.sum(pp.c * K[i] * (u(y) - u0)))
    # beyond the grid u is negligible and u - u(x) -> -u(x)
    tail = float(pp.asym[pp.index] @ pp.c) * (z * R_SPAN) ** (a - 1.0) / (1.0 - a)
    return u0 + acc - u0 * tail


def _semigroup_weight(a: float, z: float):
    return [WeightTerm(poisson_constant(a) * z ** (1.0 - a), -(3.0 - a) / 2.0, z * z / 4.0)]


def _engine(model, u, x, a, method="auto", rel_tol=1e-11):
    return TimeIntegralEngine(model, u, np.asarray(x, dtype=float), (1.0 - a) / 2.0,
                              rel_tol, method=method)


def solve_extension(model: ModelSpace, a, u: TestFunction, x, z: float, *, s=None,
                    method: str = "auto", engine: Optional[TimeIntegralEngine] = None) -> float:
    """``U(x, z) = int K_z^(a)(x, y) u(y) dy``.

    Parameters
    ----------
    method : {"auto", "kernel", "semigroup"}
        ``kernel`` integrates the polar Poisson kernel against ``u`` around
        ``x``. ``semigroup`` uses Fubini,
        ``U - u = c_a z^{1-a} int t^{-(3-a)/2} e^{-z^2/4t} (P_t u - u) dt``,
        on the shared time-integral engine. ``auto`` picks the kernel route
        for functions of finite support and the semigroup route otherwise.
    """
    a = _resolve_a(a, s)
    _check_z(z)
    x = np.asarray(x, dtype=float)
    if u.kind == "constant" and method != "kernel":
        return float(u(x))
    if method == "auto":
        method = "kernel" if math.isfinite(u.support_radius) else "semigroup"
    if method == "kernel":
        return _extension_kernel(model, a, u, x, z)
    if method != "semigroup":
        raise ParameterOutOfRange(f"unknown method {method!r}")
    eng = engine or _engine(model, u, x, a)
    return eng.u0 + eng.integrate(_semigroup_weight(a, z)).value


def _derivative_weights(a: float, z: float):
    c, q = poisson_constant(a), z * z / 4.0
    return [WeightTerm(c * (1.0 - a), -(3.0 - a) / 2.0, q),
            WeightTerm(-0.5 * c * z * z, -(5.0 - a) / 2.0, q)]


def extension_derivative(engine: TimeIntegralEngine, a: float, z: float):
    """``z^a dU/dz`` with the z-derivative taken inside the time integral."""
    return engine.integrate(_derivative_weights(a, z))


class DtnResult(NamedTuple):
    value: float
    error: float
    z_grid: tuple
    samples: tuple
    fd_discrepancy: float
    flags: tuple


DEFAULT_Z_GRID = tuple(0.1 * 0.5 ** k for k in range(8))


def _fit_limit(z, vals, exps):
    A = np.stack([z ** e for e in exps], axis=1)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return float(coef[0])


def dtn_trace_full(model: ModelSpace, a, u: TestFunction, x, z_grid: Sequence[float] = DEFAULT_Z_GRID,
                   *, s=None, method: str = "auto", fd_check: bool = True) -> DtnResult:
    """Weighted normal derivative at ``z = 0`` with diagnostics.

    ``z^a dU/dz`` is evaluated exactly on ``z_grid`` and extrapolated to
    ``z = 0`` by least squares on powers ``{0, 2-2s, 2, 4-2s, 4}``; these
    are the exponents of its small-``z`` expansion for smooth ``u``. The error
    estimate compares against a fit with one term fewer on the grid without
    its largest point.

    Raises
    ------
    ExtrapolationUnstable
        If the two fits disagree by more than ``1e-2 (1 + |value|)``.
    RegimeRejected
        As for the Balakrishnan route.
    """
    from .fractional import _regime
    a = _resolve_a(a, s)
    sv = (1.0 - a) / 2.0
    flags = _regime(model, u, sv)
    z = np.asarray(sorted(z_grid, reverse=True), dtype=float)
    if np.any(z <= 0) or z[0] > 0.5 or z.size < 5:
        raise ParameterOutOfRange("z_grid needs at least five points in (0, 0.5]")
    x = np.asarray(x, dtype=float)
    if u.kind == "constant":
        return DtnResult(0.0, 0.0, tuple(z), tuple(0.0 for _ in z), 0.0, flags)
    eng = _engine(model, u, x, a, method)
    res = [extension_derivative(eng, a, zi) for zi in z]
    vals = np.array([r.value for r in res])
    exps = (0.0, 2.0 - 2.0 * sv, 2.0, 4.0 - 2.0 * sv, 4.0)
    k = min(len(exps), z.size - 1)
    lim = _fit_limit(z, vals, exps[:k])
    alt = _fit_limit(z[1:], vals[1:], exps[:k - 1])
    gap = abs(lim - alt)
    const = -trace_constant(a)
    if gap > 1e-2 * (1.0 + abs(const * lim)):
        raise ExtrapolationUnstable(f"extrapolated limits differ by {gap:.3e}")
    fd = 0.0
    if fd_check:
        # centred differences of U itself at the two largest grid points
        for zi, ri in zip(z[:2], res[:2]):
            h = 1e-3 * zi
            up = eng.integrate(_semigroup_weight(a, zi + h)).value
            dn = eng.integrate(_semigroup_weight(a, zi - h)).value
            fd = max(fd, abs(zi ** a * (up - dn) / (2.0 * h) - ri.value) / (1.0 + abs(ri.value)))
    err = abs(const) * (gap + max(r.error for r in res))
    return DtnResult(const * lim, err, tuple(z), tuple(vals), fd, flags)


def dtn_trace(model: ModelSpace, a, u: TestFunction, x, z_grid: Sequence[float] = DEFAULT_Z_GRID,
              *, s=None, method: str = "auto") -> float:
    """``-(2^{-a} Gamma((1-a)/2) / Gamma((1+a)/2)) lim_{z -> 0} z^a dU/dz``,
    which equals ``(-L)^s u(x)``."""
    return dtn_trace_full(model, a, u, x, z_grid, s=s, method=method, fd_check=False).value


# --------------------------------------------------------------------------
# L2 boundary attainment
# --------------------------------------------------------------------------

def _lattice_semigroup_1d(u: TestFunction, x, t_nodes, h_src: float, reach: float):
    from .kernels import gauss_lattice_sum
    y = h_src * np.arange(-int(math.ceil(reach / h_src)), int(math.ceil(reach / h_src)) + 1)
    uy = np.asarray(u(y[:, None]), dtype=float)
    return np.stack([gauss_lattice_sum(x, y, uy, float(t), h_src) for t in t_nodes])


def boundary_l2_slope(a, u: TestFunction, z_grid: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
                      *, s=None, L: float = 6.0, h: float = 0.05, method: str = "auto"):
    """Log-log slope of the lattice ``L^2`` norm of ``U(., z) - u`` against ``z``
    on the real line.

    ``U - u`` at all lattice points comes from the semigroup representation
    with the semigroup differences tabulated once and reused for every ``z``.
    ``method="lattice"`` convolves ``u`` on a fine source lattice with the
    Gauss-Weierstrass kernel; ``auto`` uses the closed form when the
    function has one.

    Returns
    -------
    slope : float
    norms : ndarray
        ``||U(., z) - u||`` for each ``z``.
    """
    a = _resolve_a(a, s)
    sv = (1.0 - a) / 2.0
    if u.params.get("n", 1) != 1:
        raise UnsupportedModel("the L2 check runs on the real line")
    x = h * np.arange(-int(round(L / h)), int(round(L / h)) + 1)
    X = x[:, None]
    u0 = np.asarray(u(X), dtype=float)
    lap1 = np.asarray(u.lap(X), dtype=float)
    lap2 = np.asarray(u.lap2(X), dtype=float) if u.lap2 is not None else None
    if lap2 is None:
        raise UnsupportedFunction("needs an exact L^2 u")
    eps, T, T_hi = 1e-4, 50.0, 1e8
    t_mid, w_mid = _log_nodes(eps, T, 1.0)
    t_far, w_far = _log_nodes(T, T_hi, 1.0)
    if method == "auto" and u.semigroup is not None:
        Pm = np.stack([np.asarray(u.semigroup(t, X), float).ravel() for t in t_mid])
        Pf = np.stack([np.asarray(u.semigroup(t, X), float).ravel() for t in t_far])
    else:
        reach = u.support_radius if math.isfinite(u.support_radius) else 12.0
        Pm = _lattice_semigroup_1d(u, x, t_mid, 0.25 * math.sqrt(eps), reach)
        Pf = _lattice_semigroup_1d(u, x, t_far, 0.25 * math.sqrt(eps), reach)
    G = Pm - u0[None, :]
    norms = []
    for z in z_grid:
        terms = _semigroup_weight(a, z)
        c, p, q = terms[0]
        wm = c * t_mid ** p * np.exp(-q / t_mid) * w_mid
        wf = c * t_far ** p * np.exp(-q / t_far) * w_far
        from .timeint import _series_moment, _tail_integral
        series = lap1 * _series_moment(terms, eps, 1) + 0.5 * lap2 * _series_moment(terms, eps, 2)
        diff = series + wm @ G + wf @ Pf - u0 * _tail_integral(terms, T)
        norms.append(math.sqrt(h * float(np.sum(diff * diff))))
    norms = np.array(norms)
    slope = float(np.polyfit(np.log(np.asarray(z_grid)), np.log(norms), 1)[0])
    return slope, norms
