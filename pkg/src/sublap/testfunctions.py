"""Smooth test functions with analytic horizontal gradient and sub-Laplacian.

Every function is vectorised over points of shape ``(..., n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .models import ModelKind, ModelSpace, sublaplacian_fd

__all__ = [
    "TestFunction",
    "plane_wave",
    "gaussian_bump",
    "cauchy_bump",
    "euclidean_polynomial",
    "constant",
    "heis_gaussian",
    "heis_polynomial",
    "euclidean_battery",
    "heisenberg_battery",
]


@dataclass
class TestFunction:
    """Scalar field with exact derivative data.

    Attributes
    ----------
    eval : callable
        Point(s) to value.
    grad_X : callable
        Point(s) to horizontal gradient, shape ``(..., m)``.
    lap : callable
        Exact sub-Laplacian.
    frac : callable, optional
        ``(s, x) -> (-L)^s u(x)`` when a closed form exists.
    support_radius : float
        Radius beyond which the function is negligible (``inf`` if never).
    lap2 : callable, optional
        Exact ``L^2 u``; finite differences of ``lap`` are used otherwise.
    semigroup : callable, optional
        ``(t, x) -> P_t u(x)`` in closed form, or ``None`` where unavailable.
    """
    __test__ = False  # keep pytest from collecting the class

    eval: Callable
    grad_X: Callable
    lap: Callable
    frac: Optional[Callable] = None
    support_radius: float = math.inf
    name: str = ""
    kind: str = ""
    params: dict = field(default_factory=dict)
    lap2: Optional[Callable] = None
    semigroup: Optional[Callable] = None
    sup_norm: float = 1.0
    l1_norm: Optional[float] = None
    hessian_bound: Optional[float] = None
    resolution: float = 1.0
    support_box: Optional[tuple] = None

    def __call__(self, x):
        return self.eval(x)

    def lap2_at(self, model: ModelSpace, x, h: float = 1e-3):
        """``L^2 u(x)``, exact when available, else finite differences of ``lap``."""
        if self.lap2 is not None:
            return self.lap2(x)
        return sublaplacian_fd(model, self.lap, x, h)


def _dot(x, xi):
    return np.tensordot(np.asarray(x, dtype=float), xi, axes=([-1], [0]))


# --------------------------------------------------------------------------
# Euclidean
# --------------------------------------------------------------------------

def plane_wave(n: int, xi) -> TestFunction:
    """``cos(xi . x)``; ``xi`` scalar means ``xi e_1``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.size == 1 and n > 1:
        xi = np.concatenate([xi, np.zeros(n - 1)])
    k2 = float(xi @ xi)

    def ev(x):
        return np.cos(_dot(x, xi))

    def grad(x):
        return -np.sin(_dot(x, xi))[..., None] * xi

    def lap(x):
        return -k2 * ev(x)

    def frac(s, x):
        return k2 ** s * ev(x)

    def semigroup(t, x):
        return np.exp(-np.asarray(t) * k2) * ev(x)

    return TestFunction(ev, grad, lap, frac, math.inf, f"cos(xi.x) |xi|={math.sqrt(k2):g}",
                        "plane_wave", {"xi": xi, "n": n},
                        lap2=lambda x: k2 * k2 * ev(x), semigroup=semigroup, sup_norm=1.0,
                        hessian_bound=k2, resolution=2.0 * math.pi / max(math.sqrt(k2), 1e-12) / 4)


def gaussian_bump(n: int, a: float = 0.5) -> TestFunction:
    """``exp(-a |x|^2)``."""
    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-a * np.sum(x * x, axis=-1))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return -2.0 * a * x * ev(x)[..., None]

    def lap(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        return (4.0 * a * a * r2 - 2.0 * a * n) * np.exp(-a * r2)

    def lap2(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        # Laplacian of (4a^2 r^2 - 2an) e^{-a r^2}
        poly = (16 * a ** 4 * r2 * r2 - 16 * a ** 3 * (n + 2) * r2 + 4 * a * a * n * (n + 2))
        return poly * np.exp(-a * r2)

    def semigroup(t, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        d = 1.0 + 4.0 * a * np.asarray(t, dtype=float)
        return d ** (-n / 2.0) * np.exp(-a * r2 / d)

    rad = math.sqrt(40.0 / a)
    return TestFunction(ev, grad, lap, None, rad, f"gaussian a={a:g}", "gaussian",
                        {"a": a, "n": n}, lap2=lap2, semigroup=semigroup, sup_norm=1.0,
                        l1_norm=(math.pi / a) ** (n / 2.0), hessian_bound=2.0 * a,
                        resolution=1.0 / math.sqrt(2.0 * a), support_box=(rad,) * n)


def cauchy_bump() -> TestFunction:
    """``1 / (1 + x^2)`` on the line."""
    def ev(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return 1.0 / (1.0 + x * x)

    def grad(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return (-2.0 * x / (1.0 + x * x) ** 2)[..., None]

    def lap(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return (6.0 * x * x - 2.0) / (1.0 + x * x) ** 3

    def frac(s, x):
        # Fourier transform of the Cauchy bump is pi e^{-|xi|}; only s = 1/2
        # has an elementary closed form
        if abs(s - 0.5) > 1e-15:
            return None
        x = np.asarray(x, dtype=float)[..., 0]
        return (1.0 - x * x) / (1.0 + x * x) ** 2

    return TestFunction(ev, grad, lap, frac, math.inf, "cauchy", "cauchy", {"n": 1},
                        sup_norm=1.0, l1_norm=math.pi, hessian_bound=2.0, resolution=1.0)


def euclidean_polynomial(n: int, which: str) -> TestFunction:
    """A small catalogue of polynomial / harmonic fields on R^n."""
    def comp(x, i):
        return np.asarray(x, dtype=float)[..., i]

    if which == "r2":
        ev = lambda x: np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
        grad = lambda x: 2.0 * np.asarray(x, dtype=float)
        lap = lambda x: np.full(np.shape(x)[:-1], 2.0 * n)
    elif which == "x1":
        ev = lambda x: comp(x, 0)
        grad = lambda x: np.broadcast_to(np.eye(n)[0], np.shape(x)).copy()
        lap = lambda x: np.zeros(np.shape(x)[:-1])
    elif which == "x1x1-x2x2":
        ev = lambda x: comp(x, 0) ** 2 - comp(x, 1) ** 2

        def grad(x):
            g = np.zeros(np.shape(x))
            g[..., 0] = 2.0 * comp(x, 0)
            g[..., 1] = -2.0 * comp(x, 1)
            return g
        lap = lambda x: np.zeros(np.shape(x)[:-1])
    elif which == "expcos":
        ev = lambda x: np.exp(comp(x, 0)) * np.cos(comp(x, 1))

        def grad(x):
            g = np.zeros(np.shape(x))
            g[..., 0] = np.exp(comp(x, 0)) * np.cos(comp(x, 1))
            g[..., 1] = -np.exp(comp(x, 0)) * np.sin(comp(x, 1))
            return g
        lap = lambda x: np.zeros(np.shape(x)[:-1])
    elif which == "x1^4":
        ev = lambda x: comp(x, 0) ** 4

        def grad(x):
            g = np.zeros(np.shape(x))
            g[..., 0] = 4.0 * comp(x, 0) ** 3
            return g
        lap = lambda x: 12.0 * comp(x, 0) ** 2
    elif which == "x1x2x3":
        ev = lambda x: comp(x, 0) * comp(x, 1) * comp(x, 2)

        def grad(x):
            g = np.zeros(np.shape(x))
            g[..., 0] = comp(x, 1) * comp(x, 2)
            g[..., 1] = comp(x, 0) * comp(x, 2)
            g[..., 2] = comp(x, 0) * comp(x, 1)
            return g
        lap = lambda x: np.zeros(np.shape(x)[:-1])
    elif which == "x1^3+x2x2":
        ev = lambda x: comp(x, 0) ** 3 + comp(x, 1) ** 2

        def grad(x):
            g = np.zeros(np.shape(x))
            g[..., 0] = 3.0 * comp(x, 0) ** 2
            g[..., 1] = 2.0 * comp(x, 1)
            return g
        lap = lambda x: 6.0 * comp(x, 0) + 2.0
    else:
        raise ValueError(f"unknown polynomial {which!r}")
    return TestFunction(ev, grad, lap, None, math.inf, which, "polynomial", {"n": n},
                        sup_norm=math.inf, resolution=math.inf)


# --------------------------------------------------------------------------
# Heisenberg
# --------------------------------------------------------------------------

def _wu_function(name, F, **extra):
    """Wrap ``F(w, u) -> (f, f_w, f_u, f_ww, f_wu, f_uu)`` with ``w = |z|^2``."""
    def parts(x):
        x = np.asarray(x, dtype=float)
        z1, z2, u = x[..., 0], x[..., 1], x[..., 2]
        return z1, z2, u, F(z1 * z1 + z2 * z2, u)

    def ev(x):
        return parts(x)[3][0]

    def grad(x):
        z1, z2, u, (f, fw, fu, *_r) = parts(x)
        return np.stack([2.0 * z1 * fw - 0.5 * z2 * fu, 2.0 * z2 * fw + 0.5 * z1 * fu], axis=-1)

    def lap(x):
        z1, z2, u, (f, fw, fu, fww, fwu, fuu) = parts(x)
        w = z1 * z1 + z2 * z2
        return 4.0 * fw + 4.0 * w * fww + 0.25 * w * fuu

    return TestFunction(ev, grad, lap, None, name=name, **extra)


def heis_gaussian(a: float = 1.0, b: float = 1.0) -> TestFunction:
    """``exp(-a |z|^2 - b u^2)`` on the Heisenberg group.

    ``semigroup`` is exact on the centre axis ``z = 0`` through a
    one-dimensional integral over the dual variable of ``u``; off the axis
    it returns ``None`` and callers fall back to lattice quadrature.
    """
    def F(w, u):
        f = np.exp(-a * w - b * u * u)
        return (f, -a * f, -2.0 * b * u * f, a * a * f, 2.0 * a * b * u * f,
                (4.0 * b * b * u * u - 2.0 * b) * f)

    from .quad import panel_nodes
    lam_hi = math.sqrt(4.0 * b * 40.0)
    lam_nodes, lam_w = panel_nodes(0.0, lam_hi, 24, 16)

    def semigroup(t, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x[..., :2]) > 0.0):
            return None
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u0 = x[..., 2]
        lt = lam_nodes[None, :] * t[:, None]
        # lambda / sinh(lambda t) and (lambda / 4) coth(lambda t), both even
        with np.errstate(over="ignore"):
            ratio = lam_nodes[None, :] / np.sinh(lt)
            cth = 0.25 * lam_nodes[None, :] / np.tanh(lt)
        core = ratio / (4.0 * math.pi) * math.pi / (a + cth)
        amp = math.sqrt(math.pi / b) * np.exp(-lam_nodes ** 2 / (4.0 * b)) * lam_w
        vals = (core * amp[None, :] * np.cos(lam_nodes * u0)[None, :]).sum(axis=1) / math.pi
        return vals

    rz = math.sqrt(40.0 / a)
    ru = math.sqrt(40.0 / b)
    tf = _wu_function(f"heis-gaussian a={a:g} b={b:g}", F, kind="heis_gaussian",
                      params={"a": a, "b": b}, support_radius=max(rz, ru),
                      semigroup=semigroup, sup_norm=1.0,
                      l1_norm=(math.pi / a) * math.sqrt(math.pi / b),
                      hessian_bound=2.0 * (a + b) + 2.0 * a * b,
                      resolution=min(1.0 / math.sqrt(2 * a), 1.0 / math.sqrt(2 * b)),
                      support_box=(rz, rz, ru))
    return tf


def heis_polynomial(which: str) -> TestFunction:
    """Polynomials on the Heisenberg group with exact frame derivatives."""
    if which == "w":          # |z|^2, L = 4
        F = lambda w, u: (w, np.ones_like(w), 0 * w, 0 * w, 0 * w, 0 * w)
        return _wu_function(which, F, kind="polynomial", sup_norm=math.inf, resolution=math.inf)
    if which == "u":          # harmonic
        F = lambda w, u: (u, 0 * w, np.ones_like(u), 0 * w, 0 * w, 0 * w)
        return _wu_function(which, F, kind="polynomial", sup_norm=math.inf, resolution=math.inf)
    if which == "u^2":        # L = w / 2
        F = lambda w, u: (u * u, 0 * w, 2 * u, 0 * w, 0 * w, 2.0 + 0 * w)
        return _wu_function(which, F, kind="polynomial", sup_norm=math.inf, resolution=math.inf)
    if which == "w^2":        # L = 16 w
        F = lambda w, u: (w * w, 2 * w, 0 * w, 2.0 + 0 * w, 0 * w, 0 * w)
        return _wu_function(which, F, kind="polynomial", sup_norm=math.inf, resolution=math.inf)

    def comp(x, i):
        return np.asarray(x, dtype=float)[..., i]

    if which == "z1":
        ev = lambda x: comp(x, 0)
        grad = lambda x: np.stack([np.ones_like(comp(x, 0)), np.zeros_like(comp(x, 0))], -1)
        lap = lambda x: np.zeros_like(comp(x, 0))
    elif which == "z1z2":
        ev = lambda x: comp(x, 0) * comp(x, 1)
        grad = lambda x: np.stack([comp(x, 1), comp(x, 0)], -1)
        lap = lambda x: np.zeros_like(comp(x, 0))
    elif which == "z1^3":
        ev = lambda x: comp(x, 0) ** 3
        grad = lambda x: np.stack([3 * comp(x, 0) ** 2, np.zeros_like(comp(x, 0))], -1)
        lap = lambda x: 6.0 * comp(x, 0)
    elif which == "z1^2u":
        ev = lambda x: comp(x, 0) ** 2 * comp(x, 2)
        grad = lambda x: np.stack([2 * comp(x, 0) * comp(x, 2) - 0.5 * comp(x, 1) * comp(x, 0) ** 2,
                                   0.5 * comp(x, 0) ** 3], -1)
        lap = lambda x: 2.0 * comp(x, 2) - 2.0 * comp(x, 0) * comp(x, 1)
    else:
        raise ValueError(f"unknown polynomial {which!r}")
    return TestFunction(ev, grad, lap, None, math.inf, which, "polynomial", {}, sup_norm=math.inf,
                        resolution=math.inf)


def constant(n: int, value: float = 1.0, box: float = 40.0) -> TestFunction:
    """The constant ``value`` restricted to the ball of radius ``box``."""
    def ev(x):
        x = np.asarray(x, dtype=float)
        inside = np.sum(x * x, axis=-1) <= box * box
        return np.where(inside, value, 0.0)

    def zero_vec(x):
        return np.zeros(np.shape(x))

    def zero(x):
        return np.zeros(np.shape(x)[:-1])

    return TestFunction(ev, zero_vec, zero, lambda s, x: zero(x), box, f"const {value:g}",
                        "constant", {"value": value, "n": n}, lap2=zero,
                        semigroup=None, sup_norm=abs(value), hessian_bound=0.0,
                        resolution=math.inf, support_box=(box,) * n)


def euclidean_battery(n: int = 3):
    """Five functions with nonzero Laplacian at generic points."""
    return [euclidean_polynomial(n, "r2"), euclidean_polynomial(n, "x1^4"),
            euclidean_polynomial(n, "x1^3+x2x2"), gaussian_bump(n, 0.5), plane_wave(n, 1.3)]


def heisenberg_battery():
    return [heis_polynomial("w"), heis_polynomial("u^2"), heis_polynomial("z1^3"),
            heis_polynomial("z1^2u"), heis_gaussian(0.7, 0.5)]
