r"""Surface mean values over X-spheres, the solid mean-value identity, the
Blaschke-Privalov limit and the improved Caccioppoli inequality.

In the group models every X-ball ``{rho_x < r}`` is a gauge ball
``x o {N < D}`` with ``D = (cq E(r))^{1/(Q-2)}``. The X-sphere is
parametrised by polar angles on the unit gauge sphere, pushed to ``x`` by
left translation:

* Euclidean: hyperspherical angles, Gauss-Legendre in the polar angles and
  the trapezoid rule in the azimuth.
* Heisenberg: ``|z| = D sqrt(cos phi)``, ``u = D^2 sin(phi) / 4``, with
  ``phi = (pi/2) sin(pi tau / 2)`` so that ``sqrt(cos phi)`` is analytic in
  ``tau`` on the centre axis. Gauss-Legendre in ``tau``, trapezoid in the
  azimuth.

The surface route computes the Hausdorff element, the Euclidean gradient
and the horizontal gradient of the distance explicitly from the chart. The
solid route uses the homogeneous polar decomposition
``dy = R^{Q-1} dR dS``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CrossCheckFailure, ExtrapolationUnstable, HypothesisViolated, UnsupportedModel
from .models import ModelKind, ModelSpace
from .nsw import ScalingData, density_zeta, eval_dE, eval_E
from .quad import gauss_legendre
from .testfunctions import TestFunction

__all__ = [
    "SurfaceQuadrature",
    "xsphere_gauge_radius",
    "surface_quadrature",
    "surface_mean",
    "solid_mean",
    "surface_mass_identity",
    "zeta",
    "bp_quotients",
    "blaschke_privalov",
    "square_of",
    "ball_integral",
    "caccioppoli_check",
    "mean_square_derivative",
]

CROSS_CHECK_TOL = 1e-4


def _sd(model, sd):
    return sd if sd is not None else ScalingData.from_model(model)


def _need_group(model: ModelSpace):
    if not model.has_points or model.cq is None:
        raise UnsupportedModel("mean values need concrete points and a fundamental solution")


def xsphere_gauge_radius(model: ModelSpace, sd: ScalingData, r: float) -> float:
    """Gauge radius ``D`` of the X-sphere of radius ``r``."""
    return float((model.cq * eval_E(sd, r)) ** (1.0 / (model.Q - 2.0)))


# --------------------------------------------------------------------------
# angular nodes on the unit gauge sphere
# --------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _euclid_angles(n: int, polar: int, azimuth: int):
    """Unit-sphere nodes and area weights on S^{n-1}."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        th = 2.0 * math.pi * np.arange(azimuth) / azimuth
        return np.stack([np.cos(th), np.sin(th)], -1), np.full(azimuth, 2.0 * math.pi / azimuth)
    sub, sub_w = _euclid_angles(n - 1, polar, azimuth)
    x, w = gauss_legendre(polar)
    th = 0.5 * math.pi * (x + 1.0)
    wt = 0.5 * math.pi * w * np.sin(th) ** (n - 2)
    pts = np.concatenate([np.repeat(np.cos(th), len(sub))[:, None],
                          (np.sin(th)[:, None, None] * sub[None, :, :]).reshape(-1, n - 1)], axis=1)
    return pts, (wt[:, None] * sub_w[None, :]).ravel()


@lru_cache(maxsize=16)
def _heis_angles(polar: int, azimuth: int):
    """``(phi, dphi/dtau * w_tau, theta, w_theta)`` flattened on the product grid."""
    x, w = gauss_legendre(polar)
    phi = 0.5 * math.pi * np.sin(0.5 * math.pi * x)
    jac = 0.25 * math.pi * math.pi * np.cos(0.5 * math.pi * x) * w
    th = 2.0 * math.pi * np.arange(azimuth) / azimuth
    wth = np.full(azimuth, 2.0 * math.pi / azimuth)
    P, T = np.meshgrid(phi, th, indexing="ij")
    J, W = np.meshgrid(jac, wth, indexing="ij")
    return P.ravel(), J.ravel(), T.ravel(), W.ravel()


def _default_orders(model):
    if model.kind is ModelKind.HEISENBERG:
        return 48, 64
    return (32, 64) if model.n <= 4 else (12, 24)


def _unit_sphere(model: ModelSpace, polar: int, azimuth: int):
    """Points ``S`` on ``{N = 1}`` and weights ``c`` with
    ``int_{N < D} f dy = int_0^D R^{Q-1} sum_k c_k f(delta_R S_k) dR``."""
    if model.kind is ModelKind.EUCLIDEAN:
        return _euclid_angles(model.n, polar, azimuth)
    phi, jac, th, wth = _heis_angles(polar, azimuth)
    sq = np.sqrt(np.cos(phi))
    pts = np.stack([sq * np.cos(th), sq * np.sin(th), 0.25 * np.sin(phi)], -1)
    return pts, 0.25 * jac * wth


# --------------------------------------------------------------------------
# surface quadrature
# --------------------------------------------------------------------------

@dataclass
class SurfaceQuadrature:
    """Quadrature on ``dB_X(x, r)``.

    Attributes
    ----------
    points : ndarray, shape (k, n)
    area : ndarray
        Hausdorff weights ``dH`` at the nodes.
    kernel : ndarray
        ``|grad_X rho_x|^2 / |grad rho_x|`` at the nodes.
    prefactor : float
        ``E'(r) / E(r)^2``.
    """
    points: np.ndarray
    area: np.ndarray
    kernel: np.ndarray
    prefactor: float
    radius: float
    gauge_radius: float

    @property
    def mass(self) -> float:
        return float(np.sum(self.area * self.kernel))

    def mean(self, f: Callable) -> float:
        return float(self.prefactor * np.sum(self.area * self.kernel * f(self.points)))


def _cross_norm(a, b):
    c = np.cross(a, b)
    return np.sqrt(np.sum(c * c, axis=-1))


def surface_quadrature(model: ModelSpace, sd: Optional[ScalingData], x, r: float,
                       polar: Optional[int] = None, azimuth: Optional[int] = None) -> SurfaceQuadrature:
    """Nodes, Hausdorff weights and kernel on the X-sphere of radius ``r``."""
    _need_group(model)
    sd = _sd(model, sd)
    x = np.asarray(x, dtype=float)
    p0, a0 = _default_orders(model)
    polar, azimuth = polar or p0, azimuth or a0
    D = xsphere_gauge_radius(model, sd, r)
    Q = model.Q
    # rho = F(d^{Q-2} / cq), so grad rho = (ds/dd) grad d / E'(r)
    scale = (Q - 2.0) * D ** (Q - 3.0) / model.cq / float(eval_dE(sd, r))
    pref = float(eval_dE(sd, r) / eval_E(sd, r) ** 2)

    if model.kind is ModelKind.EUCLIDEAN:
        S, w = _euclid_angles(model.n, polar, azimuth)
        pts = x + D * S
        area = D ** (model.n - 1) * w
        # |grad d| = |grad_X d| = 1
        kern = np.full(len(w), scale)
        return SurfaceQuadrature(pts, area, kern, pref, float(r), D)

    phi, jac, th, wth = _heis_angles(polar, azimuth)
    c, s = np.cos(phi), np.sin(phi)
    sq = np.sqrt(c)
    ct, st = np.cos(th), np.sin(th)
    g = np.stack([D * sq * ct, D * sq * st, 0.25 * D * D * s], -1)
    dz = -0.5 * D * s / sq
    g_phi = np.stack([dz * ct, dz * st, 0.25 * D * D * c], -1)
    g_th = np.stack([-D * sq * st, D * sq * ct, 0.0 * c], -1)
    # differential of left translation y = x o g
    A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-0.5 * x[1], 0.5 * x[0], 1.0]])
    y_phi, y_th = g_phi @ A.T, g_th @ A.T
    area = _cross_norm(y_phi, y_th) * jac * wth
    pts = model.translate(x, g)
    # Euclidean gradient of the gauge at g, pulled back through A^{-T}
    w_ = D * D * c
    grad_g = np.stack([w_ * g[:, 0], w_ * g[:, 1], 8.0 * g[:, 2]], -1) / D ** 3
    grad_y = grad_g @ np.linalg.inv(A)
    hor = np.einsum("kij,kj->ki", model.frame(pts), grad_y)
    kern = scale * np.sum(hor * hor, -1) / np.sqrt(np.sum(grad_y * grad_y, -1))
    return SurfaceQuadrature(pts, area, kern, pref, float(r), D)


# --------------------------------------------------------------------------
# volume quadrature and the solid route
# --------------------------------------------------------------------------

def _ball_nodes(model: ModelSpace, x, D: float, radial: int = 32,
                polar: Optional[int] = None, azimuth: Optional[int] = None):
    """Points, weights and gauge distances for ``int_{d(x, y) < D} f(y) dy``."""
    p0, a0 = _default_orders(model)
    S, c = _unit_sphere(model, polar or p0, azimuth or a0)
    xr, wr = gauss_legendre(radial)
    R = 0.5 * D * (xr + 1.0)
    wR = 0.5 * D * wr * R ** (model.Q - 1)
    g = model.dilate(S[None, :, :], R[:, None, None]) if model.kind is ModelKind.HEISENBERG \
        else R[:, None, None] * S[None, :, :]
    pts = model.translate(np.asarray(x, dtype=float), g.reshape(-1, model.n))
    wts = (wR[:, None] * c[None, :]).ravel()
    dist = np.repeat(R, len(c))
    return pts, wts, dist


def ball_integral(model: ModelSpace, sd: Optional[ScalingData], f: Callable, x, r: float,
                  radial: int = 32) -> float:
    """``int_{B_X(x, r)} f(y) dy`` by polar Gauss-Legendre quadrature."""
    _need_group(model)
    sd = _sd(model, sd)
    pts, wts, _ = _ball_nodes(model, x, xsphere_gauge_radius(model, sd, r), radial)
    return float(np.sum(wts * f(pts)))


def solid_mean(model: ModelSpace, sd: Optional[ScalingData], psi: TestFunction, x, r: float,
               radial: int = 32) -> float:
    """``psi(x) + int_{B_X(x, r)} L psi(y) [Gamma(x, y) - 1/E(r)] dy``."""
    _need_group(model)
    sd = _sd(model, sd)
    D = xsphere_gauge_radius(model, sd, r)
    pts, wts, dist = _ball_nodes(model, x, D, radial)
    green = model.cq * dist ** (2.0 - model.Q) - 1.0 / float(eval_E(sd, r))
    return float(psi(np.asarray(x, dtype=float)) + np.sum(wts * psi.lap(pts) * green))


def surface_mean(model: ModelSpace, sd: Optional[ScalingData], psi: TestFunction, x, r: float,
                 check: bool = True, return_discrepancy: bool = False):
    """Surface mean ``M_X psi(x, r)``, cross-checked against the solid route.

    Raises
    ------
    CrossCheckFailure
        If the two routes differ by more than ``1e-4 (1 + |value|)``.
    """
    sq = surface_quadrature(model, sd, x, r)
    value = sq.mean(psi)
    gap = 0.0
    if check:
        gap = abs(value - solid_mean(model, sd, psi, x, r))
        if gap > CROSS_CHECK_TOL * (1.0 + abs(value)):
            raise CrossCheckFailure(f"surface and solid mean values differ by {gap:.3e}")
    return (value, gap) if return_discrepancy else value


def surface_mass_identity(model: ModelSpace, sd: Optional[ScalingData], x, r: float):
    """Kernel mass over the X-sphere and its closed form ``E(r)^2 / E'(r)``."""
    sd = _sd(model, sd)
    lhs = surface_quadrature(model, sd, x, r).mass
    rhs = float(eval_E(sd, r) ** 2 / eval_dE(sd, r))
    return lhs, rhs


# --------------------------------------------------------------------------
# Blaschke-Privalov
# --------------------------------------------------------------------------

def zeta(model: ModelSpace, sd: Optional[ScalingData], r: float) -> float:
    """Density function with the same scaling data as the mean values."""
    return density_zeta(model, _sd(model, sd), r)


def bp_quotients(model: ModelSpace, sd: Optional[ScalingData], psi: TestFunction, x,
                 r_grid: Sequence[float]):
    """``(M_X psi(x, r) - psi(x)) / zeta(r)`` on the grid.

    The numerator is the surface mean of ``psi - psi(x)``, which removes
    the normalisation error of the quadrature from the difference.
    """
    sd = _sd(model, sd)
    x = np.asarray(x, dtype=float)
    p0 = float(psi(x))
    out = []
    for r in r_grid:
        sq = surface_quadrature(model, sd, x, r)
        out.append(sq.mean(lambda y: psi(y) - p0) / zeta(model, sd, r))
    return np.array(out)


def blaschke_privalov(model: ModelSpace, sd: Optional[ScalingData], psi: TestFunction, x,
                      r_grid: Sequence[float] = (0.4, 0.2, 0.1, 0.05)) -> float:
    """Richardson limit of the Blaschke-Privalov quotient as ``r -> 0``.

    The quotient is even in ``r`` (the X-spheres are symmetric under the
    rotation by pi of the horizontal plane), so extrapolation is polynomial
    in ``r^2`` (Neville's scheme).

    Raises
    ------
    ExtrapolationUnstable
        If the last Richardson correction does not shrink.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.size < 2 or np.any(np.diff(r) >= 0):
        raise ValueError("r_grid must be strictly decreasing with at least two radii")
    q = bp_quotients(model, sd, psi, x, r)
    h = r * r
    T = [q.copy()]
    for k in range(1, len(q)):
        prev = T[-1]
        T.append((h[:-k] * prev[1:] - h[k:] * prev[:-1]) / (h[:-k] - h[k:]))
    diag = np.array([t[-1] for t in T])
    value = float(diag[-1])
    if len(diag) >= 3:
        d_last, d_prev = abs(diag[-1] - diag[-2]), abs(diag[-2] - diag[-3])
        noise = 1e-9 * (1.0 + abs(value))
        if d_last > noise and d_last > d_prev * 1.5 + noise:
            raise ExtrapolationUnstable(f"Richardson corrections grow: {d_prev:.3e} -> {d_last:.3e}")
    return value


# --------------------------------------------------------------------------
# Caccioppoli
# --------------------------------------------------------------------------

def square_of(psi: TestFunction) -> TestFunction:
    """``psi^2`` with ``L psi^2 = 2 |grad_X psi|^2 + 2 psi L psi``."""
    def ev(y):
        v = psi(y)
        return v * v

    def grad(y):
        return 2.0 * psi(y)[..., None] * psi.grad_X(y)

    def lap(y):
        g = psi.grad_X(y)
        return 2.0 * np.sum(g * g, -1) + 2.0 * psi(y) * psi.lap(y)

    return TestFunction(ev, grad, lap, None, psi.support_radius, f"({psi.name})^2", "square")


def _grad_sq(psi):
    def f(y):
        g = psi.grad_X(y)
        return np.sum(g * g, -1)
    return f


def caccioppoli_check(model: ModelSpace, sd: Optional[ScalingData], psi: TestFunction, x,
                      s: float, t: float):
    """Both sides of the improved Caccioppoli inequality and the empirical constant.

    Returns ``(lhs, rhs_without_C, C)`` with
    ``lhs = int_{B_X(x, s)} |grad_X psi|^2`` and
    ``rhs_without_C = E(t) / (t - s) * M_X psi^2(x, t)``.

    Raises
    ------
    HypothesisViolated
        If ``psi L psi < -1e-8`` at a quadrature node of ``B_X(x, t)``.
    """
    _need_group(model)
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    sd = _sd(model, sd)
    pts, _, _ = _ball_nodes(model, x, xsphere_gauge_radius(model, sd, t), radial=16)
    if np.min(psi(pts) * psi.lap(pts)) < -1e-8:
        raise HypothesisViolated("psi L psi is negative inside the ball")
    lhs = ball_integral(model, sd, _grad_sq(psi), x, s)
    rhs = float(eval_E(sd, t)) / (t - s) * surface_mean(model, sd, square_of(psi), x, t)
    C = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return lhs, rhs, C


def mean_square_derivative(model: ModelSpace, sd: Optional[ScalingData], psi: TestFunction, x,
                           r: float, h: Optional[float] = None):
    """Centred difference of ``r -> M_X psi^2(x, r)`` and the two integral
    expressions for it.

    Returns ``(derivative, identity_rhs, lower_bound)`` where
    ``identity_rhs = 2E'/E^2 int_B (|grad_X psi|^2 + psi L psi)`` and
    ``lower_bound = 2E'/E^2 int_B |grad_X psi|^2``.
    """
    sd = _sd(model, sd)
    h = h if h is not None else 1e-3 * r
    sq = square_of(psi)
    fp = surface_quadrature(model, sd, x, r + h).mean(sq)
    fm = surface_quadrature(model, sd, x, r - h).mean(sq)
    deriv = (fp - fm) / (2.0 * h)
    pref = 2.0 * float(eval_dE(sd, r) / eval_E(sd, r) ** 2)
    grad_part = ball_integral(model, sd, _grad_sq(psi), x, r)
    mixed = ball_integral(model, sd, lambda y: psi(y) * psi.lap(y), x, r)
    return deriv, pref * (grad_part + mixed), pref * grad_part
