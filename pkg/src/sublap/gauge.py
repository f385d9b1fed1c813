"""Regularised pseudo-distance, X-balls and size estimates of Gamma."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StencilTooCoarse, UnsupportedModel
from .models import ModelKind, ModelSpace, fundamental_solution
from .nsw import ScalingData, ball_volume, eval_E, invert_E

__all__ = [
    "rho",
    "grad_rho",
    "XBall",
    "equivalence_constants",
    "grad_rho_bound",
    "gamma_size_check",
]


def _sd(model: ModelSpace, sd: Optional[ScalingData]) -> ScalingData:
    return sd if sd is not None else ScalingData.from_model(model)


def rho(model: ModelSpace, sd: Optional[ScalingData], x, y):
    """``rho_x(y) = F(1 / Gamma(x, y))``, with ``rho_x(x) = 0``.

    Vectorised over ``y`` (shape ``(..., n)``).
    """
    sd = _sd(model, sd)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = model.gauge(x, y)
    d_arr = np.atleast_1d(d)
    out = np.zeros(d_arr.shape)
    pos = d_arr > 0
    if np.any(pos):
        xb = np.broadcast_to(x, np.broadcast(x, y).shape).reshape(-1, x.shape[-1])
        yb = np.broadcast_to(y, np.broadcast(x, y).shape).reshape(-1, y.shape[-1])
        flat = pos.ravel()
        g = fundamental_solution(model, xb[flat], yb[flat])
        out.ravel()[flat] = invert_E(sd, 1.0 / np.atleast_1d(g))
    if np.ndim(d) == 0:
        return float(out[0])
    return out.reshape(np.shape(d))


def grad_rho(model: ModelSpace, sd: Optional[ScalingData], x, y, h: Optional[float] = None):
    """Horizontal gradient of ``rho_x`` at ``y`` by centred differences.

    Returns the gradient and a Richardson error estimate (difference
    between steps ``h`` and ``2h`` divided by 3).
    """
    sd = _sd(model, sd)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    step = h if h is not None else 1e-5 * (1.0 + np.linalg.norm(y, axis=-1))
    step = np.broadcast_to(np.asarray(step, dtype=float), y.shape[:-1])[..., None]
    moves = model.unit_moves()
    g1 = np.empty(y.shape[:-1] + (moves.shape[0],))
    g2 = np.empty_like(g1)
    for j, e in enumerate(moves):
        def diff(k):
            fp = rho(model, sd, x, model.translate(y, k * step * e))
            fm = rho(model, sd, x, model.translate(y, -k * step * e))
            return (fp - fm) / (2.0 * k * step[..., 0])
        g1[..., j] = diff(1.0)
        g2[..., j] = diff(2.0)
    err = np.abs(g2 - g1).max(axis=-1) / 3.0
    return g1, err


@dataclass
class XBall:
    """``B_X(x, r) = {y : rho_x(y) < r}``."""
    model: ModelSpace
    center: np.ndarray
    radius: float
    sd: Optional[ScalingData] = None
    _vol: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.sd = _sd(self.model, self.sd)

    def contains(self, y):
        """Membership through ``rho_x(y) < r``."""
        return np.asarray(rho(self.model, self.sd, self.center, y)) < self.radius

    def contains_via_gamma(self, y):
        """Membership through ``Gamma(x, y) > 1 / E(r)`` (equivalent form)."""
        y = np.asarray(y, dtype=float)
        d = np.atleast_1d(self.model.gauge(self.center, y))
        out = np.ones(d.shape, dtype=bool)
        pos = d > 0
        if np.any(pos):
            yy = np.atleast_2d(y)[pos]
            out[pos] = fundamental_solution(self.model, self.center, yy) > 1.0 / eval_E(self.sd, self.radius)
        return out if np.ndim(self.model.gauge(self.center, y)) else bool(out[0])

    def bounding_half_widths(self):
        """Half-widths of a box (in group coordinates around the centre)
        containing the ball."""
        m = self.model
        if m.kind is ModelKind.EUCLIDEAN:
            return np.full(m.n, self.radius)
        if m.kind is ModelKind.HEISENBERG:
            rg = self.radius / m.kappa
            return np.array([rg, rg, 0.25 * rg * rg])
        raise UnsupportedModel("no concrete points")

    def volume(self, method: str = "auto", samples: int = 1 << 18, seed: int = 0):
        """Volume and error bar.

        ``auto`` uses the closed form ``beta r^Q`` for group models with
        monomial scaling data; ``"qmc"`` samples the bounding box with a
        scrambled Sobol sequence in group coordinates (Lebesgue measure is
        translation invariant).
        """
        if method == "auto" and self.model.is_group and self.sd.is_monomial:
            return float(ball_volume(self.model, self.sd, self.radius)), 0.0
        from scipy.stats import qmc
        half = self.bounding_half_widths()
        reps = 8
        per = max(1, samples // reps)
        m = int(math.ceil(math.log2(per)))
        est = []
        box = float(np.prod(2.0 * half))
        for k in range(reps):
            pts = qmc.Sobol(d=self.model.n, scramble=True,
                            seed=np.random.default_rng([seed, k])).random_base2(m)
            g = (2.0 * pts - 1.0) * half
            y = self.model.translate(self.center, g)
            est.append(box * float(np.mean(self.contains(y))))
        est = np.array(est)
        return float(est.mean()), float(est.std(ddof=1) / math.sqrt(reps))


def equivalence_constants(model: ModelSpace, sd: Optional[ScalingData], pairs) -> float:
    """Empirical ``a_hat = max max(rho/d, d/rho)`` over the sample of pairs."""
    sd = _sd(model, sd)
    x, y = pairs
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.atleast_1d(rho(model, sd, x, y))
    d = np.atleast_1d(model.gauge(x, y))
    keep = d > 0
    ratio = r[keep] / d[keep]
    return float(max(1.0, np.max(np.maximum(ratio, 1.0 / ratio))))


def grad_rho_bound(model: ModelSpace, sd: Optional[ScalingData], x, sample,
                   max_fd_error: float = 1e-4) -> float:
    """Sample supremum of ``|grad_X rho_x|``.

    Raises
    ------
    StencilTooCoarse
        If the finite-difference error estimate exceeds ``max_fd_error``.
    """
    g, err = grad_rho(model, sd, x, sample)
    if np.any(err > max_fd_error):
        raise StencilTooCoarse(f"finite-difference error {float(err.max()):.2e}")
    return float(np.max(np.linalg.norm(g, axis=-1)))


def gamma_size_check(model: ModelSpace, sd: Optional[ScalingData], pairs) -> dict:
    """Two-sided constants for ``Gamma E(d)`` and ``Gamma |B(x, d)| / d^2``.

    ``d`` is the gauge distance and ``|B(x, d)|`` the gauge-ball volume.
    """
    sd = _sd(model, sd)
    x, y = pairs
    gam = np.atleast_1d(fundamental_solution(model, x, y))
    d = np.atleast_1d(model.gauge(x, y))
    r1 = gam * np.atleast_1d(eval_E(sd, d))
    r2 = gam * model.gauge_ball_beta * d ** model.Q / d ** 2
    return {"gamma_E": (float(r1.min()), float(r1.max())),
            "gamma_ball": (float(r2.min()), float(r2.max()))}
