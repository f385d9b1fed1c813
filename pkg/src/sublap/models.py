r"""Model spaces: Euclidean space and the first Heisenberg group.

Heisenberg conventions
----------------------
Points are ``(z1, z2, u)``. The group law, dilations and gauge are

.. math::

    (z, u)\circ(z', u') = (z + z',\ u + u' + \tfrac12(z_1 z_2' - z_2 z_1')),\qquad
    \delta_\lambda(z, u) = (\lambda z, \lambda^2 u),\qquad
    N(z, u) = (|z|^4 + 16u^2)^{1/4},

with left-invariant horizontal frame ``X = d/dz1 - (z2/2) d/du`` and
``Y = d/dz2 + (z1/2) d/du``, and sub-Laplacian ``X^2 + Y^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from . import config as _config
from .errors import (CalibrationFailure, ConfigError, NonpositiveTime,
                     ParameterOutOfRange, PoleError, UnsupportedModel)
from .kernels import heis_p1
from .quad import HalfLineDE, gauss_legendre, integrate_halfline, sphere_area

__all__ = [
    "ModelKind",
    "ModelSpace",
    "heis_mul",
    "heis_inv",
    "heis_dilate",
    "heis_gauge",
    "heis_difference",
    "fundamental_solution",
    "heat_kernel",
    "calibrate_heisenberg",
    "horizontal_gradient_fd",
    "sublaplacian_fd",
]


class ModelKind(str, Enum):
    EUCLIDEAN = "euclidean"
    CARNOT = "carnot"
    HEISENBERG = "heisenberg"


# --------------------------------------------------------------------------
# Heisenberg group arithmetic (vectorised over leading axes)
# --------------------------------------------------------------------------

def heis_mul(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty(np.broadcast(x, y).shape)
    out[..., 0] = x[..., 0] + y[..., 0]
    out[..., 1] = x[..., 1] + y[..., 1]
    out[..., 2] = x[..., 2] + y[..., 2] + 0.5 * (x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0])
    return out


def heis_inv(x):
    return -np.asarray(x, dtype=float)


def heis_dilate(x, lam):
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.empty(np.broadcast(x[..., 0], lam).shape + (x.shape[-1],))
    out[..., :2] = x[..., :2] * lam[..., None]
    out[..., 2] = x[..., 2] * lam * lam
    return out


def heis_difference(x, y):
    """``y^{-1} o x``, computed so that swapping arguments negates it exactly."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty(np.broadcast(x, y).shape)
    out[..., 0] = x[..., 0] - y[..., 0]
    out[..., 1] = x[..., 1] - y[..., 1]
    out[..., 2] = (x[..., 2] - y[..., 2]) + 0.5 * (x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0])
    return out


def heis_gauge(g):
    """Koranyi gauge ``(|z|^4 + 16 u^2)^(1/4)``, rescaled against underflow."""
    g = np.asarray(g, dtype=float)
    h = np.hypot(g[..., 0], g[..., 1])
    v = 2.0 * np.sqrt(np.abs(g[..., 2]))
    m = np.maximum(h, v)
    safe = np.where(m > 0, m, 1.0)
    return m * np.hypot((h / safe) ** 2, (v / safe) ** 2) ** 0.5


# --------------------------------------------------------------------------
# model space
# --------------------------------------------------------------------------

@dataclass
class ModelSpace:
    """A sub-Laplacian model.

    Attributes
    ----------
    kind : ModelKind
    n, Q : int
        Topological and homogeneous dimension.
    omega : float
        Leading coefficient of the scaling polynomial ``omega r^Q``.
    beta : float
        X-ball volume coefficient ``|B_X(x, r)| = beta r^Q``.
    cq : float or None
        Constant of the fundamental solution (``None`` when there is none).
    seed : int
        Seed used by calibration.
    R0 : float
        Radius bounding the range of the scaling polynomial.
    """
    kind: ModelKind
    n: int
    Q: int
    omega: float
    beta: float
    cq: Optional[float] = None
    seed: int = 0
    R0: float = 1.0
    lambda_terms: Optional[tuple] = None
    calibration: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self.kind = ModelKind(self.kind)
        if not (self.Q >= self.n >= 1):
            raise ParameterOutOfRange("need Q >= n >= 1")
        if self.kind is ModelKind.EUCLIDEAN and self.Q != self.n:
            raise ParameterOutOfRange("Euclidean model needs Q = n")
        if self.kind is ModelKind.HEISENBERG and (self.n, self.Q) != (3, 4):
            raise ParameterOutOfRange("Heisenberg model has n = 3, Q = 4")
        if not (self.omega > 0 and self.beta > 0):
            raise ParameterOutOfRange("omega and beta must be positive")

    # constructors ---------------------------------------------------------
    @classmethod
    def euclidean(cls, n: int, R0: float = 1.0) -> "ModelSpace":
        n = int(n)
        if n < 1:
            raise ParameterOutOfRange("n >= 1")
        area = sphere_area(n)
        if n >= 3:
            omega = (n - 2) * area
            cq = 1.0 / omega
        else:
            omega = area
            cq = None
        return cls(ModelKind.EUCLIDEAN, n, n, omega, area / n, cq, 0, R0)

    @classmethod
    def heisenberg(cls, omega: Optional[float] = None, seed: int = 0,
                   samples: int = 1 << 20, R0: float = 1.0) -> "ModelSpace":
        """First Heisenberg group with calibrated constants.

        When ``omega`` is not given it is set to ``1 / cq`` so that the
        regularised pseudo-distance coincides with the gauge.
        """
        cq, beta, info = calibrate_heisenberg(seed=seed, samples=samples)
        om = 1.0 / cq if omega is None else float(omega)
        # X-balls are gauge balls of radius r / kappa
        kappa = (cq * om) ** -0.5
        m = cls(ModelKind.HEISENBERG, 3, 4, om, beta * kappa ** -4, cq, seed, R0)
        m.calibration = dict(info)
        return m

    @classmethod
    def carnot_scaling(cls, Q: int, omega: float, beta: float, n: Optional[int] = None,
                       R0: float = 1.0) -> "ModelSpace":
        return cls(ModelKind.CARNOT, int(n if n is not None else Q), int(Q),
                   float(omega), float(beta), None, 0, R0)

    # properties -------------------------------------------------------------
    @property
    def is_group(self) -> bool:
        return self.kind in (ModelKind.EUCLIDEAN, ModelKind.HEISENBERG, ModelKind.CARNOT)

    @property
    def has_points(self) -> bool:
        return self.kind in (ModelKind.EUCLIDEAN, ModelKind.HEISENBERG)

    @property
    def m(self) -> int:
        """Number of horizontal vector fields."""
        return 2 if self.kind is ModelKind.HEISENBERG else self.n

    @property
    def kappa(self) -> float:
        """Factor with ``rho_0 = kappa * gauge`` (group case)."""
        if self.cq is None:
            raise UnsupportedModel("model has no fundamental solution")
        return (self.cq * self.omega) ** (-1.0 / (self.Q - 2))

    @property
    def label(self) -> str:
        if self.kind is ModelKind.EUCLIDEAN:
            return f"euclidean{self.n}"
        if self.kind is ModelKind.HEISENBERG:
            return "heisenberg"
        return f"carnot{self.Q}"

    @property
    def gauge_ball_beta(self) -> float:
        """Volume coefficient of gauge (metric) balls, ``beta * kappa^Q``."""
        if self.cq is None:
            return self.beta
        return self.beta * self.kappa ** self.Q

    def heat_peak(self, t):
        """``sup_y p(x, y, t)`` (attained on the diagonal)."""
        if self.kind is ModelKind.EUCLIDEAN:
            return (4.0 * math.pi * t) ** (-self.n / 2.0)
        if self.kind is ModelKind.HEISENBERG:
            return t ** -2.0 / 16.0
        raise UnsupportedModel("no heat kernel for this model")

    # geometry ---------------------------------------------------------------
    def difference(self, x, y):
        """Group difference ``y^{-1} o x``."""
        self._need_points()
        if self.kind is ModelKind.EUCLIDEAN:
            return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return heis_difference(x, y)

    def gauge(self, x, y):
        g = self.difference(x, y)
        if self.kind is ModelKind.EUCLIDEAN:
            return np.hypot.reduce(g, axis=-1)
        return heis_gauge(g)

    def translate(self, x, g):
        """``x o g``."""
        if self.kind is ModelKind.EUCLIDEAN:
            return np.asarray(x, dtype=float) + np.asarray(g, dtype=float)
        return heis_mul(x, g)

    def dilate(self, g, lam):
        if self.kind is ModelKind.EUCLIDEAN:
            return lam * np.asarray(g, dtype=float)
        return heis_dilate(g, lam)

    def frame(self, x):
        """Coefficient matrix of the horizontal frame at ``x``: shape (..., m, n)."""
        x = np.asarray(x, dtype=float)
        if self.kind is ModelKind.EUCLIDEAN:
            return np.broadcast_to(np.eye(self.n), x.shape[:-1] + (self.n, self.n))
        self._need_points()
        out = np.zeros(x.shape[:-1] + (2, 3))
        out[..., 0, 0] = 1.0
        out[..., 0, 2] = -0.5 * x[..., 1]
        out[..., 1, 1] = 1.0
        out[..., 1, 2] = 0.5 * x[..., 0]
        return out

    def unit_moves(self):
        """Group elements ``exp(h X_j)`` at ``h = 1`` (rows)."""
        if self.kind is ModelKind.EUCLIDEAN:
            return np.eye(self.n)
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def _need_points(self):
        if not self.has_points:
            raise UnsupportedModel(f"{self.kind.value} model has no concrete points")

    # configuration ------------------------------------------------------------
    def to_config(self) -> dict:
        cfg = {"kind": self.kind.value, "n": str(self.n), "Q": str(self.Q),
               "omega": repr(float(self.omega)), "beta": repr(float(self.beta)),
               "seed": str(self.seed), "R0": repr(float(self.R0))}
        if self.cq is not None:
            cfg["cq"] = repr(float(self.cq))
        if self.lambda_terms:
            cfg["lambda"] = ", ".join(f"{d:g}:{c!r}" for d, c in self.lambda_terms)
        return cfg

    def save(self, path) -> None:
        _config.update_config(path, self.to_config())

    @classmethod
    def from_config(cls, path_or_dict) -> "ModelSpace":
        cfg = (dict(path_or_dict) if isinstance(path_or_dict, dict)
               else _config.read_config(path_or_dict))
        kind = cfg.get("kind", "euclidean").strip().lower()
        try:
            seed = int(cfg.get("seed", 0))
            R0 = float(cfg.get("R0", 1.0))
            lam = _config.parse_lambda(cfg["lambda"]) if "lambda" in cfg else None
            if kind == "euclidean":
                m = cls.euclidean(int(cfg.get("n", 3)), R0=R0)
            elif kind in ("heisenberg", "heisenberg1", "h1"):
                if "cq" in cfg and "beta" in cfg:
                    cq = float(cfg["cq"])
                    om = float(cfg.get("omega", 1.0 / cq))
                    m = cls(ModelKind.HEISENBERG, 3, 4, om, float(cfg["beta"]), cq, seed, R0)
                else:
                    om = float(cfg["omega"]) if "omega" in cfg else None
                    m = cls.heisenberg(omega=om, seed=seed, R0=R0)
            elif kind in ("carnot", "carnotscaling"):
                m = cls.carnot_scaling(int(cfg["Q"]), float(cfg["omega"]), float(cfg["beta"]),
                                       n=int(cfg["n"]) if "n" in cfg else None, R0=R0)
            else:
                raise ConfigError(f"unknown model kind {kind!r}")
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad model config: {exc}") from exc
        m.seed = seed
        if lam is not None:
            m.lambda_terms = tuple(lam)
        return m


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

def fundamental_solution(model: ModelSpace, x, y):
    """Positive fundamental solution of ``-L``, ``Gamma(x, y)``.

    Raises
    ------
    PoleError
        If ``x == y``.
    UnsupportedModel
        For Euclidean ``n < 3`` or models without points.
    """
    if model.cq is None or not model.has_points:
        raise UnsupportedModel("model has no elliptic fundamental solution")
    d = model.gauge(x, y)
    if np.any(d == 0.0):
        raise PoleError("fundamental solution evaluated on the diagonal")
    out = model.cq * d ** (2.0 - model.Q)
    return float(out) if np.ndim(out) == 0 else out


def heat_kernel(model: ModelSpace, x, y, t):
    """Heat kernel ``p(x, y, t)`` of ``d/dt - L``.

    Euclidean: Gauss-Weierstrass. Heisenberg: the oscillatory integral of
    :func:`sublap.kernels.heis_p1` rescaled by ``p_t(g) = t^{-2} p_1(...)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise NonpositiveTime("heat kernel needs t > 0")
    g = model.difference(x, y)
    if model.kind is ModelKind.EUCLIDEAN:
        r2 = np.sum(g * g, axis=-1)
        out = (4.0 * math.pi * t) ** (-model.n / 2.0) * np.exp(-r2 / (4.0 * t))
    else:
        w = g[..., 0] ** 2 + g[..., 1] ** 2
        out = t ** -2.0 * heis_p1(w / t, g[..., 2] / t)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# finite-difference frame calculus
# --------------------------------------------------------------------------

def horizontal_gradient_fd(model: ModelSpace, f, x, h: float = 1e-5):
    """Central differences of ``f`` along the horizontal frame at ``x``.

    Moves are by right translation ``x o exp(h X_j)``, the exact flow of a
    left-invariant field.
    """
    x = np.asarray(x, dtype=float)
    moves = model.unit_moves()
    out = np.empty(x.shape[:-1] + (moves.shape[0],))
    for j, e in enumerate(moves):
        fp = f(model.translate(x, h * e))
        fm = f(model.translate(x, -h * e))
        out[..., j] = (fp - fm) / (2.0 * h)
    return out


def sublaplacian_fd(model: ModelSpace, f, x, h: float = 1e-3):
    """Second-order central differences of ``f`` along each frame field."""
    x = np.asarray(x, dtype=float)
    f0 = f(x)
    acc = 0.0
    for e in model.unit_moves():
        acc = acc + (f(model.translate(x, h * e)) - 2.0 * f0 + f(model.translate(x, -h * e))) / (h * h)
    return acc


# --------------------------------------------------------------------------
# calibration of the Heisenberg constants
# --------------------------------------------------------------------------

def _ref_bump(w, u):
    # psi = exp(-|z|^2 - u^2) as a function of (w = |z|^2, u), and its
    # sub-Laplacian 4 f_w + 4 w f_ww + (w / 4) f_uu
    f = np.exp(-w - u * u)
    lap = (-4.0 + 4.0 * w + 0.25 * w * (4.0 * u * u - 2.0)) * f
    return f, lap


@lru_cache(maxsize=8)
def calibrate_heisenberg(seed: int = 0, samples: int = 1 << 20, replicates: int = 8,
                         rel_tol: float = 1e-3):
    """Calibrate ``(cq, beta)`` for the first Heisenberg group.

    ``beta`` is the volume of the unit gauge ball, estimated by scrambled
    Sobol sampling of the box ``[-1, 1]^2 x [-1/4, 1/4]`` split into
    independent replicates (their spread gives the standard error).
    ``cq`` is fixed by ``int cq N^{-2} L psi = -psi(0)`` for the bump
    ``psi = exp(-|z|^2 - u^2)``, integrated in homogeneous polar
    coordinates ``dy = R^3/4 dR dphi dtheta``.

    Returns
    -------
    cq : float
    beta : float
    info : tuple of (key, value) pairs
        Standard error of ``beta`` and the quadrature error of ``cq``.

    Raises
    ------
    CalibrationFailure
        If the relative standard error of either constant exceeds ``rel_tol``.
    """
    from scipy.stats import qmc

    per = max(1, samples // replicates)
    m = int(math.ceil(math.log2(per)))
    estimates = []
    for k in range(replicates):
        eng = qmc.Sobol(d=3, scramble=True, seed=np.random.default_rng([seed, k]))
        pts = eng.random_base2(m)
        z1 = 2.0 * pts[:, 0] - 1.0
        z2 = 2.0 * pts[:, 1] - 1.0
        u = 0.5 * pts[:, 2] - 0.25
        w = z1 * z1 + z2 * z2
        inside = (w * w + 16.0 * u * u) < 1.0
        estimates.append(2.0 * float(np.mean(inside)))
    estimates = np.array(estimates)
    beta = float(np.mean(estimates))
    beta_se = float(np.std(estimates, ddof=1) / math.sqrt(replicates))
    if not beta_se <= rel_tol * beta:
        raise CalibrationFailure(f"ball volume standard error {beta_se:.2e} too large")

    # distributional identity in polar coordinates; angular part by GL
    phi_x, phi_w = gauss_legendre(48)
    phi = 0.5 * math.pi * phi_x
    phi_w = 0.5 * math.pi * phi_w

    def radial(R):
        R = np.asarray(R)[:, None]
        w = R * R * np.cos(phi)[None, :]
        u = 0.25 * R * R * np.sin(phi)[None, :]
        _, lap = _ref_bump(w, u)
        # N^{-2} * R^3 / 4 = R / 4; theta integral gives 2 pi
        return (2.0 * math.pi) * 0.25 * R[:, 0] * (lap @ phi_w)

    res = integrate_halfline(radial, 1.0, HalfLineDE(levels=10, rel_tol=1e-12))
    integral = res.value
    if not integral < 0:
        raise CalibrationFailure("calibration integral has the wrong sign")
    cq = -1.0 / integral
    cq_err = abs(cq) * res.error / abs(integral)
    if not cq_err <= rel_tol * cq:
        raise CalibrationFailure("fundamental-solution constant did not converge")
    info = (("beta_se", beta_se), ("cq_err", cq_err), ("samples", per * replicates))
    return cq, beta, info
