"""Invariant suites behind ``sublap verify``.

Each check returns rows ``(module, check, model, params, value, oracle,
relerr, tol, pass)``. ``relerr`` is ``|value - oracle| / max(1, |oracle|)``
for identities; for one-sided bounds it is the excess of ``value`` over the
bound (zero when the bound holds).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, SublapError
from .models import ModelKind, ModelSpace

__all__ = ["Row", "Settings", "SUITES", "run_suite", "format_rows", "CSV_HEADER"]

SUITES = ("scaling", "gauge", "meanvalue", "heat", "fractional", "extension")
CSV_HEADER = ("module", "check", "model", "params", "value", "oracle", "relerr", "tol", "pass")


class Row(NamedTuple):
    module: str
    check: str
    model: str
    params: str
    value: float
    oracle: float
    relerr: float
    tol: float
    passed: bool


@dataclass
class Settings:
    """Suite options from the command line and config file."""
    models: List[ModelSpace]
    seed: int = 0
    tol_scale: float = 1.0
    s: Optional[float] = None
    jobs: int = 1


def _ident(module, check, model, params, value, oracle, tol, scale=1.0) -> Row:
    value, oracle = float(value), float(oracle)
    err = abs(value - oracle) / max(1.0, abs(oracle))
    tol = tol * scale
    return Row(module, check, model.label, params, value, oracle, err, tol, bool(err <= tol))


def _upper(module, check, model, params, value, bound, scale=1.0, slack=0.0) -> Row:
    """``value <= bound`` (with ``slack`` scaled by the tolerance multiplier)."""
    value, bound = float(value), float(bound)
    excess = max(0.0, value - bound) / max(1.0, abs(bound))
    tol = slack * scale
    ok = math.isfinite(value) and excess <= tol
    return Row(module, check, model.label, params, value, bound, excess, tol, bool(ok))


def _lower(module, check, model, params, value, bound, scale=1.0) -> Row:
    value, bound = float(value), float(bound)
    deficit = max(0.0, bound - value) / max(1.0, abs(bound))
    return Row(module, check, model.label, params, value, bound, deficit, 0.0, bool(deficit == 0.0))


def _fmt(v: float) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return f"{v:.10e}" if math.isfinite(v) else str(v)


def format_rows(rows: Sequence[Row]) -> List[List[str]]:
    """Sorted, formatted rows (deterministic byte output)."""
    out = []
    for r in rows:
        out.append([r.module, r.check, r.model, r.params, _fmt(r.value), _fmt(r.oracle),
                    _fmt(r.relerr), _fmt(r.tol), "true" if r.passed else "false"])
    return sorted(out)


def _is_euclid(m: ModelSpace, n=None):
    return m.kind is ModelKind.EUCLIDEAN and (n is None or m.n == n)


def _is_heis(m: ModelSpace):
    return m.kind is ModelKind.HEISENBERG


# --------------------------------------------------------------------------
# scaling
# --------------------------------------------------------------------------

def _scaling(m: ModelSpace, st: Settings) -> List[Row]:
    from .nsw import (ScalingData, density_zeta, eval_E, invert_E, pointwise_dimension_diagnostic,
                      ratio_bound_check)
    rows = []
    k = st.tol_scale
    poly = ScalingData(((3.0, 1.0), (5.0, 2.0)), elliptic=True)
    if m.Q > 2:
        sd = ScalingData.from_model(m)
        r = np.array([0.1, 0.5, 1.0, 3.0])
        back = invert_E(sd, eval_E(sd, r))
        rows.append(_ident("scaling", "E_inverse_roundtrip", m, "r=0.1..3",
                           float(np.max(np.abs(back / r - 1.0))), 0.0, 1e-12, k))
        dim = pointwise_dimension_diagnostic(sd, np.geomspace(1e-1, 1e-4, 8))
        rows.append(_ident("scaling", "dimension_diagnostic", m, "", dim, sd.Qx - 2.0, 1e-6, k))
        alpha = (m.Q - 2.0) * m.beta / (2.0 * m.omega)
        for rr in (0.25, 0.5, 1.0):
            rows.append(_ident("scaling", "zeta_over_r2", m, f"r={rr:g}",
                               density_zeta(m, sd, rr) / rr ** 2, alpha, 1e-8, k))
    # polynomial mode does not depend on the model
    lo, hi = ratio_bound_check(poly)
    rows.append(_lower("scaling", "rE'/E_lower", m, "lambda=3:1,5:2", lo, poly.Qx - 2.0))
    rows.append(_upper("scaling", "rE'/E_upper", m, "lambda=3:1,5:2", hi, poly.Qmax - 2.0, k, 1e-12))
    zr = np.array([density_zeta(None, poly, r) / r ** 2 for r in (1e-3, 1e-2, 0.1, 0.5, 1.0)])
    rows.append(_upper("scaling", "poly_zeta_ratio_spread", m, "r in (0,1]",
                       float(zr.max() / zr.min()), 10.0, k))
    return rows


# --------------------------------------------------------------------------
# gauge
# --------------------------------------------------------------------------

def _pairs(m: ModelSpace, rng, k=64):
    x = rng.normal(size=(k, m.n))
    y = x + rng.normal(size=(k, m.n)) * rng.uniform(0.05, 2.0, size=(k, 1))
    return x, y


def _gauge(m: ModelSpace, st: Settings) -> List[Row]:
    from .gauge import XBall, equivalence_constants, gamma_size_check
    if not (m.has_points and m.cq is not None):
        return []
    rng = np.random.default_rng(st.seed)
    k = st.tol_scale
    rows = []
    pairs = _pairs(m, rng)
    # omega = 1 / cq, so rho is the gauge itself
    a_hat = equivalence_constants(m, None, pairs)
    rows.append(_ident("gauge", "rho_vs_gauge_constant", m, "64 pairs", a_hat, 1.0, 1e-10, k))
    gs = gamma_size_check(m, None, pairs)
    lo, hi = gs["gamma_E"]
    rows.append(_ident("gauge", "gamma_E_spread", m, "64 pairs", hi / lo, 1.0, 1e-10, k))
    lo, hi = gs["gamma_ball"]
    rows.append(_ident("gauge", "gamma_ball_spread", m, "64 pairs", hi / lo, 1.0, 1e-10, k))
    ball = XBall(m, rng.normal(size=m.n), 0.8)
    exact, _ = ball.volume()
    est, err = ball.volume("qmc", samples=1 << 16, seed=st.seed)
    rows.append(_ident("gauge", "xball_volume_qmc", m, "r=0.8", est, exact, 5e-3, k))
    return rows


# --------------------------------------------------------------------------
# meanvalue
# --------------------------------------------------------------------------

def _meanvalue(m: ModelSpace, st: Settings) -> List[Row]:
    from . import meanvalue as mv
    from .testfunctions import euclidean_battery, euclidean_polynomial, heis_polynomial, heisenberg_battery
    if not (m.has_points and m.cq is not None):
        return []
    k = st.tol_scale
    heis = _is_heis(m)
    x = np.array([0.2, -0.1, 0.05]) if heis else np.linspace(0.1, -0.1, m.n)
    rows = []
    tol = 1e-4 if heis else 1e-6
    for r in (0.5, 1.0, 2.0):
        lhs, rhs = mv.surface_mass_identity(m, None, x, r)
        rows.append(_ident("meanvalue", "surface_mass_identity", m, f"r={r:g}", lhs / rhs, 1.0, tol, k))
    battery = heisenberg_battery() if heis else euclidean_battery(m.n)
    for psi in battery:
        lim = mv.blaschke_privalov(m, None, psi, x)
        exact = float(psi.lap(x))
        rows.append(_ident("meanvalue", "blaschke_privalov", m, psi.name, lim / exact, 1.0, 1e-2, k))
    harm = heis_polynomial("z1z2") if heis else euclidean_polynomial(m.n, "x1x1-x2x2")
    for s_, t_ in ((0.5, 1.0), (1.0, 2.0)):
        _, _, C = mv.caccioppoli_check(m, None, harm, x, s_, t_)
        rows.append(_upper("meanvalue", "caccioppoli_constant", m, f"{harm.name} s={s_:g} t={t_:g}",
                           C, 10.0, k))
    derivs = [mv.mean_square_derivative(m, None, harm, x, r)[0] for r in (0.25, 0.5, 1.0, 1.5)]
    rows.append(_lower("meanvalue", "mean_square_monotone", m, harm.name, min(derivs), 0.0))
    return rows


# --------------------------------------------------------------------------
# heat
# --------------------------------------------------------------------------

def _heat(m: ModelSpace, st: Settings) -> List[Row]:
    from .extension import heat_mass
    from .heat import apply_semigroup, linear_decay_check, sqrt_decay_check
    from .testfunctions import gaussian_bump, heis_gaussian, plane_wave
    if not m.has_points:
        return []
    k = st.tol_scale
    rows = []
    heis = _is_heis(m)
    for t in (0.1, 1.0):
        rows.append(_ident("heat", "kernel_mass", m, f"t={t:g}", heat_mass(m, t), 1.0,
                           1e-3 if heis else 1e-6, k))
    if heis:
        u, x = heis_gaussian(0.7, 0.5), np.zeros(3)
    else:
        u, x = gaussian_bump(m.n, 0.5), np.full(m.n, 0.2)
    for t in (0.05, 0.5):
        lat = apply_semigroup(m, u, x, t, "lattice")
        cl = apply_semigroup(m, u, x, t, "closed")
        rows.append(_ident("heat", "lattice_vs_closed", m, f"{u.name} t={t:g}", lat, cl, 1e-8, k))
    grid1 = np.geomspace(1e-3, 1.0, 7)
    r1 = sqrt_decay_check(m, u, x, grid1)
    r2 = sqrt_decay_check(m, u, x, np.geomspace(1e-3, 1.0, 13))
    rows.append(_ident("heat", "sqrt_decay_grid_stable", m, u.name, r2, r1, 0.5, k))
    if not heis:
        for xi in (0.5, 1.0, 2.0):
            pw = plane_wave(m.n, [xi] + [0.0] * (m.n - 1))
            ratio = linear_decay_check(m, pw, np.zeros(m.n), np.geomspace(1e-3, 10.0, 9))
            rows.append(_upper("heat", "linear_decay_ratio", m, f"xi={xi:g}", ratio, 1.0, k, 1e-6))
    return rows


# --------------------------------------------------------------------------
# fractional
# --------------------------------------------------------------------------

def _fractional(m: ModelSpace, st: Settings) -> List[Row]:
    from .fractional import FracParams, balakrishnan, fourier_oracle, riesz_apply
    from .testfunctions import gaussian_bump, heis_gaussian, plane_wave
    if not m.has_points:
        return []
    k = st.tol_scale
    rows = []
    if _is_euclid(m):
        x = np.zeros(m.n)
        s_list = (st.s,) if st.s is not None else (0.1, 0.25, 0.5, 0.75, 0.9)
        for s in s_list:
            for xi in (1.0, 2.0, 4.0):
                pw = plane_wave(m.n, [xi] + [0.0] * (m.n - 1))
                rows.append(_ident("fractional", "multiplier", m, f"s={s:g} xi={xi:g}",
                                   balakrishnan(m, pw, x, FracParams(s)), xi ** (2 * s), 1e-6, k))
        g = gaussian_bump(m.n, 0.5)
        xg = np.full(m.n, 0.3)
        for s in ((st.s,) if st.s is not None else (0.3, 0.7)):
            b = balakrishnan(m, g, xg, FracParams(s))
            rows.append(_ident("fractional", "fourier_oracle", m, f"gaussian s={s:g}", b,
                               fourier_oracle(g, s, xg), 1e-6, k))
            if 2.0 - 2.0 * s < m.Q:
                rows.append(_ident("fractional", "riesz_route", m, f"gaussian s={s:g}",
                                   riesz_apply(m, g, xg, FracParams(s)), b, 1e-3, k))
    elif _is_heis(m):
        hg = heis_gaussian(0.7, 0.5)
        for s in ((st.s,) if st.s is not None else (0.25,)):
            b = balakrishnan(m, hg, np.zeros(3), FracParams(s))
            rows.append(_ident("fractional", "riesz_route", m, f"{hg.name} s={s:g}",
                               riesz_apply(m, hg, np.zeros(3), FracParams(s)), b, 1e-3, k))
    return rows


# --------------------------------------------------------------------------
# extension
# --------------------------------------------------------------------------

def _extension(m: ModelSpace, st: Settings) -> List[Row]:
    from . import extension as ex
    from .fractional import FracParams, balakrishnan
    from .testfunctions import cauchy_bump, gaussian_bump, heis_gaussian
    if not (m.has_points and m.is_group):
        return []
    k = st.tol_scale
    rows = []
    heis = _is_heis(m)
    tol_norm = 1e-3 if heis else 1e-6
    a_list = (1.0 - 2.0 * st.s,) if st.s is not None else (-0.5, 0.0, 0.5)
    for a in a_list:
        for z in (0.5, 1.0):
            p = f"a={a:g} z={z:g}"
            rows.append(_ident("extension", "bessel_mass", m, p, ex.bessel_mass(a, z, 1.0), 1.0, 1e-8, k))
            rows.append(_ident("extension", "parabolic_mass", m, p, ex.parabolic_mass(m, a, z), 1.0, tol_norm, k))
            rows.append(_ident("extension", "elliptic_mass", m, p, ex.poisson_mass(m, a, z), 1.0, tol_norm, k))
        if abs(a) > 0:
            lhs, rhs = ex.chapman_kolmogorov(a, 1.0, 0.7, 0.3, 0.5)
            rows.append(_ident("extension", "chapman_kolmogorov", m, f"a={a:g}", lhs / rhs, 1.0, 1e-8, k))
    if _is_euclid(m):
        rng = np.random.default_rng(st.seed)
        for i in range(4):
            x, y = rng.normal(size=m.n), rng.normal(size=m.n)
            z, s = rng.uniform(0.2, 2.0), rng.uniform(0.1, 0.9)
            K = ex.elliptic_poisson(m, None, x, y, z, s=s)
            rows.append(_ident("extension", "caffarelli_silvestre", m, f"tuple={i}",
                               K / ex.caffarelli_silvestre(m.n, s, x, y, z), 1.0, 1e-8, k))
        u, x = gaussian_bump(m.n, 0.5), np.full(m.n, 0.2)
        s_list = (st.s,) if st.s is not None else (0.25, 0.5, 0.75)
    else:
        u, x = heis_gaussian(0.7, 0.5), np.zeros(3)
        s_list = (st.s,) if st.s is not None else (0.25, 0.4)
    for s in s_list:
        d = ex.dtn_trace(m, None, u, x, s=s)
        b = balakrishnan(m, u, x, FracParams(s))
        rows.append(Row("extension", "dtn_vs_balakrishnan", m.label, f"{u.name} s={s:g}", d, b,
                        abs(d - b) / (1.0 + abs(b)), 1e-3 * k, bool(abs(d - b) <= 1e-3 * k * (1 + abs(b)))))
    if _is_euclid(m, 1):
        c = cauchy_bump()
        for z in (0.25, 1.0):
            U = ex.solve_extension(m, 0.0, c, [0.5], z, method="kernel")
            rows.append(_ident("extension", "half_plane_oracle", m, f"z={z:g}",
                               U, (1 + z) / ((1 + z) ** 2 + 0.25), 1e-6, k))
        for a in a_list:
            slope, _ = ex.boundary_l2_slope(a, gaussian_bump(1, 0.5))
            rows.append(_lower("extension", "l2_boundary_slope", m, f"a={a:g}", slope,
                               min(1.0 - a, 0.8) - 0.1))
    return rows


_SUITE_FUNCS: Dict[str, Callable] = {
    "scaling": _scaling,
    "gauge": _gauge,
    "meanvalue": _meanvalue,
    "heat": _heat,
    "fractional": _fractional,
    "extension": _extension,
}


def _safe(fn, m, st, suite):
    try:
        return fn(m, st)
    except SublapError as exc:
        # a library failure is a failed row, not a crash of the harness
        return [Row(suite, f"error:{type(exc).__name__}", m.label, str(exc).replace(",", ";"),
                    math.nan, math.nan, math.inf, 0.0, False)]


def run_suite(name: str, st: Settings) -> List[Row]:
    """Run one suite (or ``all``) over the configured models."""
    if name == "all":
        names = SUITES
    elif name in _SUITE_FUNCS:
        names = (name,)
    else:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    jobs = [(n, m) for n in names for m in st.models]
    if st.jobs > 1:
        with ThreadPoolExecutor(st.jobs) as pool:
            parts = list(pool.map(lambda nm: _safe(_SUITE_FUNCS[nm[0]], nm[1], st, nm[0]), jobs))
    else:
        parts = [_safe(_SUITE_FUNCS[n], m, st, n) for n, m in jobs]
    return [r for p in parts for r in p]
