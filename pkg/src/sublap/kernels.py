r"""Hot numerical kernels with paired numba / numpy implementations.

The Heisenberg heat kernel at unit time is written as a one-dimensional
oscillatory integral over the dual variable of the centre,

.. math::

    p_1(w, v) = \frac{1}{4\pi^2}\int_0^\infty \frac{\lambda}{\sinh\lambda}
        \exp\Big(-\frac{w}{4}\lambda\coth\lambda\Big)\cos(\lambda v)\,d\lambda,

with ``w = |z|^2`` and ``v`` the central coordinate. It is summed with
fixed composite Gauss-Legendre tables whose panel width follows ``|v|``.
"""
import math
from functools import lru_cache

import numpy as np

from ._accel import USE_NUMBA, njit
from .quad import panel_nodes

__all__ = [
    "LAMBDA_MAX",
    "V_CUT",
    "heis_p1",
    "heis_p1_grid",
    "heis_p1_numpy",
    "heis_p1_numba",
    "gauss_lattice_sum",
]

LAMBDA_MAX = 40.0
# the u-marginal of the unit-time kernel decays like exp(-pi |v| / 2); beyond
# |v| = V_CUT the discarded mass is below 1e-13
V_CUT = 20.0
_SMALL_V = 4.0


@lru_cache(maxsize=4)
def _table(width: float):
    n_panels = int(math.ceil(LAMBDA_MAX / width))
    lam, wts = panel_nodes(0.0, LAMBDA_MAX, n_panels, 16)
    amp = wts * (lam / np.sinh(lam)) / (4.0 * math.pi ** 2)
    rate = 0.25 * lam / np.tanh(lam)
    for arr in (lam, amp, rate):
        arr.setflags(write=False)
    return lam, amp, rate


def _tables():
    return _table(1.0), _table(0.3)


@njit(fastmath=False)
def _p1_loop(w, v, lam_a, amp_a, rate_a, lam_b, amp_b, rate_b, small_v, v_cut):
    out = np.empty(w.size)
    for i in range(w.size):
        av = abs(v[i])
        if av > v_cut:
            out[i] = 0.0
            continue
        if av <= small_v:
            lam, amp, rate = lam_a, amp_a, rate_a
        else:
            lam, amp, rate = lam_b, amp_b, rate_b
        acc = 0.0
        wi = w[i]
        for k in range(lam.size):
            e = rate[k] * wi
            if e > 745.0:
                break  # rate is increasing in lambda
            acc += amp[k] * math.exp(-e) * math.cos(lam[k] * av)
        out[i] = acc
    return out


def heis_p1_numba(w, v):
    (la, aa, ra), (lb, ab, rb) = _tables()
    w = np.ascontiguousarray(w, dtype=float).ravel()
    v = np.ascontiguousarray(v, dtype=float).ravel()
    return _p1_loop(w, v, la, aa, ra, lb, ab, rb, _SMALL_V, V_CUT)


def heis_p1_numpy(w, v, chunk: int = 512):
    (la, aa, ra), (lb, ab, rb) = _tables()
    w = np.asarray(w, dtype=float).ravel()
    v = np.abs(np.asarray(v, dtype=float).ravel())
    out = np.zeros(w.size)
    for lam, amp, rate, mask in ((la, aa, ra, v <= _SMALL_V),
                                 (lb, ab, rb, (v > _SMALL_V) & (v <= V_CUT))):
        idx = np.nonzero(mask)[0]
        for s in range(0, idx.size, chunk):
            sel = idx[s:s + chunk]
            with np.errstate(under="ignore"):
                e = np.exp(-np.minimum(w[sel, None] * rate[None, :], 800.0))
            out[sel] = np.sum(amp[None, :] * e * np.cos(lam[None, :] * v[sel, None]), axis=1)
    return out


def heis_p1(w, v):
    """Unit-time Heisenberg heat kernel at scattered points.

    Parameters
    ----------
    w : array_like
        Squared horizontal radius ``|z|^2``.
    v : array_like
        Central coordinate, same shape as ``w``.
    """
    w_arr = np.asarray(w, dtype=float)
    shape = np.broadcast(w_arr, np.asarray(v)).shape
    w_arr, v_arr = np.broadcast_arrays(w_arr, np.asarray(v, dtype=float))
    if USE_NUMBA:
        out = heis_p1_numba(w_arr, v_arr)
    else:
        out = heis_p1_numpy(w_arr, v_arr)
    return out.reshape(shape)


def heis_p1_grid(w, v):
    """Kernel on the tensor grid ``w[:, None] x v[None, :]``.

    The double sum factorises into a matrix product, which makes lattice
    quadrature over cylindrical coordinates cheap.
    """
    w = np.asarray(w, dtype=float).ravel()
    v = np.abs(np.asarray(v, dtype=float).ravel())
    vmax = float(v.max()) if v.size else 0.0
    lam, amp, rate = _table(1.0) if vmax <= _SMALL_V else _table(0.3)
    with np.errstate(under="ignore"):
        left = np.exp(-np.minimum(w[:, None] * rate[None, :], 800.0)) * amp[None, :]
    right = np.cos(lam[:, None] * v[None, :])
    out = left @ right
    out[:, v > V_CUT] = 0.0
    return out


@njit
def _gauss_sum_loop(x, y, u_vals, t, weight):
    # sum_j (4 pi t)^{-1/2} exp(-(x_i - y_j)^2 / 4t) u_j * weight
    out = np.empty(x.size)
    c = weight / math.sqrt(4.0 * math.pi * t)
    inv = 1.0 / (4.0 * t)
    for i in range(x.size):
        acc = 0.0
        for j in range(y.size):
            d = x[i] - y[j]
            acc += math.exp(-d * d * inv) * u_vals[j]
        out[i] = c * acc
    return out


def gauss_lattice_sum(x, y, u_vals, t, weight):
    """One-dimensional Gauss-Weierstrass lattice sum at several targets.

    Used by the L2 boundary-attainment check where the same source lattice
    is convolved at many target points.
    """
    x = np.ascontiguousarray(x, dtype=float).ravel()
    y = np.ascontiguousarray(y, dtype=float).ravel()
    u_vals = np.ascontiguousarray(u_vals, dtype=float).ravel()
    if USE_NUMBA:
        return _gauss_sum_loop(x, y, u_vals, float(t), float(weight))
    g = np.exp(-(x[:, None] - y[None, :]) ** 2 / (4.0 * t))
    return weight / math.sqrt(4.0 * math.pi * t) * (g @ u_vals)
