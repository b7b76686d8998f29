"""Cumulative Fresnel integral F(t) = int_{-inf}^{t} exp(i s^2 / 2) ds.

Two branches, switched at ``|t| = SWITCH``:

* ``|t| <= SWITCH``: Maclaurin series of int_0^t exp(i s^2/2) ds plus F(0).
* ``|t| > SWITCH``: the tail G(t) = int_t^inf exp(i s^2/2) ds written as
  ``exp(i t^2/2) * K(t)`` where K is the Laplace continued fraction of the
  scaled complementary error function.  K(t) ~ i/t, so this branch is the
  convergent form of F(t) ~ F(+inf) + exp(i t^2/2) / (i t) (1 - i/t^2 + ...).

F(t) = G(-t) for t < 0 and F(t) = F(+inf) - G(t) for t > 0, so both signs
are evaluated without cancellation against F(+inf).
"""

from __future__ import annotations

import math

import numpy as np

SQRT_PI = math.sqrt(math.pi)
#: F(+inf) = sqrt(pi) (1 + i)
F_INF = complex(SQRT_PI, SQRT_PI)
#: F(0) = F(+inf) / 2
F_ZERO = 0.5 * F_INF

SWITCH = 4.0
_SERIES_TERMS = 60
_CF_DEPTH = 120

_ROT = np.exp(-0.25j * np.pi) / math.sqrt(2.0)
_PREF = 0.5 * math.sqrt(2.0) * np.exp(0.25j * np.pi)


def _series(t: np.ndarray) -> np.ndarray:
    # int_0^t exp(i s^2/2) ds = sum_n (i/2)^n t^(2n+1) / (n! (2n+1))
    t = t.astype(complex)
    t2 = 0.5j * t * t
    term = t.copy()
    out = t.copy()
    for n in range(1, _SERIES_TERMS):
        term = term * t2 / n
        out = out + term / (2 * n + 1)
    return out


def _tail_scaled(t: np.ndarray) -> np.ndarray:
    """K(t) with G(t) = exp(i t^2/2) K(t), valid for t > 0 away from zero."""
    z = t * _ROT
    acc = np.zeros_like(z)
    # 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))) evaluated bottom-up
    for k in range(_CF_DEPTH, 0, -1):
        acc = (0.5 * k) / (z + acc)
    return _PREF / (z + acc)


def tail(t):
    """G(t) = int_t^inf exp(i s^2/2) ds for t >= 0 (array or scalar)."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(t < 0):
        raise ValueError("tail() needs t >= 0")
    out = np.empty(t.shape, dtype=complex)
    small = t <= SWITCH
    out[small] = F_INF - F_ZERO - _series(t[small])
    big = ~small
    tb = t[big]
    out[big] = np.exp(0.5j * tb * tb) * _tail_scaled(tb)
    return out[0] if scalar else out


def fresnel_cumulative(t1):
    """F(t1) = int_{-inf}^{t1} exp(i s^2/2) ds.

    Accepts scalars or arrays; ``-inf`` and ``+inf`` return the exact limits
    0 and sqrt(pi)(1+i).  Relative accuracy is better than 1e-12 on
    ``|t1| <= 50`` and improves further out.
    """
    t = np.asarray(t1, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(np.isnan(t)):
        raise ValueError("fresnel_cumulative: NaN argument")
    out = np.empty(t.shape, dtype=complex)

    pos_inf = np.isposinf(t)
    neg_inf = np.isneginf(t)
    out[pos_inf] = F_INF
    out[neg_inf] = 0.0

    fin = ~(pos_inf | neg_inf)
    small = fin & (np.abs(t) <= SWITCH)
    out[small] = F_ZERO + _series(t[small])

    right = fin & (t > SWITCH)
    tr = t[right]
    out[right] = F_INF - np.exp(0.5j * tr * tr) * _tail_scaled(tr)

    left = fin & (t < -SWITCH)
    tl = -t[left]
    out[left] = np.exp(0.5j * tl * tl) * _tail_scaled(tl)
    return out[0] if scalar else out


def fresnel_difference(ta, tb):
    """F(tb) - F(ta), computed from the tails when both points sit on one side."""
    ta = np.asarray(ta, dtype=float)
    tb = np.asarray(tb, dtype=float)
    ta_b, tb_b = np.broadcast_arrays(ta, tb)
    scalar = ta_b.ndim == 0
    ta_b = np.atleast_1d(ta_b).astype(float)
    tb_b = np.atleast_1d(tb_b).astype(float)
    out = np.empty(ta_b.shape, dtype=complex)

    both_pos = (ta_b >= 0) & (tb_b >= 0) & np.isfinite(ta_b)
    both_neg = (ta_b <= 0) & (tb_b <= 0) & np.isfinite(tb_b) & ~both_pos
    mixed = ~(both_pos | both_neg)
    if np.any(both_pos):
        out[both_pos] = tail(ta_b[both_pos]) - _tail_or_zero(tb_b[both_pos])
    if np.any(both_neg):
        out[both_neg] = tail(-tb_b[both_neg]) - _tail_or_zero(-ta_b[both_neg])
    if np.any(mixed):
        out[mixed] = fresnel_cumulative(tb_b[mixed]) - fresnel_cumulative(ta_b[mixed])
    return out[0] if scalar else out


def _tail_or_zero(t: np.ndarray) -> np.ndarray:
    out = np.zeros(t.shape, dtype=complex)
    fin = np.isfinite(t)
    out[fin] = tail(t[fin])
    return out


def fresnel_increment(ta, tb, epsilon: float):
    """int_{ta}^{tb} exp(i tau^2 / (2 eps^2)) dtau = eps (F(tb/eps) - F(ta/eps))."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if np.any(np.asarray(ta) > np.asarray(tb)):
        raise ValueError("fresnel_increment requires ta <= tb")
    with np.errstate(invalid="ignore"):
        return epsilon * fresnel_difference(np.asarray(ta) / epsilon, np.asarray(tb) / epsilon)


def signed_fresnel_increment(ta: float, tb: float, epsilon: float) -> complex:
    """Oriented version of :func:`fresnel_increment` (allows ta > tb)."""
    if ta <= tb:
        return complex(fresnel_increment(ta, tb, epsilon))
    return -complex(fresnel_increment(tb, ta, epsilon))
