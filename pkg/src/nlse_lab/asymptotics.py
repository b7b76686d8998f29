"""Closed-form asymptotic pieces of the swept-resonance problem.

All fields are slow-frame envelopes U = Psi / eps on a common grid.

Outer, before resonance (t2 < 0, -t2 >> eps)::

    U = u + eps B2 e^{i theta} + eps^3 (B41 e^{i theta} + B4m1 e^{-i theta})
          + eps^4 B52 e^{2 i theta}

Inner (t1 = t2/eps = O(1))::

    U = w1(t1) + eps w2(t1),  w1 = u0 - i f F(t1),
    w2(t1) = int_{-inf}^{t1} i (w1_xx + |w1|^2 w1) dt'

The w2 integral carries no constant offset, so w2 ~ t1 * u_t(0) as t1 -> -inf.

Outer, after resonance: U = v + eps A2 e^{i theta} (+ eps^3, eps^4 terms),
with v(0) = u0 + (1 - i) sqrt(pi) f.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .core_field import GridMismatchError, WaveField, spectral_d2
from .fresnel import (
    F_INF,
    fresnel_cumulative,
    fresnel_increment,
    tail as fresnel_tail,
)
from .nlse import ForcingProfile

__all__ = [
    "ExpansionOrder",
    "CONNECTION_COEFFICIENT",
    "fresnel_cumulative",
    "fresnel_increment",
    "outer_pre_field",
    "outer_post_field",
    "inner_field",
    "connection_map",
    "w2_limit_slope_and_offset",
    "InnerQuadratureError",
]

#: -i F(+inf) = (1 - i) sqrt(pi): net kick of the resonance per unit forcing
CONNECTION_COEFFICIENT = -1j * F_INF


class ExpansionOrder(enum.Enum):
    LEADING = "leading"
    SECOND = "second"

    @classmethod
    def coerce(cls, value) -> "ExpansionOrder":
        return value if isinstance(value, cls) else cls(str(value).lower())


class InnerQuadratureError(ArithmeticError):
    pass


ForcingLike = Union[ForcingProfile, WaveField, np.ndarray]


def _forcing_values(f: ForcingLike, field: WaveField) -> np.ndarray:
    if isinstance(f, ForcingProfile):
        return f.evaluate(field.grid)
    if isinstance(f, WaveField):
        if f.grid != field.grid:
            raise GridMismatchError("forcing and field live on different grids")
        return f.values
    arr = np.asarray(f, dtype=complex)
    if arr.shape != (field.grid.n,):
        raise GridMismatchError("forcing samples do not match the grid")
    return arr


def _theta(t2: float, epsilon: float) -> float:
    return 0.5 * t2 * t2 / epsilon ** 2


# -- outer expansions ---------------------------------------------------------

def forced_mode_coefficients(u: np.ndarray, f: np.ndarray, t2: float, grid) -> dict:
    """Amplitudes of the non-resonant forced modes at time t2 (t2 != 0).

    B2 = -f/t2, and at the next orders
    B41 = (i dB2/dt2 + B2_xx + 2|u|^2 B2)/t2 with dB2/dt2 = f/t2^2,
    B4m1 = -u^2 conj(B2)/t2,  B52 = conj(u) B2^2 / (2 t2).
    """
    if t2 == 0:
        raise ZeroDivisionError("forced-mode coefficients are singular at t2 = 0")
    b2 = -f / t2
    b2_t = f / t2 ** 2
    b41 = (1j * b2_t + spectral_d2(b2, grid) + 2.0 * np.abs(u) ** 2 * b2) / t2
    b4m1 = -(u ** 2) * np.conj(b2) / t2
    b52 = np.conj(u) * b2 ** 2 / (2.0 * t2)
    return {"B2": b2, "B41": b41, "B4m1": b4m1, "B52": b52}


def _outer_field(v: WaveField, f: ForcingLike, t2: float, epsilon: float,
                 order) -> WaveField:
    order = ExpansionOrder.coerce(order)
    fv = _forcing_values(f, v)
    c = forced_mode_coefficients(v.values, fv, t2, v.grid)
    e1 = np.exp(1j * _theta(t2, epsilon))
    out = v.values + epsilon * c["B2"] * e1
    if order is ExpansionOrder.SECOND:
        out = out + epsilon ** 3 * (c["B41"] * e1 + c["B4m1"] * np.conj(e1))
        out = out + epsilon ** 4 * c["B52"] * e1 * e1
    return WaveField(v.grid, out)


def outer_pre_field(u1: WaveField, f: ForcingLike, t2: float, epsilon: float,
                    order="leading") -> WaveField:
    """Pre-resonance envelope built on the background NLSE solution ``u1(t2)``."""
    if t2 == 0:
        raise ZeroDivisionError("outer_pre_field is singular at t2 = 0")
    return _outer_field(u1, f, t2, epsilon, order)


def outer_post_field(v1: WaveField, f: ForcingLike, t2: float, epsilon: float,
                     order="leading") -> WaveField:
    """Post-resonance envelope; the forced modes obey the same algebra (A = B)."""
    if t2 == 0:
        raise ZeroDivisionError("outer_post_field is singular at t2 = 0")
    return _outer_field(v1, f, t2, epsilon, order)


def forced_mode_part(background: WaveField, f: ForcingLike, t2: float, epsilon: float,
                     order="leading") -> WaveField:
    """The oscillating part of the outer expansion alone (field minus background)."""
    return _outer_field(background, f, t2, epsilon, order) - background


def connection_map(u0: WaveField, f: ForcingLike) -> WaveField:
    """Post-resonance initial data u0 + (1 - i) sqrt(pi) f."""
    return WaveField(u0.grid, u0.values + CONNECTION_COEFFICIENT * _forcing_values(f, u0))


# -- inner layer --------------------------------------------------------------
#
# With a = u0 and b = -i f, w1 = a + b F and
#   i (w1_xx + |w1|^2 w1) = i [ (a_xx + |a|^2 a)
#       + (b_xx + 2|a|^2 b) F + a^2 conj(b) conj(F) + 2 a |b|^2 |F|^2
#       + b^2 conj(a) F^2 + |b|^2 b |F|^2 F ].
# Only five scalar functions of t1 appear, so w2 reduces to their
# antiderivatives J_k(t1) = int_{-inf}^{t1} phi_k, tabulated once.

_BASIS = ("F", "Fc", "FF*", "F2", "F2F*")
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
DEFAULT_START = 200.0
_PANEL = 0.01


def _phi(F: np.ndarray) -> np.ndarray:
    Fc = np.conj(F)
    a2 = (F * Fc).real
    return np.stack([F, Fc, a2.astype(complex), F * F, a2 * F])


_C = F_INF
_PHI_INF = _phi(np.array([_C]))[:, 0]


def _lower_tail(T: np.ndarray) -> np.ndarray:
    """int_{-inf}^{-T} phi_k, T > 0 (errors O(T^-4) or better)."""
    T = np.asarray(T, dtype=float)
    tau = -T * fresnel_tail(T) + 1j * np.exp(0.5j * T * T)
    out = np.zeros((5,) + T.shape, dtype=complex)
    out[0] = tau
    out[1] = np.conj(tau)
    out[2] = 1.0 / T
    out[3] = np.exp(1j * T * T) / (2j * T ** 3)
    return out


def _upper_tail(T: np.ndarray) -> np.ndarray:
    """int_T^inf (phi_k(F) - phi_k(F(+inf))), T > 0."""
    T = np.asarray(T, dtype=float)
    tau = -T * fresnel_tail(T) + 1j * np.exp(0.5j * T * T)  # int_T^inf G
    osc = np.exp(1j * T * T) / (2j * T ** 3)                  # ~ int_T^inf G^2
    c, cc = _C, np.conj(_C)
    out = np.empty((5,) + T.shape, dtype=complex)
    out[0] = -tau
    out[1] = -np.conj(tau)
    out[2] = -cc * tau - c * np.conj(tau) + 1.0 / T
    out[3] = -2.0 * c * tau + osc
    out[4] = -2.0 * abs(c) ** 2 * tau - c * c * np.conj(tau) + 2.0 * c / T + cc * osc
    return out


@dataclass(frozen=True)
class _InnerTable:
    start: float
    nodes: np.ndarray       # t values of panel edges
    values: np.ndarray      # J_k at nodes, shape (5, len(nodes))
    offsets: np.ndarray     # J_k^0 = lim (J_k(t) - phi_k(inf) t)

    def _partial(self, t: np.ndarray) -> np.ndarray:
        j = np.clip(np.floor((t - self.nodes[0]) / _PANEL).astype(int), 0, self.nodes.size - 2)
        lo = self.nodes[j]
        half = 0.5 * (t - lo)
        pts = lo[:, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
        ph = _phi(fresnel_cumulative(pts.ravel())).reshape((5,) + pts.shape)
        return self.values[:, j] + half * np.einsum("kmq,q->km", ph, _GL_WEIGHTS)

    def __call__(self, t) -> np.ndarray:
        """J_k(t), shape (5,) + shape(t)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((5, t.size), dtype=complex)
        T = self.start
        lo = t <= -T
        hi = t >= T
        mid = ~(lo | hi)
        if np.any(lo):
            out[:, lo] = _lower_tail(-t[lo])
        if np.any(hi):
            th = t[hi]
            out[:, hi] = (_PHI_INF[:, None] * th[None, :] + self.offsets[:, None]
                          - _upper_tail(th))
        if np.any(mid):
            out[:, mid] = self._partial(t[mid])
        return out


@lru_cache(maxsize=4)
def inner_table(start: float = DEFAULT_START) -> _InnerTable:
    """Tabulate J_k on [-start, start] by panel Gauss-Legendre quadrature."""
    npan = int(round(2 * start / _PANEL))
    edges = -start + _PANEL * np.arange(npan + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    pts = mids[:, None] + 0.5 * _PANEL * _GL_NODES[None, :]
    values = np.empty((5, npan + 1), dtype=complex)
    values[:, 0] = _lower_tail(np.array(start))
    for lo_i in range(0, npan, 4000):
        block = pts[lo_i:lo_i + 4000]
        ph = _phi(fresnel_cumulative(block.ravel())).reshape((5,) + block.shape)
        values[:, lo_i + 1:lo_i + 1 + block.shape[0]] = 0.5 * _PANEL * np.einsum(
            "kmq,q->km", ph, _GL_WEIGHTS)
    values = np.cumsum(values, axis=1)
    offsets = values[:, -1] - _PHI_INF * start + _upper_tail(np.array(start))
    return _InnerTable(start, edges, values, offsets)


def _inner_coefficients(a: np.ndarray, f: np.ndarray, grid):
    b = -1j * f
    aa = np.abs(a) ** 2
    bb = np.abs(b) ** 2
    slope = 1j * (spectral_d2(a, grid) + aa * a)
    coef = 1j * np.stack([
        spectral_d2(b, grid) + 2.0 * aa * b,
        a * a * np.conj(b),
        2.0 * a * bb,
        b * b * np.conj(a),
        bb * b,
    ])
    return slope, coef


def inner_leading(u0: WaveField, f: ForcingLike, t1: float) -> WaveField:
    fv = _forcing_values(f, u0)
    return WaveField(u0.grid, u0.values - 1j * fv * fresnel_cumulative(t1))


def inner_w2(u0: WaveField, f: ForcingLike, t1: float,
             start: float = DEFAULT_START) -> WaveField:
    """Second inner term w2(t1), growing like t1 * u_t(0) as t1 -> -inf."""
    fv = _forcing_values(f, u0)
    slope, coef = _inner_coefficients(u0.values, fv, u0.grid)
    J = inner_table(float(start))(t1)[:, 0]
    return WaveField(u0.grid, slope * t1 + np.einsum("k,kn->n", J, coef))


def inner_field(u0: WaveField, f: ForcingLike, t1: float, epsilon: float,
                order="leading", start: float = DEFAULT_START) -> WaveField:
    """Inner envelope w1 (+ eps w2) at t1 = t2/eps; ``u0`` is u(x1, 0)."""
    order = ExpansionOrder.coerce(order)
    w = inner_leading(u0, f, t1)
    if order is ExpansionOrder.SECOND:
        w = w + epsilon * inner_w2(u0, f, t1, start)
    return w


def w2_limit_slope_and_offset(u0: WaveField, f: ForcingLike,
                              start: float = DEFAULT_START,
                              check: bool = True) -> tuple[WaveField, WaveField]:
    """Large-t1 form w2 = t1 * w2_1 + w2_0 + o(1).

    w2_1 = i (w0_xx + |w0|^2 w0) with w0 = u0 + (1-i) sqrt(pi) f, and
    w2_0 = lim (w2(t1) - t1 w2_1).  With ``check`` the slope is also measured
    from w2 itself far out and must agree to 1%.
    """
    fv = _forcing_values(f, u0)
    grid = u0.grid
    w0 = u0.values + CONNECTION_COEFFICIENT * fv
    slope = 1j * (spectral_d2(w0, grid) + np.abs(w0) ** 2 * w0)
    _, coef = _inner_coefficients(u0.values, fv, grid)
    table = inner_table(float(start))
    offset = np.einsum("k,kn->n", table.offsets, coef)
    if check:
        t_a, t_b = 0.5 * start, start
        measured = (inner_w2(u0, fv, t_b, start).values
                    - inner_w2(u0, fv, t_a, start).values) / (t_b - t_a)
        scale = max(np.max(np.abs(slope)), 1e-300)
        if np.max(np.abs(measured - slope)) > 1e-2 * scale and scale > 1e-14:
            raise InnerQuadratureError("w2 slope does not converge to the closed form")
    return WaveField(grid, slope), WaveField(grid, offset)


def inner_start_sensitivity(start: float = DEFAULT_START) -> float:
    """max |J_k^0(start) - J_k^0(2 start)|: insensitivity of the matching constants."""
    return float(np.max(np.abs(inner_table(float(start)).offsets
                               - inner_table(float(2 * start)).offsets)))
