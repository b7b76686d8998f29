"""Periodic 1-D grid, complex field container and spectral diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridMismatchError(ValueError):
    pass


class NonFiniteFieldError(FloatingPointError):
    pass


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [-length/2, length/2).

    ``k`` holds angular wavenumbers in numpy FFT order:
    ``[0, 1, ..., n/2-1, -n/2, ..., -1] * 2*pi/length``.  The Nyquist entry
    ``-n/2`` has no partner of opposite sign, so :attr:`k_odd` zeroes it for
    odd-order derivatives; even-order operators keep it.
    """

    n: int
    length: float
    x: np.ndarray = field(init=False, repr=False, compare=False)
    k: np.ndarray = field(init=False, repr=False, compare=False)
    k_odd: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, length = self.n, self.length
        if not isinstance(n, (int, np.integer)) or n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"n not a power of two >= 16: {n!r}")
        if not length > 0:
            raise ValueError(f"length must be positive: {length!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "length", float(length))
        x = -0.5 * self.length + np.arange(n) * self.dx
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=self.dx)
        k_odd = k.copy()
        k_odd[n // 2] = 0.0
        for arr in (x, k, k_odd):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "k_odd", k_odd)

    @property
    def dx(self) -> float:
        return self.length / self.n

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.n * factor, self.length)


def make_grid(n: int, length: float) -> Grid1D:
    return Grid1D(n, length)


@dataclass(frozen=True)
class WaveField:
    """Complex amplitudes on a :class:`Grid1D`. Values are copied and frozen."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteFieldError("field contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid1D) -> "WaveField":
        return cls(grid, np.zeros(grid.n, dtype=complex))

    def with_values(self, values) -> "WaveField":
        return WaveField(self.grid, values)

    def __add__(self, other: "WaveField") -> "WaveField":
        _check_same_grid(self, other)
        return WaveField(self.grid, self.values + other.values)

    def __sub__(self, other: "WaveField") -> "WaveField":
        _check_same_grid(self, other)
        return WaveField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "WaveField":
        return WaveField(self.grid, self.values * c)

    __rmul__ = __mul__


def _check_same_grid(a: WaveField, b: WaveField) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def second_derivative(u: WaveField) -> WaveField:
    g = u.grid
    return WaveField(g, np.fft.ifft(-(g.k ** 2) * np.fft.fft(u.values)))


def first_derivative(u: WaveField) -> WaveField:
    g = u.grid
    return WaveField(g, np.fft.ifft(1j * g.k_odd * np.fft.fft(u.values)))


def spectral_d2(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Array-level second derivative (no field wrapping)."""
    return np.fft.ifft(-(grid.k ** 2) * np.fft.fft(values))


def mass(u: WaveField) -> float:
    """int |u|^2 dx by the rectangle rule."""
    return float(np.sum(np.abs(u.values) ** 2) * u.grid.dx)


def spectral_mass(u: WaveField) -> float:
    """Same integral evaluated in Fourier space (Parseval)."""
    uh = np.fft.fft(u.values)
    return float(np.sum(np.abs(uh) ** 2) * u.grid.dx / u.grid.n)


def energy(u: WaveField) -> float:
    """int (|u_x|^2 - |u|^4 / 2) dx, conserved by the unforced equation."""
    g = u.grid
    uh = np.fft.fft(u.values)
    # |u_x|^2 via Parseval keeps the Nyquist mode, consistent with d^2
    grad2 = np.sum(g.k ** 2 * np.abs(uh) ** 2) * g.dx / g.n
    quartic = 0.5 * np.sum(np.abs(u.values) ** 4) * g.dx
    return float(grad2 - quartic)


def sup_norm(u: WaveField) -> float:
    return float(np.max(np.abs(u.values))) if u.values.size else 0.0


def sup_distance(a: WaveField, b: WaveField) -> float:
    _check_same_grid(a, b)
    return float(np.max(np.abs(a.values - b.values)))


def l2_distance(a: WaveField, b: WaveField) -> float:
    _check_same_grid(a, b)
    return float(np.sqrt(np.sum(np.abs(a.values - b.values) ** 2) * a.grid.dx))


def edge_decay_ratio(u: WaveField) -> float:
    """max(|u[0]|, |u[-1]|) / max|u|; 0 for the zero field."""
    peak = sup_norm(u)
    if peak == 0.0:
        return 0.0
    return float(max(abs(u.values[0]), abs(u.values[-1])) / peak)


def check_edge_decay(u: WaveField, tol: float = 1e-8) -> bool:
    return edge_decay_ratio(u) <= tol


def spectral_resample(values: np.ndarray, n_new: int) -> np.ndarray:
    """Band-limited interpolation of periodic samples onto ``n_new`` points."""
    n = values.size
    if n_new == n:
        return np.array(values, dtype=complex)
    vh = np.fft.fftshift(np.fft.fft(values))
    if n_new > n:
        pad = (n_new - n) // 2
        # split Nyquist so real inputs stay real
        vh = vh.astype(complex)
        vh[0] *= 0.5
        vh = np.concatenate([np.zeros(pad), vh, [vh[0]], np.zeros(pad - 1)])
    else:
        cut = (n - n_new) // 2
        vh = vh[cut:cut + n_new].copy()
        vh[0] = 0.0
    return np.fft.ifft(np.fft.ifftshift(vh)) * (n_new / n)


def spectral_shift(values: np.ndarray, grid: Grid1D, delta: float) -> np.ndarray:
    """Samples of the band-limited interpolant at x + delta."""
    return np.fft.ifft(np.fft.fft(values) * np.exp(1j * grid.k_odd * delta))
