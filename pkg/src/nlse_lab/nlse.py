"""Driven NLSE in slow variables: split-step integrator and reference solutions.

With Psi = eps * U(x1, t2), x1 = eps x and t2 = eps^2 t the driven equation

    i Psi_t + Psi_xx + |Psi|^2 Psi = eps^2 f(eps x) exp(i t2^2 / (2 eps^2))

becomes

    i U_t2 + U_x1x1 + |U|^2 U = f(x1) exp(i theta(t2)) / eps,
    theta(t2) = t2^2 / (2 eps^2),

which is what :func:`integrate` advances.  One Strang step of size dt:

    linear Fourier step (dt/2) -> forcing kick over [t, t+dt/2] ->
    nonlinear rotation (dt) -> forcing kick over [t+dt/2, t+dt] ->
    linear Fourier step (dt/2)

Forcing kicks use exact Fresnel increments, so dt is limited by the envelope
and by the splitting error, not by resolving the fast phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core_field import (
    Grid1D,
    NonFiniteFieldError,
    WaveField,
    energy,
    make_grid,
    mass,
    spectral_d2,
)
from .fresnel import fresnel_difference

BLOWUP_LIMIT = 1e6


class BlowUpError(FloatingPointError):
    """Raised when the field leaves the finite, bounded regime.

    ``last_good`` holds the final accepted :class:`Trajectory`.
    """

    def __init__(self, message: str, last_good: "Trajectory"):
        super().__init__(message)
        self.last_good = last_good


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SweepPhase:
    """Phase of the swept driver, S(t2) = t2^2/2 and theta = S / eps^2."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1): {self.epsilon!r}")

    @staticmethod
    def S(t2):
        return 0.5 * np.asarray(t2) ** 2

    @staticmethod
    def dS(t2):
        return np.asarray(t2) * 1.0

    def theta(self, t2):
        return self.S(t2) / self.epsilon ** 2

    def carrier(self, t2, harmonic: int = 1):
        """exp(i * harmonic * theta(t2))."""
        return np.exp(1j * harmonic * self.theta(t2))


FORCING_KINDS = ("gaussian", "sech", "table")


@dataclass(frozen=True)
class ForcingProfile:
    """Envelope f(x1) of the driver.

    gaussian: a * exp(-((x - x0)/sigma)^2);  sech: a * sech((x - x0)/sigma);
    table: ``values`` sampled on the simulation grid.
    """

    kind: str = "gaussian"
    amplitude: float = 0.5
    width: float = 1.0
    center: float = 0.0
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in FORCING_KINDS:
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind != "table" and not self.width > 0:
            raise ValueError("forcing width must be positive")
        if self.kind == "table" and self.values is None:
            raise ValueError("table forcing needs values")

    def evaluate(self, grid: Grid1D, check_edges: bool = True) -> np.ndarray:
        if self.kind == "table":
            f = np.asarray(self.values, dtype=complex)
            if f.shape != (grid.n,):
                raise ValueError("table forcing does not match the grid")
        else:
            s = (grid.x - self.center) / self.width
            if self.kind == "gaussian":
                f = self.amplitude * np.exp(-s * s)
            else:
                f = self.amplitude / np.cosh(s)
            f = f.astype(complex)
        peak = np.max(np.abs(f))
        if check_edges and peak > 0:
            edge = max(abs(f[0]), abs(f[-1]))
            if edge > 1e-12 * peak:
                raise ValueError(
                    f"forcing not decayed at domain edges ({edge / peak:.2e} of peak)")
        return f

    def field(self, grid: Grid1D) -> WaveField:
        return WaveField(grid, self.evaluate(grid))

    def scaled(self, amplitude: float) -> "ForcingProfile":
        if self.kind == "table":
            return ForcingProfile("table", values=np.asarray(self.values) * amplitude)
        return ForcingProfile(self.kind, amplitude, self.width, self.center)


def zero_forcing() -> ForcingProfile:
    return ForcingProfile("gaussian", 0.0, 1.0, 0.0)


def analytic_soliton(grid: Grid1D, a: float, b: float = 0.0, x0: float = 0.0,
                     phi0: float = 0.0, t2: float = 0.0) -> WaveField:
    """One-soliton of i U_t + U_xx + |U|^2 U = 0.

    U = sqrt(2) a sech(a (x - 2 b t - x0)) exp(i (b x + (a^2 - b^2) t + phi0)).
    """
    if not a > 0:
        raise ValueError("soliton amplitude a must be positive")
    x = grid.x
    env = math.sqrt(2.0) * a / np.cosh(a * (x - 2.0 * b * t2 - x0))
    phase = b * x + (a * a - b * b) * t2 + phi0
    return WaveField(grid, env * np.exp(1j * phase))


def nlse_rhs(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """U_t of the unforced equation: i (U_xx + |U|^2 U)."""
    return 1j * (spectral_d2(values, grid) + np.abs(values) ** 2 * values)


@dataclass(frozen=True)
class InitialCondition:
    """Field imposed at t2_start. kind: zero | soliton | table."""

    kind: str = "zero"
    a: float = 1.0
    b: float = 0.0
    x0: float = 0.0
    phi0: float = 0.0
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "soliton", "table"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "table" and self.values is None:
            raise ValueError("table initial condition needs values")
        if self.kind == "soliton" and not self.a > 0:
            raise ValueError("soliton amplitude a must be positive")

    def field(self, grid: Grid1D, t2: float = 0.0) -> WaveField:
        """Background NLSE solution at time t2 (soliton phase origin at t2=0)."""
        if self.kind == "zero":
            return WaveField.zeros(grid)
        if self.kind == "soliton":
            return analytic_soliton(grid, self.a, self.b, self.x0, self.phi0, t2)
        return WaveField(grid, self.values)


NONLINEAR_PHASE_PER_STEP = 0.05


def max_dt2(epsilon: float, t2_start: float, t2_end: float) -> float:
    """Largest step keeping the fast phase advance below pi/4 at the span ends."""
    tmax = max(abs(t2_start), abs(t2_end))
    return min(0.1, epsilon ** 2 * math.pi / (4.0 * tmax))


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 1024
    length: float = 40.0
    epsilon: float = 0.1
    t2_start: float = -0.5
    t2_end: float = 0.5
    dt2: Optional[float] = None
    initial: InitialCondition = field(default_factory=InitialCondition)
    #: add the leading forced mode eps*B2*exp(i theta) to the imposed field so
    #: the background NLSE solution starts exactly at the initial condition
    dress_initial: bool = True
    forcing: ForcingProfile = field(default_factory=ForcingProfile)
    snapshot_every: int = 0
    snapshot_times: tuple = ()
    diagnostics: bool = True

    def __post_init__(self):
        try:
            make_grid(self.n, self.length)
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon", "must lie in (0, 1)")
        if not self.t2_start < 0.0 < self.t2_end:
            raise ConfigError("time", "need t2_start < 0 < t2_end")
        if self.dt2 is not None:
            limit = max_dt2(self.epsilon, self.t2_start, self.t2_end)
            if not 0.0 < self.dt2 <= limit * (1 + 1e-12):
                raise ConfigError(
                    "dt2", f"dt2={self.dt2} violates 0 < dt2 <= {limit:.6g} "
                           "(fast phase must advance < pi/4 per step)")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every", "must be >= 0")
        for t in self.snapshot_times:
            if not self.t2_start <= t <= self.t2_end:
                raise ConfigError("snapshot_times", f"{t} outside the time span")

    @property
    def grid(self) -> Grid1D:
        return make_grid(self.n, self.length)

    @property
    def step(self) -> float:
        """dt2, or the automatic choice: the carrier bound, tightened so the
        nonlinear rotation per step stays small for strong forcing."""
        if self.dt2 is not None:
            return self.dt2
        grid = self.grid
        peak = (float(np.max(np.abs(self.initial.field(grid, self.t2_start).values)))
                + math.sqrt(2 * math.pi) * float(np.max(np.abs(self.forcing.evaluate(grid)))))
        # factor 2 leaves room for focusing after the resonance
        limit = NONLINEAR_PHASE_PER_STEP / max(2.0 * peak, 1e-300) ** 2
        return min(max_dt2(self.epsilon, self.t2_start, self.t2_end), limit)

    def replace(self, **changes) -> "SimulationConfig":
        import dataclasses
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Trajectory:
    """Snapshots (t2, U) with the data needed to re-evaluate the equation."""

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray
    epsilon: float
    forcing: Optional[np.ndarray] = None
    nonlinearity: float = 1.0
    diagnostics: dict = field(default_factory=dict, compare=False)
    end_time: Optional[float] = None  # where integration stopped (backward runs end first)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape != (t.size, self.grid.n):
            raise ValueError("values must have shape (len(times), n)")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("snapshot times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    def snapshot(self, index: int) -> WaveField:
        return WaveField(self.grid, self.values[index])

    def at(self, t2: float, tol: float = 1e-9) -> WaveField:
        i = int(np.argmin(np.abs(self.times - t2)))
        if abs(self.times[i] - t2) > tol:
            raise KeyError(f"no snapshot at t2={t2}")
        return self.snapshot(i)

    @property
    def final(self) -> WaveField:
        """Field at the end of the integration (the latest snapshot by default)."""
        if self.end_time is None:
            return self.snapshot(-1)
        return self.at(self.end_time, tol=1e-12)

    def drive(self, t2: float) -> np.ndarray:
        """f exp(i theta(t2)) / eps on the grid (zeros when unforced)."""
        if self.forcing is None:
            return np.zeros(self.grid.n, dtype=complex)
        return self.forcing * np.exp(0.5j * t2 * t2 / self.epsilon ** 2) / self.epsilon


def _kicks(t0: float, dt: float, nsteps: int, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Fresnel increments of exp(i theta) over the two half-steps of each step."""
    starts = t0 + dt * np.arange(nsteps)
    mids = starts + 0.5 * dt
    ends = t0 + dt * np.arange(1, nsteps + 1)
    lo = np.minimum(starts, mids)
    hi = np.maximum(starts, mids)
    first = epsilon * fresnel_difference(lo / epsilon, hi / epsilon) * np.sign(dt)
    lo = np.minimum(mids, ends)
    hi = np.maximum(mids, ends)
    second = epsilon * fresnel_difference(lo / epsilon, hi / epsilon) * np.sign(dt)
    return first, second


def _advance(u: np.ndarray, grid: Grid1D, t0: float, t1: float, dt_max: float,
             epsilon: float, f: Optional[np.ndarray], nonlinearity: float,
             every: int, sink: list) -> np.ndarray:
    span = t1 - t0
    if span == 0.0:
        return u
    nsteps = max(1, int(math.ceil(abs(span) / dt_max - 1e-9)))
    dt = span / nsteps
    half_lin = np.exp(-0.5j * grid.k ** 2 * dt)
    nl = dt * nonlinearity
    if f is not None:
        kick1, kick2 = _kicks(t0, dt, nsteps, epsilon)
        coef = -1j * f / epsilon
    for j in range(nsteps):
        u = np.fft.ifft(half_lin * np.fft.fft(u))
        if f is not None:
            u = u + coef * kick1[j]
        u = u * np.exp(1j * nl * (u.real ** 2 + u.imag ** 2))
        if f is not None:
            u = u + coef * kick2[j]
        u = np.fft.ifft(half_lin * np.fft.fft(u))
        peak = np.max(np.abs(u))
        if not np.isfinite(peak) or peak > BLOWUP_LIMIT:
            raise _BlowUp(t0 + (j + 1) * dt, peak)
        if every and (j + 1) % every == 0 and j + 1 < nsteps:
            sink.append((t0 + (j + 1) * dt, u))
    return u


class _BlowUp(Exception):
    def __init__(self, t, peak):
        super().__init__(t, peak)
        self.t, self.peak = t, peak


def integrate(u0: WaveField, t_start: float, t_end: float, dt: float, *,
              epsilon: float = 0.1, forcing: Optional[np.ndarray] = None,
              output_times: Sequence[float] = (), snapshot_every: int = 0,
              nonlinearity: float = 1.0, diagnostics: bool = False) -> Trajectory:
    """Advance U from t_start to t_end (either direction) by Strang splitting.

    Snapshots are taken at t_start, every ``snapshot_every`` steps, at each of
    ``output_times`` (hit exactly by shortening the step per segment) and at
    t_end.  ``forcing`` is f(x1) sampled on the grid, or None for the
    unforced equation.  ``nonlinearity`` scales the cubic term.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = u0.grid
    direction = 1.0 if t_end >= t_start else -1.0
    marks = sorted({float(t) for t in output_times if
                    (t - t_start) * direction > 0 and (t_end - t) * direction > 0},
                   key=lambda t: t * direction)
    marks.append(float(t_end))
    f = None if forcing is None else np.asarray(forcing, dtype=complex)
    if f is not None and not np.any(f):
        f = None

    snaps: list[tuple[float, np.ndarray]] = [(float(t_start), u0.values.copy())]
    u = np.array(u0.values, dtype=complex)
    t = float(t_start)

    def _traj():
        ordered = sorted(snaps, key=lambda s: s[0])
        return _make_trajectory(grid, ordered, epsilon, forcing, nonlinearity,
                                diagnostics, end_time=float(t_end))

    for mark in marks:
        sink: list = []
        try:
            u = _advance(u, grid, t, mark, dt, epsilon, f, nonlinearity,
                         snapshot_every, sink)
        except _BlowUp as exc:
            snaps.extend(sink)
            raise BlowUpError(f"field blew up near t2={exc.t:.6g} (sup={exc.peak:.3g})",
                              _traj()) from None
        snaps.extend(sink)
        if mark != t:
            snaps.append((mark, u.copy()))
        t = mark
    return _traj()


def _make_trajectory(grid, snaps, epsilon, forcing, nonlinearity, diagnostics,
                     end_time=None):
    # drop duplicate times that can appear when a cadence snapshot hits a mark
    times, vals = [], []
    for t, v in snaps:
        if times and abs(t - times[-1]) < 1e-12:
            vals[-1] = v
            continue
        times.append(t)
        vals.append(v)
    traj = Trajectory(grid, np.array(times), np.array(vals), epsilon,
                      None if forcing is None else np.asarray(forcing, dtype=complex),
                      nonlinearity, end_time=end_time)
    if diagnostics:
        traj.diagnostics.update(trajectory_diagnostics(traj))
    return traj


def trajectory_diagnostics(traj: Trajectory) -> dict:
    masses = np.array([mass(traj.snapshot(i)) for i in range(len(traj))])
    energies = np.array([energy(traj.snapshot(i)) for i in range(len(traj))])
    balance = np.full(len(traj), np.nan)
    for i in range(1, len(traj) - 1):
        balance[i] = mass_balance_residual(traj, i)
    return {"mass": masses, "energy": energies, "mass_balance": balance}


def initial_field(config: SimulationConfig) -> WaveField:
    """Imposed field at t2_start, optionally dressed with the leading forced mode."""
    grid = config.grid
    u = config.initial.field(grid, config.t2_start)
    if config.dress_initial:
        f = config.forcing.evaluate(grid)
        t = config.t2_start
        b2 = -f / t
        u = u.with_values(u.values + config.epsilon * b2 * SweepPhase(config.epsilon).carrier(t))
    return u


def evolve(config: SimulationConfig) -> Trajectory:
    """Run the driven equation over [t2_start, t2_end] as configured."""
    grid = config.grid
    f = config.forcing.evaluate(grid)
    u0 = initial_field(config)
    return integrate(u0, config.t2_start, config.t2_end, config.step,
                     epsilon=config.epsilon, forcing=f,
                     output_times=config.snapshot_times,
                     snapshot_every=config.snapshot_every,
                     diagnostics=config.diagnostics)


def evolve_unforced(u0: WaveField, t_start: float, t_end: float, dt: float,
                    output_times: Sequence[float] = ()) -> Trajectory:
    return integrate(u0, t_start, t_end, dt, forcing=None, output_times=output_times)


def _time_derivative(traj: Trajectory, index: int) -> np.ndarray:
    t = traj.times
    h1 = t[index] - t[index - 1]
    h2 = t[index + 1] - t[index]
    u = traj.values
    # three-point derivative on a possibly non-uniform stencil
    return (-h2 / (h1 * (h1 + h2)) * u[index - 1]
            + (h2 - h1) / (h1 * h2) * u[index]
            + h1 / (h2 * (h1 + h2)) * u[index + 1])


def _check_interior(traj: Trajectory, index: int) -> None:
    if not 1 <= index <= len(traj) - 2:
        raise IndexError(f"index {index} outside 1..{len(traj) - 2}")


def pde_residual_field(traj: Trajectory, index: int) -> np.ndarray:
    _check_interior(traj, index)
    u = traj.values[index]
    lhs = (1j * _time_derivative(traj, index) + spectral_d2(u, traj.grid)
           + traj.nonlinearity * np.abs(u) ** 2 * u)
    return lhs - traj.drive(traj.times[index])


def pde_residual(traj: Trajectory, index: int) -> float:
    """sup |i U_t + U_xx + |U|^2 U - f exp(i theta)/eps| at snapshot ``index``."""
    return float(np.max(np.abs(pde_residual_field(traj, index))))


def mass_balance_residual(traj: Trajectory, index: int) -> float:
    """|dM/dt2 - 2 int Im(conj(U) g) dx| with a centered time difference."""
    _check_interior(traj, index)
    t = traj.times
    dx = traj.grid.dx
    m = np.sum(np.abs(traj.values[index - 1:index + 2]) ** 2, axis=1) * dx
    h1 = t[index] - t[index - 1]
    h2 = t[index + 1] - t[index]
    dm = (-h2 / (h1 * (h1 + h2)) * m[0] + (h2 - h1) / (h1 * h2) * m[1]
          + h1 / (h2 * (h1 + h2)) * m[2])
    u = traj.values[index]
    source = 2.0 * np.sum(np.imag(np.conj(u) * traj.drive(t[index]))) * dx
    return float(abs(dm - source))


def trajectory_from_fields(fields: Sequence[WaveField], times: Sequence[float],
                           epsilon: float = 0.1, forcing: Optional[np.ndarray] = None,
                           nonlinearity: float = 1.0) -> Trajectory:
    """Wrap externally built snapshots (e.g. an assembled ansatz) as a trajectory."""
    grid = fields[0].grid
    return Trajectory(grid, np.asarray(times, dtype=float),
                      np.array([f.values for f in fields]), epsilon,
                      None if forcing is None else np.asarray(forcing, dtype=complex),
                      nonlinearity)
