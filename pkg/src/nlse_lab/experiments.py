"""End-to-end studies: full driven runs against the matched asymptotics."""

from __future__ import annotations

import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.stats

from . import __version__
from .asymptotics import (
    ExpansionOrder,
    connection_map,
    forced_mode_coefficients,
    forced_mode_part,
    inner_field,
    outer_post_field,
    outer_pre_field,
)
from .config import config_hash, config_to_dict
from .core_field import Grid1D, WaveField, l2_distance, sup_distance, sup_norm
from .nlse import (
    ForcingProfile,
    InitialCondition,
    SimulationConfig,
    evolve,
    evolve_unforced,
    integrate,
    pde_residual,
    trajectory_from_fields,
)
from .scattering import (
    DEFAULT_THRESHOLD,
    spectrum_stability,
    zs_discrete_spectrum,
    zs_potential,
)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("NLSE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items, workers: int | None = None):
    workers = worker_count() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _provenance(cfg: SimulationConfig | None = None) -> dict:
    out = {"tool_version": __version__, "python": platform.python_version(),
           "numpy": np.__version__}
    if cfg is not None:
        out["config"] = config_to_dict(cfg)
        out["config_hash"] = config_hash(cfg)
    return out


# -- background solution before the resonance ---------------------------------

def background_at_resonance(config: SimulationConfig) -> WaveField:
    """u(x1, 0): the unforced NLSE evolved from the imposed data to t2 = 0."""
    grid = config.grid
    u_start = config.initial.field(grid, config.t2_start)
    if config.initial.kind == "zero":
        return u_start
    traj = evolve_unforced(u_start, config.t2_start, 0.0, config.step)
    return traj.final


class Comparison(NamedTuple):
    sup_error: float
    relative_error: float
    l2_error: float


def run_full_vs_asymptotic(config: SimulationConfig, t2_check: float, *,
                           connection: bool = True, order="leading") -> Comparison:
    """Full driven run against the unforced NLSE started from the connection map.

    Both are compared at ``t2_check`` after removing the forced mode of the
    post-resonance expansion from the full solution.  ``connection=False``
    drops the (1 - i) sqrt(pi) f kick (ablation).
    """
    if not 0.0 < t2_check <= config.t2_end + 1e-12:
        raise ValueError("t2_check must lie in (0, t2_end]")
    if not config.t2_start < 0.0:
        raise ValueError("resonance t2 = 0 is not inside the time span")
    grid = config.grid
    f = config.forcing.evaluate(grid)
    full = evolve(config.replace(snapshot_times=(t2_check,), snapshot_every=0,
                                 diagnostics=False)).at(t2_check)
    u0 = background_at_resonance(config)
    v0 = connection_map(u0, f) if connection else u0
    v = evolve_unforced(v0, 0.0, t2_check, config.step).final
    envelope = full - forced_mode_part(v, f, t2_check, config.epsilon, order)
    sup_err = sup_distance(envelope, v)
    scale = sup_norm(envelope)
    rel = sup_err / scale if scale > 0 else (0.0 if sup_err == 0 else math.inf)
    return Comparison(sup_err, rel, l2_distance(envelope, v))


@dataclass
class ConvergenceReport:
    rows: list                 # (epsilon, sup_error, relative_error)
    slope: float
    slope_interval: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    @property
    def relative_errors(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def table(self) -> tuple[list[str], list]:
        return ["epsilon", "sup_error", "relative_error"], [list(r) for r in self.rows]


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> tuple[float, tuple[float, float]]:
    """Least-squares slope of log y vs log x with its 95% interval."""
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    fit = scipy.stats.linregress(lx, ly)
    if len(lx) > 2:
        half = scipy.stats.t.ppf(0.975, len(lx) - 2) * fit.stderr
    else:
        half = math.nan
    return float(fit.slope), (float(fit.slope - half), float(fit.slope + half))


def _convergence_member(args):
    cfg, t2_check, connection, order = args
    return run_full_vs_asymptotic(cfg, t2_check, connection=connection, order=order)


def convergence_study(eps_list: Sequence[float], base_config: SimulationConfig,
                      t2_check: float, *, connection: bool = True, order="leading",
                      workers: int | None = None) -> ConvergenceReport:
    eps = sorted((float(e) for e in eps_list), reverse=True)
    if len(eps) < 4:
        raise ValueError("convergence_study needs at least 4 epsilon values")
    if len(set(eps)) != len(eps):
        raise ValueError("epsilon values must be distinct")
    t0 = time.perf_counter()
    jobs = [(base_config.replace(epsilon=e, dt2=None), t2_check, connection, order)
            for e in eps]
    results = _map(_convergence_member, jobs, workers)
    rows = [(e, r.sup_error, r.relative_error) for e, r in zip(eps, results)]
    if any(not r[2] > 0 for r in rows):
        raise ArithmeticError("non-positive error in convergence study")
    slope, interval = fit_loglog(eps, [r[2] for r in rows])
    meta = _provenance(base_config)
    meta.update(t2_check=t2_check, connection=connection,
                order=ExpansionOrder.coerce(order).value,
                runtime_s=time.perf_counter() - t0,
                l2_errors=[r.l2_error for r in results])
    return ConvergenceReport(rows, slope, interval, meta)


# -- soliton counting across the resonance ------------------------------------

@dataclass
class ScanRow:
    amplitude: float
    n_pre: int
    n_post: int
    eigenvalues_post: list
    n_full: int | None = None
    flag: str = "STABLE"


@dataclass
class ScanReport:
    rows: list
    thresholds: list
    metadata: dict = field(default_factory=dict)

    def table(self) -> tuple[list[str], list]:
        header = ["amplitude", "n_pre", "n_post", "n_full", "flag", "eigenvalues_post"]
        body = [[r.amplitude, r.n_pre, r.n_post, "" if r.n_full is None else r.n_full,
                 r.flag, " ".join(f"{z.real:+.10e}{z.imag:+.10e}j" for z in r.eigenvalues_post)]
                for r in self.rows]
        return header, body

    def disagreements(self) -> list:
        """Amplitudes where the full-PDE count differs from the connection count."""
        return [r.amplitude for r in self.rows
                if r.n_full is not None and r.n_full != r.n_post]

    def stable_disagreements(self) -> list:
        return [a for a in self.disagreements()
                if self._row(a).flag != "UNSTABLE"]

    def _row(self, amplitude: float) -> ScanRow:
        return next(r for r in self.rows if r.amplitude == amplitude)


# simulated envelopes carry weak radiation up to the box edges
SIMULATED_EDGE_TOL = 1e-4


def envelope_spectrum(u: WaveField, threshold: float = DEFAULT_THRESHOLD,
                      edge_tol: float = 1e-8, **kw):
    """ZS spectrum of an envelope (potential U / sqrt(2))."""
    return zs_discrete_spectrum(zs_potential(u), threshold, edge_tol=edge_tol, **kw)


def full_pde_envelope(config: SimulationConfig) -> WaveField:
    """Full run to t2_end with the leading post-resonance forced mode removed."""
    traj = evolve(config.replace(diagnostics=False, snapshot_every=0, snapshot_times=()))
    f = config.forcing.evaluate(config.grid)
    return traj.final - forced_mode_part(traj.final, f, config.t2_end, config.epsilon)


def _scan_member(args):
    amp, base_config, u0, run_full, threshold = args
    cfg = base_config.replace(forcing=base_config.forcing.scaled(amp))
    f = cfg.forcing.evaluate(cfg.grid)
    v0 = connection_map(u0, f)
    stab = spectrum_stability(zs_potential(v0), threshold=threshold)
    post = stab.base
    n_full = None
    if run_full:
        n_full = envelope_spectrum(full_pde_envelope(cfg), threshold,
                                   edge_tol=SIMULATED_EDGE_TOL).soliton_count
    return ScanRow(amp, 0, post.soliton_count, list(post.eigenvalues), n_full, stab.flag)


def count_threshold(count: Callable[[float], int], lo: float, hi: float,
                    tol: float = 1e-3) -> float:
    """Bisect for the amplitude where ``count`` first exceeds count(lo)."""
    base = count(lo)
    if count(hi) <= base:
        raise ValueError("count does not change on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count(mid) > base:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def connection_count(base_config: SimulationConfig, u0: WaveField,
                     threshold: float = DEFAULT_THRESHOLD) -> Callable[[float], int]:
    grid = base_config.grid

    def count(amp: float) -> int:
        f = base_config.forcing.scaled(amp).evaluate(grid)
        return envelope_spectrum(connection_map(u0, f), threshold).soliton_count

    return count


def soliton_scattering_scan(amplitudes: Sequence[float], base_config: SimulationConfig, *,
                            full_pde: Sequence[float] | bool = True,
                            threshold: float = DEFAULT_THRESHOLD,
                            bisect_tol: float = 1e-3,
                            workers: int | None = None) -> ScanReport:
    """Soliton counts before and after the resonance over forcing amplitudes.

    ``base_config.forcing`` fixes the shape; its amplitude is replaced by each
    scanned value.  ``full_pde`` selects which amplitudes also get a full run
    (True for all, False for none, or an explicit subset).
    """
    amps = [float(a) for a in amplitudes]
    if amps != sorted(amps):
        raise ValueError("amplitudes must be sorted ascending")
    t0 = time.perf_counter()
    u0 = background_at_resonance(base_config)
    n_pre = envelope_spectrum(u0, threshold).soliton_count
    if isinstance(full_pde, bool):
        subset = set(amps) if full_pde else set()
    else:
        subset = {float(a) for a in full_pde}
    jobs = [(a, base_config, u0, a in subset, threshold) for a in amps]
    rows = _map(_scan_member, jobs, workers)
    for r in rows:
        r.n_pre = n_pre
    # counts must not drop as the amplitude grows for a fixed profile
    for prev, cur in zip(rows, rows[1:]):
        if cur.n_post < prev.n_post:
            raise ArithmeticError(
                f"N_post decreased from {prev.n_post} to {cur.n_post} between "
                f"a={prev.amplitude} and a={cur.amplitude}")
    # a transition inside an adjacent scan cell makes the count at this
    # amplitude sensitive to O(eps) corrections of the connection map
    for i, r in enumerate(rows):
        near = [rows[j].n_post for j in (i - 1, i + 1) if 0 <= j < len(rows)]
        if any(c != r.n_post for c in near):
            r.flag = "UNSTABLE"
    counter = connection_count(base_config, u0, threshold)
    thresholds = []
    for prev, cur in zip(rows, rows[1:]):
        if cur.n_post > prev.n_post:
            thresholds.append(count_threshold(counter, prev.amplitude, cur.amplitude,
                                              bisect_tol))
    meta = _provenance(base_config)
    meta.update(threshold=threshold, n_pre=n_pre, runtime_s=time.perf_counter() - t0)
    return ScanReport(rows, thresholds, meta)


def l1_threshold_gaussian(width: float = 1.0) -> float:
    """Amplitude where int |q| = pi/2 for q = (1-i) sqrt(pi) a exp(-(x/w)^2) / sqrt(2).

    int |q| dx = sqrt(pi) a * sqrt(pi) w = pi a w, so the single-lobe
    criterion gives a* = 1 / (2 w).
    """
    return 0.5 / width


# -- ansatz residuals ---------------------------------------------------------

REGIMES = ("pre", "inner", "post")


@dataclass
class AnsatzProbe:
    residual: float
    retained: float

    @property
    def ratio(self) -> float:
        return self.residual / self.retained if self.retained > 0 else math.inf


def _probe_step(t2: float, epsilon: float) -> float:
    # resolves the carrier (phase rate t2/eps^2) and the inner scale eps
    return 2e-4 * min(1.0, epsilon, epsilon ** 2 / max(abs(t2), 1e-300))


def probe_ansatz(regime: str, epsilon: float, t: float, *, grid: Grid1D,
                 forcing: ForcingProfile, initial: InitialCondition = InitialCondition(),
                 order="second") -> AnsatzProbe:
    """Residual of an assembled ansatz and the size of its last retained balance.

    ``t`` is t2 for the outer regimes and t1 = t2/eps for the inner one.  The
    background is the analytic NLSE solution described by ``initial``
    (zero or soliton), so only the ansatz itself is being tested.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if initial.kind == "table":
        raise ValueError("ansatz probes need an analytic background")
    order = ExpansionOrder.coerce(order)
    f = forcing.evaluate(grid)
    t2 = epsilon * t if regime == "inner" else t
    h = _probe_step(t2, epsilon)
    times = [t2 - h, t2, t2 + h]

    if regime == "pre":
        if t2 >= 0:
            raise ValueError("pre regime needs t2 < 0")
        fields = [outer_pre_field(initial.field(grid, s), f, s, epsilon, order) for s in times]
        u = initial.field(grid, t2).values
        c = forced_mode_coefficients(u, f, t2, grid)
        retained = epsilon * float(np.max(np.abs(t2 * c["B41"])))
        if order is ExpansionOrder.LEADING:
            retained = float(np.max(np.abs(f))) / epsilon
    elif regime == "inner":
        u0 = initial.field(grid, 0.0)
        fields = [inner_field(u0, f, s / epsilon, epsilon, order) for s in times]
        w1 = inner_field(u0, f, t, epsilon, "leading").values
        from .core_field import spectral_d2
        retained = float(np.max(np.abs(spectral_d2(w1, grid) + np.abs(w1) ** 2 * w1)))
        if order is ExpansionOrder.LEADING:
            retained = float(np.max(np.abs(f))) / epsilon
    else:
        if t2 <= 0:
            raise ValueError("post regime needs t2 > 0")
        u0 = initial.field(grid, 0.0)
        v0 = connection_map(u0, f)
        coarse = integrate(v0, 0.0, times[0], min(1e-3, times[0])).final
        fine = integrate(coarse, times[0], times[-1], h, output_times=times[1:2])
        vs = [coarse, fine.at(t2, tol=1e-12), fine.final]
        fields = [outer_post_field(v, f, s, epsilon, order) for v, s in zip(vs, times)]
        c = forced_mode_coefficients(vs[1].values, f, t2, grid)
        retained = epsilon * float(np.max(np.abs(t2 * c["B41"])))
        if order is ExpansionOrder.LEADING:
            retained = float(np.max(np.abs(f))) / epsilon
    traj = trajectory_from_fields(fields, times, epsilon, f)
    return AnsatzProbe(pde_residual(traj, 1), retained)


def validate_ansatz_residual(regime: str, epsilon: float, t: float, **kw) -> float:
    """Discrete PDE residual (sup norm) of the regime's ansatz at time ``t``."""
    return probe_ansatz(regime, epsilon, t, **kw).residual


def overlap_mismatch(epsilon: float, *, grid: Grid1D, forcing: ForcingProfile,
                     initial: InitialCondition = InitialCondition(),
                     outer_order="leading", inner_order="second",
                     t1: float | None = None) -> float:
    """sup |outer_pre - inner| at t1 = -eps^(-1/2) (inside the overlap zone)."""
    t1 = -epsilon ** -0.5 if t1 is None else t1
    t2 = epsilon * t1
    f = forcing.evaluate(grid)
    outer = outer_pre_field(initial.field(grid, t2), f, t2, epsilon, outer_order)
    inner = inner_field(initial.field(grid, 0.0), f, t1, epsilon, inner_order)
    return sup_distance(outer, inner)
