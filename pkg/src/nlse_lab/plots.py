"""Static SVG figures for trajectories and experiment reports.

Each SVG carries its provenance (tool version, config hash, plotted series)
as JSON in the document's ``dc:description`` metadata.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .experiments import ConvergenceReport, ScanReport  # noqa: E402
from .nlse import Trajectory  # noqa: E402


def _save(fig, path: Path, provenance: dict) -> Path:
    meta = {"tool_version": __version__, **provenance}
    fig.savefig(path, format="svg",
                metadata={"Description": json.dumps(meta, sort_keys=True, default=str)})
    plt.close(fig)
    return path


def read_provenance(path) -> dict:
    """Recover the JSON provenance block from an SVG written here."""
    import html
    import re
    text = Path(path).read_text()
    m = re.search(r"<dc:description>(.*?)</dc:description>", text, re.S)
    if m is None:
        raise ValueError(f"{path}: no provenance block")
    return json.loads(html.unescape(m.group(1)))


def staircase_points(report: ScanReport) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the N_post staircase with jumps at the bisected thresholds."""
    amps = [r.amplitude for r in report.rows]
    counts = [r.n_post for r in report.rows]
    xs, ys = [amps[0]], [counts[0]]
    jumps = iter(report.thresholds)
    for (a0, c0), (a1, c1) in zip(zip(amps, counts), zip(amps[1:], counts[1:])):
        if c1 != c0:
            x = next(jumps, 0.5 * (a0 + a1))
            xs += [x, x]
            ys += [c0, c1]
    xs.append(amps[-1])
    ys.append(counts[-1])
    return np.array(xs), np.array(ys)


def _plot_trajectory(traj: Trajectory, out: Path, max_curves: int = 8) -> list[Path]:
    idx = np.unique(np.linspace(0, len(traj.times) - 1, min(max_curves, len(traj.times))).astype(int))
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in idx:
        ax.plot(traj.grid.x, np.abs(traj.values[i]), lw=1, label=f"t2={traj.times[i]:.3g}")
    ax.set_xlabel("x1")
    ax.set_ylabel("|U|")
    ax.legend(fontsize=7)
    prov = {"kind": "snapshots", "epsilon": traj.epsilon,
            "times": [float(traj.times[i]) for i in idx]}
    return [_save(fig, out / "snapshots.svg", prov)]


def _plot_convergence(rep: ConvergenceReport, out: Path) -> list[Path]:
    eps, err = rep.epsilons, rep.relative_errors
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, err, "o-", label="relative sup error")
    ref = err[0] * (eps / eps[0]) ** rep.slope
    ax.loglog(eps, ref, "k--", lw=0.8)
    lo, hi = rep.slope_interval
    ax.set_title(f"fitted slope p = {rep.slope:.3f}  (95%: {lo:.2f} .. {hi:.2f})")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("error")
    prov = {"kind": "convergence", "slope": rep.slope, "epsilons": eps.tolist(),
            "relative_errors": err.tolist(),
            "config_hash": rep.metadata.get("config_hash")}
    return [_save(fig, out / "convergence.svg", prov)]


def _plot_scan(rep: ScanReport, out: Path) -> list[Path]:
    xs, ys = staircase_points(rep)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(xs, ys, "-", label="N_post (connection)")
    amps = [r.amplitude for r in rep.rows]
    ax.plot(amps, [r.n_post for r in rep.rows], "o")
    full = [(r.amplitude, r.n_full) for r in rep.rows if r.n_full is not None]
    if full:
        ax.plot(*zip(*full), "x", label="full PDE")
    ax.set_xlabel("forcing amplitude a")
    ax.set_ylabel("soliton count")
    ax.legend(fontsize=7)
    prov = {"kind": "scan", "jumps": list(rep.thresholds), "amplitudes": amps,
            "config_hash": rep.metadata.get("config_hash")}
    return [_save(fig, out / "scan_staircase.svg", prov)]


def emit_plots(obj, out_dir) -> list[Path]:
    out = Path(out_dir)
    if out.exists() and not out.is_dir():
        raise NotADirectoryError(f"{out} is not a directory")
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, Trajectory):
        if len(obj.times) == 0:
            raise ValueError("nothing to plot")
        return _plot_trajectory(obj, out)
    if isinstance(obj, ConvergenceReport):
        if not obj.rows:
            raise ValueError("nothing to plot")
        return _plot_convergence(obj, out)
    if isinstance(obj, ScanReport):
        if not obj.rows:
            raise ValueError("nothing to plot")
        return _plot_scan(obj, out)
    raise TypeError(f"cannot plot {type(obj).__name__}")
