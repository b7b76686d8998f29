"""``nlse-lab`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(blow-up, non-convergence, non-decaying field).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import connection_map
from .config import config_hash, config_to_dict, parse_config, reference_config
from .core_field import NonFiniteFieldError, WaveField, make_grid
from .nlse import BlowUpError, ConfigError, ForcingProfile, analytic_soliton, evolve
from .scattering import NonDecayingFieldError

log = logging.getLogger("nlse_lab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunManifest:
    command: str
    config: dict | None = None
    input_hashes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tool_version: str = __version__

    def write(self, out_dir: Path) -> Path:
        from .io import write_json
        missing = [p for p in self.outputs if not (out_dir / p).exists()]
        if missing:
            raise FileNotFoundError(f"manifest lists missing outputs: {missing}")
        return write_json(out_dir / "manifest.json", self.__dict__)


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _float_list(text: str) -> list[float]:
    """'0.2,0.1' or 'start:stop:step' (stop inclusive)."""
    try:
        if ":" in text:
            a, b, s = (float(v) for v in text.split(":"))
            n = int(round((b - a) / s))
            return [round(a + i * s, 12) for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _load_config(args):
    if args.config is None:
        return reference_config()
    return parse_config(args.config)


def _forcing_from_args(args) -> ForcingProfile:
    return ForcingProfile(args.forcing_kind, args.amplitude, args.width, args.center)


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args) -> RunManifest:
    from .io import DIAGNOSTICS_SCHEMA, write_table, write_trajectory_csv
    cfg = _load_config(args)
    man = RunManifest("simulate", config_to_dict(cfg))
    if args.config:
        man.input_hashes["config"] = _file_hash(args.config)
    if args.dry_run:
        return man
    t0 = time.perf_counter()
    traj = evolve(cfg.replace(diagnostics=True))
    man.timings["evolve_s"] = time.perf_counter() - t0
    out = Path(args.out)
    write_trajectory_csv(out / "trajectory.csv", traj)
    d = traj.diagnostics
    rows = zip(traj.times, d["mass"], d["energy"], d["mass_balance"])
    write_table(out / "diagnostics.csv", DIAGNOSTICS_SCHEMA,
                ["t2", "mass", "energy", "mass_balance_residual"], rows)
    man.outputs += ["trajectory.csv", "diagnostics.csv"]
    if args.plots:
        from .plots import emit_plots
        man.outputs += [p.name for p in emit_plots(traj, out)]
    man.config["config_hash"] = config_hash(cfg)
    return man


def cmd_connect(args) -> RunManifest:
    from .io import read_field_csv, write_field_csv
    u0 = read_field_csv(args.field)
    f = _forcing_from_args(args)
    man = RunManifest("connect", {"forcing": {"kind": f.kind, "amplitude": f.amplitude,
                                              "width": f.width, "center": f.center}},
                      {"field": _file_hash(args.field)})
    if args.dry_run:
        f.evaluate(u0.grid)
        return man
    v = connection_map(u0, f.evaluate(u0.grid))
    write_field_csv(Path(args.out) / "connected.csv", v)
    man.outputs.append("connected.csv")
    return man


def cmd_spectrum(args) -> RunManifest:
    from .experiments import envelope_spectrum
    from .io import SPECTRUM_SCHEMA, read_field_csv, write_table
    u = read_field_csv(args.field)
    man = RunManifest("spectrum", {"threshold": args.threshold},
                      {"field": _file_hash(args.field)})
    if args.dry_run:
        return man
    sd = envelope_spectrum(u, args.threshold, edge_tol=args.edge_tol)
    print(f"count {sd.soliton_count}")
    for z in sd.eigenvalues:
        print(f"  zeta = {z.real:+.10f} {z.imag:+.10f}i")
    if args.out:
        write_table(Path(args.out) / "spectrum.csv", SPECTRUM_SCHEMA, ["re", "im"],
                    [(z.real, z.imag) for z in sd.eigenvalues])
        man.outputs.append("spectrum.csv")
    return man


def cmd_converge(args) -> RunManifest:
    from .experiments import convergence_study
    from .io import CONVERGENCE_SCHEMA, write_table
    cfg = _load_config(args)
    man = RunManifest("converge", config_to_dict(cfg))
    if len(args.eps) < 4:
        raise UsageError("--eps needs at least 4 values")
    if args.dry_run:
        return man
    rep = convergence_study(args.eps, cfg, args.t2_check,
                            connection=not args.no_connection, order=args.order)
    out = Path(args.out)
    header, rows = rep.table()
    write_table(out / "convergence.csv", CONVERGENCE_SCHEMA, header, rows)
    man.outputs.append("convergence.csv")
    man.timings["runtime_s"] = rep.metadata["runtime_s"]
    man.config["result"] = {"slope": rep.slope, "slope_interval": rep.slope_interval}
    print(f"slope {rep.slope:.4f} (95% {rep.slope_interval[0]:.4f} .. {rep.slope_interval[1]:.4f})")
    if args.plots:
        from .plots import emit_plots
        man.outputs += [p.name for p in emit_plots(rep, out)]
    return man


def cmd_scan(args) -> RunManifest:
    from .experiments import soliton_scattering_scan
    from .io import SCAN_SCHEMA, write_table
    cfg = _load_config(args)
    man = RunManifest("scan", config_to_dict(cfg))
    if args.dry_run:
        return man
    full = {"all": True, "none": False}.get(args.full_pde)
    if full is None:
        full = _float_list(args.full_pde)
    rep = soliton_scattering_scan(args.amplitudes, cfg, full_pde=full)
    out = Path(args.out)
    header, rows = rep.table()
    write_table(out / "scan.csv", SCAN_SCHEMA, header, rows)
    man.outputs.append("scan.csv")
    man.timings["runtime_s"] = rep.metadata["runtime_s"]
    man.config["result"] = {"thresholds": rep.thresholds,
                            "disagreements": rep.disagreements()}
    for r in rep.rows:
        print(f"a={r.amplitude:g} N_pre={r.n_pre} N_post={r.n_post} "
              f"N_full={'-' if r.n_full is None else r.n_full} {r.flag}")
    if args.plots:
        from .plots import emit_plots
        man.outputs += [p.name for p in emit_plots(rep, out)]
    return man


def cmd_fresnel_table(args) -> RunManifest:
    from .fresnel import fresnel_cumulative
    from .io import FRESNEL_SCHEMA, write_table
    if not args.step > 0 or args.t1_max < args.t1_min:
        raise UsageError("need step > 0 and t1-max >= t1-min")
    t = args.t1_min + args.step * np.arange(int(round((args.t1_max - args.t1_min) / args.step)) + 1)
    man = RunManifest("fresnel-table", {"t1_min": args.t1_min, "t1_max": args.t1_max,
                                        "step": args.step})
    if args.dry_run:
        return man
    F = fresnel_cumulative(t)
    write_table(Path(args.out) / "fresnel.csv", FRESNEL_SCHEMA, ["t1", "re", "im"],
                zip(t, F.real, F.imag))
    man.outputs.append("fresnel.csv")
    return man


def cmd_soliton(args) -> RunManifest:
    from .io import write_field_csv
    grid = make_grid(args.n, args.length)
    man = RunManifest("soliton", vars(args) | {"func": None})
    if args.dry_run:
        return man
    u = analytic_soliton(grid, args.a, args.b, args.x0, args.phi0)
    u = WaveField(grid, args.scale * u.values)
    write_field_csv(Path(args.out) / "soliton.csv", u)
    man.outputs.append("soliton.csv")
    return man


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nlse-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=False, out=True):
        sp.add_argument("--dry-run", action="store_true",
                        help="validate inputs, write nothing")
        if out:
            sp.add_argument("--out", default="nlse_out", help="output directory")
        if config:
            sp.add_argument("--config", help="JSON config (default: reference scenario)")
            sp.add_argument("--plots", action="store_true", help="also emit SVG plots")

    sp = sub.add_parser("simulate", help="full driven run")
    common(sp, config=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("connect", help="apply the connection formula to a stored field")
    common(sp)
    sp.add_argument("--field", required=True)
    sp.add_argument("--forcing-kind", default="gaussian", choices=["gaussian", "sech"])
    sp.add_argument("--amplitude", type=float, default=0.5)
    sp.add_argument("--width", type=float, default=1.0)
    sp.add_argument("--center", type=float, default=0.0)
    sp.set_defaults(func=cmd_connect)

    sp = sub.add_parser("spectrum", help="ZS eigenvalues of a stored envelope")
    sp.add_argument("--dry-run", action="store_true")
    sp.add_argument("--out", default=None, help="also write spectrum.csv here")
    sp.add_argument("--field", required=True)
    sp.add_argument("--threshold", type=float, default=1e-3)
    sp.add_argument("--edge-tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("converge", help="epsilon convergence study")
    common(sp, config=True)
    sp.add_argument("--eps", type=_float_list, default=[0.2, 0.14, 0.1, 0.07, 0.05])
    sp.add_argument("--t2-check", type=float, default=0.3)
    sp.add_argument("--order", choices=["leading", "second"], default="leading")
    sp.add_argument("--no-connection", action="store_true", help="ablation run")
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("scan", help="soliton count versus forcing amplitude")
    common(sp, config=True)
    sp.add_argument("--amplitudes", type=_float_list, default=_float_list("0.2:2.0:0.2"))
    sp.add_argument("--full-pde", default="all",
                    help="'all', 'none' or a list of amplitudes for full runs")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("fresnel-table", help="tabulate F(t1)")
    common(sp)
    sp.add_argument("--t1-min", type=float, default=-10.0)
    sp.add_argument("--t1-max", type=float, default=10.0)
    sp.add_argument("--step", type=float, default=0.01)
    sp.set_defaults(func=cmd_fresnel_table)

    sp = sub.add_parser("soliton", help="write an analytic one-soliton field")
    common(sp)
    sp.add_argument("--n", type=int, default=1024)
    sp.add_argument("--length", type=float, default=40.0)
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--b", type=float, default=0.0)
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--phi0", type=float, default=0.0)
    sp.add_argument("--scale", type=float, default=1.0,
                    help="multiply the soliton (2 gives a two-soliton bound state)")
    sp.set_defaults(func=cmd_soliton)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        t0 = time.perf_counter()
        man = args.func(args)
        if args.dry_run:
            print(json.dumps({"dry_run": True, "command": man.command, "config": man.config},
                             indent=2, default=str))
            return EXIT_OK
        man.timings["total_s"] = time.perf_counter() - t0
        out = getattr(args, "out", None)
        if out is not None and man.outputs:
            man.write(Path(out))
        return EXIT_OK
    except (BlowUpError, NonFiniteFieldError, NonDecayingFieldError, ArithmeticError) as exc:
        _report(exc)
        return EXIT_NUMERICAL
    except (ConfigError, UsageError, OSError, ValueError) as exc:
        _report(exc)
        return EXIT_USAGE


def _report(exc) -> None:
    sys.stderr.write(f"nlse-lab: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
