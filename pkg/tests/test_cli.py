import json
import math

import numpy as np
import pytest

from nlse_lab.cli import main
from nlse_lab.experiments import ConvergenceReport, ScanReport, soliton_scattering_scan
from nlse_lab.fresnel import F_INF
from nlse_lab.io import read_field_csv, read_table
from nlse_lab.plots import emit_plots, read_provenance, staircase_points
from nlse_lab.config import config_from_dict

SMALL = {"grid": {"n": 256, "length": 40.0}, "epsilon": 0.2,
         "time": {"t2_start": -0.3, "t2_end": 0.3}}


def _cfg_file(tmp_path, data=SMALL):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return str(p)


def test_unknown_flag_exits_1(capsys):
    assert main(["simulate", "--no-such-flag"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["frobnicate"]) == 1


def test_fresnel_table_tail(tmp_path):
    out = tmp_path / "ft"
    assert main(["fresnel-table", "--t1-min", "-10", "--t1-max", "10", "--step", "0.01",
                 "--out", str(out)]) == 0
    schema, header, rows = read_table(out / "fresnel.csv")
    assert schema == "fresnel v1" and header == ["t1", "re", "im"]
    assert len(rows) == 2001
    t, re, im = (float(v) for v in rows[-1])
    assert t == pytest.approx(10.0)
    tail = F_INF + np.exp(0.5j * t * t) / (1j * t)
    assert abs(complex(re, im) - tail) <= 2e-3
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"] == ["fresnel.csv"]


def test_soliton_pair_spectrum(tmp_path, capsys):
    out = tmp_path / "sol"
    assert main(["soliton", "--scale", "2", "--out", str(out)]) == 0
    u = read_field_csv(out / "soliton.csv")
    assert np.max(np.abs(u.values)) == pytest.approx(2 * math.sqrt(2))
    capsys.readouterr()
    assert main(["spectrum", "--field", str(out / "soliton.csv"), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "count 2" in text
    _, _, rows = read_table(out / "spectrum.csv")
    ims = sorted(float(r[1]) for r in rows)
    assert ims == pytest.approx([0.5, 1.5], abs=1e-6)


def test_spectrum_non_decaying_exit_2(tmp_path):
    out = tmp_path / "sol"
    main(["soliton", "--a", "0.3", "--out", str(out)])
    assert main(["spectrum", "--field", str(out / "soliton.csv")]) == 2


def test_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "dry"
    assert main(["simulate", "--config", _cfg_file(tmp_path), "--dry-run", "--out", str(out)]) == 0
    assert not out.exists()
    echo = json.loads(capsys.readouterr().out)
    assert echo["dry_run"] and echo["config"]["epsilon"] == 0.2


def test_bad_config_exit_1(tmp_path, capsys):
    bad = dict(SMALL, time={"t2_start": -0.3, "t2_end": 0.3, "dt2": 0.5})
    assert main(["simulate", "--config", _cfg_file(tmp_path, bad), "--dry-run"]) == 1
    assert "dt2" in capsys.readouterr().err
    assert main(["simulate", "--config", _cfg_file(tmp_path, {"nope": 1}), "--dry-run"]) == 1


def test_simulate_writes_manifest(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", _cfg_file(tmp_path), "--out", str(out), "--plots"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "simulate"
    assert "config" in man["input_hashes"]
    assert {"trajectory.csv", "diagnostics.csv", "snapshots.svg"} <= set(man["outputs"])
    for name in man["outputs"]:
        assert (out / name).exists()
    _, header, rows = read_table(out / "diagnostics.csv")
    assert header[0] == "t2" and len(rows) >= 2


def test_connect_round_trip(tmp_path):
    out = tmp_path / "c"
    main(["soliton", "--out", str(out)])
    assert main(["connect", "--field", str(out / "soliton.csv"), "--amplitude", "0",
                 "--out", str(out)]) == 0
    a = read_field_csv(out / "soliton.csv")
    b = read_field_csv(out / "connected.csv")
    assert np.array_equal(a.values, b.values)


def test_converge_needs_four_values(tmp_path):
    assert main(["converge", "--eps", "0.2,0.1", "--out", str(tmp_path)]) == 1


def test_convergence_plot(tmp_path):
    rep = ConvergenceReport([(0.2, 0.1, 0.2), (0.1, 0.05, 0.1), (0.05, 0.02, 0.05)],
                            1.0, (0.9, 1.1), {"config_hash": "abc"})
    paths = emit_plots(rep, tmp_path)
    assert [p.name for p in paths] == ["convergence.svg"]
    prov = read_provenance(paths[0])
    assert prov["slope"] == 1.0 and prov["epsilons"] == [0.2, 0.1, 0.05]
    assert "slope" in paths[0].read_text()


def test_empty_report_nothing_to_plot(tmp_path):
    with pytest.raises(ValueError, match="nothing to plot"):
        emit_plots(ConvergenceReport([], math.nan, (math.nan, math.nan)), tmp_path)
    with pytest.raises(ValueError, match="nothing to plot"):
        emit_plots(ScanReport([], []), tmp_path)


def test_unwritable_plot_dir(tmp_path):
    f = tmp_path / "file"
    f.write_text("x")
    rep = ConvergenceReport([(0.2, 0.1, 0.2)], 1.0, (1.0, 1.0))
    with pytest.raises(NotADirectoryError):
        emit_plots(rep, f)


def test_staircase_jumps_match_thresholds(tmp_path):
    cfg = config_from_dict({"grid": {"n": 512, "length": 40.0}, "epsilon": 0.05})
    rep = soliton_scattering_scan([0.3, 0.7], cfg, full_pde=False, bisect_tol=1e-2)
    assert [r.n_post for r in rep.rows] == [0, 1]
    assert len(rep.thresholds) == 1
    xs, ys = staircase_points(rep)
    jumps = xs[1:-1][::2]
    assert list(jumps) == rep.thresholds
    path = emit_plots(rep, tmp_path)[0]
    assert read_provenance(path)["jumps"] == rep.thresholds
