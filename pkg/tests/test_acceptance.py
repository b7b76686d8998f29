"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL: ...`` line; the lines
are also collected into the pytest terminal summary.  Running this file as a
script prints the seven lines without pytest.
"""

import math

import numpy as np

from nlse_lab.config import reference_config
from nlse_lab.core_field import WaveField, make_grid, mass, sup_distance
from nlse_lab.experiments import (
    convergence_study,
    l1_threshold_gaussian,
    overlap_mismatch,
    probe_ansatz,
    soliton_scattering_scan,
    validate_ansatz_residual,
)
from nlse_lab.fresnel import F_INF, F_ZERO, fresnel_cumulative
from nlse_lab.nlse import ForcingProfile, analytic_soliton, integrate
from nlse_lab.scattering import zs_discrete_spectrum

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:
    ACCEPTANCE_LINES = []

SQRT_PI = math.sqrt(math.pi)
EPS_LIST = [0.2, 0.14, 0.1, 0.07, 0.05]

# dense-eigensolve oracle values for A sech(x), frozen (see test_scattering)
SECH_ORACLE = {
    0.4: [],
    0.6: [0.1j],
    1.0: [0.5j],
    1.6: [1.1j, 0.1j],
    2.0: [1.5j, 0.5j],
}


def _report(n, ok, detail):
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def check_1():
    e_inf = abs(fresnel_cumulative(np.inf) - SQRT_PI * (1 + 1j))
    e_zero = abs(fresnel_cumulative(0.0) - SQRT_PI * (1 + 1j) / 2)
    t = 10.0
    e_tail = abs(fresnel_cumulative(t) - (F_INF + np.exp(0.5j * t * t) / (1j * t)))
    ok = e_inf <= 1e-10 and e_zero <= 1e-10 and e_tail <= 2e-3 and F_ZERO == 0.5 * F_INF
    return _report(1, ok, f"|F(inf)-ref|={e_inf:.1e} |F(0)-ref|={e_zero:.1e} "
                          f"tail error at t1=10: {e_tail:.2e}")


def check_2():
    grid = make_grid(1024, 40.0)
    u0 = analytic_soliton(grid, 1.0)
    exact = analytic_soliton(grid, 1.0, t2=1.0)
    traj = integrate(u0, 0.0, 1.0, 1e-3, diagnostics=True)
    err = sup_distance(traj.final, exact)
    m = traj.diagnostics["mass"]
    drift = abs(m[-1] - m[0]) / m[0]
    coarse = sup_distance(integrate(u0, 0.0, 1.0, 2e-3).final, exact)
    factor = coarse / err
    ok = err <= 1e-6 and drift <= 1e-8 and 3.0 <= factor <= 5.0
    return _report(2, ok, f"sup error {err:.2e}, mass drift {drift:.1e}, "
                          f"Strang factor {factor:.2f}")


def check_3():
    base = reference_config()
    on = convergence_study(EPS_LIST, base, 0.3)
    off = convergence_study(EPS_LIST, base, 0.3, connection=False)
    lo, hi = on.slope_interval
    slope_ok = 0.6 <= on.slope <= 1.4
    gaps = {e: b / a for e, a, b in zip(on.epsilons, on.relative_errors, off.relative_errors)
            if e <= 0.1 + 1e-12}
    gap_ok = all(g >= 5.0 for g in gaps.values())
    errs = " ".join(f"{e:g}:{r:.4f}" for e, r in zip(on.epsilons, on.relative_errors))
    return _report(3, slope_ok and gap_ok,
                   f"slope p={on.slope:.3f} (95% {lo:.2f}..{hi:.2f}, band [0.6, 1.4]) "
                   f"{'ok' if slope_ok else 'OUT OF BAND'}; min ablation gap "
                   f"{min(gaps.values()):.1f}x {'ok' if gap_ok else 'TOO SMALL'}; "
                   f"errors {errs}")


def check_4():
    cfg = reference_config()
    d = [overlap_mismatch(e, grid=cfg.grid, forcing=cfg.forcing) for e in (0.2, 0.1, 0.05)]
    ok = d[0] > d[1] > d[2]
    return _report(4, ok, "overlap mismatch at t1=-eps^-1/2: "
                          + ", ".join(f"{v:.4f}" for v in d))


def check_5():
    grid = make_grid(1024, 50.0)
    worst, counts, ok = 0.0, [], True
    for amp, ref in SECH_ORACLE.items():
        out = zs_discrete_spectrum(WaveField(grid, amp / np.cosh(grid.x)))
        counts.append(out.soliton_count)
        analytic = [1j * (amp + 0.5 - k) for k in range(1, int(math.floor(amp + 0.5)) + 1)]
        if out.soliton_count != len(ref) or len(ref) != len(analytic):
            ok = False
            continue
        if ref:
            worst = max(worst, float(np.max(np.abs(np.array(out.eigenvalues) - np.array(ref)))),
                        float(np.max(np.abs(np.array(out.eigenvalues) - np.array(analytic)))))
    ok = ok and counts == [0, 1, 1, 2, 2] and worst <= 1e-6
    return _report(5, ok, f"counts {counts}, worst eigenvalue error {worst:.1e}")


def check_6():
    cfg = reference_config(epsilon=0.05)
    amps = list(np.round(np.arange(0.2, 2.01, 0.2), 10))
    rep = soliton_scattering_scan(amps, cfg, full_pde=True)
    a_star = rep.thresholds[0] if rep.thresholds else math.nan
    a_l1 = l1_threshold_gaussian(cfg.forcing.width)
    rel = abs(a_star - a_l1) / a_l1
    first = [r for r in rep.rows if r.n_post > 0]
    jump_ok = bool(first) and rep.rows[0].n_post == 0 and first[0].n_post == 1
    bad = rep.stable_disagreements()
    unstable = [r.amplitude for r in rep.rows if r.flag == "UNSTABLE"]
    ok = jump_ok and rel <= 0.15 and not bad
    return _report(6, ok, f"a*={a_star:.4f} vs L1 criterion {a_l1:.4f} ({100 * rel:.1f}%); "
                          f"stable full-PDE disagreements {bad}; UNSTABLE {unstable}; "
                          f"other thresholds {[round(t, 4) for t in rep.thresholds[1:]]}")


def check_7():
    grid = make_grid(1024, 40.0)
    f = ForcingProfile(amplitude=0.5)
    pre = [validate_ansatz_residual("pre", e, -0.3, grid=grid, forcing=f) for e in (0.1, 0.05)]
    pre_decay = pre[1] / pre[0]
    onset_pre = [probe_ansatz("pre", e, -2 * e, grid=grid, forcing=f).ratio for e in (0.1, 0.05)]
    inner0 = [validate_ansatz_residual("inner", e, 0.0, grid=grid, forcing=f)
              for e in (0.1, 0.05, 0.025)]
    onset_inner = [probe_ansatz("inner", e, 1.0 / e, grid=grid, forcing=f).ratio
                   for e in (0.1, 0.05)]
    within = lambda r: 0.1 <= r <= 10.0  # noqa: E731
    ok = (pre_decay <= 0.5 and all(map(within, onset_pre))
          and max(inner0) <= inner0[0] and all(map(within, onset_inner)))
    return _report(7, ok, f"pre decay {pre_decay:.3f}; pre onset ratios "
                          f"{[round(r, 2) for r in onset_pre]}; inner(t1=0) "
                          f"{[round(r, 3) for r in inner0]}; inner onset ratios "
                          f"{[round(r, 2) for r in onset_inner]}")


def test_acceptance_1_fresnel_limits():
    assert check_1()


def test_acceptance_2_solver_ground_truth():
    assert check_2()


def test_acceptance_3_connection_convergence():
    assert check_3()


def test_acceptance_4_overlap_matching():
    assert check_4()


def test_acceptance_5_soliton_counting():
    assert check_5()


def test_acceptance_6_scattering_on_resonance():
    assert check_6()


def test_acceptance_7_validity_windows():
    assert check_7()


if __name__ == "__main__":
    for check in (check_1, check_2, check_3, check_4, check_5, check_6, check_7):
        check()
