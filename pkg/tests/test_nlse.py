import math

import numpy as np
import pytest

from nlse_lab.core_field import WaveField, energy, make_grid, mass, sup_distance
from nlse_lab.fresnel import fresnel_cumulative
from nlse_lab.nlse import (
    BlowUpError,
    ConfigError,
    ForcingProfile,
    InitialCondition,
    SimulationConfig,
    SweepPhase,
    analytic_soliton,
    evolve,
    integrate,
    mass_balance_residual,
    max_dt2,
    nlse_rhs,
    pde_residual,
    trajectory_from_fields,
)

GRID = make_grid(1024, 40.0)


def test_sweep_phase():
    p = SweepPhase(0.1)
    assert p.dS(0.0) == 0.0
    assert p.theta(0.3) == p.theta(-0.3)
    assert p.theta(0.3) == pytest.approx(0.09 / 0.02)


def test_forcing_closed_forms():
    g = make_grid(256, 40.0)
    f = ForcingProfile("gaussian", 0.7, 2.0, 1.0).evaluate(g)
    assert np.allclose(f, 0.7 * np.exp(-((g.x - 1.0) / 2.0) ** 2))
    f = ForcingProfile("sech", 0.7, 1.0, 0.0).evaluate(g, check_edges=False)
    assert np.allclose(f, 0.7 / np.cosh(g.x))


def test_forcing_edge_invariant():
    with pytest.raises(ValueError):
        ForcingProfile("gaussian", 1.0, 8.0).evaluate(GRID)
    with pytest.raises(ValueError):
        ForcingProfile("gaussian", 1.0, -1.0)


def test_analytic_soliton_peak_and_mass():
    u = analytic_soliton(GRID, 1.0)
    assert np.max(np.abs(u.values)) == pytest.approx(math.sqrt(2))
    for b, x0, phi in [(0.0, 0.0, 0.0), (0.5, -2.0, 1.0), (-1.0, 3.0, 2.5)]:
        assert mass(analytic_soliton(GRID, 1.2, b, x0, phi)) == pytest.approx(4 * 1.2, abs=1e-8)


def test_analytic_soliton_solves_equation():
    # substitution: finite time difference of the closed form against i(U_xx + |U|^2 U)
    a, b = 1.5, 0.4
    h = 1e-5
    up = analytic_soliton(GRID, a, b, 0.0, 0.3, 0.1 + h).values
    um = analytic_soliton(GRID, a, b, 0.0, 0.3, 0.1 - h).values
    u = analytic_soliton(GRID, a, b, 0.0, 0.3, 0.1)
    ut = (up - um) / (2 * h)
    assert np.max(np.abs(ut - nlse_rhs(u.values, GRID))) < 1e-8


def test_soliton_pde_residual():
    a = 1.5
    h = 1e-5
    times = [0.2 - h, 0.2, 0.2 + h]
    traj = trajectory_from_fields([analytic_soliton(GRID, a, t2=t) for t in times], times)
    assert pde_residual(traj, 1) <= 1e-8


def test_zero_residual():
    z = WaveField.zeros(GRID)
    traj = trajectory_from_fields([z, z, z], [0.0, 0.1, 0.2])
    assert pde_residual(traj, 1) == 0.0
    with pytest.raises(IndexError):
        pde_residual(traj, 0)


def test_soliton_evolution():
    u0 = analytic_soliton(GRID, 1.0)
    traj = integrate(u0, 0.0, 1.0, 1e-3, diagnostics=True)
    assert sup_distance(traj.final, analytic_soliton(GRID, 1.0, t2=1.0)) <= 1e-6
    m = traj.diagnostics["mass"]
    e = traj.diagnostics["energy"]
    assert abs(m[-1] - m[0]) / m[0] <= 1e-8
    assert abs(e[-1] - e[0]) / abs(e[0]) <= 1e-6


def test_moving_soliton_evolution():
    u0 = analytic_soliton(GRID, 1.2, 0.5, -2.0, 0.3)
    traj = integrate(u0, 0.0, 1.0, 1e-3)
    assert sup_distance(traj.final, analytic_soliton(GRID, 1.2, 0.5, -2.0, 0.3, 1.0)) <= 5e-6


def test_strang_order():
    u0 = analytic_soliton(GRID, 1.0)
    exact = analytic_soliton(GRID, 1.0, t2=1.0)
    e1 = sup_distance(integrate(u0, 0.0, 1.0, 2e-3).final, exact)
    e2 = sup_distance(integrate(u0, 0.0, 1.0, 1e-3).final, exact)
    assert 3.0 <= e1 / e2 <= 5.0


def test_strang_order_driven():
    cfg = SimulationConfig(epsilon=0.1, initial=InitialCondition("soliton", a=1.2))
    base = cfg.step
    ref = evolve(cfg.replace(dt2=base / 16)).final
    e1 = sup_distance(evolve(cfg.replace(dt2=base / 2)).final, ref)
    e2 = sup_distance(evolve(cfg.replace(dt2=base / 4)).final, ref)
    assert 3.0 <= e1 / e2 <= 5.0


def test_time_reversal():
    g = make_grid(512, 40.0)
    u0 = WaveField(g, 1.3 * np.exp(-g.x ** 2) * np.exp(0.5j * g.x))
    fwd = integrate(u0, 0.0, 0.7, 1e-3).final
    back = integrate(fwd, 0.7, 0.0, 1e-3).final
    assert sup_distance(back, u0) <= 1e-8


def test_time_reversal_driven():
    g = make_grid(512, 40.0)
    f = ForcingProfile().evaluate(g)
    u0 = WaveField.zeros(g)
    fwd = integrate(u0, -0.3, 0.2, 5e-4, epsilon=0.1, forcing=f).final
    back = integrate(fwd, 0.2, -0.3, 5e-4, epsilon=0.1, forcing=f).final
    assert sup_distance(back, u0) <= 1e-8


def test_unforced_mass_conservation_any_ic():
    g = make_grid(512, 40.0)
    rng = np.random.default_rng(1)
    u0 = WaveField(g, np.exp(-(g.x / 2) ** 2) * (1 + 0.3 * rng.standard_normal(512)))
    traj = integrate(u0, 0.0, 0.5, 1e-3, diagnostics=True)
    m = traj.diagnostics["mass"]
    assert abs(m[-1] - m[0]) / m[0] <= 1e-8


def test_linear_forcing_exact():
    # spatially constant f with the cubic term off: only the k = 0 mode is
    # driven, so U(t) = -i f (int e^{i theta}) / eps holds to round-off
    g = make_grid(64, 10.0)
    eps = 0.1
    f = np.full(64, 0.5, dtype=complex)
    u = integrate(WaveField.zeros(g), -0.5, 0.4, 0.01, epsilon=eps, forcing=f,
                  nonlinearity=0.0).final
    exact = -1j * f * (fresnel_cumulative(4.0) - fresnel_cumulative(-5.0))
    assert np.max(np.abs(u.values - exact)) <= 1e-10


def test_mass_balance_unforced():
    u0 = analytic_soliton(GRID, 1.0)
    traj = integrate(u0, 0.0, 0.01, 1e-3, snapshot_every=1)
    assert max(mass_balance_residual(traj, i) for i in range(1, len(traj) - 1)) <= 1e-8


def _driven_balance(dt):
    cfg = SimulationConfig(epsilon=0.1, dt2=dt, snapshot_every=1, diagnostics=False)
    traj = evolve(cfg)
    return max(mass_balance_residual(traj, i) for i in range(1, len(traj) - 1))


def test_mass_balance_driven_second_order():
    base = max_dt2(0.1, -0.5, 0.5)
    r1 = _driven_balance(base / 2)
    r2 = _driven_balance(base / 4)
    assert 3.0 <= r1 / r2 <= 5.0


def test_config_invariants():
    with pytest.raises(ConfigError) as exc:
        SimulationConfig(epsilon=0.1, dt2=0.05)
    assert exc.value.key == "dt2"
    with pytest.raises(ConfigError):
        SimulationConfig(t2_start=0.1)
    with pytest.raises(ConfigError):
        SimulationConfig(epsilon=1.5)
    assert SimulationConfig().step <= max_dt2(0.1, -0.5, 0.5)


def test_blow_up_keeps_last_good():
    g = make_grid(128, 20.0)
    f = ForcingProfile(amplitude=1e6).evaluate(g)
    with pytest.raises(BlowUpError) as exc:
        integrate(WaveField.zeros(g), -0.5, 0.5, 0.01, epsilon=0.1, forcing=f,
                  snapshot_every=1)
    assert len(exc.value.last_good) >= 1
    assert np.all(np.isfinite(exc.value.last_good.values))


def test_trajectory_is_immutable():
    traj = integrate(analytic_soliton(GRID, 1.0), 0.0, 0.01, 1e-3)
    with pytest.raises(ValueError):
        traj.values[0, 0] = 0.0
    assert np.all(np.diff(traj.times) > 0)


def test_output_times_hit_exactly():
    traj = integrate(analytic_soliton(GRID, 1.0), 0.0, 0.1, 0.03, output_times=[0.05])
    assert list(traj.times) == [0.0, 0.05, 0.1]
    assert sup_distance(traj.at(0.05), analytic_soliton(GRID, 1.0, t2=0.05)) < 1e-4


def test_energy_unforced_drift():
    u0 = analytic_soliton(GRID, 1.2, 0.3)
    traj = integrate(u0, 0.0, 0.5, 1e-3)
    e0, e1 = energy(traj.snapshot(0)), energy(traj.final)
    assert abs(e1 - e0) / abs(e0) <= 1e-6
