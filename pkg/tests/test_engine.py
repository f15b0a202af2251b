import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ottoforge.engine import (
    EngineSpec,
    adiabatic_map,
    build_hamiltonians,
    efficiency_vs_time,
    ideal_efficiency,
    initial_state,
    run_cycle,
    run_engine,
    transverse_efficiency_formula,
)
from ottoforge.operators import (
    identity,
    kron,
    magnetization,
    pauli,
    thermal_state,
    trace_distance,
)

# Field strengths and bath temperatures of the three reference setups
# (small, medium, large fields at fixed omega1/omega2 and temp ratios).
PANEL_A = dict(omega1=8.0, omega2=6.0, temp_hot=1.0, temp_cold=0.25)
PANEL_B = dict(omega1=16.0, omega2=12.0, temp_hot=2.0, temp_cold=0.5)
PANEL_C = dict(omega1=24.0, omega2=18.0, temp_hot=3.0, temp_cold=0.75)


def test_spec_validation():
    with pytest.raises(ValueError):
        EngineSpec(6.0, 8.0, 1.0, 0.25)
    with pytest.raises(ValueError):
        EngineSpec(8.0, 6.0, 0.25, 1.0)
    with pytest.raises(ValueError):
        EngineSpec(8.0, 6.0, 1.0, 0.25, variant="aux", aux_n=1.2)
    with pytest.raises(ValueError):
        EngineSpec(8.0, 6.0, 1.0, 0.25, variant="transverse")
    with pytest.raises(ValueError):
        EngineSpec(8.0, 6.0, 1.0, 0.25, initial_temperature=1.5)
    with pytest.raises(ValueError):
        EngineSpec(8.0, 6.0, 1.0, 0.25, variant="squeezed")


def test_build_hamiltonians_baseline():
    pair = build_hamiltonians(EngineSpec(**PANEL_A))
    assert np.allclose(pair.h1, np.diag([4.0, -4.0]))
    assert np.allclose(pair.h2, np.diag([3.0, -3.0]))


def test_build_hamiltonians_transverse_limit():
    spec = EngineSpec(**PANEL_A, variant="transverse", transverse_lambda=1e9)
    pair = build_hamiltonians(spec)
    assert np.abs(pair.h1 - 0.5 * 8.0 * pauli("z")).max() < 1e-7


def test_build_hamiltonians_aux_block_eigenvalues():
    spec = EngineSpec(**PANEL_A, variant="aux", aux_n=1.0)
    pair = build_hamiltonians(spec)
    omega = 8.0
    expected = sorted([-omega * math.sqrt(2.0), -omega, omega, omega * math.sqrt(2.0)])
    assert np.allclose(np.linalg.eigvalsh(pair.h1), expected, atol=1e-10)


def test_hamiltonian_pair_invariants_all_variants():
    specs = [
        EngineSpec(**PANEL_A),
        EngineSpec(**PANEL_A, variant="transverse", transverse_lambda=4.0),
        EngineSpec(**PANEL_A, variant="aux", aux_n=0.7),
    ]
    for spec in specs:
        pair = build_hamiltonians(spec)
        comm = pair.h1 @ pair.h2 - pair.h2 @ pair.h1
        assert np.abs(comm).max() < 1e-10
        assert np.abs(pair.h1 - (spec.omega1 / spec.omega2) * pair.h2).max() < 1e-10


def test_adiabatic_map_is_identity_on_populations():
    spec = EngineSpec(**PANEL_A)
    pair = build_hamiltonians(spec)
    rho = thermal_state(pair.h1, 1.0)
    out = adiabatic_map(rho, pair.h1, pair.h2)
    assert np.array_equal(out, rho)
    assert magnetization(out) == pytest.approx(magnetization(rho), abs=1e-12)
    back = adiabatic_map(out, pair.h2, pair.h1)
    assert np.array_equal(back, rho)


def test_adiabatic_work_matches_gibbs_closed_form():
    # W1 = Tr[(H1 - H2) rho] = (omega1 - omega2) * S for the thermal state,
    # with S = -(1/2) tanh(omega1 / (2 T)).
    omega1, omega2, temp = 8.0, 6.0, 1.0
    pair = build_hamiltonians(EngineSpec(omega1, omega2, 1.0, 0.25))
    rho = thermal_state(pair.h1, temp)
    w1 = np.trace((pair.h1 - pair.h2) @ rho).real
    expected = (omega1 - omega2) * (-0.5 * math.tanh(omega1 / (2.0 * temp)))
    assert w1 == pytest.approx(expected, abs=1e-12)


def test_adiabatic_map_rejects_coherent_states():
    pair = build_hamiltonians(EngineSpec(**PANEL_A))
    plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    with pytest.raises(ValueError):
        adiabatic_map(plus, pair.h1, pair.h2)


def test_run_cycle_reaches_ideal_efficiency_at_long_strokes():
    spec = EngineSpec(**PANEL_A, stroke_time=50.0)
    record = run_cycle(initial_state(spec), spec)
    assert record.eta == pytest.approx(0.25, abs=1e-4)
    spec = EngineSpec(**PANEL_C, stroke_time=50.0)
    record = run_cycle(initial_state(spec), spec)
    assert record.eta == pytest.approx(0.25, abs=1e-4)


def test_run_cycle_first_cycle_matches_rate_equation():
    # Starting from cold equilibrium the first-cycle efficiency has the
    # closed form eta_s * (1 - exp(-Gamma_c * t)) with
    # Gamma_c = lam * omega2 * (1 + 2 n(omega2/T_c)).
    spec = EngineSpec(**PANEL_C, stroke_time=1.0)
    record = run_cycle(initial_state(spec), spec)
    n = 1.0 / math.expm1(spec.omega2 / spec.temp_cold)
    gamma_c = spec.coupling_cold * spec.omega2 * (1.0 + 2.0 * n)
    assert record.eta == pytest.approx(0.25 * (1.0 - math.exp(-gamma_c)), abs=1e-9)


def test_run_cycle_zero_stroke_time_is_flagged():
    spec = EngineSpec(**PANEL_A, stroke_time=0.0)
    record = run_cycle(initial_state(spec), spec)
    assert record.q1 == 0.0
    assert not record.is_engine
    assert math.isnan(record.eta)


def test_first_law_every_variant():
    specs = [
        EngineSpec(**PANEL_A, stroke_time=1.0),
        EngineSpec(**PANEL_C, stroke_time=0.7, initial_temperature=2.15),
        EngineSpec(**PANEL_A, stroke_time=1.3, variant="transverse", transverse_lambda=4.0),
        EngineSpec(8.0, 6.0, 0.5, 0.25, stroke_time=0.9, variant="aux", aux_n=1.0),
        EngineSpec(8.0, 6.0, 0.5, 0.25, stroke_time=2.0, variant="aux", aux_n=0.5),
    ]
    for spec in specs:
        record = run_cycle(initial_state(spec), spec)
        assert record.first_law_residual < 1e-8


def test_magnetization_form_of_efficiency_matches_ledger():
    for kwargs, t in ((PANEL_A, 0.8), (PANEL_B, 1.0), (PANEL_C, 2.5)):
        spec = EngineSpec(**kwargs, stroke_time=t)
        record = run_cycle(initial_state(spec), spec)
        eta_s = 1.0 - spec.omega2 / spec.omega1
        via_mag = (record.s2 - record.s3) / (record.s2 - record.s1) * eta_s
        assert via_mag == pytest.approx(record.eta, abs=1e-8)


def test_magnetization_constant_across_adiabatic_strokes():
    spec = EngineSpec(**PANEL_A, stroke_time=1.0)
    record = run_cycle(initial_state(spec), spec)
    # end state is the cold-stroke output carried through the ramp
    assert magnetization(record.rho_end) == pytest.approx(record.s3, abs=1e-10)


def test_run_engine_chains_cycles():
    spec = EngineSpec(**PANEL_A, stroke_time=1.0)
    run = run_engine(spec, 5, stop_at_limit=False)
    assert [rec.cycle_index for rec in run.cycles] == [1, 2, 3, 4, 5]
    for prev, nxt in zip(run.cycles, run.cycles[1:]):
        assert np.array_equal(nxt.rho_start, prev.rho_end)


def test_limit_cycle_ordering_across_field_strengths():
    indices = []
    for kwargs in (PANEL_A, PANEL_B, PANEL_C):
        run = run_engine(EngineSpec(**kwargs, stroke_time=1.0), 100)
        indices.append(run.limit_cycle_index)
    assert all(i is not None for i in indices)
    assert indices[0] > indices[1] > indices[2]


def test_limit_cycle_restart_reconverges_immediately():
    spec = EngineSpec(**PANEL_A, stroke_time=1.0)
    first = run_engine(spec, 100)
    assert first.limit_cycle_index is not None
    limit_state = first.cycles[-1].rho_end
    ctx_spec = spec
    from ottoforge.engine import _context

    ctx = _context(ctx_spec, 0.0, 0.0)
    rec1 = ctx.run_cycle(limit_state, spec.stroke_time, spec.dt, 1)
    rec2 = ctx.run_cycle(rec1.rho_end, spec.stroke_time, spec.dt, 2)
    assert trace_distance(rec2.rho_start, rec1.rho_start) <= 1e-6
    assert abs(rec2.eta - rec1.eta) <= 1e-6


def test_long_strokes_make_cycles_identical_from_second_on():
    spec = EngineSpec(**PANEL_A, stroke_time=50.0)
    run = run_engine(spec, 4, stop_at_limit=False)
    for rec in run.cycles[1:]:
        assert trace_distance(rec.rho_start, run.cycles[1].rho_start) < 1e-10
    assert run.limit_cycle_index == 2


def test_limit_cycle_state_is_fixed_point():
    spec = EngineSpec(**PANEL_C, stroke_time=1.0)
    run = run_engine(spec, 100)
    last = run.cycles[-1]
    nxt = run_cycle(last.rho_end, spec)
    assert trace_distance(nxt.rho_end, last.rho_end) <= 1e-6


def test_ideal_efficiency_values():
    assert ideal_efficiency(EngineSpec(8.0, 6.0, 1.0, 0.25)) == 0.25
    assert ideal_efficiency(EngineSpec(8.0, 7.9999, 1.0, 0.25)) == pytest.approx(0.0, abs=1e-4)
    assert ideal_efficiency(
        EngineSpec(**PANEL_A, variant="transverse", transverse_lambda=4.0)
    ) == 0.25


def test_transverse_formula_reproduces_ideal_from_simulation():
    spec = EngineSpec(**PANEL_A, stroke_time=50.0, variant="transverse", transverse_lambda=4.0)
    record = run_cycle(initial_state(spec), spec)
    eta = transverse_efficiency_formula(
        record.s1, record.s2, record.s_tilde1, record.s_tilde2, spec
    )
    assert eta == pytest.approx(0.25, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(
    s1=st.floats(-0.5, 0.5),
    s2=st.floats(-0.5, 0.5),
    st1=st.floats(-0.5, 0.5),
    st2=st.floats(-0.5, 0.5),
)
def test_transverse_formula_algebraic_identity(s1, s2, st1, st2):
    # With xi_j = omega_j / Lambda every term scales with omega_j, so the
    # formula collapses to 1 - omega2/omega1 for any magnetizations.
    spec = EngineSpec(**PANEL_A, variant="transverse", transverse_lambda=4.0)
    denom = spec.omega1 * (s2 - s1) + 2.0 * (spec.omega1 / 4.0) * (st2 - st1)
    if abs(denom) < 1e-9:
        return
    eta = transverse_efficiency_formula(s1, s2, st1, st2, spec)
    assert eta == pytest.approx(0.25, abs=1e-6)


def test_transverse_formula_reduces_to_baseline_when_st_equal():
    spec = EngineSpec(**PANEL_A, variant="transverse", transverse_lambda=4.0)
    eta = transverse_efficiency_formula(-0.4, -0.1, 0.2, 0.2, spec)
    assert eta == pytest.approx(0.25, abs=1e-12)


def test_transverse_efficiency_monotone_in_field_strength():
    base = EngineSpec(**PANEL_A, stroke_time=1.0)
    eta_nofield = run_cycle(initial_state(base), base).eta
    etas = []
    for lam in (2.0, 4.0, 8.0, 16.0, 32.0):
        spec = EngineSpec(**PANEL_A, stroke_time=1.0, variant="transverse", transverse_lambda=lam)
        etas.append(run_cycle(initial_state(spec), spec).eta)
    assert all(a < b for a, b in zip(etas, etas[1:]))
    assert etas[-1] < eta_nofield
    assert abs(etas[-1] - eta_nofield) < 1e-3


def test_aux_with_zero_coupling_reproduces_baseline():
    aux = EngineSpec(8.0, 6.0, 0.5, 0.25, stroke_time=1.0, variant="aux", aux_n=0.0)
    base = EngineSpec(8.0, 6.0, 0.5, 0.25, stroke_time=1.0)
    eta_aux = run_cycle(initial_state(aux), aux).eta
    eta_base = run_cycle(initial_state(base), base).eta
    assert eta_aux == pytest.approx(eta_base, abs=1e-8)


def test_aux_initial_state_is_composite_thermal():
    spec = EngineSpec(8.0, 6.0, 0.5, 0.25, variant="aux", aux_n=1.0)
    rho = initial_state(spec)
    assert rho.shape == (4, 4)
    pair = build_hamiltonians(spec)
    expected = thermal_state(pair.h2, spec.temp_cold)
    assert np.abs(rho - expected).max() < 1e-12


def test_efficiency_vs_time_converges_and_stays_below_ideal():
    spec = EngineSpec(**PANEL_C)
    grid = [0.5, 1.0, 2.0, 4.0, 8.0]
    rows = efficiency_vs_time(spec, grid, cycles=1)
    etas = [rec.eta for _, rec in rows]
    assert all(a < b for a, b in zip(etas, etas[1:]))
    assert all(eta < 0.25 for eta in etas)
    assert etas[-1] == pytest.approx(0.25, abs=1e-4)


def test_efficiency_vs_time_second_cycle_selector():
    spec = EngineSpec(**PANEL_C, initial_temperature=2.15)
    rows = efficiency_vs_time(spec, [1.0], cycles=2)
    assert [rec.cycle_index for _, rec in rows] == [1, 2]
    assert rows[1][1].eta > 0.25


def test_disorder_kwargs_modify_rates():
    spec = EngineSpec(**PANEL_C, stroke_time=1.0)
    rho0 = initial_state(spec)
    clean = run_cycle(rho0, spec)
    slow = run_cycle(rho0, spec, disorder_hot=-0.5, disorder_cold=-0.5)
    fast = run_cycle(rho0, spec, disorder_hot=0.5, disorder_cold=0.5)
    assert slow.eta < clean.eta < fast.eta
