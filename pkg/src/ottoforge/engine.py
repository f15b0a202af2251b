"""Four-stroke quantum Otto cycle orchestration for all engine variants.

A cycle is: hot isochore at field omega1, adiabatic ramp omega1 -> omega2,
cold isochore at omega2, adiabatic ramp back.  Both ramp endpoints commute
in every variant (the Hamiltonians scale linearly in omega), so the
adiabatic strokes carry populations over verbatim and never need an
explicit unitary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lindblad import BathSpec, _check_state, _rk4_step_matrix, _split_steps, build_generator
from .operators import (
    check_density_matrix,
    commutator,
    identity,
    kron,
    magnetization,
    partial_trace_aux,
    pauli,
    thermal_state,
    trace_distance,
    transverse_magnetization,
)

VARIANTS = ("baseline", "transverse", "aux")

# Joint limit-cycle criterion: consecutive cycle starts closer than this in
# trace distance AND consecutive efficiencies closer than this.
LIMIT_CYCLE_TOL = 1e-6


@dataclass(frozen=True)
class EngineSpec:
    """Complete engine configuration in natural units.

    omega1 > omega2 are the hot/cold stroke field strengths, temp_hot >
    temp_cold the bath temperatures.  stroke_time is the common duration of
    both truncated isochores.  The optional initial_temperature prepares the
    first cycle's state at a temperature between the baths.  Variants:
    'baseline' (pure sigma_z field), 'transverse' (adds (omega/Lambda) sigma_x,
    Lambda = transverse_lambda), 'aux' (adds an auxiliary qubit coupled via
    n * omega * sigma_x x sigma_x, n = aux_n in [0, 1]).
    """

    omega1: float
    omega2: float
    temp_hot: float
    temp_cold: float
    coupling_hot: float = 0.1
    coupling_cold: float = 0.1
    stroke_time: float = 1.0
    variant: str = "baseline"
    transverse_lambda: float | None = None
    aux_n: float | None = None
    initial_temperature: float | None = None
    dt: float = 1e-3
    dephasing: bool = True

    def __post_init__(self):
        if not self.omega1 > self.omega2 > 0:
            raise ValueError(
                f"need omega1 > omega2 > 0, got omega1 = {self.omega1}, omega2 = {self.omega2}"
            )
        if not self.temp_hot > self.temp_cold > 0:
            raise ValueError(
                f"need temp_hot > temp_cold > 0, got {self.temp_hot}, {self.temp_cold}"
            )
        if self.coupling_hot <= 0 or self.coupling_cold <= 0:
            raise ValueError("bath couplings must be positive")
        if self.stroke_time < 0:
            raise ValueError(f"stroke_time must be non-negative, got {self.stroke_time}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "transverse":
            if self.transverse_lambda is None or self.transverse_lambda <= 0:
                raise ValueError("transverse variant requires transverse_lambda > 0")
        if self.variant == "aux":
            if self.aux_n is None or not 0.0 <= self.aux_n <= 1.0:
                raise ValueError(
                    f"aux variant requires 0 <= n <= 1.0, got {self.aux_n}"
                )
        if self.initial_temperature is not None:
            if not self.temp_hot > self.initial_temperature >= self.temp_cold:
                raise ValueError(
                    "initial_temperature must satisfy temp_hot > T0 >= temp_cold, "
                    f"got {self.initial_temperature}"
                )
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def initial_temp(self) -> float:
        return self.temp_cold if self.initial_temperature is None else self.initial_temperature

    @property
    def dim(self) -> int:
        return 4 if self.variant == "aux" else 2


@dataclass(frozen=True)
class HamiltonianPair:
    """Endpoint Hamiltonians of the adiabatic ramp; h1 = (omega1/omega2) h2."""

    h1: np.ndarray
    h2: np.ndarray


def _variant_hamiltonian(spec: EngineSpec, omega: float) -> np.ndarray:
    sz = pauli("z")
    if spec.variant == "baseline":
        return 0.5 * omega * sz
    if spec.variant == "transverse":
        return 0.5 * omega * sz + (omega / spec.transverse_lambda) * pauli("x")
    two = identity(2)
    return 0.5 * omega * (kron(sz, two) + kron(two, sz)) + spec.aux_n * omega * kron(
        pauli("x"), pauli("x")
    )


def build_hamiltonians(spec: EngineSpec) -> HamiltonianPair:
    """Endpoint Hamiltonians for the spec's variant, with consistency checks."""
    h1 = _variant_hamiltonian(spec, spec.omega1)
    h2 = _variant_hamiltonian(spec, spec.omega2)
    scale = max(1.0, float(np.abs(h1).max()))
    if np.abs(commutator(h1, h2)).max() > 1e-10 * scale:
        raise ValueError("endpoint Hamiltonians do not commute; variant construction is broken")
    if np.abs(h1 - (spec.omega1 / spec.omega2) * h2).max() > 1e-10 * scale:
        raise ValueError("endpoint Hamiltonians do not scale linearly in omega")
    return HamiltonianPair(h1, h2)


def coupling_operator(spec: EngineSpec) -> np.ndarray:
    """Bath coupling: sigma_x on the working qubit (times identity for aux)."""
    if spec.variant == "aux":
        return kron(pauli("x"), identity(2))
    return pauli("x")


def adiabatic_map(rho: np.ndarray, h_from: np.ndarray, h_to: np.ndarray) -> np.ndarray:
    """Carry a state across an adiabatic ramp between commuting Hamiltonians.

    The state must commute with the endpoint Hamiltonians (it is diagonal in
    a shared eigenbasis); populations are then preserved exactly and the
    matrix itself is unchanged.  Only the Hamiltonian label changes, which
    is what makes the ramp do work.
    """
    scale = max(1.0, float(np.abs(h_from).max()), float(np.abs(h_to).max()))
    if np.abs(commutator(h_from, h_to)).max() > 1e-10 * scale:
        raise ValueError("adiabatic endpoints do not commute")
    for h, label in ((h_from, "initial"), (h_to, "final")):
        dev = np.abs(commutator(rho, h)).max()
        if dev > 1e-8 * scale:
            raise ValueError(
                f"state does not commute with the {label} Hamiltonian "
                f"(max |[rho, H]| = {dev:.3e}); populations are not well defined"
            )
    return rho.copy()


@dataclass(frozen=True)
class CycleRecord:
    """Per-cycle thermodynamic ledger.

    Heats and works are energies in natural units; s1/s2/s3 are the working
    qubit's magnetizations at the start, after the hot stroke, and after the
    cold stroke.  eta = (w1 + w2)/q1 is NaN when q1 <= 0, in which case the
    record is flagged as not an engine.  energy_start/energy_end are
    Tr[H1 rho] at the cycle's endpoints (both at field omega1).
    """

    cycle_index: int
    q1: float
    w1: float
    q2: float
    w2: float
    s1: float
    s2: float
    s3: float
    eta: float
    is_engine: bool
    s_tilde1: float
    s_tilde2: float
    energy_start: float
    energy_end: float
    rho_start: np.ndarray
    rho_end: np.ndarray

    @property
    def work(self) -> float:
        return self.w1 + self.w2

    @property
    def first_law_residual(self) -> float:
        return abs(self.q1 + self.q2 - self.work - (self.energy_end - self.energy_start))


@dataclass(frozen=True)
class EngineRun:
    """Consecutive cycles of one engine, each starting from the last end state."""

    spec: EngineSpec
    cycles: list
    limit_cycle_index: int | None


class _CycleContext:
    """Generators, ledger operators and cached propagators for one engine.

    Everything here is independent of the stroke duration, so one context
    serves a whole time sweep; propagator powers are cached per duration.
    """

    def __init__(self, spec: EngineSpec, disorder_hot: float, disorder_cold: float):
        self.spec = spec
        pair = build_hamiltonians(spec)
        self.h1 = pair.h1
        self.h2 = pair.h2
        coupling = coupling_operator(spec)
        self.gen_hot = build_generator(
            pair.h1,
            coupling,
            BathSpec(spec.temp_hot, spec.coupling_hot, disorder_hot),
            include_zero_gap=spec.dephasing,
        )
        self.gen_cold = build_generator(
            pair.h2,
            coupling,
            BathSpec(spec.temp_cold, spec.coupling_cold, disorder_cold),
            include_zero_gap=spec.dephasing,
        )
        if spec.variant == "aux":
            # Heats/works are defined on the working qubit alone: reduced
            # states against the bare system Hamiltonians.
            self.ledger_h1 = 0.5 * spec.omega1 * pauli("z")
            self.ledger_h2 = 0.5 * spec.omega2 * pauli("z")
            self.reduce = partial_trace_aux
        else:
            self.ledger_h1 = pair.h1
            self.ledger_h2 = pair.h2
            self.reduce = lambda rho: rho
        self._propagators: dict[tuple[str, float, float], np.ndarray] = {}

    def _propagate(self, which: str, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
        gen = self.gen_hot if which == "hot" else self.gen_cold
        key = (which, t, dt)
        prop = self._propagators.get(key)
        if prop is None:
            n_steps, remainder = _split_steps(t, dt)
            prop = np.linalg.matrix_power(_rk4_step_matrix(gen.matrix, dt), n_steps)
            if remainder:
                prop = _rk4_step_matrix(gen.matrix, remainder) @ prop
            self._propagators[key] = prop
        out = (prop @ rho.reshape(-1)).reshape(rho.shape)
        _check_state(out, dt, t)
        return out

    def run_cycle(self, rho_start: np.ndarray, t_tilde: float, dt: float, cycle_index: int) -> CycleRecord:
        check_density_matrix(
            rho_start, herm_tol=1e-8, trace_tol=1e-8, psd_tol=1e-8, context="cycle start state"
        )
        rho_a = np.asarray(rho_start, dtype=complex)
        rho_b = self._propagate("hot", rho_a, t_tilde, dt)
        rho_c = adiabatic_map(rho_b, self.h1, self.h2)
        rho_d = self._propagate("cold", rho_c, t_tilde, dt)
        rho_e = adiabatic_map(rho_d, self.h2, self.h1)

        red_a = self.reduce(rho_a)
        red_b = self.reduce(rho_b)
        red_c = self.reduce(rho_c)
        red_d = self.reduce(rho_d)
        red_e = self.reduce(rho_e)

        def ledger(op, state):
            return float(np.trace(op @ state).real)

        q1 = ledger(self.ledger_h1, red_b - red_a)
        w1 = ledger(self.ledger_h1, red_b) - ledger(self.ledger_h2, red_c)
        q2 = ledger(self.ledger_h2, red_d - red_c)
        w2 = ledger(self.ledger_h2, red_d) - ledger(self.ledger_h1, red_e)
        is_engine = q1 > 0.0
        eta = (w1 + w2) / q1 if is_engine else math.nan

        return CycleRecord(
            cycle_index=cycle_index,
            q1=q1,
            w1=w1,
            q2=q2,
            w2=w2,
            s1=magnetization(rho_a),
            s2=magnetization(rho_b),
            s3=magnetization(rho_d),
            eta=eta,
            is_engine=is_engine,
            s_tilde1=transverse_magnetization(red_a),
            s_tilde2=transverse_magnetization(red_b),
            energy_start=ledger(self.ledger_h1, red_a),
            energy_end=ledger(self.ledger_h1, red_e),
            rho_start=rho_a.copy(),
            rho_end=rho_e,
        )


_CONTEXT_CACHE: dict[tuple, _CycleContext] = {}
_CONTEXT_CACHE_MAX = 128


def _context(spec: EngineSpec, disorder_hot: float, disorder_cold: float) -> _CycleContext:
    key = (replace(spec, stroke_time=0.0, dt=1e-3), disorder_hot, disorder_cold)
    ctx = _CONTEXT_CACHE.get(key)
    if ctx is None:
        ctx = _CycleContext(spec, disorder_hot, disorder_cold)
        if len(_CONTEXT_CACHE) >= _CONTEXT_CACHE_MAX:
            _CONTEXT_CACHE.pop(next(iter(_CONTEXT_CACHE)))
        _CONTEXT_CACHE[key] = ctx
    return ctx


def initial_state(spec: EngineSpec) -> np.ndarray:
    """Preparation state: thermal w.r.t. the low-field Hamiltonian at T0."""
    return thermal_state(build_hamiltonians(spec).h2, spec.initial_temp)


def run_cycle(
    rho_start: np.ndarray,
    spec: EngineSpec,
    *,
    disorder_hot: float = 0.0,
    disorder_cold: float = 0.0,
    cycle_index: int = 1,
) -> CycleRecord:
    """Run one four-stroke cycle from rho_start and return its ledger."""
    ctx = _context(spec, disorder_hot, disorder_cold)
    return ctx.run_cycle(rho_start, spec.stroke_time, spec.dt, cycle_index)


def run_engine(
    spec: EngineSpec,
    max_cycles: int,
    *,
    disorder_hot: float = 0.0,
    disorder_cold: float = 0.0,
    stop_at_limit: bool = True,
) -> EngineRun:
    """Iterate cycles, feeding each end state into the next start.

    The limit cycle is declared at the first cycle k >= 2 whose start state
    is within 1e-6 trace distance of the previous start AND whose efficiency
    differs by at most 1e-6 from the previous cycle's.  Without convergence
    limit_cycle_index is None.
    """
    if max_cycles < 1:
        raise ValueError(f"max_cycles must be at least 1, got {max_cycles}")
    ctx = _context(spec, disorder_hot, disorder_cold)
    rho = initial_state(spec)
    cycles: list[CycleRecord] = []
    limit_index: int | None = None
    for k in range(1, max_cycles + 1):
        record = ctx.run_cycle(rho, spec.stroke_time, spec.dt, k)
        cycles.append(record)
        if k >= 2 and limit_index is None:
            prev = cycles[-2]
            close_state = trace_distance(record.rho_start, prev.rho_start) <= LIMIT_CYCLE_TOL
            close_eta = abs(record.eta - prev.eta) <= LIMIT_CYCLE_TOL
            if close_state and close_eta:
                limit_index = k
                if stop_at_limit:
                    break
        rho = record.rho_end
    return EngineRun(spec, cycles, limit_index)


def ideal_efficiency(spec: EngineSpec) -> float:
    """Efficiency of the fully thermalizing engine.

    Baseline and transverse variants: exactly 1 - omega2/omega1 (the
    transverse field drops out when it scales with omega).  The auxiliary
    variant has no closed form and is evaluated by running one cycle with
    very long strokes from the cold thermal state.
    """
    if spec.variant in ("baseline", "transverse"):
        return 1.0 - spec.omega2 / spec.omega1
    long_spec = replace(spec, stroke_time=50.0, initial_temperature=None)
    return run_cycle(initial_state(long_spec), long_spec).eta


def transverse_efficiency_formula(
    s1: float, s2: float, s_tilde1: float, s_tilde2: float, spec: EngineSpec
) -> float:
    """Ideal-engine efficiency from longitudinal and transverse magnetizations.

    eta = 1 - [w2 (S2 - S1) + 2 xi2 (St2 - St1)] / [w1 (S2 - S1) + 2 xi1 (St2 - St1)]
    with xi_j = omega_j / Lambda; algebraically equal to 1 - omega2/omega1
    because every term scales with omega_j.
    """
    if spec.variant != "transverse":
        raise ValueError("formula applies to the transverse variant")
    xi1 = spec.omega1 / spec.transverse_lambda
    xi2 = spec.omega2 / spec.transverse_lambda
    ds = s2 - s1
    dst = s_tilde2 - s_tilde1
    denom = spec.omega1 * ds + 2.0 * xi1 * dst
    if denom == 0:
        raise ZeroDivisionError("degenerate magnetization differences")
    return 1.0 - (spec.omega2 * ds + 2.0 * xi2 * dst) / denom


def efficiency_vs_time(
    spec: EngineSpec,
    t_grid,
    cycles: int = 1,
    *,
    disorder_hot: float = 0.0,
    disorder_cold: float = 0.0,
) -> list:
    """Efficiencies of the first `cycles` cycles at each stroke duration.

    Returns (t_tilde, CycleRecord) pairs in grid-major, cycle-minor order;
    cycles are always run out to `cycles` even past the limit cycle so the
    per-cycle curves stay complete.
    """
    rows = []
    for t in t_grid:
        run = run_engine(
            replace(spec, stroke_time=float(t)),
            cycles,
            disorder_hot=disorder_hot,
            disorder_cold=disorder_cold,
            stop_at_limit=False,
        )
        rows.extend((float(t), record) for record in run.cycles)
    return rows
