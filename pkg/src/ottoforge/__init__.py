"""Finite-time quantum Otto engine simulator for spin-1/2 working substances."""

__version__ = "0.1.0"

from .disorder import (
    DisorderDistribution,
    DisorderedResult,
    averaged_efficiency_vs_time,
    disorder_averaged_efficiency,
    enumerate_realizations,
    find_t_s,
)
from .engine import (
    CycleRecord,
    EngineRun,
    EngineSpec,
    HamiltonianPair,
    adiabatic_map,
    build_hamiltonians,
    coupling_operator,
    efficiency_vs_time,
    ideal_efficiency,
    initial_state,
    run_cycle,
    run_engine,
    transverse_efficiency_formula,
)
from .lindblad import (
    BathSpec,
    JumpChannel,
    LindbladGenerator,
    Trajectory,
    bose_einstein,
    build_generator,
    evolve,
    transition_rate,
    zero_gap_rate,
)
from .operators import (
    SpectralDecomposition,
    check_density_matrix,
    expectation,
    identity,
    kron,
    magnetization,
    partial_trace_aux,
    pauli,
    spectral_decomposition,
    thermal_state,
    trace_distance,
    transverse_magnetization,
)

__all__ = [
    "BathSpec",
    "CycleRecord",
    "DisorderDistribution",
    "DisorderedResult",
    "EngineRun",
    "EngineSpec",
    "HamiltonianPair",
    "JumpChannel",
    "LindbladGenerator",
    "SpectralDecomposition",
    "Trajectory",
    "adiabatic_map",
    "averaged_efficiency_vs_time",
    "bose_einstein",
    "build_generator",
    "build_hamiltonians",
    "check_density_matrix",
    "coupling_operator",
    "disorder_averaged_efficiency",
    "efficiency_vs_time",
    "enumerate_realizations",
    "evolve",
    "expectation",
    "find_t_s",
    "ideal_efficiency",
    "identity",
    "initial_state",
    "kron",
    "magnetization",
    "partial_trace_aux",
    "pauli",
    "run_cycle",
    "run_engine",
    "spectral_decomposition",
    "thermal_state",
    "trace_distance",
    "transition_rate",
    "transverse_efficiency_formula",
    "transverse_magnetization",
    "zero_gap_rate",
]
