"""GKSL generator for one system-bath contact and fixed-step integration.

The dissipator uses secular jump operators built from the spectrum of the
(stroke-constant) Hamiltonian, with Ohmic rates J(E) = coupling * E dressed
by Bose-Einstein occupation.  Time is dimensionless throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import (
    check_density_matrix,
    check_hermitian,
    dagger,
    spectral_decomposition,
)

# Jump operators with Frobenius norm below this are dropped.
OPERATOR_NORM_FLOOR = 1e-12
# Tolerances enforced along integrated trajectories.
TRAJECTORY_TRACE_TOL = 1e-8
TRAJECTORY_HERM_TOL = 1e-8
TRAJECTORY_PSD_TOL = 1e-8


@dataclass(frozen=True)
class BathSpec:
    """One thermal bath: temperature, dimensionless coupling, disorder factor.

    The disorder factor d multiplies the effective coupling by (1 + d)^2 in
    every transition rate; d > -1 keeps the coupling positive.
    """

    temperature: float
    coupling: float = 0.1
    disorder_factor: float = 0.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"bath temperature must be positive, got {self.temperature}")
        if self.coupling <= 0:
            raise ValueError(f"bath coupling must be positive, got {self.coupling}")
        if self.disorder_factor <= -1:
            raise ValueError(
                f"disorder factor must exceed -1, got {self.disorder_factor}"
            )

    @property
    def effective_coupling(self) -> float:
        return self.coupling * (1.0 + self.disorder_factor) ** 2


def bose_einstein(energy: float, temperature: float) -> float:
    """Mean occupation 1/(exp(E/T) - 1) for E > 0, T > 0."""
    if energy <= 0:
        raise ValueError(f"occupation requires a positive energy, got {energy}")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = energy / temperature
    if x > 700.0:  # exp would overflow; occupation is indistinguishable from 0
        return 0.0
    return 1.0 / math.expm1(x)


def transition_rate(energy: float, bath: BathSpec) -> float:
    """Ohmic emission/absorption rate for a signed transition energy.

    Positive energy means emission into the bath, J(E)(1 + n(E)); negative
    means absorption, J(|E|) n(|E|).  Detailed balance
    rate(-E)/rate(E) = exp(-E/T) holds by construction.
    """
    if energy == 0:
        raise ValueError("zero transition energy: use the zero-gap channel rate")
    g = bath.effective_coupling
    if energy > 0:
        return g * energy * (1.0 + bose_einstein(energy, bath.temperature))
    return g * (-energy) * bose_einstein(-energy, bath.temperature)


def zero_gap_rate(bath: BathSpec) -> float:
    """Continuous E -> 0 limit of the Ohmic rate: coupling * T."""
    return bath.effective_coupling * bath.temperature


@dataclass(frozen=True)
class JumpChannel:
    """One secular channel: transition energy, jump operator, rate."""

    energy: float
    operator: np.ndarray
    rate: float


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    """Coherent part plus jump channels for one bath contact.

    `matrix` is the vectorized generator acting on row-major vec(rho);
    it is precomputed so that repeated integrations are cheap.
    """

    hamiltonian: np.ndarray
    channels: tuple[JumpChannel, ...]
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side -i[H, rho] + dissipator, computed directly."""
        out = -1j * (self.hamiltonian @ rho - rho @ self.hamiltonian)
        for ch in self.channels:
            a = ch.operator
            ada = dagger(a) @ a
            out = out + ch.rate * (
                a @ rho @ dagger(a) - 0.5 * (ada @ rho + rho @ ada)
            )
        return out


def _vectorized_generator(h: np.ndarray, channels: tuple[JumpChannel, ...]) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    mat = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for ch in channels:
        a = ch.operator
        ada = dagger(a) @ a
        mat = mat + ch.rate * (
            np.kron(a, a.conj())
            - 0.5 * np.kron(ada, eye)
            - 0.5 * np.kron(eye, ada.T)
        )
    return mat


def build_generator(
    h: np.ndarray,
    coupling_op: np.ndarray,
    bath: BathSpec,
    *,
    include_zero_gap: bool = True,
) -> LindbladGenerator:
    """Construct the secular GKSL generator for Hamiltonian h and one bath.

    Every ordered eigenpair gap E = eps_r - eps_l contributes the term
    |l><l| C |r><r| to the channel operator A(E); gaps equal within
    1e-9 * max(1, ||h||) are grouped into one channel.  A zero-gap group
    (diagonal part of the coupling in the eigenbasis) becomes a dephasing
    channel with the Ohmic-limit rate coupling * T, unless disabled.
    """
    h = check_hermitian(h, "hamiltonian")
    coupling_op = check_hermitian(coupling_op, "coupling operator")
    values, vectors = spectral_decomposition(h)
    dim = h.shape[0]
    gap_tol = 1e-9 * max(1.0, float(np.abs(values).max()))

    # Matrix elements of the coupling operator in the eigenbasis.
    elems = dagger(vectors) @ coupling_op @ vectors

    pairs = sorted(
        ((values[r] - values[l], l, r) for l in range(dim) for r in range(dim)),
        key=lambda item: item[0],
    )
    clusters: list[list[tuple[float, int, int]]] = []
    for item in pairs:
        if clusters and item[0] - clusters[-1][0][0] <= gap_tol:
            clusters[-1].append(item)
        else:
            clusters.append([item])

    channels = []
    for cluster in clusters:
        energy = sum(item[0] for item in cluster) / len(cluster)
        op = np.zeros((dim, dim), dtype=complex)
        for _, l, r in cluster:
            op += elems[l, r] * np.outer(vectors[:, l], vectors[:, r].conj())
        if np.linalg.norm(op) <= OPERATOR_NORM_FLOOR:
            continue
        if abs(energy) <= gap_tol:
            if not include_zero_gap:
                continue
            channels.append(JumpChannel(0.0, op, zero_gap_rate(bath)))
        else:
            channels.append(JumpChannel(energy, op, transition_rate(energy, bath)))

    channels = tuple(sorted(channels, key=lambda ch: ch.energy))
    return LindbladGenerator(h, channels, _vectorized_generator(h, channels))


@dataclass(frozen=True)
class Trajectory:
    """Sampled master-equation solution: times[0] = 0, states[0] = initial."""

    times: np.ndarray
    states: list

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _rk4_step_matrix(gen_matrix: np.ndarray, dt: float) -> np.ndarray:
    """One-step matrix of classical fixed-step RK4 for the linear system."""
    x = dt * gen_matrix
    eye = np.eye(x.shape[0], dtype=complex)
    x2 = x @ x
    x3 = x2 @ x
    return eye + x + x2 / 2.0 + x3 / 6.0 + (x3 @ x) / 24.0


def _split_steps(t_total: float, dt: float) -> tuple[int, float]:
    """Number of full dt steps plus a final partial step covering t_total."""
    n = int(round(t_total / dt))
    if abs(n * dt - t_total) <= 1e-9 * max(1.0, t_total):
        return n, 0.0
    n = int(t_total / dt)
    return n, t_total - n * dt


def _check_state(rho: np.ndarray, dt: float, t: float) -> None:
    try:
        check_density_matrix(
            rho,
            herm_tol=TRAJECTORY_HERM_TOL,
            trace_tol=TRAJECTORY_TRACE_TOL,
            psd_tol=TRAJECTORY_PSD_TOL,
            context=f"integrated state at t = {t:g}",
        )
    except ValueError as exc:
        raise RuntimeError(f"{exc}; is dt = {dt:g} too large?") from exc


def evolve(
    rho0: np.ndarray,
    gen: LindbladGenerator,
    t_total: float,
    dt: float = 1e-3,
    *,
    sample_every: int | None = None,
) -> Trajectory:
    """Integrate d rho / dt = -i[H, rho] + dissipator over [0, t_total].

    Classical 4th-order fixed-step integration: the RK4 one-step matrix of
    the (linear) vectorized generator is applied n times, which reproduces
    step-by-step RK4 exactly.  With sample_every = k the state is recorded
    every k steps; by default only the initial and final states are kept.
    Trace, Hermiticity and positivity are enforced at every recorded state
    and a violation aborts with a diagnostic.
    """
    if t_total < 0:
        raise ValueError(f"evolution time must be non-negative, got {t_total}")
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (gen.dim, gen.dim):
        raise ValueError(f"state shape {rho0.shape} does not match generator dim {gen.dim}")
    check_density_matrix(rho0, context="initial state")

    n_steps, remainder = _split_steps(t_total, dt)
    step = _rk4_step_matrix(gen.matrix, dt)
    vec = rho0.reshape(-1).copy()
    dim = gen.dim

    times = [0.0]
    states = [rho0.copy()]
    if sample_every is None:
        if n_steps:
            vec = np.linalg.matrix_power(step, n_steps) @ vec
        if remainder:
            vec = _rk4_step_matrix(gen.matrix, remainder) @ vec
        if n_steps or remainder:
            rho = vec.reshape(dim, dim)
            _check_state(rho, dt, t_total)
            times.append(t_total)
            states.append(rho)
    else:
        if sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        chunk = np.linalg.matrix_power(step, sample_every)
        done = 0
        while done + sample_every <= n_steps:
            vec = chunk @ vec
            done += sample_every
            rho = vec.reshape(dim, dim)
            _check_state(rho, dt, done * dt)
            times.append(done * dt)
            states.append(rho)
        tail = n_steps - done
        if tail or remainder:
            if tail:
                vec = np.linalg.matrix_power(step, tail) @ vec
            if remainder:
                vec = _rk4_step_matrix(gen.matrix, remainder) @ vec
            rho = vec.reshape(dim, dim)
            _check_state(rho, dt, t_total)
            times.append(t_total)
            states.append(rho)

    return Trajectory(np.array(times), states)
