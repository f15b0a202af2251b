"""Dense complex linear algebra for 2- and 4-dimensional qubit systems.

Everything works in natural units (hbar = k_B = 1); energies and
temperatures are plain floats, states and operators are numpy arrays.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Construction-time tolerances for density matrices.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli(which: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for axis 'x', 'y' or 'z'."""
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {which!r}") from None


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product, first factor's indices major (row-major blocks).

    Products beyond total dimension 4 are rejected; this package only
    handles one qubit or one qubit plus an auxiliary qubit.
    """
    out = np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    if out.shape[0] > 4:
        raise ValueError(f"tensor product of dimension {out.shape[0]} > 4 not supported")
    return out


def check_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = HERMITICITY_TOL,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = POSITIVITY_TOL,
    context: str = "state",
) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise ValueError(f"{context}: expected a 2x2 or 4x4 matrix, got shape {rho.shape}")
    herm = np.abs(rho - dagger(rho)).max()
    if herm > herm_tol:
        raise ValueError(f"{context}: not Hermitian (max |rho - rho^dag| = {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"{context}: trace {tr:.15g} deviates from 1 by {abs(tr - 1.0):.3e}")
    low = np.linalg.eigvalsh(0.5 * (rho + dagger(rho))).min()
    if low < -psd_tol:
        raise ValueError(f"{context}: negative eigenvalue {low:.3e}")


def is_density_matrix(rho: np.ndarray, **kwargs) -> bool:
    try:
        check_density_matrix(rho, **kwargs)
    except ValueError:
        return False
    return True


class SpectralDecomposition(NamedTuple):
    """Eigenvalues (ascending) and matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def check_hermitian(op: np.ndarray, context: str = "operator") -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    scale = max(1.0, np.abs(op).max())
    if np.abs(op - dagger(op)).max() > 1e-10 * scale:
        raise ValueError(f"{context}: matrix is not Hermitian")
    return op


def spectral_decomposition(h: np.ndarray) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix with a fixed phase convention.

    Eigenvalues come out ascending and each eigenvector is rotated so its
    largest-magnitude component is real and positive, which makes repeated
    calls (and anything built from the eigenvectors) deterministic.
    """
    h = check_hermitian(h)
    values, vectors = np.linalg.eigh(h)
    vectors = vectors.astype(complex)
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        k = int(np.argmax(np.abs(col)))
        phase = col[k]
        vectors[:, j] = col * (phase.conjugate() / abs(phase))
    return SpectralDecomposition(values, vectors)


def thermal_state(h: np.ndarray, temperature: float) -> np.ndarray:
    """Gibbs state exp(-H/T)/Z via spectral decomposition (T > 0)."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    values, vectors = spectral_decomposition(h)
    weights = np.exp(-(values - values.min()) / temperature)
    weights /= weights.sum()
    return (vectors * weights) @ dagger(vectors)


def partial_trace_aux(rho: np.ndarray) -> np.ndarray:
    """Trace out the second (auxiliary) qubit of a system x auxiliary state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"partial trace expects a 4x4 matrix, got shape {rho.shape}")
    return np.einsum("iaja->ij", rho.reshape(2, 2, 2, 2))


def expectation(op: np.ndarray, rho: np.ndarray) -> float:
    """Real part of Tr(O rho); complains if a real observable comes out complex."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise ValueError(f"dimension mismatch: operator {op.shape} vs state {rho.shape}")
    tr = np.trace(op @ rho)
    if abs(tr.imag) > 1e-10:
        raise ValueError(f"expectation value has imaginary part {tr.imag:.3e}")
    return float(tr.real)


def magnetization(rho: np.ndarray) -> float:
    """<(1/2) sigma_z> of the working qubit (system factor for 4-dim states)."""
    dim = np.asarray(rho).shape[0]
    if dim == 2:
        op = 0.5 * _PAULI["z"]
    elif dim == 4:
        op = 0.5 * kron(_PAULI["z"], identity(2))
    else:
        raise ValueError(f"magnetization expects a 2- or 4-dimensional state, got {dim}")
    return expectation(op, rho)


def transverse_magnetization(rho: np.ndarray) -> float:
    """<(1/2) sigma_x> of a single-qubit state."""
    if np.asarray(rho).shape[0] != 2:
        raise ValueError("transverse magnetization is defined on 2-dimensional states")
    return expectation(0.5 * _PAULI["x"], rho)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) ||a - b||_1 for Hermitian a, b."""
    diff = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff)))).sum())
