# src/qcore/operations.py

import math
from math import prod
from typing import Sequence, Union

import numpy as np

from src.qcore.hilbert import DensityMatrix, Ket
from src.utils.config import EIGEN_CLAMP, HERMITIAN_TOL, UNITARY_TOL
from src.utils.logger import logger

State = Union[Ket, DensityMatrix]


# --------------------------- HELPERS --------------------------- #
def log_factor(log_base: float) -> float:
    """Natural log of the requested base; entropies in nats are divided by it."""
    if log_base <= 0 or log_base == 1:
        raise ValueError(f"Invalid log base {log_base}; must be positive and != 1.")
    return math.log(log_base)


def hermitize(matrix: np.ndarray, what: str = "operator") -> np.ndarray:
    """Return (A + A^H)/2 after checking A is Hermitian within tolerance."""
    A = np.asarray(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {A.shape}.")
    skew = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if skew > HERMITIAN_TOL:
        raise ValueError(f"{what} is not Hermitian (max deviation {skew:.3e}).")
    return (A + A.conj().T) / 2


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(matrix, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol)


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(np.asarray(matrix, dtype=complex))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


# --------------------------- TENSORS --------------------------- #
def tensor_product(a: State, b: State) -> State:
    """Kronecker product of two states of the same kind; factorizations concatenate."""
    if isinstance(a, Ket) and isinstance(b, Ket):
        fact = a.factorization.concat(b.factorization)
        return Ket.trusted(fact, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        fact = a.factorization.concat(b.factorization)
        return DensityMatrix.trusted(fact, np.kron(a.entries, b.entries))
    raise ValueError(
        f"Cannot tensor a {type(a).__name__} with a {type(b).__name__}; convert one first."
    )


def partial_trace_array(matrix: np.ndarray, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out every factor after the first `keep` ones of a raw operator."""
    dims = tuple(dims)
    if not 0 <= keep <= len(dims):
        raise ValueError(f"keep={keep} out of range for {len(dims)} factors.")
    dk, dr = prod(dims[:keep]), prod(dims[keep:])
    A = np.asarray(matrix)
    if A.shape != (dk * dr, dk * dr):
        raise ValueError(f"Operator shape {A.shape} does not match factor dims {dims}.")
    return np.einsum("ajbj->ab", A.reshape(dk, dr, dk, dr))


def partial_trace_keep_prefix(rho: State, keep: int) -> DensityMatrix:
    """Reduced state of the first `keep` factors. keep=0 gives the 1x1 state [[1]]."""
    fact = rho.factorization
    if not 0 <= keep <= fact.n_factors:
        raise ValueError(f"keep={keep} out of range for {fact.n_factors} factors.")

    reduced_fact = fact.prefix(keep)
    dk = reduced_fact.total_dim

    if isinstance(rho, Ket):
        M = rho.amplitudes.reshape(dk, -1)
        return DensityMatrix.trusted(reduced_fact, M @ M.conj().T)

    return DensityMatrix.trusted(reduced_fact, partial_trace_array(rho.entries, fact.dims, keep))


# --------------------------- ENTROPY / NORMS --------------------------- #
def shannon_entropy(probabilities: Sequence[float], log_base: float = math.e) -> float:
    """Entropy of a probability vector, entries below the eigen clamp count as zero."""
    p = np.asarray(probabilities, dtype=float).ravel()
    p = p[p > EIGEN_CLAMP]
    return float(-(p * np.log(p)).sum() / log_factor(log_base))


def von_neumann_entropy(rho: State, log_base: float = math.e) -> float:
    """S(rho) = -Tr rho log rho. Pure kets have zero entropy."""
    if isinstance(rho, Ket):
        log_factor(log_base)
        return 0.0
    return shannon_entropy(np.linalg.eigvalsh(rho.entries), log_base)


def _singular_values(A: np.ndarray) -> np.ndarray:
    if A.size and np.allclose(A, A.conj().T, atol=1e-12, rtol=0.0):
        return np.abs(np.linalg.eigvalsh((A + A.conj().T) / 2))
    return np.linalg.svd(A, compute_uv=False)


def schatten_norm(matrix: Union[np.ndarray, DensityMatrix], p: float) -> float:
    """(sum of singular values^p)^(1/p); p = inf gives the operator norm."""
    if p < 1:
        raise ValueError(f"Schatten p-norm requires p >= 1, got {p}.")
    A = matrix.entries if isinstance(matrix, DensityMatrix) else np.asarray(matrix, dtype=complex)
    s = _singular_values(A)
    if s.size == 0:
        return 0.0
    top = float(s.max())
    if math.isinf(p):
        return top
    if top == 0.0:
        return 0.0
    return top * float(np.sum((s / top) ** p) ** (1.0 / p))


def trace_distance_norm(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """||rho - sigma||_1 (no factor one half)."""
    if rho.dim != sigma.dim:
        raise ValueError(f"Dimension mismatch: {rho.dim} vs {sigma.dim}.")
    return schatten_norm(rho.entries - sigma.entries, 1)


def fidelity(rho: State, sigma: State) -> float:
    """Uhlmann fidelity (Tr|sqrt(rho) sqrt(sigma)|)^2."""
    if rho.dim != sigma.dim:
        raise ValueError(f"Dimension mismatch: {rho.dim} vs {sigma.dim}.")

    if isinstance(rho, Ket) and isinstance(sigma, Ket):
        return float(min(abs(np.vdot(rho.amplitudes, sigma.amplitudes)) ** 2, 1.0))

    r = rho.density() if isinstance(rho, Ket) else rho
    s = sigma.density() if isinstance(sigma, Ket) else sigma
    root = np.linalg.svd(psd_sqrt(r.entries) @ psd_sqrt(s.entries), compute_uv=False).sum()
    return float(np.clip(root ** 2, 0.0, 1.0))


def schmidt_spectrum(psi: Ket, split: int) -> np.ndarray:
    """Squared Schmidt coefficients across the cut after `split` factors, descending."""
    n_factors = psi.factorization.n_factors
    if not 0 < split < n_factors:
        raise ValueError(f"split={split} must lie strictly between 0 and {n_factors}.")
    dk = psi.factorization.prefix_dim(split)
    s = np.linalg.svd(psi.amplitudes.reshape(dk, -1), compute_uv=False)
    return np.sort(s ** 2)[::-1]


# --------------------------- DYNAMICS --------------------------- #
def evolution_operator(hamiltonian: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i dt H) through the eigendecomposition of H."""
    H = hermitize(hamiltonian, what="Hamiltonian")
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * dt * w)) @ V.conj().T


def hermitian_evolve(rho: State, hamiltonian: np.ndarray, dt: float) -> State:
    """U rho U^dagger with U = exp(-i dt H). Kets stay kets."""
    H = np.asarray(hamiltonian)
    if H.shape != (rho.dim, rho.dim):
        raise ValueError(f"Hamiltonian shape {H.shape} does not match state dimension {rho.dim}.")
    U = evolution_operator(H, dt)

    if isinstance(rho, Ket):
        return Ket.trusted(rho.factorization, U @ rho.amplitudes)
    return DensityMatrix.trusted(rho.factorization, U @ rho.entries @ U.conj().T)


def product_state(states: Sequence[State]) -> State:
    if not states:
        raise ValueError("Need at least one factor for a product state.")
    out = states[0]
    for s in states[1:]:
        out = tensor_product(out, s)
    logger.debug(f"[QCore] Built product state over dims {out.factorization.dims}")
    return out
