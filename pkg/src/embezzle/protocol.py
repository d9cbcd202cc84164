# src/embezzle/protocol.py

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from src.qcore.hilbert import DensityMatrix, HilbertFactorization, Ket
from src.qcore.operations import (
    is_unitary,
    partial_trace_keep_prefix,
    schatten_norm,
    schmidt_spectrum,
    shannon_entropy,
    tensor_product,
)
from src.utils.logger import logger

RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EmbezzleTask:
    """
    Turn a product embezzler state phi into psi.
    Both kets live on d_e x d_e (side A first, side B second).
    """

    phi: Ket
    psi: Ket
    d_e: int

    def __post_init__(self) -> None:
        expected = (self.d_e, self.d_e)
        for name, ket in (("phi", self.phi), ("psi", self.psi)):
            if ket.factorization.dims != expected:
                raise ValueError(
                    f"{name} lives on {ket.factorization.dims}, expected {expected}."
                )

        if schmidt_spectrum(self.phi, 1)[1] > RANK_TOL:
            raise ValueError("phi must be a product state across the A/B cut.")

        if schmidt_spectrum(self.psi, 1)[1] <= RANK_TOL:
            logger.warning("[Embezzle] psi has Schmidt rank 1; nothing is embezzled.")

    # ------------------------------------------------------------------ #
    @classmethod
    def from_schmidt(
        cls,
        phi_probs: Sequence[float],
        psi_probs: Sequence[float],
        d_e: int,
    ) -> EmbezzleTask:
        """Build sum_j sqrt(p_j)|jj> kets; shorter probability vectors are zero-padded."""
        return cls(_schmidt_ket(phi_probs, d_e), _schmidt_ket(psi_probs, d_e), d_e)

    @classmethod
    def epr(cls, d_e: int) -> EmbezzleTask:
        """|00> to the d_e-dimensional maximally entangled state."""
        return cls.from_schmidt([1.0], np.full(d_e, 1.0 / d_e), d_e)

    def phi_reduced(self) -> DensityMatrix:
        return partial_trace_keep_prefix(self.phi, 1)

    def psi_reduced(self) -> DensityMatrix:
        return partial_trace_keep_prefix(self.psi, 1)

    def phi_weights(self) -> np.ndarray:
        return _local_weights(self.phi)

    def psi_weights(self) -> np.ndarray:
        return _local_weights(self.psi)


def _schmidt_ket(probs: Sequence[float], d_e: int) -> Ket:
    p = np.asarray(probs, dtype=float)
    if p.size > d_e:
        raise ValueError(f"{p.size} Schmidt coefficients do not fit d_e={d_e}.")
    if np.any(p < 0):
        raise ValueError("Schmidt probabilities must be nonnegative.")
    amps = np.zeros(d_e * d_e, dtype=complex)
    idx = np.arange(p.size)
    amps[idx * d_e + idx] = np.sqrt(p)
    return Ket(HilbertFactorization((d_e, d_e)), amps)


def _local_weights(ket: Ket) -> np.ndarray:
    """
    Diagonal of the side-A reduction in the computational basis.
    Falls back to the Schmidt spectrum when the reduction is not diagonal.
    """
    rho = partial_trace_keep_prefix(ket, 1).entries
    off_diagonal = rho - np.diag(np.diag(rho))
    if np.max(np.abs(off_diagonal)) <= RANK_TOL:
        return np.clip(np.diag(rho).real, 0.0, None)
    logger.warning(
        "[Embezzle] Reduced state is not diagonal; the permutation acts on Schmidt bases."
    )
    return schmidt_spectrum(ket, 1)


def _check_catalyst(catalyst: Sequence[float]) -> np.ndarray:
    cat = np.asarray(catalyst, dtype=float).ravel()
    if cat.size == 0 or np.any(cat < 0):
        raise ValueError("Catalyst must be a nonempty nonnegative probability vector.")
    if abs(cat.sum() - 1.0) > 1e-10:
        raise ValueError(f"Catalyst probabilities sum to {cat.sum():.12f}, expected 1.")
    if np.any(np.diff(cat) > 1e-15):
        raise ValueError("Catalyst probabilities must be sorted in descending order.")
    return cat


def _check_unitary(U: np.ndarray, dim: int, name: str = "U") -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (dim, dim):
        raise ValueError(f"{name} has shape {U.shape}, expected ({dim}, {dim}).")
    if not is_unitary(U):
        raise ValueError(f"{name} is not unitary within tolerance.")
    return U


# --------------------------- PERMUTATION PROTOCOL --------------------------- #
def embezzle_permutation(
    catalyst: Sequence[float], task: EmbezzleTask
) -> Tuple[np.ndarray, float]:
    """
    Match sorted spectra of catalyst x phi_A and catalyst x psi_A.

    Indices are catalyst-major: c * d_e + e. The returned perm sends
    basis index x to perm[x].
    """
    cat = _check_catalyst(catalyst)
    src = task.phi_weights()
    dst = task.psi_weights()
    if src.size != dst.size:
        raise ValueError(f"Spectra lengths differ after padding: {src.size} vs {dst.size}.")

    a = np.kron(cat, src)
    b = np.kron(cat, dst)
    src_order = np.argsort(-a, kind="stable")
    dst_order = np.argsort(-b, kind="stable")

    perm = np.empty(a.size, dtype=int)
    perm[src_order] = dst_order
    overlap = float(np.sum(np.sqrt(a[src_order] * b[dst_order])))

    logger.debug(
        f"[Embezzle] Permutation over {a.size} levels, overlap={overlap:.6f} "
        f"(catalyst rank {cat.size}, d_e={task.d_e})"
    )
    return perm, overlap


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    perm = np.asarray(perm, dtype=int)
    if not np.array_equal(np.sort(perm), np.arange(perm.size)):
        raise ValueError("Not a permutation of 0..D-1.")
    P = np.zeros((perm.size, perm.size), dtype=complex)
    P[perm, np.arange(perm.size)] = 1.0
    return P


def chain_order_permutation(perm: Sequence[int], N: int, d_e: int) -> np.ndarray:
    """Re-index a catalyst-major permutation (c * d_e + e) to chain order (e * N + c)."""
    perm = np.asarray(perm, dtype=int)
    if perm.size != N * d_e:
        raise ValueError(f"Permutation length {perm.size} != N * d_e = {N * d_e}.")

    idx = np.arange(perm.size)
    c, e = np.divmod(idx, d_e)
    c2, e2 = np.divmod(perm, d_e)

    out = np.empty_like(perm)
    out[e * N + c] = e2 * N + c2
    return out


def diagonal_deviation(
    catalyst: Sequence[float], task: EmbezzleTask, perm: Sequence[int]
) -> float:
    """Trace-norm deviation of the permutation protocol computed on diagonals."""
    cat = _check_catalyst(catalyst)
    a = np.kron(cat, task.phi_weights())
    b = np.kron(cat, task.psi_weights())
    perm = np.asarray(perm, dtype=int)
    if perm.size != a.size:
        raise ValueError(f"Permutation length {perm.size} != {a.size}.")

    moved = np.zeros_like(a)
    moved[perm] = a
    return float(np.abs(moved - b).sum())


def one_sided_deviation(omega: DensityMatrix, task: EmbezzleTask, U: np.ndarray) -> float:
    """||U (omega x phi_A) U^dagger - omega x psi_A||_1."""
    initial = tensor_product(omega, task.phi_reduced())
    target = tensor_product(omega, task.psi_reduced())
    U = _check_unitary(U, initial.dim)
    evolved = U @ initial.entries @ U.conj().T
    return schatten_norm(evolved - target.entries, 1)


def two_sided_overlap(
    omega_ket: Ket, task: EmbezzleTask, U_A: np.ndarray, U_B: np.ndarray
) -> float:
    """
    |<Omega, psi| U_A x U_B |Omega, phi>| with U_A acting on (catalyst A, embezzler A)
    and U_B on (catalyst B, embezzler B), both catalyst-major.
    """
    if omega_ket.factorization.n_factors != 2:
        raise ValueError("Catalyst ket must be bipartite (side A, side B).")
    N_A, N_B = omega_ket.factorization.dims
    d_e = task.d_e
    U_A = _check_unitary(U_A, N_A * d_e, "U_A")
    U_B = _check_unitary(U_B, N_B * d_e, "U_B")

    O = omega_ket.amplitudes.reshape(N_A, N_B)
    F = task.phi.amplitudes.reshape(d_e, d_e)
    G = task.psi.amplitudes.reshape(d_e, d_e)

    # rows: (catalyst A, embezzler A); columns: (catalyst B, embezzler B)
    X = np.einsum("ab,ce->acbe", O, F).reshape(N_A * d_e, N_B * d_e)
    Y = np.einsum("ab,ce->acbe", O, G).reshape(N_A * d_e, N_B * d_e)
    return float(abs(np.vdot(Y, U_A @ X @ U_B.T)))


# --------------------------- UHLMANN --------------------------- #
def purification(rho: DensityMatrix, purification_dim: int) -> np.ndarray:
    """D x P matrix A with A A^dagger = rho (vectorized: sum A[i, k] |i>|k>)."""
    w, V = np.linalg.eigh(rho.entries)
    keep = w > RANK_TOL
    rank = int(keep.sum())
    if purification_dim < rank:
        raise ValueError(
            f"purification_dim={purification_dim} is smaller than the state rank {rank}."
        )
    A = np.zeros((rho.dim, purification_dim), dtype=complex)
    A[:, :rank] = V[:, keep] * np.sqrt(w[keep])
    return A


def uhlmann_overlap(
    rho_a: DensityMatrix, rho_b: DensityMatrix, W: np.ndarray, purification_dim: int
) -> float:
    """|<b| (I x W) |a>| for the canonical purifications of rho_a and rho_b."""
    A = purification(rho_a, purification_dim)
    B = purification(rho_b, purification_dim)
    return float(abs(np.trace(B.conj().T @ A @ np.asarray(W).T)))


def uhlmann_partner(
    rho_evolved: DensityMatrix, rho_target: DensityMatrix, purification_dim: int
) -> np.ndarray:
    """Unitary on the purifying factor attaining sqrt(F) between the purifications."""
    if rho_evolved.dim != rho_target.dim:
        raise ValueError(f"Dimension mismatch: {rho_evolved.dim} vs {rho_target.dim}.")
    A = purification(rho_evolved, purification_dim)
    B = purification(rho_target, purification_dim)

    u, _ = sla.polar(B.conj().T @ A)
    return u.conj()


def entanglement_delta(task: EmbezzleTask, log_base: float = math.e) -> float:
    """|S(phi_A) - S(psi_A)|."""
    s_phi = shannon_entropy(schmidt_spectrum(task.phi, 1), log_base)
    s_psi = shannon_entropy(schmidt_spectrum(task.psi, 1), log_base)
    return abs(s_phi - s_psi)
