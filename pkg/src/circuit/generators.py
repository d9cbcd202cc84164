# src/circuit/generators.py

from __future__ import annotations

from enum import Enum
from functools import reduce
from itertools import product
from typing import Annotated, Any, Dict, List, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    model_validator,
)

from src.qcore.hilbert import ChainSpec
from src.utils.config import HERMITIAN_TOL
from src.utils.logger import logger


class GeneratorBasis(str, Enum):
    PAULI_LIKE = "pauli_like"
    GELLMANN_LIKE = "gellmann_like"


# --------------------------- MATRIX FIELD --------------------------- #
def _to_complex_matrix(value: Any) -> np.ndarray:
    if isinstance(value, dict):
        value = np.asarray(value["real"], dtype=float) + 1j * np.asarray(value["imag"], dtype=float)
    M = np.array(value, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"Generator matrix must be square, got shape {M.shape}.")
    M.setflags(write=False)
    return M


def _from_complex_matrix(M: np.ndarray) -> Dict[str, List[List[float]]]:
    return {"real": M.real.tolist(), "imag": M.imag.tolist()}


ComplexMatrix = Annotated[
    np.ndarray,
    PlainValidator(_to_complex_matrix),
    PlainSerializer(_from_complex_matrix, return_type=dict),
]


class GeneratorTerm(BaseModel):
    """
    Normalized control-Hamiltonian term T_I.
    The matrix acts on the contiguous window [first, last]; `controls` restricts it to the
    subspace where each (site, level) pair holds.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str = Field(description="Unique identifier inside a schedule")
    matrix: ComplexMatrix = Field(description="Traceless Hermitian, unit operator norm")
    first: int = Field(ge=0, description="First site of the window")
    last: int = Field(ge=0, description="Last site of the window")
    active: Tuple[int, ...] = Field(
        default=(), description="Window sites acted on nontrivially (empty: whole window)"
    )
    controls: Tuple[Tuple[int, int], ...] = Field(
        default=(), description="(site, level) projectors outside the window"
    )
    penalty: float = Field(default=1.0, gt=0.0, description="Cost weight in distance mode")

    @model_validator(mode="after")
    def _check_term(self) -> GeneratorTerm:
        M = self.matrix
        if self.last < self.first:
            raise ValueError(f"Term {self.label}: last={self.last} < first={self.first}.")
        if np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL:
            raise ValueError(f"Term {self.label} is not Hermitian.")
        if abs(np.trace(M)) > 1e-10:
            raise ValueError(f"Term {self.label} is not traceless.")
        if abs(np.linalg.norm(M, 2) - 1.0) > 1e-10:
            raise ValueError(f"Term {self.label} does not have unit operator norm.")
        if any(not self.first <= s <= self.last for s in self.active):
            raise ValueError(f"Term {self.label}: active sites outside the window.")
        if any(self.first <= s <= self.last for s, _ in self.controls):
            raise ValueError(f"Term {self.label}: control sites overlap the window.")
        return self

    @property
    def sites(self) -> Tuple[int, ...]:
        """Every site the term couples, controls included."""
        window = self.active or tuple(range(self.first, self.last + 1))
        return tuple(sorted(set(window) | {s for s, _ in self.controls}))

    def crosses(self, cut: int) -> bool:
        """Cut i separates sites 0..i from i+1..n."""
        sites = self.sites
        return sites[0] <= cut < sites[-1]


# --------------------------- LOCAL BASES --------------------------- #
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def gellmann_basis(dim: int) -> Dict[str, np.ndarray]:
    """Identity plus the generalized Gell-Mann matrices, each scaled to unit operator norm."""
    basis: Dict[str, np.ndarray] = {"I": np.eye(dim, dtype=complex)}
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            basis[f"S{j}{k}"] = sym

            anti = np.zeros((dim, dim), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            basis[f"A{j}{k}"] = anti

    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        basis[f"D{l}"] = np.diag(diag / l).astype(complex)
    return basis


def local_basis(dim: int, basis: GeneratorBasis) -> Dict[str, np.ndarray]:
    basis = GeneratorBasis(basis)
    if basis is GeneratorBasis.PAULI_LIKE:
        if dim != 2:
            raise ValueError(f"pauli_like generators need qubit sites, got d={dim}.")
        return dict(_PAULI)
    return gellmann_basis(dim)


def _kron_all(mats: List[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


# --------------------------- BUILDERS --------------------------- #
def build_generators(
    spec: ChainSpec, k: int, basis: GeneratorBasis = GeneratorBasis.PAULI_LIKE
) -> List[GeneratorTerm]:
    """Every non-identity product operator on each contiguous k-site window."""
    n_sites = spec.n + 1
    if not 2 <= k <= n_sites:
        raise ValueError(f"k={k} must satisfy 2 <= k <= n+1 = {n_sites}.")

    dims = spec.dims
    site_bases = [local_basis(d, basis) for d in dims]
    terms: List[GeneratorTerm] = []

    for first in range(n_sites - k + 1):
        window = range(first, first + k)
        choices = [list(site_bases[s].items()) for s in window]
        for combo in product(*choices):
            names = [name for name, _ in combo]
            if all(name == "I" for name in names):
                continue
            terms.append(
                GeneratorTerm(
                    label=f"{first}:{'.'.join(names)}",
                    matrix=_kron_all([m for _, m in combo]),
                    first=first,
                    last=first + k - 1,
                    active=tuple(s for s, name in zip(window, names) if name != "I"),
                )
            )

    logger.debug(
        f"[Circuit] Built {len(terms)} generators ({GeneratorBasis(basis).value}, k={k}) "
        f"over {n_sites - k + 1} windows"
    )
    return terms


def build_pair_generators(
    spec: ChainSpec, basis: GeneratorBasis = GeneratorBasis.GELLMANN_LIKE
) -> List[GeneratorTerm]:
    """Two-body couplings between any two sites; penalty = site distance."""
    dims = spec.dims
    site_bases = [local_basis(d, basis) for d in dims]
    terms: List[GeneratorTerm] = []

    for i in range(len(dims)):
        for j in range(i + 1, len(dims)):
            between = [np.eye(d, dtype=complex) for d in dims[i + 1 : j]]
            for (a, A), (b, B) in product(site_bases[i].items(), site_bases[j].items()):
                if a == "I" or b == "I":
                    continue
                terms.append(
                    GeneratorTerm(
                        label=f"{i}~{j}:{a}.{b}",
                        matrix=_kron_all([A, *between, B]),
                        first=i,
                        last=j,
                        active=(i, j),
                        penalty=float(j - i),
                    )
                )

    logger.debug(f"[Circuit] Built {len(terms)} pair generators over {len(dims)} sites")
    return terms
