from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.utils.config import (
    DIM_CAP,
    HERMITIAN_TOL,
    NORMALIZATION_TOL,
    PSD_TOL,
    TRACE_TOL,
)


@dataclass(frozen=True)
class HilbertFactorization:
    """
    Ordered site dimensions of a tensor-factored Hilbert space.
    - Site 0 is the embezzling system when the factorization comes from a chain
    - An empty factorization is the one-dimensional (scalar) space
    """

    dims: Tuple[int, ...]
    cap: int = DIM_CAP

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)

        if any(d < 2 for d in dims):
            raise ValueError(f"Every site dimension must be >= 2, got {dims}.")
        if self.total_dim > self.cap:
            raise ValueError(
                f"Total dimension {self.total_dim} exceeds the dense storage cap {self.cap}."
            )

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def prefix_dim(self, keep: int) -> int:
        return prod(self.dims[:keep])

    def concat(self, other: HilbertFactorization) -> HilbertFactorization:
        return HilbertFactorization(self.dims + other.dims, cap=self.cap)

    def prefix(self, keep: int) -> HilbertFactorization:
        return HilbertFactorization(self.dims[:keep], cap=self.cap)


def _as_factorization(dims: HilbertFactorization | Sequence[int]) -> HilbertFactorization:
    if isinstance(dims, HilbertFactorization):
        return dims
    return HilbertFactorization(tuple(dims))


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized state vector over a factorized space."""

    factorization: HilbertFactorization
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.factorization.total_dim:
            raise ValueError(
                f"Ket has {amps.size} amplitudes but the factorization "
                f"{self.factorization.dims} has dimension {self.factorization.total_dim}."
            )

        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"Ket is not normalized (squared norm {norm:.12f}).")

        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    # ------------------------------------------------------------------ #
    @classmethod
    def trusted(cls, factorization: HilbertFactorization, amplitudes: np.ndarray) -> Ket:
        """Wrap an already-normalized vector without re-validating it."""
        obj = object.__new__(cls)
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(obj, "factorization", factorization)
        object.__setattr__(obj, "amplitudes", amps)
        return obj

    @classmethod
    def from_amplitudes(
        cls,
        dims: HilbertFactorization | Sequence[int],
        amplitudes: Sequence[complex] | np.ndarray,
        normalize: bool = False,
    ) -> Ket:
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("Cannot normalize the zero vector.")
            amps = amps / norm
        return cls(_as_factorization(dims), amps)

    @classmethod
    def basis(cls, dims: HilbertFactorization | Sequence[int], index: int) -> Ket:
        fact = _as_factorization(dims)
        if not 0 <= index < fact.total_dim:
            raise ValueError(f"Basis index {index} out of range for dimension {fact.total_dim}.")
        amps = np.zeros(fact.total_dim, dtype=complex)
        amps[index] = 1.0
        return cls.trusted(fact, amps)

    @property
    def dim(self) -> int:
        return self.factorization.total_dim

    def density(self) -> DensityMatrix:
        return DensityMatrix.trusted(
            self.factorization, np.outer(self.amplitudes, self.amplitudes.conj())
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Dense density operator.
    - Hermitian within 1e-10 (symmetrized on construction)
    - Unit trace within 1e-10
    - Eigenvalues >= -1e-10
    """

    factorization: HilbertFactorization
    entries: np.ndarray

    def __post_init__(self) -> None:
        rho = np.array(self.entries, dtype=complex)
        dim = self.factorization.total_dim

        if rho.shape != (dim, dim):
            raise ValueError(
                f"Density matrix shape {rho.shape} does not match dimension {dim} "
                f"of factorization {self.factorization.dims}."
            )

        skew = float(np.max(np.abs(rho - rho.conj().T))) if dim else 0.0
        if skew > HERMITIAN_TOL:
            raise ValueError(f"Density matrix is not Hermitian (max deviation {skew:.3e}).")
        rho = (rho + rho.conj().T) / 2

        trace = float(np.trace(rho).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"Density matrix trace is {trace:.12f}, expected 1.")

        min_eig = float(np.linalg.eigvalsh(rho)[0])
        if min_eig < -PSD_TOL:
            raise ValueError(f"Density matrix has negative eigenvalue {min_eig:.3e}.")

        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    # ------------------------------------------------------------------ #
    @classmethod
    def trusted(cls, factorization: HilbertFactorization, entries: np.ndarray) -> DensityMatrix:
        """Wrap a matrix that is a state by construction (symmetrized, not re-checked)."""
        obj = object.__new__(cls)
        rho = np.asarray(entries, dtype=complex)
        rho = (rho + rho.conj().T) / 2
        rho.setflags(write=False)
        object.__setattr__(obj, "factorization", factorization)
        object.__setattr__(obj, "entries", rho)
        return obj

    @classmethod
    def from_array(
        cls, dims: HilbertFactorization | Sequence[int], entries: np.ndarray
    ) -> DensityMatrix:
        return cls(_as_factorization(dims), entries)

    @classmethod
    def diagonal(
        cls, dims: HilbertFactorization | Sequence[int], probabilities: Sequence[float]
    ) -> DensityMatrix:
        return cls(_as_factorization(dims), np.diag(np.asarray(probabilities, dtype=float)))

    @classmethod
    def maximally_mixed(cls, dims: HilbertFactorization | Sequence[int]) -> DensityMatrix:
        fact = _as_factorization(dims)
        return cls.trusted(fact, np.eye(fact.total_dim, dtype=complex) / fact.total_dim)

    @property
    def dim(self) -> int:
        return self.factorization.total_dim

    def spectrum(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.entries)[::-1]


class ChainSpec(BaseModel):
    """Chain geometry: embezzler (site 0, dimension d_e) followed by n catalyst qudits."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1, description="Number of catalyst sites")
    d: int = Field(ge=2, description="Local dimension of each catalyst site")
    d_e: int = Field(default=0, description="Embezzler dimension (defaults to d)")

    @model_validator(mode="before")
    @classmethod
    def _default_embezzler_dim(cls, data):
        if isinstance(data, dict) and not data.get("d_e"):
            data = {**data, "d_e": data.get("d")}
        return data

    @model_validator(mode="after")
    def _check_embezzler_dim(self) -> ChainSpec:
        if self.d_e < self.d:
            raise ValueError(f"Embezzler dimension d_e={self.d_e} must be >= d={self.d}.")
        return self

    @property
    def dims(self) -> Tuple[int, ...]:
        return (self.d_e,) + (self.d,) * self.n

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def n_cuts(self) -> int:
        return self.n

    def factorization(self, cap: int = DIM_CAP) -> HilbertFactorization:
        return HilbertFactorization(self.dims, cap=cap)
