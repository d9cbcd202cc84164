# src/embezzle/families.py

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.qcore.hilbert import DensityMatrix, HilbertFactorization, Ket


def vdh_schmidt_vector(N: int) -> np.ndarray:
    """Catalyst Schmidt probabilities p_j = (1/j)/H_N, j = 1..N (descending)."""
    if N < 2:
        raise ValueError(f"Catalyst Schmidt rank must be >= 2, got N={N}.")
    weights = 1.0 / np.arange(1, N + 1, dtype=float)
    return weights / weights.sum()


class VdhFamily(BaseModel):
    """Harmonic-weight catalyst of Schmidt rank N."""

    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=2, description="Catalyst Schmidt rank")

    def schmidt_vector(self) -> np.ndarray:
        return vdh_schmidt_vector(self.N)

    def catalyst_state(self) -> DensityMatrix:
        """One-sided reduced catalyst diag(p_j)."""
        return DensityMatrix.trusted(
            HilbertFactorization((self.N,)), np.diag(self.schmidt_vector()).astype(complex)
        )

    def catalyst_ket(self) -> Ket:
        """Bipartite catalyst sum_j sqrt(p_j) |j>|j> on N x N."""
        fact = HilbertFactorization((self.N, self.N))
        amps = np.zeros(self.N * self.N, dtype=complex)
        idx = np.arange(self.N)
        amps[idx * self.N + idx] = np.sqrt(self.schmidt_vector())
        return Ket.trusted(fact, amps)


class ItpFamily(BaseModel):
    """Product of two-site blocks diag(1, lambda)/(1 + lambda) with alternating lambdas."""

    model_config = ConfigDict(frozen=True)

    lambda1: float = Field(gt=0.0, lt=1.0, description="Weight of odd blocks")
    lambda2: float = Field(gt=0.0, lt=1.0, description="Weight of even blocks")
    n_pairs: int = Field(ge=1, description="Number of block pairs available")

    @model_validator(mode="after")
    def _distinct_lambdas(self) -> ItpFamily:
        if self.lambda1 == self.lambda2:
            raise ValueError("lambda1 and lambda2 must differ.")
        return self

    def block_spectrum(self, site: int) -> np.ndarray:
        lam = self.lambda1 if site % 2 == 0 else self.lambda2
        return np.array([1.0, lam]) / (1.0 + lam)


def _check_sites(family: ItpFamily, sites: int) -> None:
    if sites % 2 != 0:
        raise ValueError(f"ITP reduced states need an even number of sites, got {sites}.")
    if not 0 <= sites <= 2 * family.n_pairs:
        raise ValueError(f"sites={sites} out of range [0, {2 * family.n_pairs}].")


def itp_spectrum(family: ItpFamily, sites: int) -> np.ndarray:
    """Diagonal of the ITP reduced state on the first `sites` sites (no dense matrix)."""
    _check_sites(family, sites)
    spectrum = np.ones(1)
    for site in range(sites):
        spectrum = np.kron(spectrum, family.block_spectrum(site))
    return spectrum


def itp_reduced_state(family: ItpFamily, sites: int) -> DensityMatrix:
    spectrum = itp_spectrum(family, sites)
    return DensityMatrix.trusted(
        HilbertFactorization((2,) * sites), np.diag(spectrum).astype(complex)
    )
