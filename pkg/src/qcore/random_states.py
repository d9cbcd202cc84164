# src/qcore/random_states.py

from math import prod
from typing import Optional, Sequence

import numpy as np

from src.qcore.hilbert import DensityMatrix, HilbertFactorization, Ket
from src.qcore.operations import partial_trace_keep_prefix, product_state


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_pure_ket(dims: Sequence[int], rng: np.random.Generator) -> Ket:
    """Haar-random pure state."""
    fact = HilbertFactorization(tuple(dims))
    z = _complex_gaussian(rng, fact.total_dim)
    return Ket.trusted(fact, z / np.linalg.norm(z))


def random_mixed_state(
    dims: Sequence[int],
    rng: np.random.Generator,
    environment_dim: Optional[int] = None,
) -> DensityMatrix:
    """Reduced state of a Haar-random purification on dims + (environment_dim,)."""
    env = environment_dim if environment_dim is not None else max(prod(dims), 2)
    psi = random_pure_ket(tuple(dims) + (env,), rng)
    return partial_trace_keep_prefix(psi, len(dims))


def random_product_state(dims: Sequence[int], rng: np.random.Generator) -> DensityMatrix:
    return product_state([random_mixed_state((d,), rng) for d in dims])


def random_hermitian(
    dim: int,
    rng: np.random.Generator,
    norm: float = 1.0,
    traceless: bool = False,
) -> np.ndarray:
    """GUE sample rescaled to the requested operator norm."""
    X = _complex_gaussian(rng, (dim, dim))
    H = (X + X.conj().T) / 2
    if traceless:
        H = H - np.trace(H) / dim * np.eye(dim)

    top = np.abs(np.linalg.eigvalsh(H)).max()
    if norm == 0 or top == 0:
        return np.zeros((dim, dim), dtype=complex)
    return H * (norm / top)
