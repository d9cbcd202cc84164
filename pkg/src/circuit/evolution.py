# src/circuit/evolution.py

from __future__ import annotations

import math
from dataclasses import dataclass
from math import prod
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from src.circuit.generators import GeneratorTerm
from src.circuit.schedule import Schedule, ScheduleSlice
from src.qcore.hilbert import DensityMatrix
from src.qcore.operations import (
    evolution_operator,
    log_factor,
    partial_trace_keep_prefix,
    schatten_norm,
    von_neumann_entropy,
)
from src.utils.config import COMPILE_DIM_CAP, DEFAULT_SUBSTEPS, ENTROPY_DRIFT_TOL
from src.utils.logger import logger

GroupKey = Tuple[int, int, Tuple[Tuple[int, int], ...]]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Recorded evolution.
    - states[r] is the full chain state after record r (record 0 is the input)
    - cut_entropies[r, i] is S(rho_i) in nats, rho_i = first i+1 sites
    """

    states: Tuple[DensityMatrix, ...]
    cut_entropies: np.ndarray
    times: np.ndarray
    global_entropy_drift: float

    @property
    def initial(self) -> DensityMatrix:
        return self.states[0]

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


# --------------------------- EMBEDDING --------------------------- #
def _control_mask(dims: Sequence[int], controls: Sequence[Tuple[int, int]]) -> np.ndarray:
    """1 on basis states where every (site, level) control holds."""
    grids = np.indices(tuple(dims)).reshape(len(dims), -1)
    mask = np.ones(prod(dims), dtype=bool)
    for site, level in controls:
        mask &= grids[site] == level
    return mask.astype(float)


def embed_operator(
    local: np.ndarray,
    dims: Sequence[int],
    first: int,
    last: int,
    controls: Sequence[Tuple[int, int]] = (),
) -> np.ndarray:
    """Lift a window operator to the full chain; controls multiply in their projector."""
    left = prod(dims[:first])
    right = prod(dims[last + 1 :])
    full = np.kron(np.kron(np.eye(left), local), np.eye(right))
    if controls:
        mask = _control_mask(dims, controls)
        full = mask[:, None] * full * mask[None, :]
    return full


def embed_unitary(
    local_u: np.ndarray,
    dims: Sequence[int],
    first: int,
    last: int,
    controls: Sequence[Tuple[int, int]] = (),
) -> np.ndarray:
    """Full-chain unitary acting as local_u only where the controls hold."""
    full = embed_operator(local_u, dims, first, last)
    if not controls:
        return full
    mask = _control_mask(dims, controls)
    return np.diag(1.0 - mask) + mask[:, None] * full


def apply_local_unitary(
    rho: np.ndarray, u: np.ndarray, dims: Sequence[int], first: int, last: int
) -> np.ndarray:
    """u rho u^dagger for u acting on the contiguous window [first, last]."""
    L = prod(dims[:first])
    W = prod(dims[first : last + 1])
    R = prod(dims[last + 1 :])
    if u.shape != (W, W):
        raise ValueError(f"Local unitary shape {u.shape} does not match window dimension {W}.")
    t = rho.reshape(L, W, R, L, W, R)
    t = np.einsum("wv,lvrmus->lwrmus", u, t)
    t = np.einsum("lwrmvs,uv->lwrmus", t, u.conj())
    return t.reshape(L * W * R, L * W * R)


# --------------------------- SLICE PROPAGATORS --------------------------- #
def _check_terms(schedule: Schedule, dims: Sequence[int]) -> None:
    for term in schedule.terms:
        if term.last >= len(dims):
            raise ValueError(f"Term {term.label} reaches site {term.last}; chain has {len(dims)}.")
        window_dim = prod(dims[term.first : term.last + 1])
        if term.matrix.shape[0] != window_dim:
            raise ValueError(
                f"Term {term.label} has dimension {term.matrix.shape[0]}, "
                f"window [{term.first}, {term.last}] has {window_dim}."
            )
        for site, level in term.controls:
            if not 0 <= site < len(dims) or not 0 <= level < dims[site]:
                raise ValueError(f"Term {term.label} has invalid control ({site}, {level}).")


def _slice_groups(
    sl: ScheduleSlice, terms: Dict[str, GeneratorTerm]
) -> List[Tuple[GroupKey, np.ndarray]]:
    """Sum the slice Hamiltonian per (window, controls) group, in first-seen order."""
    groups: Dict[GroupKey, np.ndarray] = {}
    for label, y in sl.coefficients.items():
        if y == 0:
            continue
        term = terms[label]
        key = (term.first, term.last, tuple(sorted(term.controls)))
        if key in groups:
            groups[key] = groups[key] + y * term.matrix
        else:
            groups[key] = y * term.matrix
    return list(groups.items())


class _HalfStep:
    """exp(-i dt/2 h_g) for one group, applied locally or as a full matrix."""

    def __init__(self, key: GroupKey, h: np.ndarray, dt: float, dims: Sequence[int]):
        self.first, self.last, self.controls = key
        self.dims = tuple(dims)
        local_u = evolution_operator(h, dt / 2)
        if self.controls:
            self.full_u = embed_unitary(local_u, dims, self.first, self.last, self.controls)
            self.local_u = None
        else:
            self.full_u = None
            self.local_u = local_u

    def apply(self, rho: np.ndarray) -> np.ndarray:
        if self.local_u is not None:
            return apply_local_unitary(rho, self.local_u, self.dims, self.first, self.last)
        return self.full_u @ rho @ self.full_u.conj().T


def _cut_entropies(rho: DensityMatrix) -> np.ndarray:
    n_cuts = rho.factorization.n_factors - 1
    return np.array(
        [von_neumann_entropy(partial_trace_keep_prefix(rho, i + 1)) for i in range(n_cuts)]
    )


# --------------------------- EVOLVE --------------------------- #
def evolve_schedule(
    initial: DensityMatrix,
    schedule: Schedule,
    substeps: int = DEFAULT_SUBSTEPS,
    record_states: bool = True,
) -> Trajectory:
    """
    Path-ordered evolution of the chain state.

    Each substep applies the window groups forward and then in reverse, each for half the
    substep (symmetric splitting). A slice with a single group is therefore exact.
    """
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}.")
    dims = initial.factorization.dims
    _check_terms(schedule, dims)
    terms = schedule.term_map()

    fact = initial.factorization
    rho = np.array(initial.entries)
    states: List[DensityMatrix] = [initial]
    entropies: List[np.ndarray] = [_cut_entropies(initial)]
    times: List[float] = [0.0]
    s_global_0 = von_neumann_entropy(initial)

    t = 0.0
    for idx, sl in enumerate(schedule.slices):
        dt = sl.duration / substeps
        steps = [_HalfStep(key, h, dt, dims) for key, h in _slice_groups(sl, terms)]
        logger.debug(
            f"[Circuit] Slice {idx}: {len(sl.coefficients)} terms in {len(steps)} groups, "
            f"{substeps} substeps of {dt:.3e}"
        )

        for _ in range(substeps):
            for step in steps:
                rho = step.apply(rho)
            for step in reversed(steps):
                rho = step.apply(rho)
            t += dt

            current = DensityMatrix.trusted(fact, rho)
            entropies.append(_cut_entropies(current))
            times.append(t)
            if record_states:
                states.append(current)

    final = DensityMatrix.trusted(fact, rho)
    if not record_states and schedule.slices:
        states.append(final)

    drift = abs(von_neumann_entropy(final) - s_global_0)
    if drift > ENTROPY_DRIFT_TOL:
        logger.warning(f"[Circuit] Global entropy drifted by {drift:.3e} during evolution.")

    return Trajectory(
        states=tuple(states),
        cut_entropies=np.vstack(entropies),
        times=np.array(times),
        global_entropy_drift=drift,
    )


def entropy_flow(traj: Trajectory, log_base: float = math.e) -> np.ndarray:
    """|S(rho_i(final)) - S(rho_i(initial))| for every cut, in the given base."""
    if traj.cut_entropies.shape[0] < 2:
        raise ValueError("Entropy flow needs a trajectory with at least two records.")
    return np.abs(traj.cut_entropies[-1] - traj.cut_entropies[0]) / log_factor(log_base)


PSpec = Union[float, Sequence[float], Callable[[int], float]]


def _p_for_cut(p_of_cut: PSpec, cut: int) -> float:
    if callable(p_of_cut):
        return float(p_of_cut(cut))
    if np.isscalar(p_of_cut):
        return float(p_of_cut)
    return float(p_of_cut[cut])


def schatten_flow(traj: Trajectory, p_of_cut: PSpec) -> np.ndarray:
    """|‖rho_i(final)‖_p - ‖rho_i(initial)‖_p| per cut, p chosen per cut."""
    n_cuts = traj.initial.factorization.n_factors - 1
    out = np.zeros(n_cuts)
    for i in range(n_cuts):
        p = _p_for_cut(p_of_cut, i)
        before = schatten_norm(partial_trace_keep_prefix(traj.initial, i + 1), p)
        after = schatten_norm(partial_trace_keep_prefix(traj.final, i + 1), p)
        out[i] = abs(after - before)
    return out


def schedule_unitary(schedule: Schedule, dims: Sequence[int]) -> np.ndarray:
    """Exact time-ordered product of the slice propagators."""
    D = prod(dims)
    if D > COMPILE_DIM_CAP:
        raise ValueError(f"Dimension {D} exceeds the unitary cap {COMPILE_DIM_CAP}.")
    _check_terms(schedule, dims)
    terms = schedule.term_map()

    U = np.eye(D, dtype=complex)
    for sl in schedule.slices:
        H = np.zeros((D, D), dtype=complex)
        for label, y in sl.coefficients.items():
            term = terms[label]
            H += y * embed_operator(term.matrix, dims, term.first, term.last, term.controls)
        U = evolution_operator(H, sl.duration) @ U
    return U
