# src/circuit/compiler.py

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.circuit.generators import GeneratorTerm
from src.circuit.schedule import Schedule, ScheduleSlice
from src.qcore.hilbert import ChainSpec
from src.utils.config import COMPILE_DIM_CAP
from src.utils.logger import logger

# Rotation angle of one two-level swap: exp(-i pi/2 G) maps |a> -> |b>, |b> -> -|a>.
SWAP_ANGLE = math.pi / 2

Move = Tuple[int, int]  # (a, b): rotate |a> onto |b>


class _SignedTracker:
    """Where each original basis state currently sits, and with which sign."""

    def __init__(self, dim: int):
        self.occupant = np.arange(dim)
        self.sign = np.ones(dim, dtype=int)  # sign of the occupant at each position

    def rotate(self, a: int, b: int) -> None:
        occ_a, occ_b = self.occupant[a], self.occupant[b]
        sign_a, sign_b = self.sign[a], self.sign[b]
        self.occupant[b], self.sign[b] = occ_a, sign_a
        self.occupant[a], self.sign[a] = occ_b, -sign_b


def _digits(index: int, dims: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(x) for x in np.unravel_index(index, dims))


def _route(x: int, y: int, dims: Sequence[int]) -> List[int]:
    """Basis path from x to y changing one site per step (lowest site first)."""
    path = [x]
    current = list(_digits(x, dims))
    target = _digits(y, dims)
    for site, level in enumerate(target):
        if current[site] != level:
            current[site] = level
            path.append(int(np.ravel_multi_index(tuple(current), dims)))
    return path


def _signed_transposition(x: int, y: int, dims: Sequence[int]) -> List[Move]:
    """Moves giving |x> -> |y>, |y> -> -|x>, every routed intermediate state untouched."""
    path = _route(x, y, dims)
    forward = [(path[j], path[j + 1]) for j in range(len(path) - 1)]
    backward = [(path[j], path[j - 1]) for j in range(len(path) - 2, 0, -1)]
    return forward + backward


def _cycles(perm: np.ndarray) -> List[List[int]]:
    seen = np.zeros(perm.size, dtype=bool)
    cycles = []
    for start in range(perm.size):
        if seen[start] or perm[start] == start:
            seen[start] = True
            continue
        cycle = []
        x = start
        while not seen[x]:
            seen[x] = True
            cycle.append(x)
            x = int(perm[x])
        cycles.append(cycle)
    return cycles


def _rotation_term(a: int, b: int, dims: Sequence[int]) -> GeneratorTerm:
    """G = -i|lo><hi| + i|hi><lo| on the one differing site, controlled on the rest."""
    lo, hi = min(a, b), max(a, b)
    lo_d, hi_d = _digits(lo, dims), _digits(hi, dims)
    diff = [s for s in range(len(dims)) if lo_d[s] != hi_d[s]]
    if len(diff) != 1:
        raise RuntimeError(f"Routed move {a}->{b} changes {len(diff)} sites.")
    site = diff[0]

    local = np.zeros((dims[site], dims[site]), dtype=complex)
    local[lo_d[site], hi_d[site]] = -1j
    local[hi_d[site], lo_d[site]] = 1j
    return GeneratorTerm(
        label=f"rot:{lo}-{hi}",
        matrix=local,
        first=site,
        last=site,
        controls=tuple((s, lo_d[s]) for s in range(len(dims)) if s != site),
    )


def _phase_term(signs: np.ndarray, dims: Sequence[int]) -> Tuple[GeneratorTerm, float]:
    """Traceless diagonal H with exp(-iH) = diag(signs) up to a global phase."""
    flips = (signs < 0).astype(float)
    alpha = math.pi * flips.sum() / flips.size
    diag = alpha - math.pi * flips
    strength = float(np.abs(diag).max())
    term = GeneratorTerm(
        label="phase",
        matrix=np.diag(diag / strength).astype(complex),
        first=0,
        last=len(dims) - 1,
    )
    return term, strength


def schedule_locality(schedule: Schedule) -> int:
    """Largest number of sites any term couples, controls included (0 for no terms)."""
    return max((len(term.sites) for term in schedule.terms), default=0)


# --------------------------- COMPILE --------------------------- #
def compile_permutation(
    perm: Sequence[int], spec: ChainSpec, phase_correction: bool = True
) -> Schedule:
    """
    Schedule realizing |x> -> |perm[x]> on the chain basis, up to a global phase.

    Every cycle is split into signed transpositions through its smallest element; each
    transposition is routed through single-site moves, one controlled two-level rotation
    per slice. A final diagonal slice removes leftover signs.

    A rotation acts on one site but is controlled on all the others, so every term couples
    the whole chain: the schedule is (n+1)-local, see `schedule_locality`.
    """
    dims = spec.dims
    D = spec.total_dim
    if D > COMPILE_DIM_CAP:
        raise ValueError(f"Chain dimension {D} exceeds the compile cap {COMPILE_DIM_CAP}.")

    perm = np.asarray(perm, dtype=int)
    if perm.size != D or not np.array_equal(np.sort(perm), np.arange(D)):
        raise ValueError(f"Expected a permutation of 0..{D - 1}.")

    tracker = _SignedTracker(D)
    moves: List[Move] = []
    for cycle in _cycles(perm):
        head = cycle[0]
        for nxt in cycle[1:]:
            # occupant of head must land on nxt with a + sign
            pair = (head, nxt) if tracker.sign[head] > 0 else (nxt, head)
            for a, b in _signed_transposition(*pair, dims):
                tracker.rotate(a, b)
                moves.append((a, b))

    if not np.array_equal(perm[tracker.occupant], np.arange(D)):
        raise RuntimeError("Compiled moves do not reproduce the permutation.")

    terms: Dict[str, GeneratorTerm] = {}
    plan: List[Tuple[str, float]] = []
    for a, b in moves:
        term = _rotation_term(a, b, dims)
        terms.setdefault(term.label, term)
        plan.append((term.label, SWAP_ANGLE if a < b else -SWAP_ANGLE))

    # all signs flipped is a global phase
    if phase_correction and np.any(tracker.sign < 0) and not np.all(tracker.sign < 0):
        term, strength = _phase_term(tracker.sign, dims)
        terms[term.label] = term
        plan.append((term.label, strength))

    if not plan:
        logger.info("[Compiler] Identity permutation; empty schedule.")
        return Schedule()

    duration = 1.0 / len(plan)
    slices = [
        ScheduleSlice(duration=duration, coefficients={label: angle / duration})
        for label, angle in plan
    ]
    logger.info(
        f"[Compiler] {len(moves)} two-level rotations over {len(terms)} generators "
        f"(D={D}, phase slice={'yes' if len(plan) > len(moves) else 'no'})"
    )
    return Schedule(terms=list(terms.values()), slices=slices)
