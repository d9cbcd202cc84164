# src/verify/checks.py

import math
from math import prod
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.bounds.entropy_bounds import INV_E, fannes_bound
from src.circuit.evolution import entropy_flow, evolve_schedule, schatten_flow
from src.circuit.generators import (
    GeneratorBasis,
    GeneratorTerm,
    build_generators,
    build_pair_generators,
)
from src.circuit.schedule import CostMode, Schedule, ScheduleSlice, cut_cost, schedule_cost
from src.qcore.hilbert import ChainSpec, DensityMatrix, HilbertFactorization, Ket
from src.qcore.operations import (
    evolution_operator,
    partial_trace_array,
    schatten_norm,
    schmidt_spectrum,
    shannon_entropy,
    trace_distance_norm,
    von_neumann_entropy,
)
from src.qcore.random_states import (
    random_hermitian,
    random_mixed_state,
    random_product_state,
    random_pure_ket,
)
from src.utils.config import SIE_CONSTANT, SIE_SLACK, SIE_STEP, VERIFY_DIM_CAP, VERIFY_SLACK
from src.utils.logger import logger
from src.verify.record import VerificationRecord, run_trials

NORM_EXPONENTS = (1.5, 2.0, 3.0, math.inf)
CHAIN_SUBSTEPS = 16
SUITES = ("sie", "fannes", "norm_monotonicity", "cost_entropy", "schatten_cost", "cut_entropy")


def _check_dim(dim: int) -> None:
    if dim > VERIFY_DIM_CAP:
        raise ValueError(f"Dimension {dim} exceeds the verification cap {VERIFY_DIM_CAP}.")


def _worst(pairs: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """The (lhs, rhs) pair with the smallest margin."""
    return min(pairs, key=lambda pair: pair[1] - pair[0])


# --------------------------- SIE --------------------------- #
def _apply_pair(psi: Ket, u: np.ndarray, site: int) -> np.ndarray:
    dims = psi.factorization.dims
    L, R = prod(dims[:site]), prod(dims[site + 2 :])
    W = dims[site] * dims[site + 1]
    t = psi.amplitudes.reshape(L, W, R)
    return np.einsum("wv,lvr->lwr", u, t).reshape(-1)


def _cut_entropy_after(psi: Ket, hamiltonian: np.ndarray, site: int, t: float) -> float:
    """S of sites 0..site after evolving the (site, site+1) pair for time t."""
    evolved = Ket.trusted(psi.factorization, _apply_pair(psi, evolution_operator(hamiltonian, t), site))
    return shannon_entropy(schmidt_spectrum(evolved, site + 1))


def entropy_rate(psi: Ket, hamiltonian: np.ndarray, site: int, step: float = SIE_STEP) -> float:
    """Central difference of the cut entropy under a Hamiltonian on sites (site, site+1)."""
    plus = _cut_entropy_after(psi, hamiltonian, site, step)
    minus = _cut_entropy_after(psi, hamiltonian, site, -step)
    return (plus - minus) / (2 * step)


def richardson_order(psi: Ket, hamiltonian: np.ndarray, site: int, step: float = 1e-2) -> float:
    """Observed convergence order of entropy_rate from steps h, h/2, h/4."""
    r1, r2, r4 = (entropy_rate(psi, hamiltonian, site, step / s) for s in (1, 2, 4))
    num, den = abs(r1 - r2), abs(r2 - r4)
    if den == 0 or num == 0:
        return float("nan")
    return math.log2(num / den)


def sie_margin(
    psi: Ket,
    hamiltonian: np.ndarray,
    site: int,
    step: float = SIE_STEP,
    c: float = SIE_CONSTANT,
) -> Tuple[float, float]:
    """(|dS/dt|, c log(min pair dim) ||H||) for the cut right after `site`."""
    dims = psi.factorization.dims
    lhs = abs(entropy_rate(psi, hamiltonian, site, step))
    rhs = c * math.log(min(dims[site], dims[site + 1])) * schatten_norm(hamiltonian, math.inf)
    return lhs, rhs


def check_sie(
    trials: int,
    spec: ChainSpec,
    seed: int,
    step: float = SIE_STEP,
    c: float = SIE_CONSTANT,
    workers: int = 1,
) -> VerificationRecord:
    """Entropy rate across a cut under a random pair Hamiltonian on the sites adjacent to it."""
    dims = spec.dims
    _check_dim(spec.total_dim)

    def trial(rng: np.random.Generator, t: int) -> Tuple[float, float]:
        site = int(rng.integers(0, len(dims) - 1))
        psi = random_pure_ket(dims, rng)
        H = random_hermitian(dims[site] * dims[site + 1], rng, norm=float(rng.uniform(0.1, 2.0)))
        if t == 0:
            order = richardson_order(psi, H, site)
            logger.debug(f"[Verify] SIE finite-difference Richardson order ~ {order:.2f}")
        return sie_margin(psi, H, site, step, c)

    return run_trials(
        "sie",
        trials,
        seed,
        trial,
        slack=SIE_SLACK,
        workers=workers,
        parameters={"n": spec.n, "d": spec.d, "d_e": spec.d_e, "c": c, "step": step},
    )


# --------------------------- FANNES --------------------------- #
def fannes_margin(rho: DensityMatrix, sigma: DensityMatrix) -> Tuple[float, float]:
    eps = trace_distance_norm(rho, sigma)
    lhs = abs(von_neumann_entropy(rho) - von_neumann_entropy(sigma))
    return lhs, fannes_bound(min(eps, INV_E), rho.dim)


def check_fannes(trials: int, dim: int, seed: int, workers: int = 1) -> VerificationRecord:
    """Continuity bound on pairs mixed to within trace-norm distance 1/e."""
    if not 2 <= dim <= 64:
        raise ValueError(f"dim must lie in [2, 64], got {dim}.")

    def trial(rng: np.random.Generator, t: int) -> Tuple[float, float]:
        rho = random_mixed_state((dim,), rng)
        tau = random_mixed_state((dim,), rng, environment_dim=int(rng.integers(2, dim + 1)))
        gap = trace_distance_norm(rho, tau)
        t_max = min(1.0, INV_E / gap) if gap > 0 else 1.0
        mix = float(rng.uniform(0.0, t_max))
        sigma = DensityMatrix.trusted(rho.factorization, (1 - mix) * rho.entries + mix * tau.entries)
        return fannes_margin(rho, sigma)

    return run_trials("fannes", trials, seed, trial, workers=workers, parameters={"dim": dim})


# --------------------------- NORMS --------------------------- #
def check_norm_monotonicity(
    trials: int, dims: HilbertFactorization | Sequence[int], seed: int, workers: int = 1
) -> VerificationRecord:
    """||A||_p <= ||A||_1 and ||Tr_partial A||_1 <= ||A||_1 on random Hermitian A."""
    fact = dims if isinstance(dims, HilbertFactorization) else HilbertFactorization(tuple(dims))
    _check_dim(fact.total_dim)

    def trial(rng: np.random.Generator, t: int) -> Tuple[float, float]:
        A = random_hermitian(
            fact.total_dim,
            rng,
            norm=float(rng.uniform(0.5, 2.0)),
            traceless=bool(rng.random() < 0.5),
        )
        keep = int(rng.integers(0, fact.n_factors + 1))
        trace_norm = schatten_norm(A, 1)
        pairs = [(schatten_norm(A, p), trace_norm) for p in NORM_EXPONENTS]
        pairs.append((schatten_norm(partial_trace_array(A, fact.dims, keep), 1), trace_norm))
        return _worst(pairs)

    return run_trials(
        "norm_monotonicity",
        trials,
        seed,
        trial,
        workers=workers,
        parameters={"dims": "x".join(str(d) for d in fact.dims)},
    )


# --------------------------- CIRCUIT CHAINS --------------------------- #
def random_schedule(
    terms: List[GeneratorTerm],
    rng: np.random.Generator,
    max_slices: int = 3,
    max_terms: int = 4,
    scale: float = 1.0,
) -> Schedule:
    """Random piecewise-constant schedule over the given generators."""
    n_slices = int(rng.integers(1, max_slices + 1))
    durations = rng.dirichlet(np.ones(n_slices))
    durations = durations / durations.sum()

    labels = [t.label for t in terms]
    slices = []
    for duration in durations:
        count = int(rng.integers(1, min(max_terms, len(labels)) + 1))
        chosen = rng.choice(len(labels), size=count, replace=False)
        slices.append(
            ScheduleSlice(
                duration=float(duration),
                coefficients={labels[j]: float(scale * rng.normal()) for j in chosen},
            )
        )
    return Schedule(terms=terms, slices=slices)


def _auto_basis(spec: ChainSpec, basis: Optional[GeneratorBasis]) -> GeneratorBasis:
    if basis is not None:
        return GeneratorBasis(basis)
    if all(d == 2 for d in spec.dims):
        return GeneratorBasis.PAULI_LIKE
    return GeneratorBasis.GELLMANN_LIKE


def _chain_terms(spec: ChainSpec, basis: Optional[GeneratorBasis] = None) -> List[GeneratorTerm]:
    return build_generators(spec, 2, _auto_basis(spec, basis))


def _random_initial(spec: ChainSpec, rng: np.random.Generator) -> DensityMatrix:
    if rng.random() < 0.5:
        return random_product_state(spec.dims, rng)
    return random_pure_ket(spec.dims, rng).density()


def cost_entropy_margin(
    initial: DensityMatrix,
    schedule: Schedule,
    d: int,
    c: float = SIE_CONSTANT,
    substeps: int = CHAIN_SUBSTEPS,
) -> Tuple[float, float]:
    """(sum_i |dS_i|, c log(d) cost) for one simulated k=2 schedule."""
    rhs = c * math.log(d) * schedule_cost(schedule)
    if not schedule.slices:
        return 0.0, rhs
    traj = evolve_schedule(initial, schedule, substeps=substeps, record_states=False)
    return float(entropy_flow(traj).sum()), rhs


def schatten_cost_margin(
    initial: DensityMatrix, schedule: Schedule, substeps: int = CHAIN_SUBSTEPS
) -> Tuple[float, float]:
    """Worst (1/2 sum_i |d||rho_i||_p|, cost) over the tested exponents."""
    cost = schedule_cost(schedule)
    if not schedule.slices:
        return 0.0, cost
    traj = evolve_schedule(initial, schedule, substeps=substeps, record_states=False)
    return _worst([(0.5 * float(schatten_flow(traj, p).sum()), cost) for p in NORM_EXPONENTS])


def _chain_check(
    name: str,
    trials: int,
    spec: ChainSpec,
    seed: int,
    margin: Callable[[DensityMatrix, Schedule], Tuple[float, float]],
    workers: int,
    substeps: int,
    basis: Optional[GeneratorBasis] = None,
) -> VerificationRecord:
    _check_dim(spec.total_dim)
    terms = _chain_terms(spec, basis)

    def trial(rng: np.random.Generator, t: int) -> Tuple[float, float]:
        schedule = random_schedule(terms, rng)
        return margin(_random_initial(spec, rng), schedule)

    return run_trials(
        name,
        trials,
        seed,
        trial,
        slack=VERIFY_SLACK,
        workers=workers,
        parameters={
            "n": spec.n,
            "d": spec.d,
            "d_e": spec.d_e,
            "k": 2,
            "substeps": substeps,
            "basis": basis.value if basis else "auto",
        },
    )


def check_cost_entropy_chain(
    trials: int,
    spec: ChainSpec,
    seed: int,
    c: float = SIE_CONSTANT,
    substeps: int = CHAIN_SUBSTEPS,
    workers: int = 1,
    basis: Optional[GeneratorBasis] = None,
) -> VerificationRecord:
    """sum_i |dS(rho_i)| <= c log(d) cost on random k=2 schedules."""
    return _chain_check(
        "cost_entropy",
        trials,
        spec,
        seed,
        lambda rho, sched: cost_entropy_margin(rho, sched, spec.d, c, substeps),
        workers,
        substeps,
        basis,
    )


def check_schatten_cost_chain(
    trials: int,
    spec: ChainSpec,
    seed: int,
    substeps: int = CHAIN_SUBSTEPS,
    workers: int = 1,
    basis: Optional[GeneratorBasis] = None,
) -> VerificationRecord:
    """1/2 sum_i |d||rho_i||_p| <= cost on random k=2 schedules."""
    return _chain_check(
        "schatten_cost",
        trials,
        spec,
        seed,
        lambda rho, sched: schatten_cost_margin(rho, sched, substeps),
        workers,
        substeps,
        basis,
    )


def _sie_dim(term: GeneratorTerm, cut: int, dims: Sequence[int]) -> int:
    """Smaller side dimension of the sites a term couples across `cut`."""
    left = prod(dims[s] for s in term.sites if s <= cut)
    right = prod(dims[s] for s in term.sites if s > cut)
    return min(left, right)


def cut_entropy_margin(
    initial: DensityMatrix,
    schedule: Schedule,
    c: float = SIE_CONSTANT,
    substeps: int = CHAIN_SUBSTEPS,
    summed_mode: Optional[CostMode] = None,
) -> Tuple[float, float]:
    """
    Worst cut of |dS(rho_i)| <= c log(D_i) cut_cost(i), D_i the largest incremental-entangling
    dimension among the used terms crossing cut i. With `summed_mode` the summed form
    sum_i |dS(rho_i)| <= c log(D) schedule_cost(mode) is checked as well.
    """
    if not schedule.slices:
        return 0.0, 0.0
    dims = initial.factorization.dims
    used = {label for sl in schedule.slices for label, y in sl.coefficients.items() if y != 0}
    terms = [t for t in schedule.terms if t.label in used]
    traj = evolve_schedule(initial, schedule, substeps=substeps, record_states=False)
    flow = entropy_flow(traj)

    pairs: List[Tuple[float, float]] = []
    cut_dims: List[int] = []
    for cut, dS in enumerate(flow):
        D = max((_sie_dim(t, cut, dims) for t in terms if t.crosses(cut)), default=1)
        cut_dims.append(D)
        pairs.append((float(dS), c * math.log(D) * cut_cost(schedule, cut)))

    if summed_mode is not None:
        D = max(cut_dims, default=1)
        pairs.append((float(flow.sum()), c * math.log(D) * schedule_cost(schedule, summed_mode)))
    return _worst(pairs)


def cut_entropy_families(
    spec: ChainSpec, basis: Optional[GeneratorBasis] = None
) -> Dict[str, List[GeneratorTerm]]:
    """Range-2 and range-3 windows (when the chain fits them) and long-range pairs."""
    basis = _auto_basis(spec, basis)
    families = {"window_2": build_generators(spec, 2, basis)}
    if spec.n + 1 >= 3:
        families["window_3"] = build_generators(spec, 3, basis)
    families["pairs"] = build_pair_generators(spec, basis)
    return families


def check_cut_entropy_chain(
    trials: int,
    spec: ChainSpec,
    seed: int,
    c: float = SIE_CONSTANT,
    substeps: int = CHAIN_SUBSTEPS,
    workers: int = 1,
    basis: Optional[GeneratorBasis] = None,
) -> VerificationRecord:
    """
    Per-cut entropy flow against the cost of the terms crossing each cut. Trials cycle
    through the generator families; pair schedules also check the summed form under
    distance-weighted cost.
    """
    _check_dim(spec.total_dim)
    families = cut_entropy_families(spec, basis)
    names = list(families)

    def trial(rng: np.random.Generator, t: int) -> Tuple[float, float]:
        family = names[t % len(names)]
        schedule = random_schedule(families[family], rng)
        summed = CostMode.DISTANCE_PENALTY if family == "pairs" else None
        return cut_entropy_margin(_random_initial(spec, rng), schedule, c, substeps, summed)

    return run_trials(
        "cut_entropy",
        trials,
        seed,
        trial,
        slack=VERIFY_SLACK,
        workers=workers,
        parameters={
            "n": spec.n,
            "d": spec.d,
            "d_e": spec.d_e,
            "families": ",".join(names),
            "substeps": substeps,
            "basis": basis.value if basis else "auto",
        },
    )


# --------------------------- SUITE --------------------------- #
def run_suite(
    name: str,
    trials: int,
    spec: ChainSpec,
    seed: int,
    workers: int = 1,
    substeps: int = CHAIN_SUBSTEPS,
    basis: Optional[GeneratorBasis] = None,
) -> List[VerificationRecord]:
    """Run one named check or `all` of them on the given chain."""
    runners: Dict[str, Callable[[], VerificationRecord]] = {
        "sie": lambda: check_sie(trials, spec, seed, workers=workers),
        "fannes": lambda: check_fannes(trials, min(spec.total_dim, 16), seed, workers=workers),
        "norm_monotonicity": lambda: check_norm_monotonicity(trials, spec.dims, seed, workers=workers),
        "cost_entropy": lambda: check_cost_entropy_chain(
            trials, spec, seed, substeps=substeps, workers=workers, basis=basis
        ),
        "schatten_cost": lambda: check_schatten_cost_chain(
            trials, spec, seed, substeps=substeps, workers=workers, basis=basis
        ),
        "cut_entropy": lambda: check_cut_entropy_chain(
            trials, spec, seed, substeps=substeps, workers=workers, basis=basis
        ),
    }
    if name == "all":
        selected = list(SUITES)
    elif name in runners:
        selected = [name]
    else:
        raise ValueError(f"Unknown suite '{name}'; expected 'all' or one of {SUITES}.")

    logger.info(f"[Verify] Running {selected} with {trials} trials, seed={seed}")
    return [runners[key]() for key in selected]
