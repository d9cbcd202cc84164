# src/bounds/entropy_bounds.py

import math
from typing import Iterable, List, Optional, Sequence

import numpy as np

from src.bounds.params import AsymptoticBound, BoundParams, BoundReport, KLocalRemedy
from src.qcore.operations import log_factor
from src.utils.config import SIE_CONSTANT
from src.utils.logger import logger

INV_E = 1.0 / math.e


def _check_fannes_epsilon(epsilon: float) -> None:
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}.")
    if epsilon > INV_E * (1 + 1e-12):
        raise ValueError(f"epsilon={epsilon} exceeds 1/e; the continuity bound does not apply.")


def fannes_bound(epsilon: float, dim: float, log_base: float = math.e) -> float:
    """epsilon log(dim) - epsilon log(epsilon), zero at epsilon = 0."""
    _check_fannes_epsilon(epsilon)
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}.")
    if epsilon == 0:
        return 0.0
    return epsilon * (math.log(dim) - math.log(epsilon)) / log_factor(log_base)


def entropy_sum_bound(
    delta_S_per_cut: Sequence[float],
    d: int,
    c: float = SIE_CONSTANT,
    log_base: float = math.e,
) -> float:
    """(sum_i |dS_i|) / (c log d)."""
    values = np.asarray(delta_S_per_cut, dtype=float)
    if np.any(values < 0):
        raise ValueError("Entropy changes per cut must be nonnegative.")
    return float(values.sum() / (c * math.log(d) / log_factor(log_base)))


def _cut_terms(params: BoundParams, cuts: Iterable[int]) -> List[float]:
    """max(dS - eps log(d_e d^i / eps), 0) for each cut i."""
    _check_fannes_epsilon(params.epsilon)
    eps = params.epsilon
    log_de, log_d, log_eps = params.log(params.d_e), params.log_d, params.log(eps)
    return [max(params.delta_S - eps * (log_de + i * log_d - log_eps), 0.0) for i in cuts]


def _report(
    formula: str, params: BoundParams, cuts: List[int], normalization: float, n: Optional[int]
) -> BoundReport:
    terms = _cut_terms(params, cuts)
    total = float(sum(terms) / normalization)
    logger.debug(
        f"[Bounds] {formula}: {sum(t > 0 for t in terms)}/{len(terms)} positive terms, "
        f"total={total:.6g}"
    )
    return BoundReport(
        formula=formula,
        per_cut_terms=terms,
        cut_indices=cuts,
        normalization=normalization,
        total=total,
        params=params,
        n=n,
    )


# --------------------------- FINITE CHAIN --------------------------- #
def finite_n_bound(params: BoundParams, n: int) -> BoundReport:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}.")
    return _report("finite_n", params, list(range(n)), params.c * params.log_d, n)


def klocal_adjusted_bound(
    params: BoundParams, n: int, remedy: KLocalRemedy = KLocalRemedy.OVERALL_FACTOR
) -> BoundReport:
    """
    k-local generators: the incremental-entangling dimension is d^floor(k/2).
    overall_factor divides by (k - 1); strided_sum keeps cuts 0, k-1, 2(k-1), ...
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}.")
    remedy = KLocalRemedy(remedy)
    k = params.k
    normalization = params.c * (k // 2) * params.log_d

    if remedy is KLocalRemedy.OVERALL_FACTOR:
        cuts = list(range(n))
        normalization *= k - 1
    else:
        cuts = list(range(0, n, k - 1))

    return _report(f"klocal_{remedy.value}", params, cuts, normalization, n)


def coarse_grained_bound(params: BoundParams, m: int, n: Optional[int] = None) -> BoundReport:
    """Only the first m cuts (all n cuts when m >= n)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}.")
    limit = m if n is None else min(m, n)
    return _report("coarse_grained", params, list(range(limit)), params.c * params.log_d, n)


def coarse_grained_cap(params: BoundParams, m: int) -> float:
    """epsilon -> 0 limit of the coarse-grained bound: m dS / (c log d)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}.")
    return m * params.delta_S / (params.c * params.log_d)


# --------------------------- ASYMPTOTICS --------------------------- #
def asymptotic_bound(params: BoundParams) -> AsymptoticBound:
    """
    Closed form of the per-cut sum at integer M = floor(dS / (log d eps)) next to its
    leading term dS^2 / (2 c log^2 d eps).
    """
    M_real = params.M_real
    M = int(math.floor(M_real + 1e-9))
    if M < 1:
        raise ValueError(f"M = {M_real:.4f} < 1; epsilon too large for the asymptotic form.")

    c, L, dS = params.c, params.log_d, params.delta_S
    correction = 2 * params.log(dS / (L * M * params.d_e)) / (L * M) + 1.0 / M
    exact = (M * dS / (2 * c * L)) * (1 + correction)
    leading = dS ** 2 / (2 * c * L ** 2 * params.epsilon)

    if params.epsilon <= INV_E:
        # terms vanish beyond cut M
        clipped = finite_n_bound(params, M + 1).total
    else:
        clipped = float("nan")

    if abs(M - M_real) > 1e-9:
        logger.debug(f"[Bounds] M rounded down from {M_real:.6f} to {M}")

    return AsymptoticBound(
        exact_M_sum=exact,
        leading_term=leading,
        clipped_sum=clipped,
        M=M,
        M_real=M_real,
        params=params,
    )
