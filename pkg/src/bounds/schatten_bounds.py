# src/bounds/schatten_bounds.py

import math
from typing import Sequence

import numpy as np

from src.bounds.params import ItpAsymptoticBound
from src.circuit.evolution import PSpec, Trajectory, schatten_flow
from src.qcore.operations import log_factor
from src.utils.logger import logger

P_RULES = ("pair", "literal")


def _check_lambdas(lambda1: float, lambda2: float) -> None:
    for lam in (lambda1, lambda2):
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {lam}.")


def schatten_bound(norm_deltas: Sequence[float], epsilon: float) -> float:
    """1/2 sum_i max(delta_i - epsilon, 0)."""
    deltas = np.asarray(norm_deltas, dtype=float)
    if np.any(deltas < 0):
        raise ValueError("Norm changes must be nonnegative.")
    return float(0.5 * np.clip(deltas - epsilon, 0.0, None).sum())


def trajectory_schatten_bound(traj: Trajectory, p_of_cut: PSpec, epsilon: float = 0.0) -> float:
    """Schatten lower bound fed by the per-cut norm changes of a simulated circuit."""
    return schatten_bound(schatten_flow(traj, p_of_cut), epsilon)


# --------------------------- ITP CLOSED FORMS --------------------------- #
def itp_norm(lambda1: float, lambda2: float, i, p):
    """
    Schatten p-norm of the ITP reduced state on 2i sites.
    Accepts numpy arrays for i and p (broadcast).
    """
    _check_lambdas(lambda1, lambda2)
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 1):
        raise ValueError("Schatten p-norm requires p >= 1.")

    with np.errstate(divide="ignore", invalid="ignore"):
        finite = np.where(np.isinf(p_arr), 1.0, p_arr)
        pair = (
            (1 + lambda1 ** finite) ** (1 / finite)
            * (1 + lambda2 ** finite) ** (1 / finite)
        )
    pair = np.where(np.isinf(p_arr), 1.0, pair) / ((1 + lambda1) * (1 + lambda2))
    value = pair ** np.asarray(i, dtype=float)
    return float(value) if np.ndim(value) == 0 else value


def itp_A_constant(lambda1: float, lambda2: float, log_base: float = math.e) -> float:
    """1/i coefficient of the ITP norm deltas: log 2 * prod lambda^(lambda/(1+lambda)) / (1+lambda)."""
    _check_lambdas(lambda1, lambda2)
    factor = 1.0
    for lam in (lambda1, lambda2):
        factor *= lam ** (lam / (1 + lam)) / (1 + lam)
    return math.log(2) / log_factor(log_base) * factor


def _exponents(i: np.ndarray, p_rule: str) -> np.ndarray:
    if p_rule not in P_RULES:
        raise ValueError(f"Unknown p_rule '{p_rule}'; expected one of {P_RULES}.")
    return 1 + (1.0 if p_rule == "pair" else 2.0) / i


def itp_norm_deltas(
    lambda1: float, lambda2: float, i_max: int, p_rule: str = "pair", i_min: int = 1
) -> np.ndarray:
    """(1 - 2^(1/p - 1)) * ||omega_2i||_p for i = i_min..i_max: pure phi, rank-2 equal psi."""
    if i_min < 1 or i_max < i_min:
        raise ValueError(f"Need 1 <= i_min <= i_max, got {i_min}, {i_max}.")
    i = np.arange(i_min, i_max + 1, dtype=float)
    p = _exponents(i, p_rule)
    return (1 - 2 ** (1 / p - 1)) * itp_norm(lambda1, lambda2, i, p)


def fit_itp_A(lambda1: float, lambda2: float, i_min: int = 50, i_max: int = 400) -> float:
    """Least-squares fit f_i = A/i + B/i^2 over the pair-rule norm deltas."""
    i = np.arange(i_min, i_max + 1, dtype=float)
    f = itp_norm_deltas(lambda1, lambda2, i_max, i_min=i_min)
    design = np.column_stack([1 / i, 1 / i ** 2])
    coeffs, *_ = np.linalg.lstsq(design, f, rcond=None)
    return float(coeffs[0])


def itp_asymptotic_bound(
    lambda1: float, lambda2: float, epsilon: float, p_rule: str = "pair"
) -> ItpAsymptoticBound:
    """
    Clipped sum of the ITP norm deltas next to A log(A / epsilon).
    The i = 0 trace-norm term contributes the fixed 1 inside 1/2 (1 + tail).
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}.")
    A = itp_A_constant(lambda1, lambda2)

    # deltas decrease like A/i, so none exceed epsilon past a few multiples of A/epsilon
    i_max = int(math.ceil(4 * A / epsilon)) + 100
    deltas = itp_norm_deltas(lambda1, lambda2, i_max, p_rule)
    above = deltas > epsilon
    tail = float((deltas[above] - epsilon).sum())

    asymptote = A * math.log(A / epsilon)
    logger.debug(
        f"[Bounds] ITP eps={epsilon:.1e}: {int(above.sum())} terms, tail={tail:.6f}, "
        f"A log(A/eps)={asymptote:.6f}"
    )
    return ItpAsymptoticBound(
        direct_sum=0.5 * (1 + tail),
        tail_sum=tail,
        asymptote=asymptote,
        A=A,
        contributing_terms=int(above.sum()),
        epsilon=epsilon,
        lambda1=lambda1,
        lambda2=lambda2,
    )
