# src/pipeline/lab_processor.py

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.bounds.entropy_bounds import (
    INV_E,
    asymptotic_bound,
    coarse_grained_bound,
    coarse_grained_cap,
    entropy_sum_bound,
    fannes_bound,
    finite_n_bound,
    klocal_adjusted_bound,
)
from src.bounds.params import BoundParams, KLocalRemedy
from src.bounds.schatten_bounds import (
    fit_itp_A,
    itp_A_constant,
    itp_asymptotic_bound,
    itp_norm,
    itp_norm_deltas,
    schatten_bound,
)
from src.circuit.compiler import compile_permutation, schedule_locality
from src.circuit.evolution import entropy_flow, evolve_schedule
from src.circuit.generators import GeneratorBasis
from src.circuit.schedule import save_schedule, schedule_cost
from src.embezzle.families import (
    ItpFamily,
    VdhFamily,
    itp_reduced_state,
    itp_spectrum,
    vdh_schmidt_vector,
)
from src.embezzle.protocol import (
    EmbezzleTask,
    chain_order_permutation,
    diagonal_deviation,
    embezzle_permutation,
    entanglement_delta,
    one_sided_deviation,
    permutation_matrix,
    two_sided_overlap,
)
from src.pipeline.report_writer import report_path, write_report
from src.pipeline.run_config import Command, RunConfig, formula_list
from src.qcore.hilbert import ChainSpec, DensityMatrix, HilbertFactorization
from src.qcore.operations import schatten_norm, tensor_product, trace_distance_norm
from src.utils.config import COMPILE_DIM_CAP, DIM_CAP, SWEEP_MAX_CUTS
from src.utils.logger import logger
from src.verify.checks import run_suite

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATION = 2

# columns that must not decrease as epsilon shrinks / delta_S grows
MONOTONE_EPSILON = (
    "finite_n_total",
    "asymptotic_leading",
    "klocal_total",
    "coarse_grained_total",
    "itp_direct_sum",
)
MONOTONE_DELTA_S = ("finite_n_total", "asymptotic_leading", "klocal_total", "coarse_grained_total")
DENSE_ITP_SITES = 8


@dataclass
class RunResult:
    exit_status: int
    report_path: str
    frame: pd.DataFrame
    artifacts: List[str] = field(default_factory=list)


@dataclass
class _Outcome:
    frame: pd.DataFrame
    status: int = EXIT_OK
    extra: Optional[Dict[str, Any]] = None
    artifacts: List[str] = field(default_factory=list)


def _epr_task(d: int, d_e: int) -> EmbezzleTask:
    """Product |00> to the d-dimensional maximally entangled state inside d_e."""
    return EmbezzleTask.from_schmidt([1.0], np.full(d, 1.0 / d), d_e)


def _chain_length(N: int, d: int) -> int:
    n = int(round(math.log(N) / math.log(d)))
    if d ** n != N:
        raise ValueError(f"N={N} is not a power of d={d}; the catalyst cannot sit on a chain.")
    return n


class LabProcessor:
    """
    Orchestrates one lab run:
    RunConfig -> dispatch (simulate | bounds | sweep | verify | compile) -> rows -> report.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.params: Dict[str, Any] = config.parameters
        self.last_frame: Optional[pd.DataFrame] = None

    # ------------------------------ RUN ------------------------------ #
    def run(self) -> RunResult:
        handlers = {
            Command.SIMULATE: self.simulate,
            Command.BOUNDS: self.bounds,
            Command.SWEEP: self.sweep,
            Command.VERIFY: self.verify,
            Command.COMPILE: self.compile,
        }
        command = self.config.command
        logger.info(f"[LAB] Dispatching '{command.value}' with {len(self.params)} parameters")

        try:
            outcome = handlers[command]()
        except (ValueError, RuntimeError) as exc:
            logger.error(f"[LAB] '{command.value}' failed: {exc}")
            raise

        self.last_frame = outcome.frame
        path = write_report(outcome.frame, self.config, outcome.extra)
        logger.info(f"[LAB] '{command.value}' finished with exit status {outcome.status}")
        return RunResult(outcome.status, path, outcome.frame, outcome.artifacts)

    # ---------------------------- HELPERS ---------------------------- #
    @property
    def d(self) -> int:
        return int(self.params["d"])

    @property
    def d_e(self) -> int:
        return int(self.params.get("d_e") or self.params["d"])

    @property
    def log_base(self) -> float:
        return float(self.params["log_base"])

    def bound_params(self, delta_S: float, epsilon: float, k: Optional[int] = None) -> BoundParams:
        return BoundParams(
            delta_S=delta_S,
            epsilon=epsilon,
            d=self.d,
            d_e=self.d_e,
            c=self.params["c"],
            k=k or self.params["k"],
            m=self.params["m"],
            log_base=self.log_base,
        )

    def _itp_family(self, n_pairs: int) -> ItpFamily:
        return ItpFamily(
            lambda1=self.params["lambda1"], lambda2=self.params["lambda2"], n_pairs=n_pairs
        )

    # ---------------------------- SIMULATE ---------------------------- #
    def simulate(self) -> _Outcome:
        if self.params["family"] == "vdh":
            row = self.vdh_row(int(self.params["N"]))
            logger.info(
                f"[LAB] vdH N={row['N']}: overlap={row['overlap']:.6f}, "
                f"bound log d/log N={row['precision_bound']:.6f}"
            )
            return _Outcome(pd.DataFrame([row]))
        return _Outcome(self.itp_norm_frame(int(self.params.get("n", 4))))

    def vdh_row(self, N: int) -> Dict[str, Any]:
        d, d_e = self.d, self.d_e
        task = _epr_task(d, d_e)
        catalyst = vdh_schmidt_vector(N)
        perm, overlap = embezzle_permutation(catalyst, task)

        one_sided = float("nan")
        if N * d_e <= COMPILE_DIM_CAP:
            omega = DensityMatrix.trusted(HilbertFactorization((N,)), np.diag(catalyst))
            one_sided = one_sided_deviation(omega, task, permutation_matrix(perm))

        two_sided = float("nan")
        if N * N <= DIM_CAP:
            P = permutation_matrix(perm)
            two_sided = two_sided_overlap(VdhFamily(N=N).catalyst_ket(), task, P, P)

        bound = math.log(d) / math.log(N)
        return {
            "family": "vdh",
            "N": N,
            "d": d,
            "d_e": d_e,
            "overlap": overlap,
            "infidelity": 1.0 - overlap,
            "precision_bound": bound,
            "within_bound": bool(1.0 - overlap <= bound),
            "diagonal_deviation": diagonal_deviation(catalyst, task, perm),
            "one_sided_deviation": one_sided,
            "two_sided_overlap": two_sided,
            "delta_S": entanglement_delta(task, self.log_base),
        }

    def itp_norm_frame(self, n_pairs: int) -> pd.DataFrame:
        """Closed-form ITP norms at p = 1 + 1/i against spectra and dense matrices."""
        family = self._itp_family(max(n_pairs, 1))
        lam1, lam2 = family.lambda1, family.lambda2
        rows = []
        for i in range(n_pairs + 1):
            p = 1.0 + 1.0 / i if i else 1.0
            spectrum_norm = (
                float(np.sum(itp_spectrum(family, 2 * i) ** p) ** (1 / p))
                if 4 ** i <= DIM_CAP
                else float("nan")
            )
            dense = (
                schatten_norm(itp_reduced_state(family, 2 * i), p)
                if 2 * i <= DENSE_ITP_SITES
                else float("nan")
            )
            rows.append(
                {
                    "i": i,
                    "sites": 2 * i,
                    "p": p,
                    "closed_form": itp_norm(lam1, lam2, i, p),
                    "spectrum_norm": spectrum_norm,
                    "matrix_norm": dense,
                    "norm_delta": (1 - 2 ** (1 / p - 1)) * itp_norm(lam1, lam2, i, p),
                }
            )
        return pd.DataFrame(rows)

    # ----------------------------- BOUNDS ----------------------------- #
    def bounds(self) -> _Outcome:
        p = self.params
        formula = p["formula"]
        logger.info(f"[LAB] Evaluating bound '{formula}'")

        if formula == "fannes":
            value = fannes_bound(p["epsilon"], self.d, self.log_base)
            return _Outcome(pd.DataFrame([{"formula": formula, "epsilon": p["epsilon"], "dim": self.d, "value": value}]))

        if formula == "entropy_sum":
            per_cut = list(p["delta_S_grid"])
            value = entropy_sum_bound(per_cut, self.d, p["c"], self.log_base)
            return _Outcome(pd.DataFrame([{"formula": formula, "cuts": len(per_cut), "value": value}]))

        if formula == "finite_n":
            report = finite_n_bound(self.bound_params(p["delta_S"], p["epsilon"]), int(p["n"]))
            return _Outcome(report.to_frame())

        if formula == "klocal":
            report = klocal_adjusted_bound(
                self.bound_params(p["delta_S"], p["epsilon"]), int(p["n"]), KLocalRemedy(p["remedy"])
            )
            return _Outcome(report.to_frame())

        if formula == "coarse_grained":
            params = self.bound_params(p["delta_S"], p["epsilon"])
            frame = coarse_grained_bound(params, int(p["m"]), p.get("n")).to_frame()
            frame["cap"] = coarse_grained_cap(params, int(p["m"]))
            return _Outcome(frame)

        if formula == "asymptotic":
            if "M" in p:
                params = BoundParams.from_M(
                    p["delta_S"], p["M"], self.d, d_e=self.d_e, c=p["c"], k=p["k"], m=p["m"], log_base=self.log_base
                )
            else:
                params = self.bound_params(p["delta_S"], p["epsilon"])
            result = asymptotic_bound(params)
            row = {
                "formula": formula,
                "delta_S": params.delta_S,
                "epsilon": params.epsilon,
                "M": result.M,
                "M_real": result.M_real,
                "exact_M_sum": result.exact_M_sum,
                "leading_term": result.leading_term,
                "clipped_sum": result.clipped_sum,
                "relative_gap": result.relative_gap,
            }
            return _Outcome(pd.DataFrame([row]))

        if formula == "schatten":
            deltas = itp_norm_deltas(p["lambda1"], p["lambda2"], int(p["n"]))
            total = schatten_bound(deltas, p["epsilon"])
            frame = pd.DataFrame(
                {
                    "formula": formula,
                    "i": np.arange(1, deltas.size + 1),
                    "norm_delta": deltas,
                    "clipped": np.clip(deltas - p["epsilon"], 0.0, None),
                    "total": total,
                }
            )
            return _Outcome(frame)

        if formula == "itp_norm":
            return _Outcome(self.itp_norm_frame(int(p["n"])))

        if formula == "itp_A":
            closed = itp_A_constant(p["lambda1"], p["lambda2"])
            fitted = fit_itp_A(p["lambda1"], p["lambda2"])
            row = {"formula": formula, "A": closed, "A_fit": fitted, "relative_gap": abs(fitted - closed) / closed}
            return _Outcome(pd.DataFrame([row]))

        # itp_asymptotic
        result = itp_asymptotic_bound(p["lambda1"], p["lambda2"], p["epsilon"])
        row = {"formula": formula, **result.model_dump(), "ratio": result.ratio}
        return _Outcome(pd.DataFrame([row]))

    # ----------------------------- SWEEP ----------------------------- #
    def _grid(self) -> List[Tuple[Optional[float], Optional[float], Optional[int]]]:
        p = self.params
        eps = list(p.get("epsilon_grid") or [p.get("epsilon")])
        dS = list(p.get("delta_S_grid") or [p.get("delta_S")])
        Ns = list(p.get("N_grid") or [p.get("N")])
        grid = list(product(eps, dS, Ns))
        if not grid:
            raise ValueError("Sweep grid is empty.")
        return grid

    def sweep_point(self, epsilon: Optional[float], delta_S: Optional[float], N: Optional[int]) -> Dict[str, Any]:
        p = self.params
        formulas = formula_list(p["formula"])
        row: Dict[str, Any] = {"epsilon": epsilon, "delta_S": delta_S, "N": N}

        if epsilon is not None and delta_S is not None:
            params = self.bound_params(delta_S, epsilon)
            # past cut M_real every per-cut term has clipped to zero
            n = p.get("n")
            if not n:
                n = math.ceil(params.M_real) + 1
                if n > SWEEP_MAX_CUTS:
                    logger.warning(
                        f"[LAB] eps={epsilon} needs {n} cuts; truncating per-cut sums at {SWEEP_MAX_CUTS}"
                    )
                    n = SWEEP_MAX_CUTS
            n = int(n)
            if "finite_n" in formulas:
                row["finite_n_total"] = finite_n_bound(params, n).total
            if "klocal" in formulas:
                row["klocal_total"] = klocal_adjusted_bound(params, n, KLocalRemedy(p["remedy"])).total
            if "coarse_grained" in formulas:
                row["coarse_grained_total"] = coarse_grained_bound(params, int(p["m"]), n).total
            if "asymptotic" in formulas:
                if params.M_real >= 1:
                    result = asymptotic_bound(params)
                    row["asymptotic_leading"] = result.leading_term
                    row["asymptotic_exact"] = result.exact_M_sum
                else:
                    row["asymptotic_leading"] = row["asymptotic_exact"] = float("nan")

        if "itp_asymptotic" in formulas and epsilon is not None:
            result = itp_asymptotic_bound(p["lambda1"], p["lambda2"], epsilon)
            row["itp_direct_sum"] = result.direct_sum
            row["itp_tail_sum"] = result.tail_sum
            row["itp_asymptote"] = result.asymptote
            row["itp_ratio"] = result.ratio

        if "vdh" in formulas and N is not None:
            vdh = self.vdh_row(int(N))
            row["vdh_overlap"] = vdh["overlap"]
            row["vdh_infidelity"] = vdh["infidelity"]
            row["vdh_precision_bound"] = vdh["precision_bound"]
            row["vdh_within_bound"] = vdh["within_bound"]
        return row

    def sweep(self) -> _Outcome:
        grid = self._grid()
        workers = int(self.params["workers"])
        logger.info(f"[LAB] Sweeping {len(grid)} grid points with {workers} worker(s)")

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(lambda point: self.sweep_point(*point), grid))
        else:
            rows = [self.sweep_point(*point) for point in grid]

        frame = pd.DataFrame(rows)
        failures = monotonicity_failures(frame)
        if "vdh_within_bound" in frame and not frame["vdh_within_bound"].all():
            failures.append("vdh_within_bound")

        if failures:
            logger.warning(f"[LAB] Sweep columns failed the post-hoc checks: {failures}")
            return _Outcome(frame, EXIT_VIOLATION, {"failed_checks": failures})
        return _Outcome(frame, extra={"failed_checks": []})

    # ----------------------------- VERIFY ----------------------------- #
    def verify(self) -> _Outcome:
        p = self.params
        spec = ChainSpec(n=int(p.get("n", 4)), d=self.d, d_e=self.d_e)
        records = run_suite(
            p["suite"],
            int(p["trials"]),
            spec,
            int(p["seed"]),
            workers=int(p["workers"]),
            substeps=int(p["substeps"]),
            basis=GeneratorBasis(p["basis"]) if "basis" in p else None,
        )
        frame = pd.DataFrame(
            [
                {
                    **r.model_dump(exclude={"parameters"}),
                    "passed": r.passed,
                    "check_parameters": ";".join(f"{k}={v}" for k, v in sorted(r.parameters.items())),
                }
                for r in records
            ]
        )
        status = EXIT_OK if all(r.passed for r in records) else EXIT_VIOLATION
        return _Outcome(frame, status, {"records": [r.model_dump() for r in records]})

    # ----------------------------- COMPILE ----------------------------- #
    def compile(self) -> _Outcome:
        p = self.params
        N, d, d_e = int(p["N"]), self.d, self.d_e
        n = _chain_length(N, d)
        spec = ChainSpec(n=n, d=d, d_e=d_e)

        task = _epr_task(d, d_e)
        catalyst = vdh_schmidt_vector(N)
        perm, overlap = embezzle_permutation(catalyst, task)
        schedule = compile_permutation(chain_order_permutation(perm, N, d_e), spec)

        schedule_file = os.path.splitext(report_path(self.config))[0] + "_schedule.json"
        save_schedule(schedule, schedule_file)

        omega = DensityMatrix.trusted(HilbertFactorization((d,) * n), np.diag(catalyst))
        initial = tensor_product(task.phi_reduced(), omega)
        target = tensor_product(task.psi_reduced(), omega)
        traj = evolve_schedule(initial, schedule, substeps=int(p["substeps"]), record_states=False)

        measured_eps = trace_distance_norm(traj.final, target)
        omega_flat = DensityMatrix.trusted(HilbertFactorization((N,)), np.diag(catalyst))
        permutation_eps = one_sided_deviation(omega_flat, task, permutation_matrix(perm))
        delta_S = entanglement_delta(task, self.log_base)
        cost = schedule_cost(schedule)

        lower = self._finite_bound_or_zero(delta_S, measured_eps, n)
        lower_infidelity = self._finite_bound_or_zero(delta_S, 1.0 - overlap, n)
        flow_bound = (
            entropy_sum_bound(entropy_flow(traj, self.log_base), d, p["c"], self.log_base)
            if schedule.slices
            else 0.0
        )

        # controlled rotations couple every site; the k=2 columns are kept for comparison
        locality = max(schedule_locality(schedule), 2)
        remedy = KLocalRemedy(p["remedy"])
        klocal = self._finite_bound_or_zero(delta_S, measured_eps, n, locality, remedy)
        klocal_infidelity = self._finite_bound_or_zero(delta_S, 1.0 - overlap, n, locality, remedy)
        flow_bound_klocal = flow_bound / ((locality // 2) * (locality - 1))

        row = {
            "N": N,
            "d": d,
            "d_e": d_e,
            "n": n,
            "slices": len(schedule.slices),
            "cost": cost,
            "measured_epsilon": measured_eps,
            "permutation_epsilon": permutation_eps,
            "overlap": overlap,
            "delta_S": delta_S,
            "finite_n_bound": lower,
            "finite_n_bound_infidelity": lower_infidelity,
            "entropy_flow_bound": flow_bound,
            "k2_bounds_below_cost": bool(cost > max(lower, lower_infidelity, flow_bound)),
            "locality": locality,
            "klocal_remedy": remedy.value,
            "klocal_bound": klocal,
            "klocal_bound_infidelity": klocal_infidelity,
            "entropy_flow_bound_klocal": flow_bound_klocal,
            "bounds_below_cost": bool(cost > max(klocal, klocal_infidelity, flow_bound_klocal)),
            "schedule_path": schedule_file,
        }
        logger.info(
            f"[LAB] Compiled N={N} circuit: cost={cost:.4f}, eps={measured_eps:.4f}, "
            f"locality={locality}, k-local bound={klocal:.4f}, k=2 bound={lower:.4f}"
        )
        return _Outcome(pd.DataFrame([row]), artifacts=[schedule_file])

    def _finite_bound_or_zero(
        self,
        delta_S: float,
        epsilon: float,
        n: int,
        k: Optional[int] = None,
        remedy: Optional[KLocalRemedy] = None,
    ) -> float:
        """
        Finite-n bound (k-local form when `remedy` is given), or the trivial bound 0 where
        the continuity estimate does not apply.
        """
        if epsilon > INV_E or delta_S <= 0:
            return 0.0
        params = self.bound_params(delta_S, max(epsilon, 1e-15), k)
        if remedy is None:
            return finite_n_bound(params, n).total
        return klocal_adjusted_bound(params, n, remedy).total


def monotonicity_failures(frame: pd.DataFrame, tol: float = 1e-12) -> List[str]:
    """Bound columns that decrease as epsilon shrinks or as delta_S grows."""
    failures: List[str] = []
    checks = (
        ("epsilon", ["delta_S", "N"], MONOTONE_EPSILON, False),
        ("delta_S", ["epsilon", "N"], MONOTONE_DELTA_S, True),
    )
    for axis, keys, columns, ascending in checks:
        if frame[axis].isna().all():
            continue
        for column in columns:
            if column not in frame:
                continue
            for _, group in frame.groupby(keys, dropna=False):
                values = group.sort_values(axis, ascending=ascending)[column].dropna().to_numpy()
                if np.any(np.diff(values) < -tol):
                    failures.append(f"{column} vs {axis}")
                    break
    return failures
