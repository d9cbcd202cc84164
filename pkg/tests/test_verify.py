import math

import numpy as np
import pytest

from src.circuit.generators import GeneratorBasis, build_generators, build_pair_generators
from src.circuit.schedule import CostMode, Schedule, single_slice_schedule
from src.qcore.hilbert import ChainSpec, Ket
from src.qcore.random_states import random_hermitian, random_pure_ket
from src.verify.checks import (
    SUITES,
    check_cost_entropy_chain,
    check_cut_entropy_chain,
    check_fannes,
    check_norm_monotonicity,
    check_schatten_cost_chain,
    check_sie,
    cost_entropy_margin,
    cut_entropy_families,
    cut_entropy_margin,
    entropy_rate,
    random_schedule,
    richardson_order,
    run_suite,
)
from src.verify.record import run_trials

QUBITS3 = ChainSpec(n=2, d=2)
X = np.array([[0, 1], [1, 0]], dtype=complex)


# --------------------------- TRIAL RUNNER --------------------------- #
def test_run_trials_counts_violations():
    record = run_trials("always_fails", 4, seed=0, trial_fn=lambda rng, t: (1.0, 0.0))
    assert record.violations == 4
    assert record.worst_margin == pytest.approx(-1.0)
    assert not record.passed


def test_run_trials_slack_absorbs_rounding():
    record = run_trials("tiny", 3, seed=0, trial_fn=lambda rng, t: (1e-9, 0.0), slack=1e-7)
    assert record.passed


def test_run_trials_independent_of_workers():
    def trial(rng, t):
        return float(rng.normal()), 0.0

    serial = run_trials("normal", 12, seed=42, trial_fn=trial)
    pooled = run_trials("normal", 12, seed=42, trial_fn=trial, workers=4)
    assert serial.worst_margin == pooled.worst_margin
    assert serial.violations == pooled.violations


def test_run_trials_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_trials("none", 0, seed=0, trial_fn=lambda rng, t: (0.0, 0.0))


# --------------------------- SIE --------------------------- #
def test_local_hamiltonian_has_zero_entropy_rate():
    psi = Ket.basis(QUBITS3.dims, 0)
    assert entropy_rate(psi, np.kron(X, np.eye(2)), 0) == pytest.approx(0.0, abs=1e-9)


def test_central_difference_is_second_order():
    rng = np.random.default_rng(8)
    psi = random_pure_ket(QUBITS3.dims, rng)
    H = random_hermitian(4, rng, norm=1.0)
    assert 1.7 < richardson_order(psi, H, 0) < 2.3


def test_sie_check_passes():
    record = check_sie(6, QUBITS3, seed=7)
    assert record.check_name == "sie"
    assert record.passed
    assert record.parameters["c"] == 22.0


# --------------------------- FANNES / NORMS --------------------------- #
def test_fannes_check_passes():
    assert check_fannes(8, 4, seed=3).passed
    with pytest.raises(ValueError):
        check_fannes(1, 1, seed=3)
    with pytest.raises(ValueError):
        check_fannes(1, 65, seed=3)


def test_norm_monotonicity_check_passes():
    record = check_norm_monotonicity(8, (2, 3, 2), seed=5, workers=2)
    assert record.passed
    assert record.parameters["dims"] == "2x3x2"


# --------------------------- CIRCUIT CHAINS --------------------------- #
def test_random_schedule_is_valid():
    terms = build_generators(QUBITS3, 2)
    schedule = random_schedule(terms, np.random.default_rng(0), max_slices=4, max_terms=3)
    assert 1 <= len(schedule.slices) <= 4
    assert sum(sl.duration for sl in schedule.slices) == pytest.approx(1.0)
    assert all(1 <= len(sl.coefficients) <= 3 for sl in schedule.slices)


def test_empty_schedule_margin():
    rho = Ket.basis(QUBITS3.dims, 0).density()
    assert cost_entropy_margin(rho, Schedule(), 2) == (0.0, 0.0)


def test_cost_entropy_chain_passes():
    record = check_cost_entropy_chain(3, QUBITS3, seed=11, substeps=4)
    assert record.passed
    assert record.parameters["basis"] == "auto"


def test_schatten_cost_chain_passes():
    record = check_schatten_cost_chain(
        3, QUBITS3, seed=12, substeps=4, basis=GeneratorBasis.GELLMANN_LIKE
    )
    assert record.passed
    assert record.parameters["basis"] == "gellmann_like"


def test_long_range_pair_margin_per_cut_and_summed():
    schedule = single_slice_schedule(
        build_pair_generators(QUBITS3, GeneratorBasis.PAULI_LIKE), {"0~2:X.Y": math.pi / 4}
    )
    rho = Ket.basis(QUBITS3.dims, 0).density()
    lhs, rhs = cut_entropy_margin(rho, schedule, substeps=2, summed_mode=CostMode.DISTANCE_PENALTY)
    # one ebit across both cuts; the tightest check is a single cut
    assert lhs == pytest.approx(math.log(2), abs=1e-9)
    assert rhs == pytest.approx(22 * math.log(2) * math.pi / 4)


def test_cut_entropy_families():
    families = cut_entropy_families(QUBITS3)
    assert list(families) == ["window_2", "window_3", "pairs"]
    assert {t.penalty for t in families["pairs"]} == {1.0, 2.0}
    assert list(cut_entropy_families(ChainSpec(n=1, d=2))) == ["window_2", "pairs"]


def test_cut_entropy_chain_passes():
    record = check_cut_entropy_chain(6, QUBITS3, seed=13, substeps=4)
    assert record.check_name == "cut_entropy"
    assert record.passed
    assert record.parameters["families"] == "window_2,window_3,pairs"


def test_cut_entropy_chain_with_larger_embezzler():
    record = check_cut_entropy_chain(4, ChainSpec(n=1, d=2, d_e=3), seed=5, substeps=4, workers=2)
    assert record.passed
    assert record.parameters["d_e"] == 3


# --------------------------- SUITES --------------------------- #
def test_run_suite_all_small():
    records = run_suite("all", 2, QUBITS3, seed=1, substeps=2)
    assert [r.check_name for r in records] == list(SUITES)
    assert all(r.passed for r in records)


def test_run_suite_rejects_unknown_name():
    with pytest.raises(ValueError):
        run_suite("nope", 1, QUBITS3, seed=0)
