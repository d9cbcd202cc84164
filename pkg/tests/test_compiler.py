import math

import numpy as np
import pytest

from src.circuit.compiler import SWAP_ANGLE, compile_permutation, schedule_locality
from src.circuit.evolution import evolve_schedule, schedule_unitary
from src.circuit.schedule import schedule_cost
from src.embezzle.families import vdh_schmidt_vector
from src.embezzle.protocol import (
    EmbezzleTask,
    chain_order_permutation,
    embezzle_permutation,
    one_sided_deviation,
    permutation_matrix,
)
from src.qcore.hilbert import ChainSpec, DensityMatrix, HilbertFactorization
from src.qcore.operations import tensor_product, trace_distance_norm


def assert_realizes(schedule, perm, dims):
    U = schedule_unitary(schedule, dims)
    P = permutation_matrix(perm)
    phase = U[perm[0], 0]
    assert abs(phase) == pytest.approx(1.0)
    assert np.allclose(U, phase * P, atol=1e-7)


def test_adjacent_transposition_is_one_rotation():
    spec = ChainSpec(n=1, d=2)
    schedule = compile_permutation([1, 0, 2, 3], spec, phase_correction=False)
    assert len(schedule.slices) == 1
    assert schedule_cost(schedule) == pytest.approx(SWAP_ANGLE)
    term = schedule.terms[0]
    assert (term.first, term.last) == (1, 1)
    assert term.controls == ((0, 0),)


def test_phase_slice_restores_exact_permutation():
    spec = ChainSpec(n=1, d=2)
    schedule = compile_permutation([1, 0, 2, 3], spec)
    assert len(schedule.slices) == 2
    assert_realizes(schedule, np.array([1, 0, 2, 3]), spec.dims)


def test_identity_gives_empty_schedule():
    schedule = compile_permutation(np.arange(8), ChainSpec(n=2, d=2))
    assert schedule.slices == []
    assert schedule_cost(schedule) == 0.0


@pytest.mark.parametrize("rng_seed", [0, 1, 2])
def test_random_qutrit_permutations(rng_seed):
    spec = ChainSpec(n=1, d=3)
    perm = np.random.default_rng(rng_seed).permutation(spec.total_dim)
    schedule = compile_permutation(perm, spec)
    assert_realizes(schedule, perm, spec.dims)


def test_long_cycle_on_qubit_chain():
    spec = ChainSpec(n=2, d=2)
    perm = np.roll(np.arange(8), 1)
    schedule = compile_permutation(perm, spec)
    assert_realizes(schedule, perm, spec.dims)
    rotations = [sl for sl in schedule.slices if "phase" not in sl.coefficients]
    assert schedule_cost(schedule) >= len(rotations) * SWAP_ANGLE - 1e-12


def test_compile_rejects_bad_input():
    with pytest.raises(ValueError):
        compile_permutation([0, 0, 1, 2], ChainSpec(n=1, d=2))
    with pytest.raises(ValueError):
        compile_permutation(np.arange(4), ChainSpec(n=2, d=2))
    with pytest.raises(ValueError):
        compile_permutation(np.arange(2 ** 11), ChainSpec(n=10, d=2))


def test_compiled_embezzler_matches_permutation_protocol():
    N, d_e = 4, 2
    task = EmbezzleTask.epr(d_e)
    catalyst = vdh_schmidt_vector(N)
    perm, _ = embezzle_permutation(catalyst, task)

    spec = ChainSpec(n=2, d=2, d_e=d_e)
    schedule = compile_permutation(chain_order_permutation(perm, N, d_e), spec)

    omega_chain = DensityMatrix.trusted(HilbertFactorization((2, 2)), np.diag(catalyst))
    initial = tensor_product(task.phi_reduced(), omega_chain)
    target = tensor_product(task.psi_reduced(), omega_chain)
    final = evolve_schedule(initial, schedule, substeps=2, record_states=False).final

    omega = DensityMatrix.trusted(HilbertFactorization((N,)), np.diag(catalyst))
    expected = one_sided_deviation(omega, task, permutation_matrix(perm))
    assert trace_distance_norm(final, target) == pytest.approx(expected, abs=1e-6)
    assert expected == pytest.approx(0.56)
    assert math.isfinite(schedule_cost(schedule))


def test_compiled_embezzler_couples_the_whole_chain():
    N, d_e = 4, 2
    perm, _ = embezzle_permutation(vdh_schmidt_vector(N), EmbezzleTask.epr(d_e))
    spec = ChainSpec(n=2, d=2, d_e=d_e)
    schedule = compile_permutation(chain_order_permutation(perm, N, d_e), spec)

    assert schedule.terms
    assert all(term.sites == (0, 1, 2) for term in schedule.terms)
    assert schedule_locality(schedule) == spec.n + 1
    rotations = [term for term in schedule.terms if term.label != "phase"]
    assert all(term.first == term.last and len(term.controls) == spec.n for term in rotations)


def test_locality_of_small_schedules():
    assert schedule_locality(compile_permutation(np.arange(4), ChainSpec(n=1, d=2))) == 0
    schedule = compile_permutation([1, 0, 2, 3], ChainSpec(n=1, d=2), phase_correction=False)
    assert schedule_locality(schedule) == 2
