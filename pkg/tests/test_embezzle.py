import math

import numpy as np
import pytest

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
    purification,
    two_sided_overlap,
    uhlmann_overlap,
    uhlmann_partner,
)
from src.qcore.hilbert import DensityMatrix
from src.qcore.operations import fidelity
from src.qcore.random_states import random_mixed_state


@pytest.fixture
def epr_task():
    return EmbezzleTask.epr(2)


# --------------------------- FAMILIES --------------------------- #
def test_vdh_weights_are_harmonic():
    assert np.allclose(vdh_schmidt_vector(4), [0.48, 0.24, 0.16, 0.12])
    with pytest.raises(ValueError):
        vdh_schmidt_vector(1)


def test_vdh_catalyst_states():
    family = VdhFamily(N=4)
    assert np.allclose(np.diag(family.catalyst_state().entries).real, family.schmidt_vector())
    ket = family.catalyst_ket()
    assert ket.factorization.dims == (4, 4)
    assert np.linalg.norm(ket.amplitudes) == pytest.approx(1.0)


def test_itp_spectrum_on_two_sites():
    family = ItpFamily(lambda1=0.5, lambda2=0.25, n_pairs=2)
    assert np.allclose(itp_spectrum(family, 2), np.array([1, 0.25, 0.5, 0.125]) / 1.875)
    assert itp_spectrum(family, 0).tolist() == [1.0]
    assert np.trace(itp_reduced_state(family, 4).entries).real == pytest.approx(1.0)


def test_itp_rejects_bad_sites_and_lambdas():
    family = ItpFamily(lambda1=0.5, lambda2=0.25, n_pairs=2)
    with pytest.raises(ValueError):
        itp_spectrum(family, 3)
    with pytest.raises(ValueError):
        itp_spectrum(family, 6)
    with pytest.raises(ValueError):
        ItpFamily(lambda1=0.5, lambda2=0.5, n_pairs=1)
    with pytest.raises(ValueError):
        ItpFamily(lambda1=1.5, lambda2=0.5, n_pairs=1)


# --------------------------- TASKS --------------------------- #
def test_task_requires_product_phi():
    with pytest.raises(ValueError):
        EmbezzleTask.from_schmidt([0.5, 0.5], [0.5, 0.5], 2)
    with pytest.raises(ValueError):
        EmbezzleTask.from_schmidt([1.0], [0.2, 0.3, 0.5], 2)


def test_trivial_task_is_accepted():
    task = EmbezzleTask.from_schmidt([1.0], [1.0], 2)
    assert entanglement_delta(task) == 0.0
    perm, overlap = embezzle_permutation(vdh_schmidt_vector(4), task)
    assert overlap == pytest.approx(1.0)
    assert diagonal_deviation(vdh_schmidt_vector(4), task, perm) == pytest.approx(0.0)


def test_entanglement_delta_of_epr(epr_task):
    assert entanglement_delta(epr_task, log_base=2) == pytest.approx(1.0)
    assert entanglement_delta(epr_task) == pytest.approx(math.log(2))


# --------------------------- PERMUTATION PROTOCOL --------------------------- #
def test_overlap_for_small_catalysts(epr_task):
    _, overlap2 = embezzle_permutation(vdh_schmidt_vector(2), epr_task)
    assert overlap2 == pytest.approx(math.sqrt(2) / 3 + 1 / 3)
    _, overlap4 = embezzle_permutation(vdh_schmidt_vector(4), epr_task)
    assert overlap4 == pytest.approx(0.8380, abs=1e-4)


def test_diagonal_deviation_matches_dense(epr_task):
    catalyst = vdh_schmidt_vector(4)
    perm, overlap = embezzle_permutation(catalyst, epr_task)
    omega = VdhFamily(N=4).catalyst_state()
    dense = one_sided_deviation(omega, epr_task, permutation_matrix(perm))
    assert diagonal_deviation(catalyst, epr_task, perm) == pytest.approx(0.56)
    assert dense == pytest.approx(0.56)
    assert dense <= 2 * math.sqrt(1 - overlap ** 2) + 1e-12


def test_deviation_shrinks_with_catalyst_rank(epr_task):
    deviations = []
    for N in (4, 16, 64, 256):
        catalyst = vdh_schmidt_vector(N)
        perm, _ = embezzle_permutation(catalyst, epr_task)
        deviations.append(diagonal_deviation(catalyst, epr_task, perm))
    assert all(b < a for a, b in zip(deviations, deviations[1:]))
    assert deviations[1] == pytest.approx(0.392, abs=1e-3)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("N", [2 ** e for e in range(4, 13)])
def test_vdh_precision_law(d, N):
    _, overlap = embezzle_permutation(vdh_schmidt_vector(N), EmbezzleTask.epr(d))
    assert 1 - overlap <= math.log(d) / math.log(N)


def test_two_sided_overlap_with_mirrored_permutation(epr_task):
    family = VdhFamily(N=8)
    perm, overlap = embezzle_permutation(family.schmidt_vector(), epr_task)
    P = permutation_matrix(perm)
    assert two_sided_overlap(family.catalyst_ket(), epr_task, P, P) == pytest.approx(overlap)


def test_two_sided_overlap_rejects_non_unitary(epr_task):
    with pytest.raises(ValueError):
        two_sided_overlap(VdhFamily(N=2).catalyst_ket(), epr_task, np.eye(4) * 2, np.eye(4))


def test_permutation_inputs_are_checked(epr_task):
    with pytest.raises(ValueError):
        embezzle_permutation([0.2, 0.8], epr_task)
    with pytest.raises(ValueError):
        embezzle_permutation([0.6, 0.6], epr_task)
    with pytest.raises(ValueError):
        permutation_matrix([0, 0, 1])


def test_chain_order_permutation():
    assert chain_order_permutation(np.arange(4), 2, 2).tolist() == [0, 1, 2, 3]
    assert chain_order_permutation([1, 0, 2, 3], 2, 2).tolist() == [2, 1, 0, 3]
    with pytest.raises(ValueError):
        chain_order_permutation(np.arange(5), 2, 2)


# --------------------------- UHLMANN --------------------------- #
def test_uhlmann_partner_attains_root_fidelity():
    rng = np.random.default_rng(4)
    rho = random_mixed_state((3,), rng)
    sigma = random_mixed_state((3,), rng)
    W = uhlmann_partner(rho, sigma, 3)
    assert np.allclose(W @ W.conj().T, np.eye(3))
    assert uhlmann_overlap(rho, sigma, W, 3) == pytest.approx(math.sqrt(fidelity(rho, sigma)), abs=1e-9)
    assert uhlmann_overlap(rho, sigma, np.eye(3), 3) <= math.sqrt(fidelity(rho, sigma)) + 1e-9


def test_purification_needs_enough_room():
    mixed = DensityMatrix.maximally_mixed((2,))
    A = purification(mixed, 2)
    assert np.allclose(A @ A.conj().T, mixed.entries)
    with pytest.raises(ValueError):
        purification(mixed, 1)
