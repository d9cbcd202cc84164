import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from src.circuit.evolution import (
    embed_operator,
    entropy_flow,
    evolve_schedule,
    schatten_flow,
    schedule_unitary,
)
from src.circuit.generators import (
    GeneratorBasis,
    GeneratorTerm,
    build_generators,
    build_pair_generators,
    gellmann_basis,
)
from src.circuit.schedule import (
    CostMode,
    Schedule,
    ScheduleSlice,
    cut_cost,
    load_schedule,
    save_schedule,
    schedule_cost,
    single_slice_schedule,
    subdivide_schedule,
)
from src.qcore.hilbert import ChainSpec, Ket
from src.qcore.random_states import random_pure_ket
from src.verify.checks import random_schedule

QUBITS3 = ChainSpec(n=2, d=2)


@pytest.fixture
def pauli_terms():
    return build_generators(QUBITS3, 2, GeneratorBasis.PAULI_LIKE)


def basis_density(index: int, dims=(2, 2, 2)):
    return Ket.basis(dims, index).density()


# --------------------------- GENERATORS --------------------------- #
def test_two_qubit_windows(pauli_terms):
    assert len(pauli_terms) == 2 * 15
    labels = {t.label for t in pauli_terms}
    assert {"0:X.I", "1:Z.Z", "1:I.Y"} <= labels
    for term in pauli_terms:
        assert abs(np.trace(term.matrix)) < 1e-12
        assert np.linalg.norm(term.matrix, 2) == pytest.approx(1.0)


def test_gellmann_basis_on_qutrits():
    basis = gellmann_basis(3)
    assert len(basis) == 9
    for name, M in basis.items():
        if name != "I":
            assert abs(np.trace(M)) < 1e-12
            assert np.linalg.norm(M, 2) == pytest.approx(1.0)
    terms = build_generators(ChainSpec(n=1, d=3), 2, GeneratorBasis.GELLMANN_LIKE)
    assert len(terms) == 80


def test_generator_builder_errors():
    with pytest.raises(ValueError):
        build_generators(QUBITS3, 1)
    with pytest.raises(ValueError):
        build_generators(QUBITS3, 4)
    with pytest.raises(ValueError):
        build_generators(ChainSpec(n=1, d=3), 2, GeneratorBasis.PAULI_LIKE)


def test_pair_generators_carry_distance_penalty():
    terms = build_pair_generators(QUBITS3, GeneratorBasis.PAULI_LIKE)
    assert len(terms) == 3 * 9
    far = next(t for t in terms if t.label == "0~2:X.X")
    assert far.penalty == 2.0
    assert far.crosses(0) and far.crosses(1)


def test_term_cut_crossing(pauli_terms):
    by_label = {t.label: t for t in pauli_terms}
    assert not by_label["0:X.I"].crosses(0)
    assert by_label["0:X.X"].crosses(0)
    assert not by_label["0:X.X"].crosses(1)


def test_term_validation():
    with pytest.raises(ValueError):
        GeneratorTerm(label="bad", matrix=np.eye(2), first=0, last=0)
    with pytest.raises(ValueError):
        GeneratorTerm(label="big", matrix=2 * np.diag([1, -1]), first=0, last=0)
    with pytest.raises(ValueError):
        GeneratorTerm(label="ctl", matrix=np.diag([1, -1]), first=0, last=0, controls=((0, 1),))


# --------------------------- SCHEDULES --------------------------- #
def test_schedule_validation(pauli_terms):
    with pytest.raises(ValueError):
        Schedule(terms=pauli_terms, slices=[ScheduleSlice(duration=0.5, coefficients={"0:X.X": 1.0})])
    with pytest.raises(ValueError):
        single_slice_schedule(pauli_terms, {"9:X.X": 1.0})
    with pytest.raises(ValueError):
        Schedule(terms=pauli_terms + pauli_terms[:1])
    assert single_slice_schedule(pauli_terms).slices == []


def test_cost_modes_and_cut_cost():
    terms = build_pair_generators(QUBITS3, GeneratorBasis.PAULI_LIKE)
    schedule = Schedule(
        terms=terms,
        slices=[
            ScheduleSlice(duration=0.25, coefficients={"0~2:Z.Z": 2.0}),
            ScheduleSlice(duration=0.75, coefficients={"1~2:X.Y": -1.0}),
        ],
    )
    assert schedule_cost(schedule) == pytest.approx(1.25)
    assert schedule_cost(schedule, CostMode.DISTANCE_PENALTY) == pytest.approx(1.75)
    assert cut_cost(schedule, 0) == pytest.approx(0.5)
    assert cut_cost(schedule, 1) == pytest.approx(1.25)


@seed(17)
@settings(max_examples=25, deadline=None)
@given(
    parts=st.integers(min_value=1, max_value=5),
    draw_seed=st.integers(min_value=0, max_value=2**16),
)
def test_subdivision_preserves_cost(parts, draw_seed):
    terms = build_generators(QUBITS3, 2)
    schedule = random_schedule(terms, np.random.default_rng(draw_seed))
    finer = subdivide_schedule(schedule, parts)
    assert len(finer.slices) == parts * len(schedule.slices)
    assert schedule_cost(finer) == pytest.approx(schedule_cost(schedule))


def test_schedule_json_file(tmp_path, pauli_terms):
    schedule = single_slice_schedule(pauli_terms, {"0:X.Y": 0.5, "1:Z.I": -1.0})
    path = save_schedule(schedule, str(tmp_path / "nested" / "schedule.json"))
    loaded = load_schedule(path)
    assert [t.label for t in loaded.terms] == [t.label for t in schedule.terms]
    assert np.allclose(loaded.term_map()["0:X.Y"].matrix, schedule.term_map()["0:X.Y"].matrix)
    assert loaded.slices == schedule.slices
    with pytest.raises(FileNotFoundError):
        load_schedule(str(tmp_path / "missing.json"))


# --------------------------- EVOLUTION --------------------------- #
def test_swap_of_sites_one_and_two(pauli_terms):
    quarter = math.pi / 4
    schedule = single_slice_schedule(
        pauli_terms, {"1:X.X": quarter, "1:Y.Y": quarter, "1:Z.Z": quarter}
    )
    traj = evolve_schedule(basis_density(0b010), schedule, substeps=4)
    assert np.allclose(traj.final.entries, basis_density(0b001).entries, atol=1e-10)
    assert schedule_cost(schedule) == pytest.approx(3 * quarter)


def test_entangling_term_creates_one_ebit(pauli_terms):
    schedule = single_slice_schedule(pauli_terms, {"1:X.Y": math.pi / 4})
    traj = evolve_schedule(basis_density(0), schedule, substeps=8)
    flow = entropy_flow(traj)
    assert flow[0] == pytest.approx(0.0, abs=1e-10)
    assert flow[1] == pytest.approx(math.log(2))
    assert entropy_flow(traj, log_base=2)[1] == pytest.approx(1.0)
    assert traj.cut_entropies.shape == (9, 2)
    assert np.allclose(schatten_flow(traj, 2.0), [0.0, 1 - 1 / math.sqrt(2)])


def test_record_states_flag(pauli_terms):
    schedule = single_slice_schedule(pauli_terms, {"0:Z.X": 1.0})
    full = evolve_schedule(basis_density(0), schedule, substeps=5)
    sparse = evolve_schedule(basis_density(0), schedule, substeps=5, record_states=False)
    assert len(full.states) == 6
    assert len(sparse.states) == 2
    assert np.allclose(full.final.entries, sparse.final.entries)


def test_empty_schedule_has_no_flow():
    traj = evolve_schedule(basis_density(3), Schedule())
    assert len(traj.states) == 1
    with pytest.raises(ValueError):
        entropy_flow(traj)


def splitting_errors(schedule, psi, substeps=(8, 16)):
    U = schedule_unitary(schedule, QUBITS3.dims)
    exact = U @ psi.density().entries @ U.conj().T
    errors = []
    for s in substeps:
        rho = evolve_schedule(psi.density(), schedule, substeps=s, record_states=False).final
        errors.append(float(np.abs(rho.entries - exact).max()))
    return errors


def test_splitting_converges_to_exact_unitary(pauli_terms):
    schedule = single_slice_schedule(pauli_terms, {"0:X.X": 1.1, "1:Z.Y": 0.7, "0:I.Z": -0.4})
    psi = random_pure_ket((2, 2, 2), np.random.default_rng(2))
    coarse, fine, finest = splitting_errors(schedule, psi, (8, 16, 64))
    assert math.log2(coarse / fine) >= 1.8
    assert finest < 1e-3


@pytest.mark.parametrize("rng_seed", range(6))
def test_splitting_is_second_order_on_random_schedules(pauli_terms, rng_seed):
    rng = np.random.default_rng(rng_seed)
    labels = ["0:X.Z", "1:Y.X", "0:Z.Y", "1:X.X"]
    durations = rng.dirichlet(np.ones(3))
    slices = [
        ScheduleSlice(duration=float(t), coefficients={lab: float(rng.normal()) for lab in labels})
        for t in durations / durations.sum()
    ]
    schedule = Schedule(terms=pauli_terms, slices=slices)
    psi = random_pure_ket(QUBITS3.dims, rng)

    coarse, fine = splitting_errors(schedule, psi)
    assert coarse > 1e-10
    assert math.log2(coarse / fine) >= 1.8


@seed(23)
@settings(max_examples=15, deadline=None)
@given(draw_seed=st.integers(min_value=0, max_value=2**16))
def test_evolution_preserves_trace_and_global_entropy(draw_seed):
    rng = np.random.default_rng(draw_seed)
    schedule = random_schedule(build_generators(QUBITS3, 2), rng)
    initial = random_pure_ket(QUBITS3.dims, rng).density()
    traj = evolve_schedule(initial, schedule, substeps=4, record_states=False)
    assert np.trace(traj.final.entries).real == pytest.approx(1.0, abs=1e-10)
    assert traj.global_entropy_drift < 1e-8


def test_term_outside_chain_is_rejected(pauli_terms):
    schedule = single_slice_schedule(pauli_terms, {"1:X.X": 1.0})
    with pytest.raises(ValueError):
        evolve_schedule(Ket.basis((2, 2), 0).density(), schedule)


def test_controlled_embedding():
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    full = embed_operator(X, (2, 2), 1, 1, controls=((0, 1),))
    expected = np.zeros((4, 4))
    expected[2, 3] = expected[3, 2] = 1.0
    assert np.allclose(full, expected)
