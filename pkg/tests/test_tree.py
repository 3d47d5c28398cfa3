"""Bottom-up tree evaluation against dense state reconstructions."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridtn.oracles import (
    DenseTreeSpec,
    dense_family,
    dense_tree_state,
    hamiltonian_matrix,
    mps_dense,
    pauli_term_matrix,
)
from hybridtn.pauli import Hamiltonian, PauliTerm, build_1d_cluster, build_2d_web
from hybridtn.statevector import build_hardware_efficient_ansatz
from hybridtn.tensors import random_mps
from hybridtn.tree import (
    EvalCounters,
    ProductObservable,
    build_two_layer_cq,
    build_two_layer_qc,
    build_two_layer_qq,
    cost_estimate,
    tree_energy,
    tree_expectation,
    tree_overlap,
    tree_transition,
    tree_transition_energy,
)
from hybridtn.verify import random_local_term, random_qq_tree, tree_to_dense_spec


def global_term(rng: np.random.Generator, num_qubits: int) -> PauliTerm:
    count = int(rng.integers(1, 4))
    qubits = [int(q) for q in rng.permutation(num_qubits)[:count]]
    factors = tuple(sorted((q, str(rng.choice(["X", "Y", "Z"]))) for q in qubits))
    return PauliTerm(float(rng.uniform(-1, 1)), factors)


# ---------------------------------------------------------------------------
# quantum root, quantum branches

def test_expectation_matches_dense_state():
    rng = np.random.default_rng(50)
    for _ in range(8):
        tree = random_qq_tree(rng, 2, 2)
        psi = dense_tree_state(tree_to_dense_spec(tree))
        term = global_term(rng, 4)
        obs = ProductObservable.from_term(term, tree.layout)
        got = tree_expectation(tree, obs)
        # the observable is the bare Pauli string; coefficients live in terms
        want = np.real(
            psi.conj() @ pauli_term_matrix(PauliTerm(1.0, term.factors), 4) @ psi
        )
        assert got == pytest.approx(float(want), abs=1e-10)


def test_identity_expectation_and_eval_count():
    rng = np.random.default_rng(51)
    k, n = 3, 2
    tree = random_qq_tree(rng, k, n)
    counters = EvalCounters()
    val = tree_expectation(
        tree, ProductObservable.identity(k), counters=counters
    )
    assert val == pytest.approx(1.0, abs=1e-10)
    # one evaluation per branch plus the root closure
    assert counters.quantum_evals == k + 1


def test_energy_matches_dense_both_models():
    rng = np.random.default_rng(52)
    for builder, n, k in ((build_1d_cluster, 2, 2), (build_2d_web, 2, 3)):
        h, _ = builder(n, k, lam=0.8, seed=13)
        tree = random_qq_tree(rng, k, n)
        psi = dense_tree_state(tree_to_dense_spec(tree))
        want = float(np.real(psi.conj() @ hamiltonian_matrix(h) @ psi))
        assert tree_energy(tree, h) == pytest.approx(want, abs=1e-10)


def test_energy_shares_branch_evaluations_across_terms():
    h, _ = build_1d_cluster(2, 2, lam=1.0, seed=3)  # 11 terms
    rng = np.random.default_rng(53)
    tree = random_qq_tree(rng, 2, 2)
    counters = EvalCounters()
    tree_energy(tree, h, counters=counters)
    # 11 root closures + 6 distinct local observables per branch
    assert counters.quantum_evals == len(h.terms) + 2 * 6


def test_strategies_agree_through_the_tree():
    rng = np.random.default_rng(54)
    tree = random_qq_tree(rng, 2, 2)
    h, _ = build_1d_cluster(2, 2, lam=0.6, seed=21)
    want = tree_energy(tree, h)
    for strategy in ("hadamard_test", "superposition_input"):
        got = tree_energy(tree, h, strategy=strategy)
        assert got == pytest.approx(want, abs=1e-9), strategy


def test_sampled_tree_energy_deterministic_in_seed():
    rng = np.random.default_rng(55)
    tree = random_qq_tree(rng, 2, 2)
    h, _ = build_1d_cluster(2, 2, lam=0.6, seed=22)
    a = tree_energy(tree, h, strategy="hadamard_test", shots=256, seed=9)
    b = tree_energy(tree, h, strategy="hadamard_test", shots=256, seed=9)
    c = tree_energy(tree, h, strategy="hadamard_test", shots=256, seed=10)
    assert a == b
    assert a != c


# ---------------------------------------------------------------------------
# classical root / classical branches

def test_mps_root_tree_matches_dense():
    rng = np.random.default_rng(56)
    k, n = 2, 2
    root = random_mps(k, chi=2, seed=57)
    branches = [build_hardware_efficient_ansatz(n, 2) for _ in range(k)]
    params = rng.uniform(-np.pi, np.pi, size=sum(b.num_params for b in branches))
    tree = build_two_layer_qc(root, branches, params)
    spec = DenseTreeSpec(
        mps_dense(root),
        tuple(dense_family(link.node.payload) for link in tree.root.children),
    )
    psi = dense_tree_state(spec)
    h, _ = build_1d_cluster(n, k, lam=0.5, seed=23)
    want = float(np.real(psi.conj() @ hamiltonian_matrix(h) @ psi))
    assert tree_energy(tree, h) == pytest.approx(want, abs=1e-10)


def test_mps_branch_tree_matches_dense():
    rng = np.random.default_rng(58)
    k, n = 2, 2
    root_circuit = build_hardware_efficient_ansatz(k, 2)
    branch_mps = [random_mps(n + 1, chi=2, seed=60 + s) for s in range(k)]
    params = rng.uniform(-np.pi, np.pi, size=root_circuit.num_params)
    tree = build_two_layer_cq(root_circuit, branch_mps, params)
    coeff = tree.root.payload.joint_state().reshape((2,) * k)
    coeff = coeff.transpose(tuple(range(k - 1, -1, -1)))
    spec = DenseTreeSpec(
        coeff, tuple(dense_family(m) for m in branch_mps)
    )
    psi = dense_tree_state(spec)
    h, _ = build_1d_cluster(n, k, lam=0.5, seed=24)
    want = float(np.real(psi.conj() @ hamiltonian_matrix(h) @ psi))
    assert tree_energy(tree, h) == pytest.approx(want, abs=1e-10)


# ---------------------------------------------------------------------------
# overlaps and transition elements

def test_overlap_self_and_cross():
    rng = np.random.default_rng(61)
    a = random_qq_tree(rng, 2, 2)
    b = random_qq_tree(rng, 2, 2)
    assert tree_overlap(a, a) == pytest.approx(1.0 + 0j, abs=1e-10)
    psi_a = dense_tree_state(tree_to_dense_spec(a))
    psi_b = dense_tree_state(tree_to_dense_spec(b))
    want = complex(np.vdot(psi_a, psi_b))
    assert tree_overlap(a, b) == pytest.approx(want, abs=1e-10)


def test_transition_elements_match_dense():
    rng = np.random.default_rng(62)
    a = random_qq_tree(rng, 2, 2)
    b = random_qq_tree(rng, 2, 2)
    psi_a = dense_tree_state(tree_to_dense_spec(a))
    psi_b = dense_tree_state(tree_to_dense_spec(b))

    term = global_term(rng, 4)
    obs = ProductObservable.from_term(term, a.layout)
    got = tree_transition(a, b, obs)
    want = psi_a.conj() @ pauli_term_matrix(PauliTerm(1.0, term.factors), 4) @ psi_b
    assert got == pytest.approx(complex(want), abs=1e-10)

    h, _ = build_1d_cluster(2, 2, lam=0.9, seed=25)
    got_h = tree_transition_energy(a, b, h)
    want_h = complex(psi_a.conj() @ hamiltonian_matrix(h) @ psi_b)
    assert got_h == pytest.approx(want_h, abs=1e-10)


# ---------------------------------------------------------------------------
# parameters and cost model

def test_parameter_round_trip_and_slices():
    rng = np.random.default_rng(63)
    tree = random_qq_tree(rng, 3, 2)
    flat = tree.flat_params()
    rebuilt = tree.with_params(flat)
    np.testing.assert_array_equal(rebuilt.flat_params(), flat)
    slices = tree.param_slices()
    assert sum(stop - start for start, stop in slices) == tree.num_params
    fresh = rng.uniform(-1, 1, size=tree.num_params)
    np.testing.assert_array_equal(tree.with_params(fresh).flat_params(), fresh)


def test_builder_rejects_wrong_param_length():
    root = build_hardware_efficient_ansatz(2, 1)
    branches = [build_hardware_efficient_ansatz(2, 1) for _ in range(2)]
    with pytest.raises(ValueError):
        build_two_layer_qq(root, branches, np.zeros(3))


@given(st.floats(1e-4, 0.5), st.integers(2, 5))
def test_cost_estimate_bound_dominates(epsilon, k):
    rng = np.random.default_rng(64)
    tree = random_qq_tree(rng, k, 2, depth_u=1, depth_v=1)
    est = cost_estimate(tree, epsilon)
    assert est.quantum_samples + est.classical_flops <= est.bound
    assert est.quantum_evals > 0
