import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpcsim import qsim
from qpcsim.errors import PreconditionError, QubitIndexError, SizeError
from qpcsim.qsim import Basis, Gate, QubitPool, StateVector

SQRT2_INV = 1 / np.sqrt(2)
PLUS = np.array([1, 1]) * SQRT2_INV
MINUS = np.array([1, -1]) * SQRT2_INV


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


def test_alloc_ground_state():
    assert np.allclose(qsim.alloc(1).amplitudes, [1, 0])


def test_alloc_measures_all_zero():
    s = qsim.alloc(3)
    rng = np.random.default_rng(0)
    assert [s.measure(q, Basis.Z, rng) for q in range(3)] == [0, 0, 0]


@pytest.mark.parametrize("n", [0, 25, -1])
def test_alloc_bounds(n):
    with pytest.raises(SizeError):
        qsim.alloc(n)


def test_h_makes_plus():
    s = qsim.apply_gate(qsim.alloc(1), Gate.H, [0])
    assert np.allclose(s.amplitudes, PLUS)


def test_cnot_10_to_11():
    s = StateVector.from_label("10")
    qsim.apply_gate(s, Gate.CNOT, [0, 1])
    assert np.allclose(s.amplitudes, [0, 0, 0, 1])


def test_cnot_control_below_target_index():
    # control is qubit 1, target qubit 0: |01> -> |11>
    s = StateVector.from_label("01").apply(Gate.CNOT, 1, 0)
    assert np.allclose(s.amplitudes, [0, 0, 0, 1])


def test_msb_convention():
    s = qsim.alloc(3).apply(Gate.X, 0)
    assert s.amplitudes[4] == 1


def _operator_of(circuit, n):
    cols = []
    for i in range(1 << n):
        v = np.zeros(1 << n, dtype=complex)
        v[i] = 1
        cols.append(circuit(StateVector(v)).amplitudes)
    return np.array(cols).T


def test_conjugated_cnot_matrix():
    sim = _operator_of(lambda s: s.apply(Gate.H, 0).apply(Gate.CNOT, 0, 1).apply(Gate.H, 0), 2)
    X = np.array([[0, 1], [1, 0]])
    expected = np.kron(np.outer(PLUS, PLUS), np.eye(2)) + np.kron(np.outer(MINUS, MINUS), X)
    assert np.allclose(sim, expected, atol=1e-12)


@pytest.mark.parametrize("c", "+-")
@pytest.mark.parametrize("t", "01")
def test_conjugated_cnot_flips_target_iff_control_minus(c, t):
    s = StateVector.from_label(c + t).apply(Gate.H, 0).apply(Gate.CNOT, 0, 1).apply(Gate.H, 0)
    want_t = t if c == "+" else str(1 - int(t))
    assert qsim.state_fidelity(s, StateVector.from_label(c + want_t)) > 1 - 1e-10


@pytest.mark.parametrize("gate,qubits", [(Gate.H, [3]), (Gate.X, [-1]), (Gate.CNOT, [1, 1]), (Gate.CNOT, [0])])
def test_bad_indices(gate, qubits):
    with pytest.raises(QubitIndexError):
        qsim.apply_gate(qsim.alloc(3), gate, qubits)


def test_ghz_amplitudes():
    s = qsim.prepare_ghz(qsim.alloc(3), [0, 1, 2])
    expected = np.zeros(8)
    expected[[0, 7]] = SQRT2_INV
    assert np.allclose(s.amplitudes, expected)


def test_ghz_x_basis_expansion():
    s = qsim.prepare_ghz(qsim.alloc(3), [0, 1, 2])
    terms = ["+++", "+--", "-+-", "--+"]
    target = sum(StateVector.from_label(t).amplitudes for t in terms) / 2
    assert qsim.state_fidelity(s, StateVector(target)) > 1 - 1e-10


def test_ghz_needs_fresh_qubits():
    s = qsim.alloc(3).apply(Gate.H, 1)
    with pytest.raises(PreconditionError):
        qsim.prepare_ghz(s, [0, 1, 2])


def test_ghz_x_outcome_distribution():
    rng = np.random.default_rng(11)
    counts = {}
    trials = 4000
    for _ in range(trials):
        s = qsim.prepare_ghz(qsim.alloc(3), [0, 1, 2])
        bits = "".join(str(s.measure(q, Basis.X, rng)) for q in range(3))
        counts[bits] = counts.get(bits, 0) + 1
    assert set(counts) == {"000", "011", "101", "110"}
    for c in counts.values():
        assert abs(c / trials - 0.25) < 0.03


def test_ghz_z_outcomes():
    s = qsim.prepare_ghz(qsim.alloc(3), [0, 1, 2])
    assert s.probabilities(0, Basis.Z) == pytest.approx((0.5, 0.5))
    rng = np.random.default_rng(3)
    for _ in range(50):
        t = qsim.prepare_ghz(qsim.alloc(3), [0, 1, 2])
        bits = [t.measure(q, Basis.Z, rng) for q in range(3)]
        assert bits in ([0, 0, 0], [1, 1, 1])


def test_ghz_x_parity_10k():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        s = qsim.prepare_ghz(qsim.alloc(3), [0, 1, 2])
        assert s.measure(0, "X", rng) ^ s.measure(1, "X", rng) ^ s.measure(2, "X", rng) == 0


def test_plus_measured_in_x_is_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        bit, _ = qsim.measure(StateVector.from_label("+"), 0, Basis.X, rng)
        assert bit == 0
    assert qsim.measure(StateVector.from_label("-"), 0, Basis.X, rng)[0] == 1


def test_zero_in_x_is_fair_coin():
    rng = np.random.default_rng(7)
    bits = [qsim.alloc(1).measure(0, Basis.X, rng) for _ in range(10_000)]
    assert abs(np.mean(bits) - 0.5) < 0.02


def test_measure_collapses():
    rng = np.random.default_rng(5)
    s = qsim.alloc(2).apply(Gate.H, 0).apply(Gate.CNOT, 0, 1)
    b = s.measure(0, Basis.Z, rng)
    assert s.probabilities(1, Basis.Z)[b] == pytest.approx(1.0)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_x_measure_leaves_x_eigenstate():
    rng = np.random.default_rng(1)
    s = qsim.alloc(1)
    b = s.measure(0, Basis.X, rng)
    assert qsim.state_fidelity(s, StateVector.from_label("+-"[b])) > 1 - 1e-10


def test_fidelity_basics():
    s = random_state(3, 1)
    assert qsim.state_fidelity(s, s) == pytest.approx(1.0)
    assert qsim.state_fidelity(StateVector.from_label("0"), StateVector.from_label("1")) == 0
    phased = StateVector(s.amplitudes * np.exp(0.7j))
    assert qsim.state_fidelity(s, phased) > 1 - 1e-10
    with pytest.raises(SizeError):
        qsim.state_fidelity(qsim.alloc(1), qsim.alloc(2))


gate_ops = st.one_of(
    st.tuples(st.sampled_from([Gate.H, Gate.X]), st.integers(0, 3)),
    st.tuples(st.just(Gate.CNOT), st.permutations(range(4)).map(lambda p: p[:2])),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(gate_ops, max_size=40), st.integers(0, 2**16))
def test_norm_preserved(ops, seed):
    s = random_state(4, seed)
    for gate, q in ops:
        s.apply(gate, *(q if isinstance(q, (list, tuple)) else [q]))
        assert abs(s.norm() - 1) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**16), gate_ops)
def test_gates_are_involutions(seed, op):
    gate, q = op
    qubits = list(q) if isinstance(q, (list, tuple)) else [q]
    s = random_state(4, seed)
    twice = s.copy().apply(gate, *qubits).apply(gate, *qubits)
    assert qsim.state_fidelity(s, twice) >= 1 - 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**16), st.integers(0, 3), st.sampled_from(list(Basis)))
def test_outcome_probabilities_sum_to_one(seed, qubit, basis):
    p0, p1 = random_state(4, seed).probabilities(qubit, basis)
    assert abs(p0 + p1 - 1) < 1e-12


# -- pool


def test_pool_merges_lazily_and_drops_measured():
    pool = QubitPool()
    for lab in "abc":
        pool.add(lab)
    assert pool.register_sizes() == [1, 1, 1]
    pool.apply(Gate.H, "a")
    pool.apply(Gate.CNOT, "a", "b")
    assert pool.register_sizes() == [1, 2]
    rng = np.random.default_rng(0)
    bit = pool.measure("a", Basis.Z, rng)
    assert "a" not in pool
    assert pool.probabilities("b")[bit] == pytest.approx(1.0)
    assert pool.register_sizes() == [1, 1]


def test_pool_state_ordering_matches_direct_sim():
    pool = QubitPool()
    for lab in ("c", "a", "b", "e"):
        pool.add(lab)
    pool.apply(Gate.H, "c")
    pool.apply(Gate.CNOT, "c", "a")
    pool.apply(Gate.CNOT, "a", "b")
    direct = qsim.prepare_ghz(qsim.alloc(4), [0, 1, 2])
    assert qsim.state_fidelity(pool.state(["c", "a", "b", "e"]), direct) > 1 - 1e-12


def test_pool_refuses_partial_register():
    pool = QubitPool()
    pool.add(0)
    pool.add(1)
    pool.apply(Gate.H, 0)
    pool.apply(Gate.CNOT, 0, 1)
    with pytest.raises(PreconditionError):
        pool.state([0])


def test_pool_cap():
    pool = QubitPool(max_qubits=3)
    for q in range(4):
        pool.add(q)
    pool.apply(Gate.CNOT, 0, 1)
    pool.apply(Gate.CNOT, 1, 2)
    with pytest.raises(SizeError):
        pool.apply(Gate.CNOT, 2, 3)


def test_pool_duplicate_and_missing_labels():
    pool = QubitPool()
    pool.add("q")
    with pytest.raises(PreconditionError):
        pool.add("q")
    with pytest.raises(QubitIndexError):
        pool.apply(Gate.H, "nope")
