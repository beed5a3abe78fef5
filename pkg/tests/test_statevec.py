import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bqtsim import statevec as sv
from bqtsim.statevec import Basis, StateVector

import golden
from reference import project_out, run_circuit

qubits_and_seed = st.integers(1, 6).flatmap(
    lambda k: st.tuples(st.just(k), st.integers(0, k - 1), st.integers(0, 2**32 - 1))
)


def amps(*xs):
    return np.array(xs, dtype=complex)


# --- construction ---------------------------------------------------------

def test_basis_state_examples():
    np.testing.assert_array_equal(sv.basis_state(1, 0).amplitudes, amps(1, 0))
    np.testing.assert_array_equal(sv.basis_state(2, 3).amplitudes, amps(0, 0, 0, 1))
    s = sv.basis_state(3, 0)
    assert s.num_qubits == 3 and s.support() == [0]


@pytest.mark.parametrize("k,idx", [(1, 2), (2, -1), (0, 1)])
def test_basis_state_out_of_range(k, idx):
    with pytest.raises(sv.DomainError):
        sv.basis_state(k, idx)


def test_length_invariant_enforced():
    with pytest.raises(sv.DomainError):
        StateVector(2, np.ones(3))


def test_amplitudes_are_frozen():
    s = sv.basis_state(2, 0)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2


def test_caller_array_not_frozen():
    a = np.array([1, 0], dtype=complex)
    StateVector(1, a)
    a[0] = 0.5  # caller keeps a writable array


# --- gates ----------------------------------------------------------------

def test_h_on_zero():
    s = sv.apply_h(sv.basis_state(1, 0), 0)
    np.testing.assert_allclose(s.amplitudes, amps(1, 1) / math.sqrt(2), atol=1e-15)


def test_hhh_uniform_superposition():
    s = sv.basis_state(3, 0)
    for q in range(3):
        s = sv.apply_h(s, q)
    want = golden.ket_state(golden.UNIFORM_MAIN_2_1, 1 / math.sqrt(8))
    assert s.allclose(want)


def test_x_and_z_examples():
    assert sv.apply_x(sv.basis_state(1, 0), 0).allclose(sv.basis_state(1, 1))
    minus = StateVector(1, amps(1, -1) / math.sqrt(2))
    plus = StateVector(1, amps(1, 1) / math.sqrt(2))
    assert sv.apply_z(minus, 0).allclose(plus)


def test_cnot_example_and_errors():
    assert sv.apply_cnot(sv.basis_state(2, 0b10), 0, 1).allclose(sv.basis_state(2, 0b11))
    with pytest.raises(sv.DomainError):
        sv.apply_cnot(sv.basis_state(2, 0), 1, 1)
    with pytest.raises(sv.DomainError):
        sv.apply_h(sv.basis_state(2, 0), 2)


def test_cnots_build_mirrored_channel():
    s = sv.basis_state(6, 0)
    for q in range(3):
        s = sv.apply_h(s, q)
    for q in range(3):
        s = sv.apply_cnot(s, q, q + 3)
    kets, a = golden.CHANNEL_2_1
    assert s.allclose(golden.ket_state(kets, a))


@given(qubits_and_seed)
@settings(max_examples=60, deadline=None)
def test_gates_preserve_norm_and_are_involutions(args):
    k, q, seed = args
    psi = sv.random_state(k, seed)
    for gate in (sv.apply_h, sv.apply_x, sv.apply_z):
        out = gate(psi, q)
        assert abs(out.norm_sq() - 1) <= 1e-12
        assert gate(out, q).allclose(psi, 1e-12)
    if k >= 2:
        t = (q + 1) % k
        out = sv.apply_cnot(psi, q, t)
        assert abs(out.norm_sq() - 1) <= 1e-12
        assert sv.apply_cnot(out, q, t).allclose(psi, 1e-12)


@given(qubits_and_seed)
@settings(max_examples=40, deadline=None)
def test_xz_anticommute(args):
    k, q, seed = args
    psi = sv.random_state(k, seed)
    zx = sv.apply_z(sv.apply_x(psi, q), q)
    xz = sv.apply_x(sv.apply_z(psi, q), q)
    np.testing.assert_array_equal(zx.amplitudes, -xz.amplitudes)


def test_cnot_involution_on_random_4q():
    psi = sv.random_state(4, 99)
    for c, t in [(0, 3), (2, 1), (3, 0)]:
        assert sv.apply_cnot(sv.apply_cnot(psi, c, t), c, t).allclose(psi)


# --- measurement ----------------------------------------------------------

def test_measure_examples():
    rec, post = sv.measure(sv.basis_state(1, 0), 0, Basis.Z, 0.999)
    assert (rec.outcome, rec.probability, post.num_qubits) == (0, 1.0, 0)
    minus = StateVector(1, amps(1, -1) / math.sqrt(2))
    rec, _ = sv.measure(minus, 0, "X", 0.0)
    assert rec.outcome == 1 and rec.probability == pytest.approx(1, abs=1e-12)


def test_project_plus_on_z():
    plus = sv.apply_h(sv.basis_state(1, 0), 0)
    p, post = sv.project(plus, 0, Basis.Z, 0)
    assert p == pytest.approx(0.5, abs=1e-12)
    assert post.num_qubits == 0 and post.amplitudes[0] == pytest.approx(1)


def test_project_empty_branch():
    p, post = sv.project(sv.basis_state(2, 0), 1, Basis.Z, 1)
    assert p == 0.0 and post is None


def test_project_channel_against_dense_reference():
    kets, a = golden.CHANNEL_2_1
    channel = golden.ket_state(kets, a)
    # c_b0 is qubit 5 of the 6-qubit channel
    ref_p, ref_sub = project_out(channel.amplitudes, 5, 1, 6)
    p, post = sv.project(channel, 5, Basis.Z, 1)
    assert p == pytest.approx(0.5, abs=1e-12) and ref_p == pytest.approx(0.5, abs=1e-12)
    # 8 channel terms, half survive conditioning on c_b0 = 1
    assert len(post.support()) == 4 and len(channel.support()) == 8
    np.testing.assert_allclose(post.amplitudes, ref_sub, atol=1e-12)


def test_measure_rejects_unnormalized():
    with pytest.raises(sv.ContractError):
        sv.measure(StateVector(1, amps(1, 1)), 0, "Z", 0.3)
    with pytest.raises(sv.ContractError):
        sv.project(StateVector(1, amps(1, 1)), 0, "Z", 0)


@given(qubits_and_seed, st.sampled_from(["Z", "X"]))
@settings(max_examples=60, deadline=None)
def test_measurement_completeness_and_consistency(args, basis):
    k, q, seed = args
    psi = sv.random_state(k, seed)
    p0, s0 = sv.project(psi, q, basis, 0)
    p1, s1 = sv.project(psi, q, basis, 1)
    assert abs(p0 + p1 - 1) <= 1e-12
    rec, post = sv.measure(psi, q, basis, p0 / 2)
    assert rec.outcome == 0
    assert post.allclose(s0, 1e-12)
    rec, post = sv.measure(psi, q, basis, min(p0 + (1 - p0) / 2, 1 - 1e-16))
    assert rec.outcome == 1 and post.allclose(s1, 1e-12)
    ref_p, ref_sub = project_out(psi.amplitudes, q, 1, k, basis)
    assert p1 == pytest.approx(ref_p, abs=1e-12)
    np.testing.assert_allclose(s1.amplitudes, ref_sub, atol=1e-12)


# --- tensor / fidelity / random ------------------------------------------

def test_tensor_order_and_norm():
    assert sv.tensor(sv.basis_state(1, 0), sv.basis_state(1, 1)).allclose(sv.basis_state(2, 0b01))
    a = StateVector(1, amps(3, 4))
    b = StateVector(2, amps(1, 2, 2, 0))
    assert sv.tensor(a, b).norm_sq() == pytest.approx(a.norm_sq() * b.norm_sq())


def test_fidelity_examples():
    psi = sv.random_state(3, 1)
    assert sv.fidelity(psi, psi) == pytest.approx(1, abs=1e-12)
    assert sv.fidelity(sv.basis_state(1, 0), sv.basis_state(1, 1)) == 0
    with pytest.raises(sv.DomainError):
        sv.fidelity(psi, sv.basis_state(1, 0))


@given(st.integers(0, 2**32), st.floats(0, 2 * math.pi))
@settings(max_examples=30, deadline=None)
def test_fidelity_ignores_global_phase(seed, theta):
    psi = sv.random_state(3, seed)
    rotated = StateVector(3, psi.amplitudes * cmath.exp(1j * theta))
    assert sv.fidelity(psi, rotated) == pytest.approx(1, abs=1e-12)


def test_random_state_determinism_and_norm():
    a = sv.random_state(4, 123)
    b = sv.random_state(4, 123)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    for seed in range(1000):
        assert abs(sv.random_state(3, seed).norm_sq() - 1) <= 1e-12
    empty = sv.random_state(0, 5)
    assert empty.num_qubits == 0 and empty.amplitudes[0] == 1


def test_random_ghz_shape():
    g = sv.random_ghz_state(3, 4)
    assert set(g.support()) <= {0, 7}
    assert abs(g.norm_sq() - 1) <= 1e-12


def test_dense_reference_agrees_with_gate_sequence():
    psi = sv.random_state(3, 8)
    ours = sv.apply_cnot(sv.apply_h(psi, 2), 2, 0)
    ref = run_circuit(3, hadamards=[2], cnots=[(2, 0)], init=psi.amplitudes)
    np.testing.assert_allclose(ours.amplitudes, ref, atol=1e-13)


# --- .qsv -----------------------------------------------------------------

def test_qsv_round_trip(tmp_path):
    psi = sv.random_state(4, 77)
    path = tmp_path / "s.qsv"
    sv.write_qsv(path, psi, ["demo"])
    text = path.read_text()
    assert text.splitlines()[1] == "qsv 1 4"
    back = sv.read_qsv(path)
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)


def test_qsv_sparse_and_ascending():
    text = sv.format_qsv(sv.basis_state(3, 5))
    assert text == "qsv 1 3\n5 1.0000000000000000e+00 0.0000000000000000e+00\n"


@pytest.mark.parametrize(
    "bad",
    ["", "qsv 2 1\n", "qsv 1 1\n1 0 0\n0 1 0\n", "qsv 1 1\n2 1 0\n", "qsv 1 1\n0 1\n"],
)
def test_qsv_rejects_malformed(bad):
    with pytest.raises(ValueError):
        sv.parse_qsv(bad)
