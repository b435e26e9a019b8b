import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmemsim import statevec as sv
from qmemsim.noise import rotation_matrix


def rx(angle):
    # written out independently of rotation_matrix
    return np.array([[np.cos(angle / 2), -1j * np.sin(angle / 2)],
                     [-1j * np.sin(angle / 2), np.cos(angle / 2)]])


def random_unitary(rng, k):
    A = rng.normal(size=(2 ** k, 2 ** k)) + 1j * rng.normal(size=(2 ** k, 2 ** k))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_state(rng, n):
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return sv.StateVector(v / np.linalg.norm(v))


def dense_operator(U, targets, n):
    """Full 2**n matrix of U on targets, built entry by entry."""
    k = len(targets)
    M = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for col in range(2 ** n):
        sub_in = sum(((col >> t) & 1) << j for j, t in enumerate(targets))
        rest = col
        for t in targets:
            rest &= ~(1 << t)
        for sub_out in range(2 ** k):
            row = rest
            for j, t in enumerate(targets):
                if (sub_out >> j) & 1:
                    row |= 1 << t
            M[row, col] += U[sub_out, sub_in]
    return M


class TestBasisStates:
    def test_single_zero(self):
        s = sv.new_basis_state(1, "0")
        assert np.array_equal(s.amps, [1, 0])

    def test_bit_order(self):
        s = sv.new_basis_state(3, "010")
        assert s.amps[2] == 1
        assert np.count_nonzero(s.amps) == 1

    def test_self_overlap(self):
        s = sv.new_basis_state(3, "111")
        assert sv.fidelity(s, sv.new_basis_state(3, "111")) == 1.0

    @pytest.mark.parametrize("n", [0, 23])
    def test_out_of_range(self, n):
        with pytest.raises(sv.CapacityError):
            sv.new_basis_state(n)

    def test_orthonormal_basis(self):
        n = 3
        for i in range(8):
            bi = sv.index_bits(i, n)
            for j in range(8):
                f = sv.fidelity(sv.new_basis_state(n, bi), sv.new_basis_state(n, sv.index_bits(j, n)))
                assert f == (1.0 if i == j else 0.0)


class TestApplyUnitary:
    def test_rx_pi(self):
        s = sv.apply_unitary(sv.new_basis_state(1), (0,), rx(np.pi))
        assert np.allclose(s.amps, [0, -1j], atol=1e-15)

    def test_rx_small(self):
        s = sv.apply_unitary(sv.new_basis_state(1), (0,), rotation_matrix((1, 0, 0), 0.2))
        expected = rx(0.2) @ np.array([1, 0])
        assert np.allclose(s.amps, expected, atol=1e-15)
        assert np.allclose(s.amps, [np.cos(0.1), -1j * np.sin(0.1)], atol=1e-15)

    def test_identity(self):
        rng = np.random.default_rng(0)
        s = random_state(rng, 4)
        before = s.amps.copy()
        sv.apply_unitary(s, (1, 3), np.eye(4))
        assert np.array_equal(s.amps, before)

    @pytest.mark.parametrize("targets", [(0,), (2,), (0, 1), (3, 1), (2, 0, 3), (1, 3, 0)])
    def test_matches_dense_operator(self, targets):
        rng = np.random.default_rng(len(targets) * 7 + targets[0])
        n = 4
        U = random_unitary(rng, len(targets))
        s = random_state(rng, n)
        expected = dense_operator(U, targets, n) @ s.amps
        sv.apply_unitary(s, targets, U)
        assert np.allclose(s.amps, expected, atol=1e-12)

    def test_cnot_convention(self):
        from qmemsim.codes import CNOT
        s = sv.apply_unitary(sv.new_basis_state(3, "100"), (0, 2), CNOT)
        assert sv.fidelity(s, sv.new_basis_state(3, "101")) == 1.0

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            sv.apply_unitary(sv.new_basis_state(1), (0,), np.array([[1, 0], [0, 1.001]]))

    def test_rejects_duplicate_targets(self):
        with pytest.raises(ValueError):
            sv.apply_unitary(sv.new_basis_state(2), (1, 1), np.eye(4))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(3, 6), k=st.integers(1, 3))
    def test_inverse_round_trip_and_norm(self, seed, n, k):
        rng = np.random.default_rng(seed)
        targets = tuple(rng.permutation(n)[:k].tolist())
        U = random_unitary(rng, k)
        s = random_state(rng, n)
        before = s.amps.copy()
        sv.apply_unitary(s, targets, U)
        assert abs(s.norm() - 1) < 1e-12
        sv.apply_unitary(s, targets, U.conj().T)
        assert np.allclose(s.amps, before, atol=1e-10)


class TestAppend:
    def test_codeword_gets_ancillas(self):
        a, b = 0.6, 0.8
        s = sv.from_terms({"000": a, "111": b})
        sv.append_qubits(s, 3, "000")
        expected = sv.from_terms({"000000": a, "111000": b})
        assert np.allclose(s.amps, expected.amps)

    def test_new_qubit_is_highest(self):
        s = sv.append_qubits(sv.new_basis_state(1, "0"), 1, "1")
        assert sv.fidelity(s, sv.new_basis_state(2, "01")) == 1.0

    def test_norm_unchanged(self):
        s = random_state(np.random.default_rng(1), 3)
        sv.append_qubits(s, 2)
        assert abs(s.norm() - 1) < 1e-12

    def test_capacity(self):
        s = sv.new_basis_state(3, max_qubits=4)
        with pytest.raises(sv.CapacityError):
            sv.append_qubits(s, 2)


class TestMeasure:
    def test_zero_state(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = sv.new_basis_state(1)
            out = sv.measure_qubit(s, 0, 0.0, rng)
            assert out.bit == 0
            assert np.array_equal(s.amps, [1, 0])

    def test_born_rule_plus(self):
        rng = np.random.default_rng(1)
        bits = []
        for _ in range(4000):
            s = sv.StateVector(np.array([1, 1]) / np.sqrt(2))
            out = sv.measure_qubit(s, 0, 0.0, rng)
            bits.append(out.bit)
            assert abs(out.probability - 0.5) < 1e-12
            assert np.allclose(np.abs(s.amps), [1 - out.bit, out.bit])
        # binomial(4000, 1/2): 4 sigma = 0.0316
        assert abs(np.mean(bits) - 0.5) < 0.0316

    def test_residual_admixture(self):
        rng = np.random.default_rng(2)
        s = sv.StateVector(np.array([1, 1]) / np.sqrt(2))
        out = sv.measure_qubit(s, 0, 0.01, rng)
        c = out.residual
        assert c != 0
        ket = np.zeros(2, complex)
        ket[out.bit] = 1
        ket[1 - out.bit] = c
        assert sv.fidelity(s, sv.StateVector(ket / np.linalg.norm(ket))) == pytest.approx(1, abs=1e-14)
        assert abs(s.norm() - 1) < 1e-12

    def test_residual_rms(self):
        rng = np.random.default_rng(3)
        cs = [sv.measure_qubit(sv.new_basis_state(1), 0, 0.05, rng).residual for _ in range(20000)]
        # E|c|^2 = c_rms^2, relative sd of the estimate ~ 1/sqrt(20000)
        assert np.mean(np.abs(cs) ** 2) == pytest.approx(0.05 ** 2, rel=0.03)

    def test_remeasure_same_bit(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            s = random_state(rng, 3)
            first = sv.measure_qubit(s, 1, 0.0, rng).bit
            assert sv.measure_qubit(s, 1, 0.0, rng).bit == first

    def test_index_range(self):
        with pytest.raises(IndexError):
            sv.measure_qubit(sv.new_basis_state(2), 2, 0.0, np.random.default_rng())


class TestDiscard:
    def test_ancilla_in_zero(self):
        rng = np.random.default_rng(0)
        psi = random_state(rng, 2)
        s = psi.copy()
        sv.append_qubits(s, 1)
        out = sv.discard_qubit(s, 2, 0.0, rng)
        assert out.bit == 0 and s.n_qubits == 2
        assert np.allclose(s.amps, psi.amps, atol=1e-14)

    def test_product_factor_preserved(self):
        rng = np.random.default_rng(5)
        a = np.array([0.6, 0.8j])
        b = np.array([1, 1j]) / np.sqrt(2)
        s = sv.StateVector(np.kron(b, a))  # qubit 0 = a, qubit 1 = b
        sv.discard_qubit(s, 1, 0.0, rng)
        assert sv.fidelity(s, sv.StateVector(a)) == pytest.approx(1, abs=1e-14)

    def test_last_qubit(self):
        with pytest.raises(ValueError):
            sv.discard_qubit(sv.new_basis_state(1), 0, 0.0, np.random.default_rng())


class TestFidelity:
    def test_self(self):
        s = random_state(np.random.default_rng(6), 3)
        assert sv.fidelity(s, s) == pytest.approx(1, abs=1e-14)

    def test_orthogonal(self):
        assert sv.fidelity(sv.new_basis_state(1, "0"), sv.new_basis_state(1, "1")) == 0.0

    def test_rotated(self):
        s = sv.StateVector(np.array([np.cos(0.1), -1j * np.sin(0.1)]))
        oracle = abs(np.vdot([1, 0], s.amps)) ** 2
        assert sv.fidelity(s, sv.new_basis_state(1)) == pytest.approx(oracle, abs=1e-15)
        assert oracle == pytest.approx(np.cos(0.1) ** 2, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sv.fidelity(sv.new_basis_state(1), sv.new_basis_state(2))
