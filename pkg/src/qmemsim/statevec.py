"""Dense state-vector engine.

Amplitudes are stored in a flat complex array of length ``2**n``. Qubit 0 is
the least-significant bit of the amplitude index, and bitstrings are written
with qubit 0 first, so ``"01"`` means qubit 0 in |0> and qubit 1 in |1>.
Appended qubits always take the highest indices.

All operations are pure-state (trajectory) operations. Measurements collapse
and renormalize; nothing here ever builds a density matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 22
NORM_TOL = 1e-10
UNITARY_TOL = 1e-9


class CapacityError(ValueError):
    """Raised when an operation would exceed the live-qubit budget."""


@dataclass
class MeasurementOutcome:
    bit: int
    residual: complex = 0j
    probability: float = 1.0


class StateVector:
    """Wavefunction of ``n_qubits`` live qubits."""

    __slots__ = ("amps", "max_qubits")

    def __init__(self, amps: np.ndarray, max_qubits: int = MAX_QUBITS):
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size != 1 << n or n < 1:
            raise ValueError(f"amplitude array length {amps.size} is not 2**n with n >= 1")
        if n > max_qubits:
            raise CapacityError(f"{n} qubits exceeds capacity {max_qubits}")
        self.amps = amps
        self.max_qubits = max_qubits

    @property
    def n_qubits(self) -> int:
        return self.amps.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.max_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def basis_index(bits: str) -> int:
    """Amplitude index of a bitstring written qubit 0 first."""
    idx = 0
    for q, ch in enumerate(bits):
        if ch not in "01":
            raise ValueError(f"invalid bit {ch!r} in {bits!r}")
        if ch == "1":
            idx |= 1 << q
    return idx


def index_bits(index: int, n: int) -> str:
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n))


def new_basis_state(n: int, bits: str | None = None, max_qubits: int = MAX_QUBITS) -> StateVector:
    if not 1 <= n <= max_qubits:
        raise CapacityError(f"qubit count {n} outside [1, {max_qubits}]")
    bits = "0" * n if bits is None else bits
    if len(bits) != n:
        raise ValueError(f"bitstring {bits!r} does not have length {n}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[basis_index(bits)] = 1.0
    return StateVector(amps, max_qubits)


def from_terms(terms: dict[str, complex], max_qubits: int = MAX_QUBITS,
               normalize: bool = True) -> StateVector:
    """Build a state from ``{bitstring: amplitude}``."""
    n = len(next(iter(terms)))
    amps = np.zeros(1 << n, dtype=complex)
    for bits, a in terms.items():
        amps[basis_index(bits)] += a
    if normalize:
        amps /= np.linalg.norm(amps)
    return StateVector(amps, max_qubits)


def _check_targets(n: int, targets: Sequence[int]) -> None:
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {list(targets)}")
    for q in targets:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")


def is_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return U.ndim == 2 and U.shape[0] == U.shape[1] and \
        np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])) <= tol


def apply_unitary(state: StateVector, targets: Sequence[int], U: np.ndarray,
                  check: bool = True) -> StateVector:
    """Apply ``U`` to ``targets`` in place.

    ``U`` is indexed like a small register: ``targets[0]`` is its
    least-significant bit. So for a CNOT, ``targets = (control, target)``.
    """
    n = state.n_qubits
    k = len(targets)
    if check:
        _check_targets(n, targets)
        U = np.asarray(U, dtype=complex)
        if U.shape != (1 << k, 1 << k):
            raise ValueError(f"matrix shape {U.shape} does not act on {k} qubits")
        if not is_unitary(U):
            raise ValueError("matrix is not unitary")
    if k == 1:
        q = targets[0]
        view = state.amps.reshape(1 << (n - q - 1), 2, 1 << q)
        state.amps = np.matmul(U, view).reshape(-1)
        return state
    # tensor axis for qubit q is n-1-q; put targets[k-1] .. targets[0] first
    axes = [n - 1 - q for q in reversed(targets)]
    t = np.moveaxis(state.amps.reshape((2,) * n), axes, range(k))
    shape = t.shape
    t = (U @ t.reshape(1 << k, -1)).reshape(shape)
    state.amps = np.ascontiguousarray(np.moveaxis(t, range(k), axes)).reshape(-1)
    return state


def append_qubits(state: StateVector, k: int, bits: str | None = None) -> StateVector:
    """Tensor ``|bits>`` onto the register; new qubits get the highest indices."""
    n = state.n_qubits
    if n + k > state.max_qubits:
        raise CapacityError(f"appending {k} qubits to {n} exceeds capacity {state.max_qubits}")
    bits = "0" * k if bits is None else bits
    if len(bits) != k:
        raise ValueError(f"bitstring {bits!r} does not have length {k}")
    new = np.zeros((1 << k, 1 << n), dtype=complex)
    new[basis_index(bits)] = state.amps
    state.amps = new.reshape(-1)
    return state


def prob_one(state: StateVector, q: int) -> float:
    n = state.n_qubits
    view = state.amps.reshape(1 << (n - q - 1), 2, 1 << q)
    return float(np.vdot(view[:, 1, :], view[:, 1, :]).real)


def _circular_gaussian(c_rms: float, rng: np.random.Generator) -> complex:
    if c_rms == 0:
        return 0j
    re, im = rng.normal(0.0, c_rms / np.sqrt(2.0), size=2)
    return complex(re, im)


def measure_qubit(state: StateVector, q: int, c_rms: float,
                  rng: np.random.Generator) -> MeasurementOutcome:
    """Z-basis measurement of qubit ``q`` with an imperfect collapse.

    After projecting onto the sampled outcome, the measured qubit is left in
    ``|bit> + c|1-bit>`` (renormalized), with ``c`` drawn from a circular
    Gaussian of RMS ``c_rms``.
    """
    n = state.n_qubits
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n} qubits")
    if c_rms < 0:
        raise ValueError("c_rms must be >= 0")
    view = state.amps.reshape(1 << (n - q - 1), 2, 1 << q)
    p1 = float(np.vdot(view[:, 1, :], view[:, 1, :]).real)
    p1 = min(max(p1, 0.0), 1.0)
    bit = int(rng.random() < p1)
    p = p1 if bit else 1.0 - p1
    c = _circular_gaussian(c_rms, rng)
    kept = view[:, bit, :] / np.sqrt(p)
    out = np.empty_like(view)
    out[:, bit, :] = kept
    out[:, 1 - bit, :] = c * kept
    if c != 0:
        out /= np.sqrt(1.0 + abs(c) ** 2)
    state.amps = out.reshape(-1)
    return MeasurementOutcome(bit, c, p)


def remove_qubit(state: StateVector, q: int, bit: int) -> float:
    """Slice out qubit ``q`` keeping the ``bit`` branch; returns its weight.

    The remaining state is renormalized. Used both after a measurement and
    for exact branch enumeration.
    """
    n = state.n_qubits
    if n < 2:
        raise ValueError("cannot remove the last qubit")
    view = state.amps.reshape(1 << (n - q - 1), 2, 1 << q)
    kept = np.ascontiguousarray(view[:, bit, :]).reshape(-1)
    w = float(np.vdot(kept, kept).real)
    if w > 0:
        kept /= np.sqrt(w)
    state.amps = kept
    return w


def discard_qubit(state: StateVector, q: int, c_rms: float,
                  rng: np.random.Generator) -> MeasurementOutcome:
    """Measure qubit ``q`` and drop it from the register.

    The residual admixture stays on the measured qubit, which is a product
    factor after collapse, so it leaves with the qubit.
    """
    if state.n_qubits < 2:
        raise ValueError("cannot discard the last qubit")
    outcome = measure_qubit(state, q, c_rms, rng)
    remove_qubit(state, q, outcome.bit)
    return outcome


def overlap(state: StateVector, reference: StateVector) -> complex:
    if state.n_qubits != reference.n_qubits:
        raise ValueError(f"dimension mismatch: {state.n_qubits} vs {reference.n_qubits} qubits")
    return complex(np.vdot(reference.amps, state.amps))


def fidelity(state: StateVector, reference: StateVector) -> float:
    """Squared overlap ``|<reference|state>|**2`` clipped into [0, 1]."""
    f = abs(overlap(state, reference)) ** 2
    return min(max(f, 0.0), 1.0)
