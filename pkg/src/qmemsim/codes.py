"""Error-correcting codes for a single logical qubit.

Two codes are provided:

``bitflip3``
    |0> -> |000>, |1> -> |111>. The syndrome operator writes
    ``s1 = d0 xor d1`` and ``s3 = d1 xor d2`` onto three fresh ancillas; the
    middle ancilla is never touched, so single flips always read ``s2 = 0``.

``steane7``
    The [[7,1,3]] CSS code. |0_L> is the uniform superposition of the eight
    words spanned by 0001111, 0110011 and 1010101; |1_L> is its complement.
    Three Z-type checks locate X errors, three X-type checks locate Z errors,
    and each 3-bit half of the syndrome reads as the binary position
    (1-based) of the flipped qubit.

Circuits are lists of :class:`GateOp` whose targets are register positions:
data qubits sit at ``0 .. n_data-1`` and the ancillas of a syndrome stage at
``n_data, n_data+1, ...`` while the stage runs. Everything executes through
a :class:`~qmemsim.processor.Processor`, which decides how noisy it is.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .processor import Processor
from .statevec import StateVector, apply_unitary, append_qubits, fidelity, index_bits

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
I1 = np.eye(2, dtype=complex)
# targets (control, target); control is the least-significant index bit
CNOT = np.array([[1, 0, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)

_MATRICES = {"hadamard": H, "pauli_x": PX, "pauli_z": PZ, "identity": I1, "cnot": CNOT, "cz": CZ}
for _m in _MATRICES.values():
    _m.setflags(write=False)


@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.matrix is None:
            object.__setattr__(self, "matrix", _MATRICES[self.kind])

    def shifted(self, offset: int) -> "GateOp":
        return GateOp(self.kind, tuple(t + offset for t in self.targets), self.matrix)


def cnot(control: int, target: int) -> GateOp:
    return GateOp("cnot", (control, target))


def hadamard(q: int) -> GateOp:
    return GateOp("hadamard", (q,))


@dataclass(frozen=True)
class SyndromeStage:
    """Ancillas drawn together, coupled by ``gates``, then measured in order."""

    n_ancilla: int
    gates: tuple[GateOp, ...]


@dataclass(frozen=True)
class Stabilizer:
    kind: str  # "X" or "Z"
    support: tuple[int, ...]


@dataclass(frozen=True)
class CodeSpec:
    name: str
    n_data: int
    encoding_circuit: tuple[GateOp, ...]
    stages: tuple[SyndromeStage, ...]
    recovery_table: dict = field(compare=False)
    stabilizers: tuple[Stabilizer, ...] = ()

    @property
    def syndrome_circuit(self) -> tuple[GateOp, ...]:
        """All stage gates with ancillas laid out side by side after the data."""
        out, offset = [], 0
        for st in self.stages:
            for g in st.gates:
                out.append(GateOp(g.kind, tuple(t if t < self.n_data else t + offset
                                                for t in g.targets), g.matrix))
            offset += st.n_ancilla
        return tuple(out)

    @property
    def n_syndrome_ancillas(self) -> int:
        return sum(st.n_ancilla for st in self.stages)

    @property
    def syndrome_gate_count(self) -> int:
        return sum(len(st.gates) for st in self.stages)

    @property
    def trivial_syndrome(self) -> str:
        return "0" * self.n_syndrome_ancillas


@dataclass
class SyndromeRecord:
    repeats: list[str]
    accepted: str
    round_index: int = 0
    tie: bool = False


def bitflip3() -> CodeSpec:
    enc = (cnot(0, 1), cnot(0, 2))
    stage = SyndromeStage(3, (cnot(0, 3), cnot(1, 3), cnot(1, 5), cnot(2, 5)))
    table = {"000": (), "100": (("X", 0),), "101": (("X", 1),), "001": (("X", 2),)}
    return CodeSpec("bitflip3", 3, enc, (stage,), table,
                    (Stabilizer("Z", (0, 1)), Stabilizer("Z", (1, 2))))


# Parity checks of the Hamming code; column j reads as binary j+1.
HAMMING_ROWS = ("0001111", "0110011", "1010101")


def steane_codewords() -> list[str]:
    rows = [np.array([int(c) for c in r]) for r in HAMMING_ROWS]
    words = set()
    for coeffs in itertools.product((0, 1), repeat=3):
        w = sum(c * r for c, r in zip(coeffs, rows)) % 2
        words.add("".join(map(str, w)))
    return sorted(words)


def _steane_table() -> dict:
    table = {}
    for xs in itertools.product("01", repeat=3):
        for zs in itertools.product("01", repeat=3):
            fix = []
            pos = 4 * int(xs[0]) + 2 * int(xs[1]) + int(xs[2])
            if pos:
                fix.append(("X", pos - 1))
            pos = 4 * int(zs[0]) + 2 * int(zs[1]) + int(zs[2])
            if pos:
                fix.append(("Z", pos - 1))
            table["".join(xs + zs)] = tuple(fix)
    return table


def steane7() -> CodeSpec:
    # input on qubit 0; 1110000 is the odd coset representative, 1101001,
    # 1010101 and 0110011 span |0_L> with pivots on qubits 3, 4, 5
    enc = [cnot(0, 1), cnot(0, 2), hadamard(3), hadamard(4), hadamard(5)]
    for pivot, word in ((3, "1101001"), (4, "1010101"), (5, "0110011")):
        enc += [cnot(pivot, q) for q, ch in enumerate(word) if ch == "1" and q != pivot]
    stabs, stages = [], []
    for row in HAMMING_ROWS:
        supp = tuple(q for q, ch in enumerate(row) if ch == "1")
        stabs.append(Stabilizer("Z", supp))
        stages.append(SyndromeStage(1, tuple(cnot(q, 7) for q in supp)))
    for row in HAMMING_ROWS:
        supp = tuple(q for q, ch in enumerate(row) if ch == "1")
        stabs.append(Stabilizer("X", supp))
        stages.append(SyndromeStage(1, (hadamard(7),) + tuple(cnot(7, q) for q in supp)
                                    + (hadamard(7),)))
    return CodeSpec("steane7", 7, tuple(enc), tuple(stages), _steane_table(), tuple(stabs))


def no_code() -> CodeSpec:
    return CodeSpec("none", 1, (), (), {"": ()})


CODES = {"bitflip3": bitflip3, "steane7": steane7, "none": no_code}


def get_code(name: str) -> CodeSpec:
    try:
        return CODES[name]()
    except KeyError:
        raise ValueError(f"unknown code {name!r}; expected one of {sorted(CODES)}") from None


# execution


def run_circuit(proc: Processor, gates, offset: int = 0) -> None:
    for g in gates:
        proc.gate(g.matrix, g.targets if not offset else tuple(t + offset for t in g.targets))


def encode(code: CodeSpec, proc: Processor) -> None:
    """Spread the single qubit in ``proc`` over ``code.n_data`` qubits."""
    if proc.n_live != 1:
        raise ValueError("encode expects a single-qubit register")
    if code.n_data > 1:
        proc.draw(code.n_data - 1)
    run_circuit(proc, code.encoding_circuit)


def logical_state(code: CodeSpec, psi: np.ndarray) -> StateVector:
    """Exact encoded state ``a|0_L> + b|1_L>`` for ``psi = (a, b)``."""
    proc = Processor.ideal(StateVector(np.asarray(psi, dtype=complex)))
    encode(code, proc)
    return proc.state


def _read_stage(proc: Processor, n_data: int, n_anc: int) -> str:
    return "".join(str(proc.discard(n_data).bit) for _ in range(n_anc))


def extract_syndrome(code: CodeSpec, proc: Processor, fault_tolerant: bool = False,
                     cat_repeats: int = 3, retry_budget: int = 10) -> str:
    """One repetition of syndrome extraction; ancillas are drawn and returned."""
    if proc.n_live != code.n_data:
        raise ValueError(f"expected {code.n_data} data qubits, register has {proc.n_live}")
    if fault_tolerant and code.stabilizers and code.name == "steane7":
        return "".join(_cat_check(code, proc, st, cat_repeats, retry_budget)
                       for st in code.stabilizers)
    bits = []
    for st in code.stages:
        proc.draw(st.n_ancilla)
        run_circuit(proc, st.gates)
        bits.append(_read_stage(proc, code.n_data, st.n_ancilla))
    return "".join(bits)


def majority(repeats: list[str], trivial: str) -> tuple[str, bool]:
    """Most frequent syndrome; a tie for first place falls back to ``trivial``."""
    counts = Counter(repeats).most_common()
    if len(counts) > 1 and counts[0][1] == counts[1][1]:
        return trivial, True
    return counts[0][0], False


def measure_syndrome(code: CodeSpec, proc: Processor, repeats: int, round_index: int = 0,
                     **kwargs) -> SyndromeRecord:
    if repeats < 1:
        raise ValueError("need at least one syndrome repetition")
    reads = [extract_syndrome(code, proc, **kwargs) for _ in range(repeats)]
    accepted, tie = majority(reads, code.trivial_syndrome)
    if tie:
        proc.log("syndrome_tie", "/".join(reads))
    return SyndromeRecord(reads, accepted, round_index, tie)


def recovery_gates(code: CodeSpec, syndrome: str):
    fixes = code.recovery_table.get(syndrome)
    if fixes is None:
        return None
    return [GateOp("pauli_x" if p == "X" else "pauli_z", (q,)) for p, q in fixes]


def recover(code: CodeSpec, proc: Processor, syndrome: str) -> int | None:
    """Apply the correction for ``syndrome``; returns the number of gates used.

    An unknown syndrome is logged as uncorrectable and returns None.
    """
    gates = recovery_gates(code, syndrome)
    if gates is None:
        proc.log("uncorrectable_syndrome", syndrome)
        return None
    run_circuit(proc, gates)
    return len(gates)


def verify_encoding(code: CodeSpec, proc: Processor, repeats: int,
                    **kwargs) -> tuple[bool, list[str]]:
    """Accept iff every one of ``repeats`` syndrome readings is trivial."""
    reads = [extract_syndrome(code, proc, **kwargs) for _ in range(repeats)]
    return all(r == code.trivial_syndrome for r in reads), reads


# cat states


def cat_circuit(k: int) -> list[GateOp]:
    return [hadamard(0)] + [cnot(i, i + 1) for i in range(k - 1)]


def prepare_cat(proc: Processor, k: int) -> list[int]:
    """Draw ``k`` ancillas and entangle them into (|0..0> + |1..1>)/sqrt(2)."""
    if k < 2:
        raise ValueError("a cat state needs at least 2 qubits")
    pos = proc.draw(k)
    run_circuit(proc, cat_circuit(k), offset=pos[0])
    return pos


def make_cat(k: int, proc: Processor) -> StateVector:
    """Standalone cat state built by ``proc``'s noise settings."""
    proc.fresh(k)
    run_circuit(proc, cat_circuit(k))
    return proc.state


def verify_cat(proc: Processor, cat: list[int], repeats: int, pairs=None) -> bool:
    """Parity checks of adjacent cat qubits onto fresh ancillas.

    ``pairs`` fixes which adjacent pair (index into ``cat``) each repetition
    checks; by default each repetition picks one at random.
    """
    ok = True
    for r in range(repeats):
        i = pairs[r] if pairs is not None else int(proc.rng.integers(len(cat) - 1))
        (anc,) = proc.draw(1)
        proc.gate(CNOT, (cat[i], anc))
        proc.gate(CNOT, (cat[i + 1], anc))
        if proc.discard(anc).bit:
            ok = False
    return ok


def _drop(proc: Processor, positions: list[int]) -> list[int]:
    return [proc.discard(positions[0]).bit for _ in positions]


def _cat_check(code: CodeSpec, proc: Processor, stab: Stabilizer, repeats: int,
               budget: int) -> str:
    k = len(stab.support)
    for attempt in range(budget):
        cat = prepare_cat(proc, k)
        if verify_cat(proc, cat, repeats):
            break
        _drop(proc, cat)
    else:
        proc.log("ancilla_starvation", f"{stab.kind}{stab.support}")
        cat = prepare_cat(proc, k)
    coupler = CZ if stab.kind == "Z" else CNOT
    for c, q in zip(cat, stab.support):
        proc.gate(coupler, (c, q))
    for c in cat:
        proc.gate(H, (c,))
    return str(sum(_drop(proc, cat)) % 2)


# exact ideal round, used as an oracle-grade reference


def apply_syndrome_operator(code: CodeSpec, state: StateVector) -> StateVector:
    """Ideal S: append all syndrome ancillas in |0> and run every stage at once."""
    append_qubits(state, code.n_syndrome_ancillas)
    for g in code.syndrome_circuit:
        apply_unitary(state, g.targets, g.matrix, check=False)
    return state


def ideal_round_branches(code: CodeSpec, state: StateVector) -> list[tuple[str, float, StateVector]]:
    """Every measurement branch of one ideal extraction + recovery round.

    Returns ``(syndrome, probability, corrected data state)`` for each branch
    of nonzero probability. Unknown syndromes are returned uncorrected.
    """
    n, a = code.n_data, code.n_syndrome_ancillas
    full = apply_syndrome_operator(code, state.copy())
    block = full.amps.reshape(1 << a, 1 << n)
    out = []
    for idx in range(1 << a):
        v = block[idx]
        p = float(np.vdot(v, v).real)
        if p < 1e-30:
            continue
        syn = index_bits(idx, a)
        branch = StateVector(v / np.sqrt(p), state.max_qubits)
        for g in recovery_gates(code, syn) or ():
            apply_unitary(branch, g.targets, g.matrix, check=False)
        out.append((syn, p, branch))
    return out


def expected_round_fidelity(code: CodeSpec, state: StateVector, reference: StateVector) -> float:
    return sum(p * fidelity(b, reference) for _, p, b in ideal_round_branches(code, state))
