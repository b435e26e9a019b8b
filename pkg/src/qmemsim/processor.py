"""Timed execution of circuits on a noisy register.

A :class:`Processor` owns one trial's state vector, noise model and random
stream. Every gate and measurement goes through it, so it is the single
place that decides what is jittered, what is timed, and which qubits are
kicked while time passes. It also keeps the counters used to audit that no
ideal element slipped into a run.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import noise as nz
from .statevec import (
    MAX_QUBITS,
    MeasurementOutcome,
    StateVector,
    append_qubits,
    apply_unitary,
    discard_qubit,
    measure_qubit,
    new_basis_state,
)


@dataclass(frozen=True)
class Execution:
    """How a processor realizes the abstract noise model.

    ``jitter``: multiply gates by random unitaries (continuous model).
    ``discrete``: prefix ideal gates with Pauli faults (baseline model).
    ``imperfect_measurement``: leave a residual admixture after collapse.
    ``timed``: gates and measurements take ``d_gate``/``d_meas`` steps.
    ``idle_all``: kick every live qubit while time passes; otherwise only
    the data qubits (``noisy_limit`` lowest indices) are kicked.
    """

    jitter: bool = True
    discrete: bool = False
    imperfect_measurement: bool = True
    timed: bool = True
    idle_all: bool = True


CONTINUOUS = Execution()
DISCRETE_BASELINE = Execution(jitter=False, discrete=True, imperfect_measurement=False)
PEDAGOGICAL = Execution(jitter=False, imperfect_measurement=False, timed=False, idle_all=False)
IDEAL = Execution(jitter=False, imperfect_measurement=False, timed=False, idle_all=False)


@dataclass
class Counters:
    gates: int = 0
    jittered_gates: int = 0
    discrete_checks: int = 0
    measurements: int = 0
    imperfect_measurements: int = 0
    ancillas_drawn: int = 0
    # label -> kicks received, label -> clock at birth, label -> clock at death
    kicks: dict = field(default_factory=dict)
    born: dict = field(default_factory=dict)
    died: dict = field(default_factory=dict)

    def lifetimes(self, clock: int) -> dict:
        return {lab: self.died.get(lab, clock) - t0 for lab, t0 in self.born.items()}


class Processor:
    def __init__(self, state: StateVector | None, model: nz.NoiseModel,
                 rng: np.random.Generator | None, execution: Execution = CONTINUOUS,
                 noisy_limit: int | None = None, max_qubits: int = MAX_QUBITS):
        self.model = model
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.execution = execution
        self.noisy_limit = noisy_limit
        self.max_qubits = max_qubits
        self.clock = 0
        self.counters = Counters()
        self._next_label = 0
        self.state: StateVector | None = None
        self.labels: list[int] = []
        self.events: list[tuple[str, str]] = []
        if state is not None:
            self.load(state)

    @classmethod
    def ideal(cls, state: StateVector | None = None, rng: np.random.Generator | None = None):
        return cls(state, nz.NoiseModel(), rng, IDEAL)

    # register management

    def load(self, state: StateVector) -> None:
        """Replace the register (old qubits retire, new ones are born now)."""
        for lab in self.labels:
            self.counters.died[lab] = self.clock
        state.max_qubits = self.max_qubits
        self.state = state
        self.labels = []
        for _ in range(state.n_qubits):
            self._birth()

    def fresh(self, n: int = 1) -> None:
        """Start over with ``n`` qubits straight out of the refrigerator."""
        self.load(new_basis_state(n, max_qubits=self.max_qubits))
        self.counters.ancillas_drawn += n

    def _birth(self) -> int:
        lab = self._next_label
        self._next_label += 1
        self.labels.append(lab)
        self.counters.kicks[lab] = 0
        self.counters.born[lab] = self.clock
        return lab

    @property
    def n_live(self) -> int:
        return self.state.n_qubits

    def draw(self, count: int) -> list[int]:
        """Take ``count`` fresh |0> ancillas from the refrigerator.

        They are appended at the highest indices and are subject to idle noise
        from this moment on. Returns their positions.
        """
        n = self.state.n_qubits
        append_qubits(self.state, count)
        for _ in range(count):
            self._birth()
        self.counters.ancillas_drawn += count
        return list(range(n, n + count))

    # time

    def idle(self, steps: int) -> None:
        if steps <= 0:
            return
        if self.execution.idle_all or self.noisy_limit is None:
            qubits = list(range(self.n_live))
        else:
            qubits = list(range(min(self.noisy_limit, self.n_live)))
        nz.apply_idle_noise(self.state, qubits, steps, self.model, self.rng)
        for q in qubits:
            self.counters.kicks[self.labels[q]] += steps
        self.clock += steps

    # operations

    def gate(self, U: np.ndarray, targets: Sequence[int]) -> None:
        ex = self.execution
        self.counters.gates += 1
        if ex.discrete:
            self.counters.discrete_checks += 1
            nz.apply_discrete_gate_failure(self.state, targets, self.model, self.rng)
        if ex.jitter:
            self.counters.jittered_gates += 1
            U = nz.jitter_gate(U, self.model, self.rng, check=False)
        apply_unitary(self.state, targets, U, check=False)
        if ex.timed:
            self.idle(self.model.d_gate)

    def _measure_prologue(self) -> float:
        self.counters.measurements += 1
        if self.execution.timed:
            self.idle(self.model.d_meas)
        if self.execution.imperfect_measurement:
            self.counters.imperfect_measurements += 1
            return self.model.c_rms
        return 0.0

    def measure(self, q: int) -> MeasurementOutcome:
        c_rms = self._measure_prologue()
        return measure_qubit(self.state, q, c_rms, self.rng)

    def discard(self, q: int) -> MeasurementOutcome:
        """Measure qubit ``q`` and return it to the environment."""
        c_rms = self._measure_prologue()
        outcome = discard_qubit(self.state, q, c_rms, self.rng)
        lab = self.labels.pop(q)
        self.counters.died[lab] = self.clock
        return outcome

    def log(self, kind: str, detail: str = "") -> None:
        self.events.append((kind, detail))

    def audit(self) -> dict:
        """Consistency of the no-ideal-elements bookkeeping."""
        c = self.counters
        life = c.lifetimes(self.clock)
        return {
            "gates": c.gates,
            "jittered_gates": c.jittered_gates,
            "measurements": c.measurements,
            "imperfect_measurements": c.imperfect_measurements,
            "ancillas_drawn": c.ancillas_drawn,
            "qubits_tracked": len(life),
            "kick_deficit": sum(life[lab] - c.kicks[lab] for lab in life),
            "kick_mismatches": sum(life[lab] != c.kicks[lab] for lab in life),
            "clock": self.clock,
        }
