"""The memory experiment: keep one logical qubit alive round after round.

A trial prepares the initial qubit with a (noisy) one-qubit gate, encodes and
verifies it, then repeats

    idle -> m syndrome extractions -> majority vote -> recovery -> record

until ``max_rounds``. Every gate and measurement takes time during which all
live qubits keep rotating. Fidelity is taken against the exact encoded
initial state, which is stored separately and never evolved.

Modes:

``continuous``
    no ideal elements: jittered gates, imperfect measurements, idle kicks on
    every live qubit during every interval.
``discrete_baseline``
    ideal gates preceded by discrete Pauli faults, ideal measurements, idle
    kicks as in ``continuous``.
``uncorrected``
    a bare physical qubit idling for the duration of one corrected round.
``pedagogical``
    idle kicks on data qubits only; gates and measurements are ideal and
    instantaneous.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial

import numpy as np

from . import codes
from .noise import NoiseModel
from .processor import CONTINUOUS, DISCRETE_BASELINE, PEDAGOGICAL, Processor
from .statevec import MAX_QUBITS, StateVector, fidelity

MODES = ("continuous", "discrete_baseline", "uncorrected", "pedagogical")
INITIAL_STATES = ("plus_x", "basis0", "custom")
RNG_NAME = "numpy.random.PCG64 via SeedSequence([master_seed, trial_index])"
_EXECUTION = {"continuous": CONTINUOUS, "discrete_baseline": DISCRETE_BASELINE,
              "uncorrected": CONTINUOUS, "pedagogical": PEDAGOGICAL}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    code: str = "bitflip3"
    noise: NoiseModel = field(default_factory=NoiseModel)
    initial_state: str = "plus_x"
    theta: float = 0.0
    phi: float = 0.0
    idle_steps_per_round: int = 10
    syndrome_repeats: int = 3
    verification_repeats: int = 3
    max_rounds: int = 20
    crash_fidelity: float = 0.5
    trials: int = 100
    master_seed: int = 0
    mode: str = "continuous"
    fault_tolerant: bool = False
    retry_budget: int = 10
    stop_on_crash: bool = False
    period: int | None = None
    max_qubits: int = MAX_QUBITS

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(key, msg)

        def is_int(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

        need(self.code in codes.CODES, "code", f"must be one of {sorted(codes.CODES)}")
        need(isinstance(self.noise, NoiseModel), "noise", "must be a NoiseModel")
        need(self.initial_state in INITIAL_STATES, "initial_state", f"must be one of {INITIAL_STATES}")
        need(self.mode in MODES, "mode", f"must be one of {MODES}")
        for key in ("idle_steps_per_round", "verification_repeats", "max_rounds", "retry_budget"):
            need(is_int(getattr(self, key)) and getattr(self, key) >= 0, key, "must be an integer >= 0")
        for key in ("syndrome_repeats", "trials", "max_qubits"):
            need(is_int(getattr(self, key)) and getattr(self, key) >= 1, key, "must be an integer >= 1")
        need(is_int(self.master_seed) and 0 <= self.master_seed < 2 ** 64, "master_seed",
             "must be an unsigned 64-bit integer")
        need(isinstance(self.crash_fidelity, (int, float)) and 0 < self.crash_fidelity < 1,
             "crash_fidelity", "must lie strictly between 0 and 1")
        need(self.period is None or (is_int(self.period) and self.period >= 0), "period",
             "must be null or an integer >= 0")
        need(not (self.code == "none" and self.mode != "uncorrected"), "mode",
             "code 'none' only runs in uncorrected mode")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = self.noise.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown key")
        d = dict(d)
        if "noise" in d and not isinstance(d["noise"], NoiseModel):
            nd = d["noise"]
            if not isinstance(nd, dict):
                raise ConfigError("noise", "must be an object")
            nkeys = {f.name for f in fields(NoiseModel)}
            for key in nd:
                if key not in nkeys:
                    raise ConfigError(f"noise.{key}", "unknown key")
            try:
                d["noise"] = NoiseModel(**nd)
            except (ValueError, TypeError) as exc:
                raise ConfigError("noise", str(exc)) from None
        return cls(**d)


def initial_vector(config: RunConfig) -> np.ndarray:
    if config.initial_state == "plus_x":
        return np.array([1, 1], dtype=complex) / np.sqrt(2)
    if config.initial_state == "basis0":
        return np.array([1, 0], dtype=complex)
    return np.array([np.cos(config.theta / 2),
                     np.exp(1j * config.phi) * np.sin(config.theta / 2)], dtype=complex)


def preparation_unitary(psi: np.ndarray) -> np.ndarray:
    """A unitary taking |0> to ``psi``."""
    a, b = psi
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=complex)


def round_steps(config: RunConfig) -> int:
    """Duration of one EC round with no recovery gates and plain extraction."""
    if config.mode == "pedagogical":
        return config.idle_steps_per_round
    code = codes.get_code(config.code)
    nm = config.noise
    return config.idle_steps_per_round + config.syndrome_repeats * (
        code.syndrome_gate_count * nm.d_gate + code.n_syndrome_ancillas * nm.d_meas)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, trial_index])))


def refrigerator_draw(proc: Processor, count: int) -> list[int]:
    """Fresh |0> ancillas; idle noise reaches them from now on."""
    return proc.draw(count)


@dataclass
class TrialResult:
    trial: int
    seed: tuple[int, int]
    fidelity: list[float] = field(default_factory=list)
    syndromes: list[str] = field(default_factory=list)
    elapsed: list[int] = field(default_factory=list)
    recovery_gates: list[int] = field(default_factory=list)
    syndrome_history: list[list[str]] = field(default_factory=list)
    crash_round: int | None = None
    ancillas_used: int = 0
    events: list[tuple[int, str, str]] = field(default_factory=list)
    audit: dict = field(default_factory=dict)


def _drain(proc: Processor, result: TrialResult, round_index: int) -> None:
    result.events.extend((round_index, kind, detail) for kind, detail in proc.events)
    proc.events.clear()


def _record(result: TrialResult, proc: Processor, ref: StateVector, r: int, syn: str,
            n_fix: int, config: RunConfig) -> bool:
    f = fidelity(proc.state, ref)
    result.fidelity.append(f)
    result.syndromes.append(syn)
    result.elapsed.append(proc.clock)
    result.recovery_gates.append(n_fix)
    if result.crash_round is None and f < config.crash_fidelity:
        result.crash_round = r
        return True
    return False


def run_trial(config: RunConfig, trial_index: int) -> TrialResult:
    code = codes.get_code(config.code)
    rng = trial_rng(config.master_seed, trial_index)
    proc = Processor(None, config.noise, rng, _EXECUTION[config.mode],
                     noisy_limit=code.n_data, max_qubits=config.max_qubits)
    psi = initial_vector(config)
    prep = preparation_unitary(psi)
    result = TrialResult(trial_index, (config.master_seed, trial_index))

    if config.mode == "uncorrected":
        ref = StateVector(psi)
        proc.fresh(1)
        proc.gate(prep, (0,))
        period = config.period if config.period is not None else round_steps(config)
        crashed = _record(result, proc, ref, 0, "", 0, config)
        for r in range(1, config.max_rounds + 1):
            if crashed and config.stop_on_crash:
                break
            proc.idle(period)
            crashed = _record(result, proc, ref, r, "", 0, config) or crashed
        return _finish(result, proc)

    ref = codes.logical_state(code, psi)
    kw = dict(fault_tolerant=config.fault_tolerant, cat_repeats=config.verification_repeats,
              retry_budget=config.retry_budget)
    for _ in range(max(config.retry_budget, 1)):
        proc.fresh(1)
        proc.gate(prep, (0,))
        codes.encode(code, proc)
        if config.verification_repeats == 0:
            break
        ok, reads = codes.verify_encoding(code, proc, config.verification_repeats, **kw)
        result.syndrome_history.append(reads)
        if ok:
            break
        proc.log("encoding_rejected", "/".join(reads))
    else:
        proc.log("encoding_retry_exhausted", str(config.retry_budget))
    _drain(proc, result, 0)
    crashed = _record(result, proc, ref, 0, "", 0, config)

    for r in range(1, config.max_rounds + 1):
        if crashed and config.stop_on_crash:
            break
        proc.idle(config.idle_steps_per_round)
        rec = codes.measure_syndrome(code, proc, config.syndrome_repeats, r, **kw)
        result.syndrome_history.append(rec.repeats)
        n_fix = codes.recover(code, proc, rec.accepted)
        _drain(proc, result, r)
        crashed = _record(result, proc, ref, r, rec.accepted, n_fix or 0, config) or crashed
    return _finish(result, proc)


def _finish(result: TrialResult, proc: Processor) -> TrialResult:
    _drain(proc, result, len(result.fidelity) - 1)
    result.audit = proc.audit()
    result.ancillas_used = result.audit["ancillas_drawn"]
    return result


@dataclass
class RunResult:
    config: RunConfig
    trials: list[TrialResult]

    def fidelity_matrix(self) -> np.ndarray:
        """``(trials, rounds + 1)`` fidelities, NaN after an early stop."""
        width = max(len(t.fidelity) for t in self.trials)
        out = np.full((len(self.trials), width), np.nan)
        for i, t in enumerate(self.trials):
            out[i, :len(t.fidelity)] = t.fidelity
        return out

    def mean_fidelity(self) -> np.ndarray:
        return np.nanmean(self.fidelity_matrix(), axis=0)

    def std_fidelity(self) -> np.ndarray:
        return np.nanstd(self.fidelity_matrix(), axis=0)

    def stderr_fidelity(self) -> np.ndarray:
        m = self.fidelity_matrix()
        n = np.sum(~np.isnan(m), axis=0)
        return np.nanstd(m, axis=0, ddof=1) / np.sqrt(n) if len(self.trials) > 1 \
            else np.zeros(m.shape[1])

    def mean_elapsed(self) -> np.ndarray:
        width = max(len(t.elapsed) for t in self.trials)
        m = np.full((len(self.trials), width), np.nan)
        for i, t in enumerate(self.trials):
            m[i, :len(t.elapsed)] = t.elapsed
        return np.nanmean(m, axis=0)

    def crash_histogram(self) -> dict[str, int]:
        hist: dict[str, int] = {}
        for t in self.trials:
            key = "none" if t.crash_round is None else str(t.crash_round)
            hist[key] = hist.get(key, 0) + 1
        return dict(sorted(hist.items(), key=lambda kv: (kv[0] == "none", int(kv[0]) if kv[0] != "none" else 0)))

    def event_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for t in self.trials:
            for _, kind, _ in t.events:
                counts[kind] = counts.get(kind, 0) + 1
        return dict(sorted(counts.items()))


def run_experiment(config: RunConfig, threads: int = 1) -> RunResult:
    """Run ``config.trials`` independent trials; results are in trial order.

    Each trial draws from its own stream seeded by ``(master_seed, trial)``,
    so the output does not depend on ``threads``.
    """
    indices = range(config.trials)
    if threads > 1 and config.trials > 1:
        chunk = max(1, math.ceil(config.trials / (4 * threads)))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(partial(run_trial, config), indices, chunksize=chunk))
    else:
        trials = [run_trial(config, i) for i in indices]
    return RunResult(config, trials)


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    noise_changes = {k: changes.pop(k) for k in list(changes) if k in NoiseModel.__dataclass_fields__}
    if noise_changes:
        changes["noise"] = replace(config.noise, **noise_changes)
    return replace(config, **changes)
