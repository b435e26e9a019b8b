"""Quantitative experiments built on the simulator.

Fits use the coherence proxy ``2F - 1``: for a qubit whose fidelity decays
from 1 toward the classical value 1/2, this isolates the decaying
off-diagonal part. Decay constants are per unit of whatever time axis the
trace is indexed by (rounds by default, steps for the dephasing runs).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import codes
from .noise import NoiseModel, idle_unitaries, rotation_matrix
from .protocol import RunConfig, RunResult, run_experiment
from .statevec import StateVector, apply_unitary, fidelity

COHERENCE_FLOOR = 0.1


@dataclass
class DecayFit:
    rate: float | None
    rate_stderr: float | None
    model: str  # "exponential" or "none_detected"
    window: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {"rate": self.rate, "rate_stderr": self.rate_stderr, "model": self.model,
                "window": list(self.window) if self.window else None}


def fit_exponential(trace, times=None, floor: float = COHERENCE_FLOOR) -> DecayFit:
    """Least-squares fit of ``log(2F - 1)`` against time.

    The window is the leading run of points with ``2F - 1 > floor``. Fewer
    than three points in it means no decay could be fitted.
    """
    F = np.asarray(trace, dtype=float)
    t = np.arange(len(F), dtype=float) if times is None else np.asarray(times, dtype=float)
    if len(F) < 5:
        raise ValueError("need at least 5 points to fit")
    y = 2 * F - 1
    above = np.isfinite(y) & (y > floor)
    end = len(y) if above.all() else int(np.argmin(above))
    if end < 3:
        return DecayFit(None, None, "none_detected")
    tt, ly = t[:end], np.log(y[:end])
    A = np.vstack([np.ones_like(tt), tt]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = end - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    rate = -float(coef[1])
    # a growing coherence is fluctuation around no decay
    return DecayFit(max(rate, 0.0), float(np.sqrt(cov[1, 1])), "exponential", (0, end - 1))


def fit_run(result: RunResult, per: str = "round") -> DecayFit:
    """Fit the mean fidelity trace of a run, per round or per elapsed step."""
    mean = result.mean_fidelity()
    times = result.mean_elapsed() if per == "step" else None
    return fit_exponential(mean, times)


# N-qubit dephasing


@dataclass
class ScalingResult:
    ns: list[int]
    rates: list[float | None]
    rate_stderrs: list[float | None]
    slope: float | None
    eps_step: float
    traces: dict = field(default_factory=dict, repr=False)

    def rows(self):
        return list(zip(self.ns, self.rates, self.rate_stderrs))


def ghz_state(n: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return StateVector(amps)


def ghz_dephasing_trace(n: int, eps_step: float, steps: int, samples: int, trials: int,
                        rng: np.random.Generator, axis_mode: str = "z_only"):
    """Mean ``|<GHZ|psi(t)>|^2`` at ``samples`` equally spaced times up to ``steps``.

    All trials evolve together as rows of one ``(trials, 2**n)`` array.
    """
    model = NoiseModel(eps_step=eps_step, axis_mode=axis_mode)
    ref = ghz_state(n).amps
    psi = np.tile(ref, (trials, 1))
    edges = np.linspace(0, steps, samples + 1).round().astype(int)
    times, means = [0], [1.0]
    for dt, t in zip(np.diff(edges), edges[1:]):
        mats = idle_unitaries(model, (trials, n), int(dt), rng)
        for q in range(n):
            view = psi.reshape(trials, 1 << (n - q - 1), 2, 1 << q)
            psi = np.matmul(mats[:, q, None], view).reshape(trials, -1)
        f = np.abs(psi @ ref.conj()) ** 2
        times.append(int(t))
        means.append(float(f.mean()))
    return np.array(times), np.array(means)


def dephasing_scaling_experiment(n_max: int, eps_step: float, steps: int, trials: int,
                                 seed: int = 0, ns=None, samples: int = 40) -> ScalingResult:
    """Coherence decay rate of N-qubit GHZ states under z-only idle noise.

    ``ns`` defaults to the powers of two up to ``n_max``. The slope is a
    least-squares line through the origin of rate against N (undefined for a
    single N).
    """
    if ns is None:
        ns = [1 << k for k in range(int(np.log2(n_max)) + 1)]
    ns = sorted(set(int(n) for n in ns))
    if not ns or ns[0] < 1 or ns[-1] > 22:
        raise ValueError("qubit counts must lie in [1, 22]")
    rng = np.random.default_rng(seed)
    rates, errs, traces = [], [], {}
    for n in ns:
        t, F = ghz_dephasing_trace(n, eps_step, steps, samples, trials, rng)
        traces[n] = (t, F)
        fit = fit_exponential(F, t)
        rates.append(fit.rate)
        errs.append(fit.rate_stderr)
    slope = None
    pts = [(n, r) for n, r in zip(ns, rates) if r is not None]
    if len(ns) > 1 and len(pts) == len(ns):
        x = np.array([p[0] for p in pts], dtype=float)
        y = np.array([p[1] for p in pts])
        slope = float(x @ y / (x @ x))
    return ScalingResult(ns, rates, errs, slope, eps_step, traces)


# probability versus amplitude


def probability_vs_amplitude_exercise(theta: float, axis: str, beta: float):
    """Compare the 'classical mixture' and the amplitude calculation.

    The qubit is ``cos(theta)|0> + sin(theta)|1>``; ``R`` rotates it by
    ``beta`` about x or y. Returns ``(p_mixture, p_amplitude, difference)``
    for finding |0> afterwards, with ``difference = p_amplitude - p_mixture``.
    """
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    p = np.sin(theta) ** 2
    c2, s2 = np.cos(beta / 2) ** 2, np.sin(beta / 2) ** 2
    # |<0|R|0>|^2 = cos^2(beta/2) and |<0|R|1>|^2 = sin^2(beta/2) for both axes
    p_mix = (1 - p) * c2 + p * s2
    if axis == "y":
        p_amp = np.cos(theta + beta / 2) ** 2
    else:
        # the cross term of <0|Rx|psi> is imaginary and drops out
        p_amp = np.cos(theta) ** 2 * c2 + np.sin(theta) ** 2 * s2
    return float(p_mix), float(p_amp), float(p_amp - p_mix)


# single-round failure scaling


@dataclass
class RoundScaling:
    eps: list[float]
    corrected: list[float]
    corrected_stderr: list[float]
    uncorrected: list[float]
    uncorrected_stderr: list[float]
    corrected_slope: float | None
    uncorrected_slope: float | None


def loglog_slope(x, y) -> float | None:
    if len(x) < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


XX = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]])).astype(complex)


def round_infidelity_scaling(eps_grid, trials: int, seed: int = 0, code_name: str = "bitflip3",
                             correlated: bool = False) -> RoundScaling:
    """Logical infidelity after one ideal EC round versus error strength.

    Each trial draws the error, then averages the fidelity exactly over all
    syndrome branches of an ideal extraction and recovery. Independent mode
    rotates every data qubit about x by a Gaussian angle of RMS ``eps``;
    correlated mode applies ``exp(-i a X0 X1)`` with ``a`` Gaussian of RMS
    ``eps``. The unprotected reference is one qubit given the single-qubit
    kick of the same strength. Logical |0> is stored.
    """
    code = codes.get_code(code_name)
    ref = codes.logical_state(code, [1, 0])
    bare_ref = StateVector(np.array([1, 0], dtype=complex))
    rng = np.random.default_rng(seed)
    out = {"c": [], "ce": [], "u": [], "ue": []}
    for eps in eps_grid:
        inf_c = np.empty(trials)
        inf_u = np.empty(trials)
        for i in range(trials):
            st = ref.copy()
            if correlated:
                a = rng.normal(0.0, eps)
                U = np.cos(a) * np.eye(4) - 1j * np.sin(a) * XX
                apply_unitary(st, (0, 1), U, check=False)
            else:
                for q, a in enumerate(rng.normal(0.0, eps, size=code.n_data)):
                    apply_unitary(st, (q,), rotation_matrix((1, 0, 0), a), check=False)
            inf_c[i] = 1.0 - codes.expected_round_fidelity(code, st, ref)
            bare = bare_ref.copy()
            apply_unitary(bare, (0,), rotation_matrix((1, 0, 0), rng.normal(0.0, eps)), check=False)
            inf_u[i] = 1.0 - fidelity(bare, bare_ref)
        out["c"].append(float(inf_c.mean()))
        out["ce"].append(float(inf_c.std(ddof=1) / np.sqrt(trials)))
        out["u"].append(float(inf_u.mean()))
        out["ue"].append(float(inf_u.std(ddof=1) / np.sqrt(trials)))
    eps = [float(e) for e in eps_grid]
    return RoundScaling(eps, out["c"], out["ce"], out["u"], out["ue"],
                        loglog_slope(eps, out["c"]), loglog_slope(eps, out["u"]))


# corrected versus uncorrected


@dataclass
class ComparisonRow:
    eps_step: float
    corrected: DecayFit
    uncorrected: DecayFit
    gain: float | None
    corrected_result: RunResult | None = field(default=None, repr=False)
    uncorrected_result: RunResult | None = field(default=None, repr=False)


def gain_ratio(corrected: DecayFit, uncorrected: DecayFit) -> float | None:
    """Uncorrected rate over corrected rate; None when either is missing or zero."""
    if corrected.model != "exponential" or uncorrected.model != "exponential":
        return None
    if not corrected.rate or uncorrected.rate is None:
        return None
    return uncorrected.rate / corrected.rate


def uncorrected_twin(config: RunConfig) -> RunConfig:
    """The bare-qubit run matched in elapsed time per round to ``config``."""
    from .protocol import round_steps
    return replace(config, mode="uncorrected", period=round_steps(config))


def compare_corrected_uncorrected(base_config: RunConfig, eps_grid, threads: int = 1,
                                  keep_results: bool = False) -> list[ComparisonRow]:
    if len(eps_grid) == 0:
        raise ValueError("eps grid is empty")
    rows = []
    for eps in eps_grid:
        cfg = replace(base_config, noise=replace(base_config.noise, eps_step=float(eps)))
        corr = run_experiment(cfg, threads)
        unc = run_experiment(uncorrected_twin(cfg), threads)
        fc, fu = fit_run(corr), fit_run(unc)
        rows.append(ComparisonRow(float(eps), fc, fu, gain_ratio(fc, fu),
                                  corr if keep_results else None, unc if keep_results else None))
    return rows
