import numpy as np
import pytest

from qmemsim import analysis
from qmemsim.noise import NoiseModel
from qmemsim.protocol import RunConfig


def ry(b):
    return np.array([[np.cos(b / 2), -np.sin(b / 2)], [np.sin(b / 2), np.cos(b / 2)]])


def rx(b):
    return np.array([[np.cos(b / 2), -1j * np.sin(b / 2)], [-1j * np.sin(b / 2), np.cos(b / 2)]])


def numeric_exercise(theta, axis, beta):
    """Both probabilities from explicit 2x2 matrices."""
    R = ry(beta) if axis == "y" else rx(beta)
    psi = np.array([np.cos(theta), np.sin(theta)])
    p = np.sin(theta) ** 2
    p_mix = (1 - p) * abs(R[0, 0]) ** 2 + p * abs(R[0, 1]) ** 2
    p_amp = abs((R @ psi)[0]) ** 2
    return p_mix, p_amp


class TestFit:
    def test_constant_one(self):
        fit = analysis.fit_exponential(np.ones(20))
        assert fit.model == "exponential" and fit.rate == 0

    def test_synthetic(self):
        t = np.arange(50)
        fit = analysis.fit_exponential((1 + np.exp(-0.01 * t)) / 2)
        assert fit.rate == pytest.approx(0.01, abs=1e-6)
        assert fit.window == (0, 49)

    def test_explicit_times(self):
        t = np.arange(0, 1000, 50)
        fit = analysis.fit_exponential((1 + np.exp(-0.002 * t)) / 2, t)
        assert fit.rate == pytest.approx(0.002, abs=1e-9)

    def test_window_stops_at_floor(self):
        t = np.arange(40)
        fit = analysis.fit_exponential((1 + np.exp(-0.2 * t)) / 2)
        # 2F - 1 = exp(-0.2 t) > 0.1 up to t = 11
        assert fit.window == (0, 11)
        assert fit.rate == pytest.approx(0.2, abs=1e-9)

    def test_pure_noise(self):
        assert analysis.fit_exponential(np.full(20, 0.5)).model == "none_detected"

    def test_too_short(self):
        with pytest.raises(ValueError):
            analysis.fit_exponential([1, 1, 1, 1])

    def test_self_model_coverage(self):
        t = np.arange(30)
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            y = np.exp(-0.03 * t + rng.normal(0, 0.02, size=t.size))
            fit = analysis.fit_exponential((1 + y) / 2)
            hits += abs(fit.rate - 0.03) < 3 * fit.rate_stderr
        assert hits >= 97


class TestExercise:
    def test_random_against_numeric(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            theta, beta = rng.uniform(-np.pi, np.pi, 2)
            for axis in ("x", "y"):
                p_mix, p_amp, diff = analysis.probability_vs_amplitude_exercise(theta, axis, beta)
                n_mix, n_amp = numeric_exercise(theta, axis, beta)
                assert p_mix == pytest.approx(n_mix, abs=1e-12)
                assert p_amp == pytest.approx(n_amp, abs=1e-12)
                assert 0 <= p_mix <= 1 and 0 <= p_amp <= 1
                if axis == "y":
                    assert diff == pytest.approx(-0.5 * np.sin(2 * theta) * np.sin(beta), abs=1e-12)
                else:
                    assert diff == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("axis", ["x", "y"])
    def test_theta_zero(self, axis):
        p_mix, p_amp, diff = analysis.probability_vs_amplitude_exercise(0.0, axis, 0.9)
        assert diff == 0 and p_mix == pytest.approx(np.cos(0.45) ** 2)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            analysis.probability_vs_amplitude_exercise(0.1, "z", 0.1)


class TestScaling:
    def test_single_qubit_rate(self):
        res = analysis.dephasing_scaling_experiment(1, 0.02, 5000, 2000, seed=1)
        assert res.ns == [1] and res.slope is None
        assert res.rates[0] == pytest.approx(0.02 ** 2 / 2, rel=0.05)

    def test_zero_eps(self):
        res = analysis.dephasing_scaling_experiment(4, 0.0, 100, 10)
        assert res.ns == [1, 2, 4]
        assert res.rates == pytest.approx([0, 0, 0], abs=1e-12) and res.slope == pytest.approx(0, abs=1e-12)

    def test_rate_proportional_to_n(self):
        res = analysis.dephasing_scaling_experiment(4, 0.02, 3000, 2000, seed=2)
        ratios = np.array(res.rates) / res.rates[0]
        assert np.allclose(ratios, res.ns, rtol=0.1)
        assert res.slope == pytest.approx(0.02 ** 2 / 2, rel=0.1)

    def test_capacity(self):
        with pytest.raises(ValueError):
            analysis.dephasing_scaling_experiment(32, 0.01, 10, 1)

    def test_ghz(self):
        s = analysis.ghz_state(3)
        assert s.amps[0] == s.amps[7] == pytest.approx(1 / np.sqrt(2))


class TestRoundScaling:
    def test_independent_slopes(self):
        res = analysis.round_infidelity_scaling([0.05, 0.1, 0.2], 3000, seed=0)
        assert res.corrected_slope == pytest.approx(4, abs=0.3)
        assert res.uncorrected_slope == pytest.approx(2, abs=0.2)

    def test_correlated_slope(self):
        res = analysis.round_infidelity_scaling([0.05, 0.1, 0.2], 2000, seed=0, correlated=True)
        assert res.corrected_slope == pytest.approx(2, abs=0.3)

    def test_single_point_slope_undefined(self):
        assert analysis.round_infidelity_scaling([0.1], 10).corrected_slope is None


class TestCompare:
    def test_zero_noise(self):
        (row,) = analysis.compare_corrected_uncorrected(RunConfig(max_rounds=5, trials=2), [0.0])
        assert row.corrected.rate == 0 and row.uncorrected.rate == 0
        assert row.gain is None

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            analysis.compare_corrected_uncorrected(RunConfig(), [])

    def test_pedagogical_gain(self):
        base = RunConfig(mode="pedagogical", initial_state="basis0",
                         noise=NoiseModel(axis_mode="x_only"), max_rounds=20, trials=300)
        (row,) = analysis.compare_corrected_uncorrected(base, [0.05])
        assert row.gain is not None and row.gain > 10

    def test_uncorrected_twin_period(self):
        twin = analysis.uncorrected_twin(RunConfig())
        assert twin.mode == "uncorrected" and twin.period == 112

    @pytest.mark.parametrize("c,u,g", [
        ((0.1, "exponential"), (0.5, "exponential"), 5.0),
        ((0.0, "exponential"), (0.5, "exponential"), None),
        ((None, "none_detected"), (0.5, "exponential"), None),
    ])
    def test_gain_ratio(self, c, u, g):
        fc = analysis.DecayFit(c[0], 0.0, c[1])
        fu = analysis.DecayFit(u[0], 0.0, u[1])
        assert analysis.gain_ratio(fc, fu) == g
