import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgqt.errors import ConfigError, DomainError, FitError, ParameterError
from sgqt.experiments import (
    EnsembleSummary,
    ExperimentConfig,
    InitMode,
    Scenario,
    dimension_sweep,
    fit_gamma,
    fit_power_law,
    min_infidelity_depolarized,
    preset,
    rescale_infidelity,
    run_ensemble,
    run_trial,
    run_trials,
    scaling_report,
    summarize,
    trial_rng,
)
from sgqt.measurement import INFINITE
from sgqt.states import (
    DepolarizedTrueState,
    Parametrization,
    fidelity_depolarized,
    haar_random_state,
    physical_dim,
)


def small(scenario, **changes):
    base = dict(n_trials=4, iterations_k=200)
    base.update(changes)
    cfg = preset(scenario).replace(**base)
    if len(cfg.n_qubits) > 1 and "n_qubits" not in changes:
        cfg = cfg.replace(n_qubits=(2,))
    return cfg


def fake_summary(n, median, scenario=Scenario.MULTI_QUBIT, k=None):
    median = np.asarray(median, float)
    k = np.arange(1, median.size + 1) if k is None else k
    cfg = preset(scenario).replace(n_qubits=(n,))
    return EnsembleSummary(k, median, median * 0.9, median * 1.1, n, cfg, float(median[0]), 0, float(median.min()))


class TestConfig:
    def test_presets(self):
        single = preset("single-qubit")
        assert (single.gains.a, single.gains.A, single.gains.b) == (3.0, 0.0, 0.1)
        assert (single.gains.s, single.gains.t) == (0.602, 0.101)
        assert single.shots_N == 100 and single.iterations_k == 1000 and single.n_trials == 100
        assert single.init_mode == InitMode("haar")
        for sc in ("multi-qubit", "w-depolarized", "noisy-measurement"):
            cfg = preset(sc)
            assert (cfg.gains.a, cfg.gains.A, cfg.gains.b) == (0.3, 1000.0, 0.1)
            assert cfg.shots_N == 10_000
            assert cfg.init_mode == InitMode("perturbed", 0.01)
        assert preset("w-depolarized").depolarizing_p == 0.05
        assert preset("noisy-measurement").measurement_noise_std == 0.1

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError):
            preset("fig9")

    @pytest.mark.parametrize("scenario, field, value", [
        ("single-qubit", "depolarizing_p", 0.1),
        ("multi-qubit", "measurement_noise_std", 0.1),
        ("w-depolarized", "measurement_noise_std", 0.1),
        ("noisy-measurement", "depolarizing_p", 0.05),
    ])
    def test_unused_fields_must_be_zero(self, scenario, field, value):
        with pytest.raises(ConfigError):
            preset(scenario).replace(**{field: value})

    @pytest.mark.parametrize("changes", [
        {"n_qubits": (2,)},
        {"shots_N": 0},
        {"iterations_k": 0},
        {"n_trials": 0},
        {"base_seed": -1},
    ])
    def test_invalid_single_qubit(self, changes):
        with pytest.raises(ConfigError):
            preset("single-qubit").replace(**changes)

    def test_w_needs_two_qubits(self):
        with pytest.raises(ConfigError):
            preset("w-depolarized").replace(n_qubits=(1, 2, 3))

    def test_desk_cap(self):
        with pytest.raises(ConfigError):
            preset("multi-qubit").replace(n_qubits=(10,))
        with pytest.warns(RuntimeWarning):
            preset("multi-qubit").replace(n_qubits=(10,), allow_large=True)

    def test_dict_round_trip(self):
        cfg = preset("w-depolarized").replace(base_seed=11, shots_N=INFINITE)
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_unknown_field(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"scenario": "multi-qubit", "bogus": 1})

    def test_from_dict_bad_types(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"scenario": "multi-qubit", "gains": {"a": 1}})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"scenario": "multi-qubit", "n_trials": "many"})

    @pytest.mark.parametrize("text, mode", [("haar", InitMode("haar")), ("perturbed:0.01", InitMode("perturbed", 0.01))])
    def test_init_parse(self, text, mode):
        assert InitMode.parse(text) == mode
        assert InitMode.parse(str(mode)) == mode

    @pytest.mark.parametrize("text", ["perturbed", "random", "perturbed:x", "perturbed:-1"])
    def test_init_parse_errors(self, text):
        with pytest.raises(ConfigError):
            InitMode.parse(text)


class TestTrials:
    def test_streams_are_reproducible_and_distinct(self):
        a = trial_rng(7, 2, 0).random(4)
        assert np.array_equal(a, trial_rng(7, 2, 0).random(4))
        assert not np.array_equal(a, trial_rng(7, 2, 1).random(4))
        assert not np.array_equal(a, trial_rng(7, 3, 0).random(4))

    def test_deterministic(self):
        cfg = small("multi-qubit")
        assert run_trial(cfg, 3).to_csv() == run_trial(cfg, 3).to_csv()

    def test_start_at_optimum(self):
        cfg = small("multi-qubit", init_mode=InitMode("perturbed", 0.0), n_trials=1)
        traj = run_trial(cfg, 0)
        assert traj.initial_infidelity == pytest.approx(0.0, abs=1e-15)
        assert traj.infidelity.max() < 1e-3

    def test_w_optimum_is_stationary_without_noise(self):
        # pure W truth, exact start, finite shots: f_plus and f_minus are noisy
        # but the iterate stays close
        cfg = small("w-depolarized", depolarizing_p=0.0, init_mode=InitMode("perturbed", 0.0))
        traj = run_trial(cfg, 0)
        assert traj.infidelity.max() < 1e-2

    def test_depolarized_floor_respected(self):
        cfg = small("w-depolarized", n_qubits=(4,), iterations_k=500)
        floor = min_infidelity_depolarized(0.05, 4)
        assert floor == pytest.approx(0.046875, abs=1e-15)
        for i in range(4):
            assert run_trial(cfg, i).infidelity.min() >= floor - 1e-12

    def test_sweep_requires_explicit_n(self):
        cfg = preset("multi-qubit").replace(n_trials=1, iterations_k=5)
        with pytest.raises(ConfigError):
            run_trial(cfg, 0)
        with pytest.raises(ConfigError):
            run_trial(cfg, 0, n_qubits=7)
        assert len(run_trial(cfg, 0, n_qubits=3)) == 5

    def test_haar_init_uses_w_class_for_w_scenarios(self):
        cfg = small("noisy-measurement", init_mode=InitMode("haar"), n_trials=1)
        traj = run_trial(cfg, 0)
        assert traj.final.size == 2 * 2


class TestEnsemble:
    def test_single_trial(self):
        cfg = small("multi-qubit", n_trials=1)
        s = run_ensemble(cfg)
        traj = run_trial(cfg, 0)
        np.testing.assert_array_equal(s.median, traj.infidelity)
        np.testing.assert_array_equal(s.q25, s.median)
        np.testing.assert_array_equal(s.q75, s.median)

    def test_percentile_order_and_shots(self):
        cfg = small("w-depolarized", n_trials=7)
        s = run_ensemble(cfg)
        assert np.all(s.q25 <= s.median) and np.all(s.median <= s.q75)
        assert s.total_shots == 7 * 2 * cfg.shots_N * cfg.iterations_k

    def test_permutation_invariant(self):
        cfg = small("multi-qubit", n_trials=6)
        trajs = run_trials(cfg)
        a = summarize(trajs, cfg, 2)
        b = summarize(trajs[::-1], cfg, 2)
        assert a.to_csv() == b.to_csv()

    def test_parallel_matches_serial(self):
        cfg = small("multi-qubit", n_trials=4, iterations_k=50)
        assert run_ensemble(cfg, threads=2).to_csv() == run_ensemble(cfg, threads=1).to_csv()

    def test_csv_schema(self):
        s = run_ensemble(small("multi-qubit", n_trials=2, iterations_k=30))
        lines = s.to_csv().splitlines()
        assert lines[0] == "k,median,q25,q75" and len(lines) == 31

    def test_single_qubit_reproduction(self):
        # scaled left panel of the single-qubit figure (N = 100, k = 1000, 100 Haar states)
        s = run_ensemble(preset("single-qubit"))
        assert s.at(1000) < 1e-2
        assert s.at(1000) < s.at(100) < s.at(10) < s.initial_median


class TestFit:
    def test_exact_inverse(self):
        x = np.arange(1.0, 101.0)
        fit = fit_power_law(x, 1 / x)
        assert fit.exponent == pytest.approx(1.0, abs=1e-12)
        assert fit.stderr < 1e-8

    def test_synthetic_exponent(self):
        x = np.logspace(0, 4, 50)
        assert fit_power_law(x, 5 * x**-1.18).exponent == pytest.approx(1.18, abs=1e-10)

    def test_flat(self):
        assert fit_power_law(np.arange(1.0, 10.0), np.full(9, 0.3)).exponent == pytest.approx(0.0, abs=1e-12)

    def test_growth_convention(self):
        d = np.array([2.0, 6, 14, 30])
        assert fit_power_law(d, 3 * d**1.3, decay=False).exponent == pytest.approx(1.3, abs=1e-10)

    def test_window(self):
        x = np.arange(1.0, 1001.0)
        y = np.where(x < 100, x**-3.0, 1e-6 * (x / 100) ** -1.1)
        fit = fit_power_law(x, y, (100, 1000))
        assert fit.exponent == pytest.approx(1.1, abs=1e-10)
        assert fit.n_points == 901

    def test_nonpositive(self):
        with pytest.raises(DomainError):
            fit_power_law([1, 2, 3], [1, 0, 2])

    def test_underdetermined(self):
        with pytest.raises(FitError):
            fit_power_law([1, 2, 3, 4], [1, 2, 3, 4], (5, 10))
        with pytest.raises(FitError):
            fit_power_law([1, 2], [1, 2])

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), gamma=st.floats(0.2, 2.5))
    def test_noisy_recovery(self, seed, gamma):
        rng = np.random.default_rng(seed)
        x = np.logspace(1, 3, 200)
        y = 2.0 * x**-gamma * np.exp(rng.normal(0, 0.05, x.size))
        fit = fit_power_law(x, y)
        # 5 sigma keeps the hypothesis search from finding 3-sigma tail events
        assert abs(fit.exponent - gamma) < 5 * fit.stderr

    def test_gamma_default_window(self):
        s = fake_summary(2, 1 / np.arange(1.0, 1001.0) ** 0.9)
        fit = fit_gamma(s)
        assert fit.fit_window == (100.0, 1000.0)
        assert fit.exponent == pytest.approx(0.9, abs=1e-10)


class TestFloor:
    def test_values(self):
        assert min_infidelity_depolarized(0.0, 3) == 0.0
        assert min_infidelity_depolarized(0.05, 2) == pytest.approx(0.0375, abs=1e-15)

    def test_invalid(self):
        with pytest.raises(ParameterError):
            min_infidelity_depolarized(1.2, 2)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_brute_force_maximum(self, n):
        rng = np.random.default_rng(20 + n)
        model = DepolarizedTrueState(haar_random_state(n, rng), 0.05)
        best = max(fidelity_depolarized(model, haar_random_state(n, rng)) for _ in range(100_000))
        assert best <= 1 - min_infidelity_depolarized(0.05, n) + 1e-9

    def test_rescale_identity(self):
        s = fake_summary(2, [0.3, 0.2, 0.1])
        r = rescale_infidelity(s, 0.0)
        np.testing.assert_array_equal(r.median, s.median)
        assert not r.below_floor.any()

    def test_rescale_arithmetic(self):
        r = rescale_infidelity(fake_summary(2, [0.05]), 0.0375)
        assert r.median[0] == pytest.approx(0.0125, abs=1e-15)

    def test_below_floor_flagged_not_clipped(self):
        r = rescale_infidelity(fake_summary(2, [0.05, 0.03]), 0.0375)
        assert r.median[1] == pytest.approx(-0.0075, abs=1e-15)
        assert r.below_floor.tolist() == [False, True]

    def test_rescale_bad_floor(self):
        with pytest.raises(ParameterError):
            rescale_infidelity(fake_summary(2, [0.1]), 1.0)


class TestDimensionSweep:
    def test_synthetic_growth(self):
        summaries = {}
        for n in (2, 3, 4, 5):
            d = physical_dim(n, Parametrization.FULL)
            summaries[n] = fake_summary(n, np.full(10, 1e-4 * d**1.2))
        fits = dimension_sweep(summaries, [5, 10])
        assert [f.exponent for f in fits] == pytest.approx([1.2, 1.2], abs=1e-10)

    def test_w_class_dimension(self):
        summaries = {n: fake_summary(n, np.full(3, 1e-3 * (2 * (n - 1)) ** 1.5), Scenario.NOISY_MEASUREMENT)
                     for n in (2, 4, 6, 8)}
        rep = scaling_report(summaries, window=(1, 3))
        assert rep.eta.exponent == pytest.approx(1.5, abs=1e-10)

    def test_needs_three_sizes(self):
        with pytest.raises(FitError):
            dimension_sweep({2: fake_summary(2, [1.0]), 3: fake_summary(3, [1.0])}, [1])

    def test_report_rescales_depolarized(self):
        floor = min_infidelity_depolarized(0.05, 4)
        k = np.arange(1.0, 101.0)
        s = fake_summary(4, floor + 0.01 / k, Scenario.W_DEPOLARIZED)
        s = dataclasses.replace(s, config=preset("w-depolarized").replace(n_qubits=(4,)))
        rep = scaling_report({4: s})
        assert rep.gamma[4].exponent == pytest.approx(1.0, abs=1e-9)
        assert rep.eta is None
