import numpy as np
import pytest
from numpy.testing import assert_allclose

from esnkit.adapt import (
    AdaptationResult,
    ResponseTable,
    build_response_table,
    config_key,
    match_signal,
    validate_and_combine,
)
from esnkit.errors import ParameterError

GEN = {"n": 80, "connectivity": 0.2,
       "normalization": {"mode": "avg_modulus", "value": 0.55}}


@pytest.fixture(scope="module")
def small_table():
    return build_response_table(GEN, lengths=(1, 2), density_grid=(-0.5, 0.0, 0.5),
                                n_instances=3, seed=7, T=256)


def synthetic_table(profiles):
    freqs = np.fft.rfftfreq(256)
    lengths = tuple(sorted({L for L, _ in profiles}))
    grid = tuple(sorted({r for _, r in profiles}))
    return ResponseTable(freqs=freqs, profiles=profiles, lengths=lengths,
                         density_grid=grid, gen_params={}, n_instances=1,
                         seed=0)


class TestBuildResponseTable:
    def test_shapes_and_common_grid(self, small_table):
        assert len(small_table.profiles) == 6
        for power in small_table.profiles.values():
            assert power.shape == small_table.freqs.shape
            assert np.all(power >= 0)

    def test_zero_density_column_similar_across_lengths(self, small_table):
        a = small_table.profiles[(1, 0.0)]
        b = small_table.profiles[(2, 0.0)]
        # same ensemble up to Monte-Carlo noise: compare band means
        edges = np.linspace(0.05, 0.45, 5)
        for lo, hi in zip(edges[:-1], edges[1:]):
            band = (small_table.freqs >= lo) & (small_table.freqs < hi)
            assert a[band].mean() == pytest.approx(b[band].mean(), rel=0.5)

    def test_positive_l1_profile_decreases(self, small_table):
        power = small_table.profiles[(1, 0.5)]
        low = power[small_table.freqs <= 0.1].mean()
        high = power[small_table.freqs >= 0.4].mean()
        assert low > high

    def test_save_load_round_trip(self, small_table, tmp_path):
        small_table.save(tmp_path / "table")
        loaded = ResponseTable.load(tmp_path / "table")
        assert loaded.lengths == small_table.lengths
        assert loaded.density_grid == small_table.density_grid
        for key, power in small_table.profiles.items():
            assert_allclose(loaded.profiles[key], power, rtol=1e-6)

    def test_cache_round_trip(self, tmp_path):
        a = build_response_table(GEN, lengths=(1,), density_grid=(0.0, 0.5),
                                 n_instances=2, seed=3, T=128,
                                 cache_dir=tmp_path)
        cached_dirs = list(tmp_path.glob("response_table_*"))
        assert len(cached_dirs) == 1
        b = build_response_table(GEN, lengths=(1,), density_grid=(0.0, 0.5),
                                 n_instances=2, seed=3, T=128,
                                 cache_dir=tmp_path)
        for key in a.profiles:
            assert_allclose(b.profiles[key], a.profiles[key], rtol=1e-6)

    def test_grid_validation(self):
        with pytest.raises(ParameterError):
            build_response_table(GEN, density_grid=(0.0, 1.5), n_instances=1)


class TestMatchSignal:
    def test_exact_ties_resolve_to_zero_density(self):
        flat = np.ones(129)
        table = synthetic_table({(1, -0.5): flat, (1, 0.0): flat.copy(),
                                 (1, 0.5): flat.copy()})
        rng = np.random.default_rng(0)
        result = match_signal(table, rng.standard_normal(500))
        assert result.selected == {1: 0.0}

    def test_matching_profile_wins(self, small_table):
        # a strongly low-frequency signal must pick the largest positive
        # self-loop density: its response is the most low-pass of the grid
        t = np.arange(4000)
        signal = np.cos(2 * np.pi * 0.002 * t)
        result = match_signal(small_table, signal)
        assert result.selected[1] == 0.5

    def test_scale_invariance(self, small_table, rng):
        signal = rng.standard_normal(1000) + np.sin(0.05 * np.arange(1000))
        a = match_signal(small_table, signal)
        b = match_signal(small_table, 37.5 * signal)
        assert a.selected == b.selected

    def test_determinism(self, small_table, rng):
        signal = rng.standard_normal(600)
        a = match_signal(small_table, signal)
        b = match_signal(small_table, signal)
        assert a.selected == b.selected and a.scores == b.scores

    def test_empty_table_rejected(self):
        table = synthetic_table({(1, 0.0): np.ones(129)})
        table.profiles = {}
        with pytest.raises(ParameterError):
            match_signal(table, np.zeros(100))


def scripted_evaluator(medians):
    """Deterministic fake benchmark: per-seed scores equal to the scripted
    median for a configuration key."""

    def evaluate(config, seeds):
        return [medians[config_key(config)]] * len(seeds)

    return evaluate


def make_result(selected, scores):
    return AdaptationResult(selected=selected, scores=scores)


class TestValidateAndCombine:
    def scores_for(self, selected):
        # flat synthetic scores: value equals the density itself
        return {length: {0.0: 0.0, rho: abs(rho)}
                for length, rho in selected.items()}

    def test_all_lengths_fail_sets_fallback(self):
        selected = {1: 0.5, 2: -0.5}
        evaluate = scripted_evaluator({"baseline": 1.0, "1:+0.5000": 2.0,
                                       "2:-0.5000": 3.0})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        assert result.fallback
        assert result.combined == {}
        assert result.rejected == [1, 2]

    def test_single_survivor_degenerates_to_matched_choice(self):
        selected = {1: 0.5, 2: -0.5}
        evaluate = scripted_evaluator({"baseline": 1.0, "1:+0.5000": 0.5,
                                       "2:-0.5000": 3.0})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        assert not result.fallback
        assert result.combined == {1: 0.5}
        assert result.rejected == [2]
        assert result.combined_median == 0.5

    def test_combination_accepted_when_it_helps(self):
        selected = {1: 0.5, 2: 0.4}
        evaluate = scripted_evaluator({
            "baseline": 1.0, "1:+0.5000": 0.6, "2:+0.4000": 0.8,
            "1:+0.5000,2:+0.4000": 0.5})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        assert result.combined == {1: 0.5, 2: 0.4}
        assert result.combined_median == 0.5
        assert not result.fallback

    def test_combination_rejected_when_it_hurts(self):
        selected = {1: 0.5, 2: 0.4}
        evaluate = scripted_evaluator({
            "baseline": 1.0, "1:+0.5000": 0.6, "2:+0.4000": 0.8,
            "1:+0.5000,2:+0.4000": 0.7})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        assert result.combined == {1: 0.5}  # falls back to the best single
        assert result.combined_median == 0.6

    def test_budget_excludes_oversized_combinations(self):
        selected = {1: 0.8, 2: 0.8, 3: 0.2}
        evaluate = scripted_evaluator({
            "baseline": 1.0, "1:+0.8000": 0.5, "2:+0.8000": 0.6,
            "3:+0.2000": 0.7,
            "1:+0.8000,3:+0.2000": 0.4, "2:+0.8000,3:+0.2000": 0.3})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        # {1: 0.8, 2: 0.8} and the triple exceed the budget and are skipped
        assert sum(abs(v) for v in result.combined.values()) <= 1.0
        assert result.combined_median <= 0.5

    def test_budget_invariant_always_holds(self):
        selected = {1: 0.6, 2: 0.6}
        evaluate = scripted_evaluator({
            "baseline": 1.0, "1:+0.6000": 0.9, "2:+0.6000": 0.8})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        assert sum(abs(v) for v in result.combined.values()) <= 1.0

    def test_candidate_medians_recorded(self):
        selected = {1: 0.5}
        evaluate = scripted_evaluator({"baseline": 1.0, "1:+0.5000": 0.4})
        result = validate_and_combine(make_result(selected, self.scores_for(selected)),
                                      evaluate, 1.0, n_seeds=4)
        assert result.candidate_medians == {"1:+0.5000": 0.4}
