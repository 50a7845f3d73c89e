import itertools

import numpy as np
import pytest

from pdrank import (BTGenConfig, PDRankConfig, ToggleNoiseConfig, generate_bt,
                    generate_toggle, kendall_tau, pd_rank, sample_pairs,
                    scores_to_ranking, standard_trials_to_n, write_csv)
from pdrank.simulate import _pairs_from_linear


class TestStandardTrials:
    def test_one_trial_is_all_pairings(self):
        assert standard_trials_to_n(16, 1) == 120

    def test_half_trial(self):
        assert standard_trials_to_n(16, 0.5) == 60

    def test_large(self):
        assert standard_trials_to_n(1000, 0.1) == 49950

    def test_too_few_items(self):
        with pytest.raises(ValueError):
            standard_trials_to_n(1, 1)

    def test_negative(self):
        with pytest.raises(ValueError):
            standard_trials_to_n(5, -0.1)


class TestSamplePairs:
    def test_two_items_only_pair(self):
        pairs = sample_pairs(2, 5, seed=123)
        assert pairs.tolist() == [[0, 1]] * 5

    def test_deterministic(self):
        a = sample_pairs(16, 120, seed=9)
        b = sample_pairs(16, 120, seed=9)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("m", [2, 3, 5, 16, 50])
    def test_linear_decode_bijection(self, m):
        want = list(itertools.combinations(range(m), 2))
        k = np.arange(m * (m - 1) // 2)
        i, j = _pairs_from_linear(m, k)
        assert list(zip(i.tolist(), j.tolist())) == want

    def test_uniformity_within_3_sigma(self):
        # chi-square style check against the multinomial expectation
        m, n = 16, 100_000
        pairs = sample_pairs(m, n, seed=2024)
        npairs = m * (m - 1) // 2
        lin = pairs[:, 0] * (2 * m - pairs[:, 0] - 1) // 2 \
            + pairs[:, 1] - pairs[:, 0] - 1
        counts = np.bincount(lin, minlength=npairs)
        p = 1.0 / npairs
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) <= 3.2 * sigma)


class TestGenerateToggle:
    def test_noiseless_labels_match_truth(self):
        cfg = ToggleNoiseConfig(num_items=8, delta=0.0, standard_trials=3, seed=4)
        ds, truth = generate_toggle(cfg)
        want = np.sign(truth.true_scores[ds.items_i] - truth.true_scores[ds.items_j])
        assert np.array_equal(ds.labels, want.astype(np.int64))

    def test_flip_fraction_concentrates(self):
        cfg = ToggleNoiseConfig(num_items=16, delta=0.1, num_comparisons=100_000,
                                seed=5)
        ds, truth = generate_toggle(cfg)
        true_sign = np.sign(truth.true_scores[ds.items_i]
                            - truth.true_scores[ds.items_j])
        flipped = (ds.labels != true_sign) * ds.counts
        frac = flipped.sum() / ds.total_comparisons
        assert 0.097 <= frac <= 0.103  # binomial 3-sigma band

    def test_half_delta_rejected(self):
        with pytest.raises(ValueError):
            ToggleNoiseConfig(num_items=4, delta=0.5, standard_trials=1)

    def test_delta_vector_override(self):
        n = standard_trials_to_n(6, 2)
        deltas = np.zeros(n)
        deltas[: n // 2] = 0.49
        cfg = ToggleNoiseConfig(num_items=6, delta=deltas, standard_trials=2,
                                seed=6)
        ds, truth = generate_toggle(cfg)
        assert ds.total_comparisons == n

    def test_delta_vector_length_checked(self):
        with pytest.raises(ValueError, match="length"):
            ToggleNoiseConfig(num_items=6, delta=np.zeros(3), standard_trials=2)

    def test_truth_is_permutation_of_1_to_m(self):
        cfg = ToggleNoiseConfig(num_items=9, delta=0.1, standard_trials=1, seed=0)
        _, truth = generate_toggle(cfg)
        assert sorted(truth.true_scores.tolist()) == list(range(1, 10))
        assert np.array_equal(truth.true_ranking,
                              scores_to_ranking(truth.true_scores))

    def test_byte_identical_determinism(self, tmp_path):
        cfg = ToggleNoiseConfig(num_items=10, delta=0.2, standard_trials=2, seed=42)
        ds1, t1 = generate_toggle(cfg)
        ds2, t2 = generate_toggle(cfg)
        assert np.array_equal(t1.true_scores, t2.true_scores)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(ds1, p1)
        write_csv(ds2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_requires_exactly_one_size_spec(self):
        with pytest.raises(ValueError):
            ToggleNoiseConfig(num_items=4, delta=0.1)
        with pytest.raises(ValueError):
            ToggleNoiseConfig(num_items=4, delta=0.1, num_comparisons=5,
                              standard_trials=1.0)


class TestGenerateBT:
    def test_two_item_win_rate_matches_bt_probability(self):
        cfg = BTGenConfig(num_items=2, score_low=1.0, score_high=5.0,
                          num_comparisons=100_000, seed=11)
        ds, truth = generate_bt(cfg)
        s = truth.true_scores
        p = s[0] / (s[0] + s[1])
        wins0 = ds.counts[ds.labels == 1].sum()
        frac = wins0 / ds.total_comparisons
        sigma = np.sqrt(p * (1 - p) / ds.total_comparisons)
        assert abs(frac - p) <= 3 * sigma

    def test_label_distribution_matches_bt_for_every_pair(self):
        cfg = BTGenConfig(num_items=5, score_low=1.0, score_high=5.0,
                          num_comparisons=200_000, seed=12)
        ds, truth = generate_bt(cfg)
        s = truth.true_scores
        for i in range(5):
            for j in range(i + 1, 5):
                sel = (ds.items_i == i) & (ds.items_j == j)
                total = ds.counts[sel].sum()
                wins = ds.counts[sel & (ds.labels == 1)].sum()
                p = s[i] / (s[i] + s[j])
                sigma = np.sqrt(p * (1 - p) / total)
                assert abs(wins / total - p) <= 4 * sigma

    def test_degenerate_range_gives_fair_coins(self):
        cfg = BTGenConfig(num_items=4, score_low=2.0, score_high=2.0,
                          num_comparisons=100_000, seed=13)
        ds, truth = generate_bt(cfg)
        assert np.all(truth.true_scores == 2.0)
        wins = ds.counts[ds.labels == 1].sum()
        frac = wins / ds.total_comparisons
        assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / ds.total_comparisons)

    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            BTGenConfig(num_items=4, score_low=5.0, score_high=1.0,
                        standard_trials=1)
        with pytest.raises(ValueError):
            BTGenConfig(num_items=4, score_low=0.0, score_high=1.0,
                        standard_trials=1)

    def test_determinism(self):
        cfg = BTGenConfig(num_items=6, standard_trials=2, seed=3)
        a, _ = generate_bt(cfg)
        b, _ = generate_bt(cfg)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.counts, b.counts)


def test_noiseless_pipeline_recovers_ranking():
    # smoke property: dense noiseless data plus the solver gives tau 1
    cfg = ToggleNoiseConfig(num_items=5, delta=0.0, standard_trials=6, seed=21)
    ds, truth = generate_toggle(cfg)
    result = pd_rank(ds, PDRankConfig(keep_history=False))
    assert kendall_tau(truth.true_ranking, result.ranking) == 1.0
