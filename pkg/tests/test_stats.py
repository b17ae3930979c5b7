import numpy as np
import pytest

from simgrade.corpus import GradingLogEntry
from simgrade.embed import ProgramEmbedding
from simgrade.errors import ConstantX, DimensionMismatch, EmptySample, NoValidationEntries
from simgrade.stats import (
    bootstrap_mean_diff,
    bootstrap_slope,
    grader_error_analysis,
    ols_fit,
    window_similarity_analysis,
)


class TestOlsFit:
    def test_exact_line(self):
        fit = ols_fit([0, 1, 2], [1, 3, 5])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.rmse == pytest.approx(0.0, abs=1e-12)

    def test_constant_y(self):
        fit = ols_fit([0, 1, 2], [4, 4, 4])
        assert fit.slope == pytest.approx(0.0)
        assert not fit.r2_defined

    def test_hand_computed_values(self):
        # normal equations by hand: slope 1.5, intercept -0.5, r2 0.75
        fit = ols_fit([0, 1, 2], [0, 0, 3])
        assert fit.slope == pytest.approx(1.5)
        assert fit.intercept == pytest.approx(-0.5)
        assert fit.r2 == pytest.approx(0.75)

    def test_constant_x_raises(self):
        with pytest.raises(ConstantX):
            ols_fit([2, 2, 2], [1, 2, 3])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            ols_fit([1, 2], [1, 2, 3])

    def test_residuals_orthogonal_to_x(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 3, 200)
        y = 2 * x + 1 + rng.normal(0, 1, 200)
        fit = ols_fit(x, y)
        residuals = y - (fit.intercept + fit.slope * x)
        scale = np.abs(residuals).sum() * np.abs(x).max() + 1e-12
        assert abs(float(residuals @ x)) < 1e-9 * scale


class TestBootstrapMeanDiff:
    def test_identical_samples_high_p(self):
        a = [1.0, 2.0, 3.0, 4.0]
        result = bootstrap_mean_diff(a, list(a), n_trials=2000, seed=0)
        assert result.observed_diff == 0.0
        assert result.p_value > 0.5

    def test_separated_samples_low_p(self):
        rng = np.random.default_rng(1)
        a = rng.normal(10.2, 0.5, 1000)
        b = rng.normal(2.7, 0.5, 1000)
        result = bootstrap_mean_diff(a, b, n_trials=5000, seed=2)
        assert result.p_value < 0.001

    def test_single_trial_add_one_rule(self):
        result = bootstrap_mean_diff([1.0, 5.0], [2.0, 4.0], n_trials=1, seed=0)
        assert result.p_value in (0.5, 1.0)

    def test_empty_sample(self):
        with pytest.raises(EmptySample):
            bootstrap_mean_diff([], [1.0], n_trials=10, seed=0)

    def test_deterministic(self):
        a = [1.0, 2.0, 3.0]
        b = [2.0, 2.5, 3.5]
        r1 = bootstrap_mean_diff(a, b, 500, seed=9)
        r2 = bootstrap_mean_diff(a, b, 500, seed=9)
        assert r1 == r2

    def test_null_p_values_roughly_uniform(self):
        # same distribution: fraction of p < 0.05 should be near 0.05
        rng = np.random.default_rng(3)
        rejections = 0
        for run in range(200):
            a = rng.normal(0, 1, 40)
            b = rng.normal(0, 1, 40)
            result = bootstrap_mean_diff(a, b, n_trials=400, seed=run)
            if result.p_value < 0.05:
                rejections += 1
        assert 0.01 <= rejections / 200 <= 0.12


class TestBootstrapSlope:
    def test_clear_positive_slope(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, 300)
        y = 2 * x + rng.normal(0, 0.2, 300)
        result = bootstrap_slope(x, y, n_trials=2000, seed=1)
        assert result.p_value < 0.001

    def test_no_relationship_high_p(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 1, 200)
        y = rng.normal(0, 1, 200)
        result = bootstrap_slope(x, y, n_trials=500, seed=1)
        assert result.p_value > 0.01


def validation_entry(grader, sub, t, assigned, true, max_score=100.0):
    return GradingLogEntry(
        grader_id=grader, submission_id=sub, timestamp_ms=t,
        assigned_score=assigned, max_score=max_score,
        is_validation=True, true_score=true,
    )


def regular_entry(grader, sub, t, assigned=5.0, max_score=10.0):
    return GradingLogEntry(
        grader_id=grader, submission_id=sub, timestamp_ms=t,
        assigned_score=assigned, max_score=max_score,
    )


class TestGraderErrorAnalysis:
    def test_perfect_grading(self):
        logs = [
            validation_entry("g1", f"s{i}", i, 70 + i, 70 + i) for i in range(5)
        ]
        analysis = grader_error_analysis(logs)
        assert analysis.per_grader_error == {"g1": 0.0}
        assert analysis.rmse == 0.0
        assert analysis.fit.r2 == pytest.approx(1.0)

    def test_single_entry_error(self):
        logs = [
            validation_entry("g1", "s1", 0, 80, 85),
            validation_entry("g1", "s2", 1, 60, 60),
        ]
        analysis = grader_error_analysis(logs)
        assert analysis.per_grader_error["g1"] == pytest.approx(2.5)

    def test_no_validation_entries(self):
        with pytest.raises(NoValidationEntries):
            grader_error_analysis([regular_entry("g1", "s1", 0)])

    def test_gaussian_noise_recovery(self):
        rng = np.random.default_rng(6)
        logs = []
        for i in range(10_000):
            true = float(rng.uniform(0, 100))
            while True:
                assigned = true + float(rng.normal(0, 7.5))
                if 0 <= assigned <= 100:
                    break
            logs.append(
                validation_entry(f"g{i % 20}", f"s{i}", i, assigned, true)
            )
        analysis = grader_error_analysis(logs)
        assert analysis.rmse == pytest.approx(7.5, abs=0.3)
        assert analysis.fit.r2 >= 0.9

    def test_order_invariant(self):
        logs = [
            validation_entry("g1", "s1", 0, 80, 85),
            validation_entry("g1", "s2", 5, 90, 80),
        ]
        a1 = grader_error_analysis(logs)
        a2 = grader_error_analysis(list(reversed(logs)))
        assert a1.per_grader_error == a2.per_grader_error
        assert a1.rmse == a2.rmse


class TestWindowSimilarityAnalysis:
    def embeddings(self):
        return [
            ProgramEmbedding("s1", np.array([1.0, 0.0])),
            ProgramEmbedding("s2", np.array([1.0, 0.0])),
            ProgramEmbedding("s3", np.array([0.0, 1.0])),
        ]

    def test_identical_predecessor_gives_max_sim_one(self):
        logs = [
            regular_entry("g1", "s1", 0),
            validation_entry("g1", "s2", 1, 80, 80),
        ]
        analysis = window_similarity_analysis(logs, self.embeddings())
        assert len(analysis.pairs) == 1
        assert analysis.pairs[0][0] == pytest.approx(1.0)

    def test_validation_first_in_log_omitted(self):
        logs = [
            validation_entry("g1", "s2", 0, 80, 80),
            regular_entry("g1", "s1", 1),
        ]
        analysis = window_similarity_analysis(logs, self.embeddings())
        assert analysis.pairs == []

    def test_no_validation_entries(self):
        with pytest.raises(NoValidationEntries):
            window_similarity_analysis(
                [regular_entry("g1", "s1", 0)], self.embeddings()
            )

    def test_window_truncation(self):
        logs = [
            regular_entry("g1", "s3", 0),
            regular_entry("g1", "s1", 1),
            validation_entry("g1", "s2", 2, 80, 80),
        ]
        analysis = window_similarity_analysis(logs, self.embeddings(), window=1)
        # window 1 sees only s1 (identical); window 3 would also see s3
        assert analysis.pairs[0][0] == pytest.approx(1.0)

    def test_recovers_generating_line(self):
        # errors generated as 52.7 - 50 * max_sim + noise
        rng = np.random.default_rng(8)
        vectors = {}
        logs = []
        t = 0
        for g in range(40):
            grader = f"g{g}"
            prev_ids = []
            for i in range(40):
                sid = f"g{g}_s{i}"
                angle = rng.uniform(0, 1.2)
                vectors[sid] = np.array([np.cos(angle), np.sin(angle)])
                if i >= 3 and i % 4 == 0:
                    sims = [
                        float(vectors[sid] @ vectors[p] /
                              (np.linalg.norm(vectors[sid]) * np.linalg.norm(vectors[p])))
                        for p in prev_ids[-3:]
                    ]
                    error = 52.7 - 50 * max(sims) + float(rng.normal(0, 0.5))
                    true = 50.0
                    assigned = min(100.0, max(0.0, true + error))
                    logs.append(validation_entry(grader, sid, t, assigned, true))
                else:
                    logs.append(regular_entry(grader, sid, t))
                prev_ids.append(sid)
                t += 1
        analysis = window_similarity_analysis(logs, vectors, window=3)
        assert analysis.fit is not None
        assert analysis.fit.slope == pytest.approx(-50.0, abs=2.0)
        assert analysis.fit.intercept == pytest.approx(52.7, abs=2.0)
