"""Reusable statistics: least squares, bootstrap significance tests, and the
grader-log analyses (validation-error table and the window-similarity study).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed import cosine_similarity
from .errors import (
    ConstantX,
    DimensionMismatch,
    EmptySample,
    MissingEmbedding,
    NoValidationEntries,
)


@dataclass(frozen=True)
class OlsFit:
    slope: float
    intercept: float
    r2: float
    rmse: float
    n: int
    r2_defined: bool = True

    def to_record(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": None if not self.r2_defined else self.r2,
            "rmse": self.rmse,
            "n": self.n,
        }


@dataclass(frozen=True)
class BootstrapResult:
    observed_diff: float
    p_value: float
    n_trials: int


def ols_fit(x, y) -> OlsFit:
    """Closed-form simple least squares of y on x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 points")
    x_mean = x.mean()
    y_mean = y.mean()
    sxx = float(((x - x_mean) ** 2).sum())
    if sxx == 0.0:
        raise ConstantX("x has zero variance")
    sxy = float(((x - x_mean) * (y - y_mean)).sum())
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    residuals = y - (intercept + slope * x)
    rmse = float(np.sqrt((residuals**2).mean()))
    syy = float(((y - y_mean) ** 2).sum())
    if syy == 0.0:
        return OlsFit(slope, intercept, float("nan"), rmse, n, r2_defined=False)
    r2 = 1.0 - float((residuals**2).sum()) / syy
    return OlsFit(slope, intercept, r2, rmse, n)


def bootstrap_mean_diff(a, b, n_trials: int, seed: int) -> BootstrapResult:
    """Two-sided pooled bootstrap test of mean(a) - mean(b).

    Under the null the two samples are exchangeable, so both resamples draw
    with replacement from the pool. p uses the add-one correction:
    (count(|diff*| >= |observed|) + 1) / (n_trials + 1).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptySample("both samples must be non-empty")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    observed = float(a.mean() - b.mean())
    pool = np.concatenate([a, b])
    rng = np.random.default_rng(seed)
    count = 0
    chunk = max(1, min(n_trials, 20_000_000 // max(1, pool.size)))
    done = 0
    while done < n_trials:
        size = min(chunk, n_trials - done)
        ra = pool[rng.integers(0, pool.size, size=(size, a.size))].mean(axis=1)
        rb = pool[rng.integers(0, pool.size, size=(size, b.size))].mean(axis=1)
        count += int((np.abs(ra - rb) >= abs(observed)).sum())
        done += size
    p = (count + 1) / (n_trials + 1)
    return BootstrapResult(observed_diff=observed, p_value=p, n_trials=n_trials)


def bootstrap_slope(x, y, n_trials: int, seed: int) -> BootstrapResult:
    """One-sided percentile bootstrap for a positive OLS slope.

    Resamples (x, y) pairs with replacement; p is the add-one-corrected
    fraction of resampled slopes <= 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0:
        raise EmptySample("empty sample")
    observed = ols_fit(x, y).slope
    rng = np.random.default_rng(seed)
    n = x.size
    count = 0
    for _ in range(n_trials):
        idx = rng.integers(0, n, size=n)
        xs = x[idx]
        ys = y[idx]
        sxx = ((xs - xs.mean()) ** 2).sum()
        if sxx == 0.0:
            count += 1
            continue
        slope = ((xs - xs.mean()) * (ys - ys.mean())).sum() / sxx
        if slope <= 0.0:
            count += 1
    p = (count + 1) / (n_trials + 1)
    return BootstrapResult(observed_diff=observed, p_value=p, n_trials=n_trials)


@dataclass
class GraderErrorAnalysis:
    per_grader_error: dict[str, float]  # mean absolute percent error
    fit: OlsFit  # assigned-on-true, in percent units
    rmse: float  # over (assigned_pct, true_pct) pairs


def _pct(score: float, max_score: float) -> float:
    return score / max_score * 100.0


def grader_error_analysis(logs) -> GraderErrorAnalysis:
    """Per-grader mean absolute percent error on validation entries, plus a
    global assigned-vs-true fit and RMSE in percent units."""
    per_grader: dict[str, list[float]] = {}
    assigned_pct = []
    true_pct = []
    for entry in logs:
        if not entry.is_validation:
            continue
        a = _pct(entry.assigned_score, entry.max_score)
        t = _pct(entry.true_score, entry.max_score)
        per_grader.setdefault(entry.grader_id, []).append(abs(a - t))
        assigned_pct.append(a)
        true_pct.append(t)
    if not assigned_pct:
        raise NoValidationEntries("no validation entries with true scores")
    assigned_arr = np.array(assigned_pct)
    true_arr = np.array(true_pct)
    rmse = float(np.sqrt(((assigned_arr - true_arr) ** 2).mean()))
    if assigned_arr.size >= 2 and np.ptp(true_arr) > 0:
        fit = ols_fit(true_arr, assigned_arr)
    else:
        fit = OlsFit(0.0, float(assigned_arr.mean()), float("nan"),
                     0.0, assigned_arr.size, r2_defined=False)
    return GraderErrorAnalysis(
        per_grader_error={g: float(np.mean(v)) for g, v in per_grader.items()},
        fit=fit,
        rmse=rmse,
    )


@dataclass
class WindowSimilarityAnalysis:
    pairs: list[tuple[float, float]]  # (max window similarity, percent error)
    fit: OlsFit | None


def window_similarity_analysis(
    logs,
    program_embeddings,
    window: int = 3,
    include_validation_history: bool = True,
) -> WindowSimilarityAnalysis:
    """For each validation entry, pair the max cosine similarity over the
    grader's preceding `window` submissions with that entry's percent error.

    Validation entries with no preceding history are dropped. Time order
    follows (grader_id, timestamp) sorting of the logs.
    """
    if isinstance(program_embeddings, dict):
        vectors = program_embeddings
    else:
        vectors = {e.submission_id: e.vector for e in program_embeddings}

    timelines: dict[str, list] = {}
    for entry in sorted(logs, key=lambda e: (e.grader_id, e.timestamp_ms)):
        timelines.setdefault(entry.grader_id, []).append(entry)

    pairs = []
    saw_validation = False
    for entries in timelines.values():
        for pos, entry in enumerate(entries):
            if not entry.is_validation:
                continue
            saw_validation = True
            if entry.submission_id not in vectors:
                raise MissingEmbedding(entry.submission_id)
            history = entries[:pos]
            if not include_validation_history:
                history = [e for e in history if not e.is_validation]
            history = history[-window:]
            if not history:
                continue
            sims = []
            for prev in history:
                if prev.submission_id not in vectors:
                    raise MissingEmbedding(prev.submission_id)
                sims.append(
                    cosine_similarity(
                        vectors[entry.submission_id], vectors[prev.submission_id]
                    )
                )
            error = abs(
                _pct(entry.assigned_score, entry.max_score)
                - _pct(entry.true_score, entry.max_score)
            )
            pairs.append((max(sims), error))
    if not saw_validation:
        raise NoValidationEntries("no validation entries in logs")
    fit = None
    if len(pairs) >= 2:
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        if np.ptp(xs) > 0:
            fit = ols_fit(xs, ys)
    return WindowSimilarityAnalysis(pairs=pairs, fit=fit)
