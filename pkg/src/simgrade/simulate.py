"""Grading-error simulation: predicts per-submission percent error from the
similarity of each queued submission to the grader's recent history, and
scores assignment algorithms against each other.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernels
from .assign import ALGORITHMS, Assignment, AssignmentConfig, build_assignment
from .embed import SimilarityMatrix, pairwise_similarity
from .errors import GraderHasNoRegularSubmissions, UnknownSubmissionInQueue
from .stats import BootstrapResult, bootstrap_mean_diff


@dataclass(frozen=True)
class ErrorModel:
    """Linear map from window max-similarity to percent grading error.

    Defaults are two-point calibrated so that similarity 1.0 maps to 2.7% and
    similarity 0.85 maps to 10.2%: slope = (2.7 - 10.2) / (1.0 - 0.85) = -50,
    intercept = 2.7 + 50 = 52.7.
    """

    intercept: float = 52.7
    slope: float = -50.0
    min_error: float = 0.0
    max_error: float = 100.0

    def __post_init__(self):
        if self.min_error > self.max_error:
            raise ValueError("min_error must be <= max_error")


@dataclass(frozen=True)
class SimulationConfig:
    window: int = 3
    cold_start_similarity: float = 0.80
    error_model: ErrorModel = ErrorModel()
    seed: int = 0
    include_validation_history: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not (-1.0 <= self.cold_start_similarity <= 1.0):
            raise ValueError("cold_start_similarity must be in [-1, 1]")


@dataclass
class SimulationResult:
    algorithm: str
    per_grader_errors: list[list[float]]  # percent, one list per grader queue
    mean_error: float
    validation_distance: float
    config: SimulationConfig

    def all_errors(self) -> list[float]:
        return [e for queue in self.per_grader_errors for e in queue]


def window_max_similarity(
    queue, position: int, sim: SimilarityMatrix, cfg: SimulationConfig
) -> float:
    """Max cosine similarity between queue[position] and up to cfg.window
    predecessors; the cold-start value when there is no history."""
    if position == 0:
        return cfg.cold_start_similarity
    current = queue[position]
    lo = max(0, position - cfg.window)
    return max(sim.sim(current, queue[j]) for j in range(lo, position))


def predict_error(max_sim: float, model: ErrorModel) -> float:
    raw = model.intercept + model.slope * max_sim
    return float(min(max(raw, model.min_error), model.max_error))


def simulate_session(
    assignment: Assignment, sim: SimilarityMatrix, cfg: SimulationConfig
) -> SimulationResult:
    """Predicted percent error for every grader and queue position.

    Validation entries are scored like any other submission. They also count
    as window history unless cfg.include_validation_history is off (the grader
    did see them).
    """
    per_grader = []
    for queue in assignment.graders:
        ids = [e.submission_id for e in queue]
        for sid in ids:
            if sid not in sim.index:
                raise UnknownSubmissionInQueue(sid)
        errors = []
        for pos in range(len(ids)):
            if cfg.include_validation_history:
                history_ids = ids[:pos]
            else:
                history_ids = [
                    e.submission_id for e in queue[:pos] if not e.is_validation
                ]
            window = history_ids[-cfg.window :]
            if not window:
                max_sim = cfg.cold_start_similarity
            else:
                max_sim = max(sim.sim(ids[pos], h) for h in window)
            errors.append(predict_error(max_sim, cfg.error_model))
        per_grader.append(errors)
    all_errors = [e for queue in per_grader for e in queue]
    return SimulationResult(
        algorithm=assignment.algorithm,
        per_grader_errors=per_grader,
        mean_error=float(np.mean(all_errors)),
        validation_distance=validation_distance(assignment, sim),
        config=cfg,
    )


def validation_distance(assignment: Assignment, embs) -> float:
    """Mean over graders of the mean cosine distance (1 - max similarity) from
    each validation entry to the grader's nearest regular submission."""
    sim = embs if isinstance(embs, SimilarityMatrix) else pairwise_similarity(embs)
    per_grader = []
    for queue in assignment.graders:
        validations = [e.submission_id for e in queue if e.is_validation]
        regulars = [e.submission_id for e in queue if not e.is_validation]
        if not validations:
            continue
        if not regulars:
            raise GraderHasNoRegularSubmissions(
                "a grader's queue holds only validation submissions"
            )
        distances = [
            1.0 - max(sim.sim(v, r) for r in regulars) for v in validations
        ]
        per_grader.append(float(np.mean(distances)))
    return float(np.mean(per_grader)) if per_grader else 0.0


@dataclass(frozen=True)
class ProblemInstance:
    """One problem's corpus: the submission set plus its program embeddings."""

    subs: object  # SubmissionSet
    embeddings: list
    name: str = ""

    def similarity(self) -> SimilarityMatrix:
        return pairwise_similarity(self.embeddings)


@dataclass
class AlgorithmSummary:
    algorithm: str
    mean_error_pct: float
    validation_distance: float
    p_vs_random: float | None
    n_runs: int
    run_mean_errors: list[float] = field(default_factory=list)
    per_position_mean: list[float] = field(default_factory=list)


@dataclass
class ComparisonReport:
    rows: list[AlgorithmSummary]
    n_repetitions: int
    bootstrap_trials: int

    def to_record(self) -> dict:
        return {
            "n_repetitions": self.n_repetitions,
            "bootstrap_trials": self.bootstrap_trials,
            "algorithms": [
                {
                    "algorithm": r.algorithm,
                    "mean_error_pct": r.mean_error_pct,
                    "validation_distance": r.validation_distance,
                    "p_vs_random": r.p_vs_random,
                    "n_runs": r.n_runs,
                    "run_mean_errors": r.run_mean_errors,
                    "per_position_mean_error": r.per_position_mean,
                }
                for r in self.rows
            ],
        }


def compare_algorithms(
    problems,
    algorithms,
    n_graders: int,
    sim_cfg: SimulationConfig,
    n_repetitions: int = 20,
    n_validations: int = 5,
    bootstrap_trials: int = 100_000,
    assignment_cfg: AssignmentConfig | None = None,
) -> ComparisonReport:
    """Simulate every algorithm over every problem and repetition.

    Each (algorithm, problem, repetition) run gets a seed derived from
    sim_cfg.seed, so the whole comparison is reproducible. Bootstrap p-values
    test each algorithm's per-run mean errors against the random baseline's.
    """
    if n_repetitions < 1:
        raise ValueError("n_repetitions must be >= 1")
    for algorithm in algorithms:
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}")

    sims = [p.similarity() for p in problems]
    summaries = []
    run_errors: dict[str, list[float]] = {}
    for a_idx, algorithm in enumerate(algorithms):
        errors = []
        distances = []
        position_sums: list[float] = []
        position_counts: list[int] = []
        for p_idx, problem in enumerate(problems):
            for rep in range(n_repetitions):
                run_seed = kernels.derive_seed(sim_cfg.seed, a_idx, p_idx, rep)
                cfg = AssignmentConfig(
                    n_graders=n_graders,
                    algorithm=algorithm,
                    n_validations=n_validations,
                    seed=run_seed,
                    mcmc_iterations=(
                        assignment_cfg.mcmc_iterations if assignment_cfg else 50_000
                    ),
                    mcmc_initial_temp=(
                        assignment_cfg.mcmc_initial_temp if assignment_cfg else 1.0
                    ),
                    mcmc_cooling=(
                        assignment_cfg.mcmc_cooling if assignment_cfg else 0.9995
                    ),
                )
                assignment = build_assignment(problem.subs, problem.embeddings, cfg)
                result = simulate_session(assignment, sims[p_idx], sim_cfg)
                errors.append(result.mean_error)
                distances.append(result.validation_distance)
                for queue in result.per_grader_errors:
                    for pos, err in enumerate(queue):
                        if pos >= len(position_sums):
                            position_sums.append(0.0)
                            position_counts.append(0)
                        position_sums[pos] += err
                        position_counts[pos] += 1
        run_errors[algorithm] = errors
        summaries.append(
            AlgorithmSummary(
                algorithm=algorithm,
                mean_error_pct=float(np.mean(errors)),
                validation_distance=float(np.mean(distances)),
                p_vs_random=None,
                n_runs=len(errors),
                run_mean_errors=errors,
                per_position_mean=[
                    s / c for s, c in zip(position_sums, position_counts)
                ],
            )
        )

    if "random" in run_errors:
        baseline = run_errors["random"]
        for summary in summaries:
            if summary.algorithm == "random":
                summary.p_vs_random = 1.0
                continue
            result = bootstrap_mean_diff(
                summary.run_mean_errors,
                baseline,
                bootstrap_trials,
                kernels.derive_seed(sim_cfg.seed, 0xB007, ALGORITHMS.index(summary.algorithm)),
            )
            summary.p_vs_random = result.p_value
    return ComparisonReport(
        rows=summaries,
        n_repetitions=n_repetitions,
        bootstrap_trials=bootstrap_trials,
    )


def write_report_csv(report: ComparisonReport, path, header_comment: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "mean_error_pct", "validation_distance", "p_vs_random", "n_reps"]
        )
        for row in report.rows:
            writer.writerow(
                [
                    row.algorithm,
                    f"{row.mean_error_pct:.6f}",
                    f"{row.validation_distance:.6f}",
                    "" if row.p_vs_random is None else f"{row.p_vs_random:.6g}",
                    report.n_repetitions,
                ]
            )


def write_report_json(report: ComparisonReport, path, config: dict | None = None) -> None:
    record = report.to_record()
    if config:
        record["config"] = config
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
