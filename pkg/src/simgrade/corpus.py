"""Data model for student submissions and grading logs, plus JSONL ingestion.

The interchange format is JSON Lines: one record per line, so parse errors can
be reported with a line number and large corpora can be streamed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateId,
    MalformedRecord,
    MissingFile,
    MixedProblemIds,
    ScoreOutOfRange,
    ValidationWithoutTrueScore,
)


@dataclass(frozen=True)
class Submission:
    """One student's written answer to one free-response problem."""

    id: str
    problem_id: str
    source_text: str
    student_id: str | None = None

    def __post_init__(self):
        if not self.source_text:
            raise ValueError(f"submission {self.id!r} has empty source_text")

    def to_record(self) -> dict:
        rec = {"id": self.id, "problem_id": self.problem_id}
        if self.student_id is not None:
            rec["student_id"] = self.student_id
        rec["source_text"] = self.source_text
        return rec


@dataclass(frozen=True)
class GradingLogEntry:
    """One grader's scoring event for one submission.

    Validation entries carry the expert's true score so grader accuracy can
    be measured against it.
    """

    grader_id: str
    submission_id: str
    timestamp_ms: int
    assigned_score: float
    max_score: float
    labels: frozenset[str] = frozenset()
    duration_s: float | None = None
    is_validation: bool = False
    true_score: float | None = None

    def __post_init__(self):
        if self.max_score <= 0:
            raise ScoreOutOfRange(f"max_score must be > 0, got {self.max_score}")
        if not (0 <= self.assigned_score <= self.max_score):
            raise ScoreOutOfRange(
                f"assigned_score {self.assigned_score} outside [0, {self.max_score}]"
            )
        if self.true_score is not None and not (0 <= self.true_score <= self.max_score):
            raise ScoreOutOfRange(
                f"true_score {self.true_score} outside [0, {self.max_score}]"
            )
        if self.is_validation and self.true_score is None:
            raise ValidationWithoutTrueScore(
                f"validation entry for {self.submission_id!r} has no true_score"
            )
        if self.duration_s is not None and self.duration_s < 0:
            raise ValueError(f"duration_s must be >= 0, got {self.duration_s}")

    def to_record(self) -> dict:
        rec = {
            "grader_id": self.grader_id,
            "submission_id": self.submission_id,
            "timestamp_ms": self.timestamp_ms,
            "assigned_score": self.assigned_score,
            "max_score": self.max_score,
            "labels": sorted(self.labels),
            "is_validation": self.is_validation,
        }
        if self.duration_s is not None:
            rec["duration_s"] = self.duration_s
        if self.true_score is not None:
            rec["true_score"] = self.true_score
        return rec


@dataclass(frozen=True)
class SubmissionSet:
    """All submissions for one problem, in a stable order with unique ids."""

    problem_id: str
    submissions: tuple[Submission, ...]

    def __post_init__(self):
        seen = set()
        for sub in self.submissions:
            if sub.problem_id != self.problem_id:
                raise MixedProblemIds(
                    f"submission {sub.id!r} has problem_id {sub.problem_id!r}, "
                    f"expected {self.problem_id!r}"
                )
            if sub.id in seen:
                raise DuplicateId(sub.id)
            seen.add(sub.id)

    def __len__(self):
        return len(self.submissions)

    def __iter__(self):
        return iter(self.submissions)

    def ids(self) -> list[str]:
        return [s.id for s in self.submissions]


@dataclass
class CorpusReport:
    """Cross-checks between a submission set and its grading logs."""

    dangling_submission_ids: list[str] = field(default_factory=list)
    submissions_without_logs: list[str] = field(default_factory=list)
    entries_per_grader: dict[str, int] = field(default_factory=dict)


def _iter_jsonl(path):
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(path, line_no, "record is not a JSON object")
            yield line_no, record


def load_submissions(path) -> SubmissionSet:
    """Load a submissions.jsonl file into a SubmissionSet, preserving file order."""
    submissions = []
    seen_ids = set()
    problem_id = None
    for line_no, rec in _iter_jsonl(path):
        try:
            sub = Submission(
                id=str(rec["id"]),
                problem_id=str(rec["problem_id"]),
                source_text=rec["source_text"],
                student_id=rec.get("student_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(path, line_no, str(exc)) from exc
        if sub.id in seen_ids:
            raise DuplicateId(sub.id)
        seen_ids.add(sub.id)
        if problem_id is None:
            problem_id = sub.problem_id
        elif sub.problem_id != problem_id:
            raise MixedProblemIds(
                f"{path}:{line_no}: problem_id {sub.problem_id!r} != {problem_id!r}"
            )
        submissions.append(sub)
    return SubmissionSet(problem_id=problem_id or "", submissions=tuple(submissions))


def save_submissions(subs: SubmissionSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sub in subs:
            fh.write(json.dumps(sub.to_record(), sort_keys=False) + "\n")


def load_grading_logs(path) -> list[GradingLogEntry]:
    """Load grading_logs.jsonl, returning entries sorted by (grader_id, timestamp).

    The sort is stable, so simultaneous entries keep their file order.
    """
    entries = []
    for line_no, rec in _iter_jsonl(path):
        try:
            entry = GradingLogEntry(
                grader_id=str(rec["grader_id"]),
                submission_id=str(rec["submission_id"]),
                timestamp_ms=int(rec["timestamp_ms"]),
                assigned_score=float(rec["assigned_score"]),
                max_score=float(rec["max_score"]),
                labels=frozenset(rec.get("labels", [])),
                duration_s=rec.get("duration_s"),
                is_validation=bool(rec.get("is_validation", False)),
                true_score=rec.get("true_score"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(path, line_no, str(exc)) from exc
        entries.append(entry)
    entries.sort(key=lambda e: (e.grader_id, e.timestamp_ms))
    return entries


def save_grading_logs(entries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_record()) + "\n")


def validate_corpus(subs: SubmissionSet, logs) -> CorpusReport:
    """Report dangling log references, unlogged submissions, and per-grader counts."""
    known = set(subs.ids())
    report = CorpusReport()
    logged = set()
    seen_dangling = set()
    for entry in logs:
        report.entries_per_grader[entry.grader_id] = (
            report.entries_per_grader.get(entry.grader_id, 0) + 1
        )
        if entry.submission_id in known:
            logged.add(entry.submission_id)
        elif entry.submission_id not in seen_dangling:
            seen_dangling.add(entry.submission_id)
            report.dangling_submission_ids.append(entry.submission_id)
    report.submissions_without_logs = [i for i in subs.ids() if i not in logged]
    return report
