"""Weighted-grammar generation of labeled synthetic programs, plus the
embedding-vs-label semantic evaluation.

Real exam corpora are private, so the experiments run on programs sampled
from a hand-written grammar whose productions carry feedback labels. Label
overlap between two sampled programs then serves as a ground-truth notion of
semantic similarity.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embed import jaccard_similarity
from .errors import (
    DepthExceeded,
    MissingFile,
    MissingStart,
    NonPositiveWeight,
    TooFewPrograms,
    UndefinedNonterminal,
)
from .stats import OlsFit, ols_fit

OVERFLOW = "overflow"  # count_distinct marker for counts above 2**63 - 1
_MAX_COUNT = 2**63 - 1

DEMO_GRAMMAR_PATH = Path(__file__).parent / "data" / "demo_grammar.json"


@dataclass(frozen=True)
class Production:
    weight: float
    body: tuple  # items: ("t", text) or ("nt", name)
    labels: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.weight <= 0:
            raise NonPositiveWeight(f"production weight {self.weight} must be > 0")
        if not self.body and not self.labels:
            raise ValueError("production needs a non-empty body or labels")


@dataclass(frozen=True)
class Grammar:
    start: str
    rules: dict[str, tuple[Production, ...]]
    max_depth: int = 64

    def __post_init__(self):
        if self.start not in self.rules:
            raise MissingStart(f"start symbol {self.start!r} has no rule")
        for name, prods in self.rules.items():
            for prod in prods:
                for kind, value in prod.body:
                    if kind == "nt" and value not in self.rules:
                        raise UndefinedNonterminal(value)

    def all_labels(self) -> frozenset[str]:
        out = set()
        for prods in self.rules.values():
            for prod in prods:
                out |= prod.labels
        return frozenset(out)


@dataclass(frozen=True)
class LabeledProgram:
    source_text: str
    labels: frozenset[str]

    def __post_init__(self):
        if not self.source_text:
            raise ValueError("empty source_text")


@dataclass
class SemanticFit:
    """OLS fit of label Jaccard similarity on embedding cosine similarity."""

    slope: float
    intercept: float
    r2: float
    n_pairs: int
    flags: list[str] = field(default_factory=list)
    cosines: np.ndarray | None = None
    jaccards: np.ndarray | None = None

    def to_record(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "n_pairs": self.n_pairs,
            "flags": self.flags,
        }


def load_grammar(path) -> Grammar:
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "start" not in data:
        raise MissingStart("grammar file has no 'start' key")
    rules = {}
    for name, prods in data.get("rules", {}).items():
        parsed = []
        for prod in prods:
            body = []
            for item in prod.get("body", []):
                if "t" in item:
                    body.append(("t", item["t"]))
                elif "nt" in item:
                    body.append(("nt", item["nt"]))
                else:
                    raise ValueError(f"rule {name!r}: body item {item!r} has neither 't' nor 'nt'")
            parsed.append(
                Production(
                    weight=float(prod.get("weight", 1.0)),
                    body=tuple(body),
                    labels=frozenset(prod.get("labels", [])),
                )
            )
        rules[name] = tuple(parsed)
    return Grammar(
        start=data["start"],
        rules=rules,
        max_depth=int(data.get("max_depth", 64)),
    )


def load_demo_grammar() -> Grammar:
    return load_grammar(DEMO_GRAMMAR_PATH)


def _pick(rng: random.Random, prods) -> Production:
    total = sum(p.weight for p in prods)
    r = rng.random() * total
    acc = 0.0
    for prod in prods:
        acc += prod.weight
        if r < acc:
            return prod
    return prods[-1]


def sample_program(grammar: Grammar, seed: int) -> LabeledProgram:
    """Top-down weighted expansion from the start symbol, deterministic per seed."""
    rng = random.Random(seed)
    pieces: list[str] = []
    labels: set[str] = set()

    def expand(name: str, depth: int):
        if depth > grammar.max_depth:
            raise DepthExceeded(
                f"expansion of {name!r} exceeded max_depth={grammar.max_depth}"
            )
        prod = _pick(rng, grammar.rules[name])
        labels.update(prod.labels)
        for kind, value in prod.body:
            if kind == "t":
                pieces.append(value)
            else:
                expand(value, depth + 1)

    expand(grammar.start, 1)
    return LabeledProgram(source_text="".join(pieces), labels=frozenset(labels))


def count_distinct(grammar: Grammar):
    """Number of distinct derivations within max_depth, by dynamic programming.

    Counts derivation trees, not distinct texts. Returns the OVERFLOW marker
    when the count exceeds 2**63 - 1. Raises DepthExceeded if a derivation
    would need to recurse past max_depth (unbounded recursion).
    """
    memo: dict[tuple[str, int], int] = {}

    def count(name: str, depth: int) -> int:
        if depth > grammar.max_depth:
            raise DepthExceeded(
                f"counting {name!r} exceeded max_depth={grammar.max_depth}"
            )
        key = (name, depth)
        if key in memo:
            return memo[key]
        total = 0
        for prod in grammar.rules[name]:
            ways = 1
            for kind, value in prod.body:
                if kind == "nt":
                    ways *= count(value, depth + 1)
            total += ways
        memo[key] = total
        return total

    result = count(grammar.start, 1)
    return OVERFLOW if result > _MAX_COUNT else result


def _pair_from_linear(idx: int, n: int) -> tuple[int, int]:
    # linear index over the strict upper triangle, row-major
    i = int(n - 2 - np.floor(np.sqrt(-8 * idx + 4 * n * (n - 1) - 7) / 2.0 - 0.5))
    j = int(idx + i + 1 - n * (n - 1) // 2 + (n - i) * (n - i - 1) // 2)
    return i, j


def evaluate_semantics(programs, embs, n_pairs: int, seed: int) -> SemanticFit:
    """Sample program pairs and fit label Jaccard similarity on embedding cosine.

    Pairs are drawn uniformly without replacement; if fewer than n_pairs exist,
    all pairs are used.
    """
    if len(programs) != len(embs):
        raise ValueError("programs and embeddings must align 1:1")
    n = len(programs)
    if n < 2:
        raise TooFewPrograms("need at least 2 programs")
    total = n * (n - 1) // 2
    rng = np.random.default_rng(seed)
    if n_pairs >= total:
        linear = np.arange(total)
    else:
        chosen: set[int] = set()
        while len(chosen) < n_pairs:
            draw = rng.integers(0, total, size=n_pairs - len(chosen))
            chosen.update(int(x) for x in draw)
        linear = np.array(sorted(chosen))

    matrix = np.stack([np.asarray(e.vector, dtype=np.float64) for e in embs])
    normalized = matrix / np.linalg.norm(matrix, axis=1)[:, None]
    label_sets = [p.labels for p in programs]

    pairs = [_pair_from_linear(int(idx), n) for idx in linear]
    cosines = np.array([float(normalized[i] @ normalized[j]) for i, j in pairs])
    jaccards = np.array(
        [jaccard_similarity(label_sets[i], label_sets[j]) for i, j in pairs]
    )

    flags = []
    if np.ptp(cosines) == 0.0:
        flags.append("ZeroVarianceX")
        fit = OlsFit(slope=0.0, intercept=float(jaccards.mean()), r2=float("nan"),
                     rmse=0.0, n=len(pairs), r2_defined=False)
    else:
        fit = ols_fit(cosines, jaccards)
        if not fit.r2_defined:
            flags.append("ZeroVarianceY")
    return SemanticFit(
        slope=fit.slope,
        intercept=fit.intercept,
        r2=fit.r2,
        n_pairs=len(pairs),
        flags=flags,
        cosines=cosines,
        jaccards=jaccards,
    )
