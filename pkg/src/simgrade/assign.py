"""Partitioning of submissions among graders and ordering of each grader's
queue: random baseline, k-means clusters (random or greedy-path order),
snake (random partition + greedy path), and petals of the 2-D PCA plane
(annealed loop or greedy path through a shared central node).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .embed import ProgramEmbedding, SimilarityMatrix, pairwise_similarity
from .errors import (
    KExceedsN,
    NTooLarge,
    StartNotInSet,
    TooFewSubmissions,
)

ALGORITHMS = ("random", "cluster", "cluster_path", "snake", "petal_loop", "petal_path")


@dataclass(frozen=True)
class AssignmentConfig:
    n_graders: int
    algorithm: str = "random"
    n_validations: int = 5
    seed: int = 0
    mcmc_iterations: int = 50_000
    mcmc_initial_temp: float = 1.0
    mcmc_cooling: float = 0.9995

    def __post_init__(self):
        if self.n_graders < 1:
            raise ValueError("n_graders must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if self.n_validations < 0:
            raise ValueError("n_validations must be >= 0")
        if not (0 < self.mcmc_cooling < 1):
            raise ValueError("mcmc_cooling must be in (0, 1)")


@dataclass(frozen=True)
class QueueEntry:
    submission_id: str
    is_validation: bool


@dataclass(frozen=True)
class Assignment:
    algorithm: str
    seed: int
    graders: tuple[tuple[QueueEntry, ...], ...]

    def queue_ids(self, grader: int) -> list[str]:
        return [e.submission_id for e in self.graders[grader]]

    def to_record(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "graders": [
                {
                    "grader": g,
                    "queue": [
                        {"id": e.submission_id, "validation": e.is_validation}
                        for e in queue
                    ],
                }
                for g, queue in enumerate(self.graders)
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Assignment":
        graders = tuple(
            tuple(
                QueueEntry(item["id"], bool(item["validation"]))
                for item in grader["queue"]
            )
            for grader in rec["graders"]
        )
        return cls(algorithm=rec["algorithm"], seed=rec["seed"], graders=graders)


def save_assignment(assignment: Assignment, path, extra: dict | None = None) -> None:
    rec = assignment.to_record()
    if extra:
        rec.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rec, fh, indent=2)
        fh.write("\n")


def load_assignment(path) -> Assignment:
    with open(path, encoding="utf-8") as fh:
        return Assignment.from_record(json.load(fh))


def check_assignment(assignment: Assignment, all_ids, validation_ids) -> None:
    """Raise AssertionError if the assignment violates its invariants."""
    validation_ids = set(validation_ids)
    regular_expected = set(all_ids) - validation_ids
    seen_regular: list[str] = []
    for queue in assignment.graders:
        vals = [e.submission_id for e in queue if e.is_validation]
        assert sorted(vals) == sorted(validation_ids), "validations missing from a queue"
        seen_regular.extend(e.submission_id for e in queue if not e.is_validation)
    assert len(seen_regular) == len(set(seen_regular)), "regular submission duplicated"
    assert set(seen_regular) == regular_expected, "regular submission coverage broken"


@dataclass(frozen=True)
class PlanarCoords:
    """Standardized 2-D PCA coordinates, one row per submission."""

    ids: tuple[str, ...]
    xy: np.ndarray  # n x 2
    degenerate: bool = False
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(
                self, "index", {sid: i for i, sid in enumerate(self.ids)}
            )


# --- building blocks ---


def select_validations(subs, n: int, seed: int):
    """Uniform sample of n validation ids; remaining ids keep corpus order."""
    ids = subs.ids() if hasattr(subs, "ids") else list(subs)
    if n >= len(ids):
        raise NTooLarge(f"n={n} must be < {len(ids)} submissions")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(ids), size=n, replace=False)
    validation = [ids[i] for i in sorted(chosen)]
    chosen_set = set(validation)
    remaining = [i for i in ids if i not in chosen_set]
    return validation, remaining


def assign_random(ids, k: int, seed: int) -> list[list[str]]:
    """Uniform random partition into k groups with sizes differing by <= 1."""
    ids = list(ids)
    if len(ids) < k:
        raise TooFewSubmissions(f"{len(ids)} submissions for {k} graders")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    groups: list[list[str]] = [[] for _ in range(k)]
    for pos, idx in enumerate(perm):
        groups[pos % k].append(ids[idx])
    return groups


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    objective_history: list[float]

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def _spherical_objective(normalized, labels, centroids) -> float:
    return float(np.mean(np.sum(normalized * centroids[labels], axis=1)))


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / norms


def _kmeans_once(normalized, k, rng, max_iters):
    n = normalized.shape[0]
    centroids = normalized[rng.choice(n, size=k, replace=False)].copy()
    labels = np.full(n, -1)
    history = []
    for _ in range(max_iters):
        sims = normalized @ centroids.T
        new_labels = np.argmax(sims, axis=1)
        # reseed each empty cluster with the point least similar to its centroid
        for cluster in range(k):
            if not np.any(new_labels == cluster):
                own_sims = sims[np.arange(n), new_labels]
                candidates = np.where(np.bincount(new_labels, minlength=k)[new_labels] > 1)[0]
                if candidates.size == 0:
                    candidates = np.arange(n)
                worst = candidates[np.argmin(own_sims[candidates])]
                new_labels[worst] = cluster
                sims[worst] = -np.inf  # keep it out of later reseeds this round
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = np.zeros_like(centroids)
        for cluster in range(k):
            member_sum = normalized[labels == cluster].sum(axis=0)
            norm = np.linalg.norm(member_sum)
            if norm > 0:
                centroids[cluster] = member_sum / norm
            else:
                centroids[cluster] = normalized[labels == cluster][0]
        history.append(_spherical_objective(normalized, labels, centroids))
    return labels, centroids, history


def kmeans_cosine(
    embs,
    k: int,
    seed: int,
    max_iters: int = 100,
    n_init: int = 10,
) -> KMeansResult:
    """Spherical k-means: cosine assignment, normalized-mean centroids.

    Runs n_init seeded restarts and keeps the best objective (mean cosine of
    each point to its centroid), so small instances reliably reach the
    optimum. Deterministic for a fixed seed.
    """
    matrix = np.stack([np.asarray(e.vector, dtype=np.float64) for e in embs])
    n = matrix.shape[0]
    if k > n:
        raise KExceedsN(f"k={k} > n={n}")
    normalized = _normalize_rows(matrix)
    best = None
    for restart in range(n_init):
        rng = np.random.default_rng(kernels.derive_seed(seed, restart))
        labels, centroids, history = _kmeans_once(normalized, k, rng, max_iters)
        if not history:
            history = [_spherical_objective(normalized, labels, centroids)]
        if best is None or history[-1] > best.objective:
            best = KMeansResult(labels=labels, centroids=centroids,
                                objective_history=history)
    return best


def order_greedy_path(ids, sim: SimilarityMatrix, start: str) -> list[str]:
    """Nearest-neighbor chain from start; ties broken by lexicographic id."""
    ids = list(ids)
    if start not in ids:
        raise StartNotInSet(start)
    remaining = set(ids)
    remaining.remove(start)
    path = [start]
    current = start
    while remaining:
        nxt = min(remaining, key=lambda i: (-sim.sim(current, i), i))
        path.append(nxt)
        remaining.remove(nxt)
        current = nxt
    return path


def pca_2d(embs) -> PlanarCoords:
    """Project onto the top-2 principal components and standardize each axis.

    Component signs are fixed so the largest-magnitude loading is positive.
    Rank-deficient data gets y = 0 and the degenerate flag.
    """
    ids = tuple(e.submission_id for e in embs)
    matrix = np.stack([np.asarray(e.vector, dtype=np.float64) for e in embs])
    n, dim = matrix.shape
    if n < 3:
        raise ValueError("need at least 3 points for a 2-D projection")
    if dim < 2:
        raise ValueError("need at least 2 input dimensions")
    centered = matrix - matrix.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for c in range(2):
        pivot = np.argmax(np.abs(components[c]))
        if components[c][pivot] < 0:
            components[c] = -components[c]
    xy = centered @ components.T
    degenerate = svals.size < 2 or svals[1] <= 1e-12 * max(svals[0], 1.0)
    if degenerate:
        xy[:, 1] = 0.0
    for axis in range(2):
        col = xy[:, axis]
        std = col.std()
        if std > 0:
            xy[:, axis] = (col - col.mean()) / std
        else:
            xy[:, axis] = 0.0
    return PlanarCoords(ids=ids, xy=xy, degenerate=degenerate)


def assign_petal(ids, coords: PlanarCoords, k: int):
    """Split the plane into k equal-angle sectors around the origin.

    Returns (petals, common_id, home_petal): petals[j] lists the member ids of
    sector [2*pi*j/k, 2*pi*(j+1)/k) with the common node (minimum-norm point)
    placed first in every petal; home_petal is the sector the common node's
    own angle falls in.

    Real angle distributions can leave a sector empty, which would give a
    grader nothing but validations. An empty petal therefore takes the point
    angularly closest to its sector center from a petal that can spare one
    (deterministic; ties broken by id).
    """
    ids = list(ids)
    if not ids:
        raise TooFewSubmissions("no ids to split into petals")
    rows = np.array([coords.index[i] for i in ids])
    xy = coords.xy[rows]
    norms = np.linalg.norm(xy, axis=1)
    common_pos = int(np.argmin(norms))
    common_id = ids[common_pos]
    angles = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2 * np.pi)
    sector = np.minimum((angles * k / (2 * np.pi)).astype(int), k - 1)
    home_petal = int(sector[common_pos])
    members: list[list[int]] = [[] for _ in range(k)]
    for i in range(len(ids)):
        if i != common_pos:
            members[sector[i]].append(i)

    # effective size counts the common node only in its home petal
    def effective(j: int) -> int:
        return len(members[j]) + (1 if j == home_petal else 0)

    centers = 2 * np.pi * (np.arange(k) + 0.5) / k
    for j in range(k):
        while effective(j) == 0:
            best = None
            for donor in range(k):
                if donor == j or effective(donor) < 2:
                    continue
                for pos in members[donor]:
                    gap = abs(angles[pos] - centers[j])
                    gap = min(gap, 2 * np.pi - gap)
                    key = (gap, ids[pos])
                    if best is None or key < best[0]:
                        best = (key, donor, pos)
            if best is None:
                break
            _, donor, pos = best
            members[donor].remove(pos)
            members[j].append(pos)

    petals = [[common_id] + [ids[i] for i in petal] for petal in members]
    return petals, common_id, home_petal


def order_mcmc_loop(ids, coords: PlanarCoords, cfg: AssignmentConfig, seed: int) -> list[str]:
    """Simulated-annealing tour (2-opt proposals) over the ids' planar coords."""
    ids = list(ids)
    if len(ids) <= 3:
        return ids
    rows = np.array([coords.index[i] for i in ids])
    xs = np.ascontiguousarray(coords.xy[rows, 0])
    ys = np.ascontiguousarray(coords.xy[rows, 1])
    tour = kernels.anneal_tour(
        xs, ys, cfg.mcmc_iterations, cfg.mcmc_initial_temp, cfg.mcmc_cooling, seed
    )
    return [ids[i] for i in tour]


def planar_similarity(ids, coords: PlanarCoords) -> SimilarityMatrix:
    """Negative pairwise Euclidean distance in the PCA plane, packaged so the
    greedy-path ordering can run on planar geometry."""
    ids = tuple(ids)
    rows = np.array([coords.index[i] for i in ids])
    xy = coords.xy[rows]
    deltas = xy[:, None, :] - xy[None, :, :]
    dist = np.sqrt((deltas**2).sum(axis=2))
    return SimilarityMatrix(ids=ids, matrix=-dist)


# --- dispatcher ---


def _insert_validations(queue, validation_ids, rng) -> tuple[QueueEntry, ...]:
    entries = [QueueEntry(i, False) for i in queue]
    for vid in validation_ids:
        pos = int(rng.integers(0, len(entries) + 1))
        entries.insert(pos, QueueEntry(vid, True))
    return tuple(entries)


def build_assignment(subs, embs, cfg: AssignmentConfig) -> Assignment:
    """Select validations, partition and order the rest per cfg.algorithm, and
    insert every validation into every grader's queue at random positions.

    The petal algorithms order in the standardized PCA plane; the common node
    anchors every petal's ordering but is graded only in its home petal, so
    each regular submission still appears exactly once overall.
    """
    embs = list(embs)
    k = cfg.n_graders
    validation_ids, remaining = select_validations(
        subs, cfg.n_validations, kernels.derive_seed(cfg.seed, 0x5A1)
    )
    if len(remaining) < k:
        raise TooFewSubmissions(f"{len(remaining)} non-validation submissions for {k} graders")
    by_id = {e.submission_id: e for e in embs}
    remaining_embs = [by_id[i] for i in remaining]

    grader_rngs = [
        np.random.default_rng(kernels.derive_seed(cfg.seed, 0x6E, g))
        for g in range(k)
    ]
    partition_seed = kernels.derive_seed(cfg.seed, 0xFA)

    queues: list[list[str]]
    if cfg.algorithm in ("random", "snake"):
        queues = assign_random(remaining, k, partition_seed)
        if cfg.algorithm == "random":
            for g in range(k):
                order = grader_rngs[g].permutation(len(queues[g]))
                queues[g] = [queues[g][i] for i in order]
        else:
            sim = pairwise_similarity(remaining_embs)
            for g in range(k):
                start = queues[g][int(grader_rngs[g].integers(0, len(queues[g])))]
                queues[g] = order_greedy_path(queues[g], sim, start)
    elif cfg.algorithm in ("cluster", "cluster_path"):
        result = kmeans_cosine(remaining_embs, k, partition_seed)
        queues = [[] for _ in range(k)]
        for sid, label in zip(remaining, result.labels):
            queues[int(label)].append(sid)
        if cfg.algorithm == "cluster":
            for g in range(k):
                order = grader_rngs[g].permutation(len(queues[g]))
                queues[g] = [queues[g][i] for i in order]
        else:
            sim = pairwise_similarity(remaining_embs)
            for g in range(k):
                start = queues[g][int(grader_rngs[g].integers(0, len(queues[g])))]
                queues[g] = order_greedy_path(queues[g], sim, start)
    else:  # petal_loop, petal_path
        coords = pca_2d(remaining_embs)
        petals, common_id, home_petal = assign_petal(remaining, coords, k)
        queues = []
        for g, petal in enumerate(petals):
            if cfg.algorithm == "petal_loop":
                loop_seed = kernels.derive_seed(cfg.seed, 0x100F, g)
                ordered = order_mcmc_loop(petal, coords, cfg, loop_seed)
                pivot = ordered.index(common_id)
                ordered = ordered[pivot:] + ordered[:pivot]
            else:
                sim = planar_similarity(petal, coords)
                ordered = order_greedy_path(petal, sim, common_id)
            if g != home_petal:
                ordered = [i for i in ordered if i != common_id]
            queues.append(ordered)

    graders = tuple(
        _insert_validations(queues[g], validation_ids, grader_rngs[g])
        for g in range(k)
    )
    return Assignment(algorithm=cfg.algorithm, seed=cfg.seed, graders=graders)
