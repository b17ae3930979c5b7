"""Token embeddings (skip-gram with negative sampling), program embeddings,
and the similarity primitives used throughout the toolkit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .codeprep import TokenStream, Vocab
from .errors import (
    DimensionMismatch,
    EmptyCorpusAfterFilter,
    NoKnownTokens,
    ZeroVector,
)

NEG_TABLE_SIZE = 1 << 20
NEG_POWER = 0.75  # unigram distribution exponent for negative sampling

EMBEDDING_MAGIC = b"SGEM"
EMBEDDING_VERSION = 1


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 50
    window: int = 5
    negatives: int = 5
    epochs: int = 10
    learning_rate: float = 0.025
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.learning_rate < 1):
            raise ValueError("learning_rate must be in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class TokenEmbeddings:
    vectors: np.ndarray  # |V| x dim
    vocab: Vocab

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.vocab):
            raise ValueError("row count does not match vocabulary size")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab.token_to_index[token]]


@dataclass(frozen=True)
class ProgramEmbedding:
    submission_id: str
    vector: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.vector).all():
            raise ValueError(f"non-finite embedding for {self.submission_id!r}")
        if not np.any(self.vector):
            raise ZeroVector(f"all-zero embedding for {self.submission_id!r}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric cosine-similarity matrix with an id -> row index map."""

    ids: tuple[str, ...]
    matrix: np.ndarray
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(
                self, "index", {sid: i for i, sid in enumerate(self.ids)}
            )

    def sim(self, id_a: str, id_b: str) -> float:
        return float(self.matrix[self.index[id_a], self.index[id_b]])


def _build_neg_table(vocab: Vocab, size: int = NEG_TABLE_SIZE) -> np.ndarray:
    counts = np.empty(len(vocab), dtype=np.float64)
    for token, idx in vocab.token_to_index.items():
        counts[idx] = vocab.counts[token]
    probs = counts**NEG_POWER
    cumulative = np.cumsum(probs / probs.sum())
    positions = (np.arange(size) + 0.5) / size
    return np.searchsorted(cumulative, positions).astype(np.int32)


def sgns_pair_loss(v: np.ndarray, u_pos: np.ndarray, u_negs: np.ndarray) -> float:
    """Negative-sampling loss for one (center, context) pair.

    L = -log sigmoid(v.u_pos) - sum_n log sigmoid(-v.u_n). Used as the target
    of the finite-difference gradient check; keep in sync with the kernels.
    """

    def log_sigmoid(x):
        return -np.logaddexp(0.0, -x)

    loss = -log_sigmoid(float(v @ u_pos))
    for u_n in u_negs:
        loss -= log_sigmoid(-float(v @ u_n))
    return float(loss)


def sgns_pair_gradients(v, u_pos, u_negs):
    """Analytic gradients of sgns_pair_loss wrt (v, u_pos, each u_n)."""

    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-x))

    grad_v = (sigmoid(float(v @ u_pos)) - 1.0) * u_pos
    grad_u_pos = (sigmoid(float(v @ u_pos)) - 1.0) * v
    grad_u_negs = []
    for u_n in u_negs:
        s = sigmoid(float(v @ u_n))
        grad_v = grad_v + s * u_n
        grad_u_negs.append(s * v)
    return grad_v, grad_u_pos, grad_u_negs


def train_embeddings(streams, vocab: Vocab, cfg: EmbedConfig) -> TokenEmbeddings:
    """Train skip-gram negative-sampling embeddings over in-vocab tokens.

    Deterministic for a fixed cfg.seed: initialization and the sampling stream
    both derive from it, and training is single-threaded.
    """
    index = vocab.token_to_index
    sentences = []
    for stream in streams:
        idxs = [index[t] for t in stream.tokens if t in index]
        if idxs:
            sentences.append(idxs)
    if not sentences:
        raise EmptyCorpusAfterFilter("no in-vocabulary tokens in any stream")

    words = np.array([i for s in sentences for i in s], dtype=np.int32)
    offsets = np.zeros(len(sentences) + 1, dtype=np.int32)
    np.cumsum([len(s) for s in sentences], out=offsets[1:])

    n, dim = len(vocab), cfg.dim
    # deterministic uniform(-0.5/dim, 0.5/dim) init from the same splitmix64
    # stream both kernel lanes use
    state = kernels.derive_seed(cfg.seed, 0x1417)
    init = np.empty(n * dim, dtype=np.float64)
    for i in range(n * dim):
        state, z = kernels.splitmix64_next(state)
        init[i] = ((z >> 11) * (1.0 / 9007199254740992.0) - 0.5) / dim
    w_in = init.reshape(n, dim)
    w_out = np.zeros((n, dim), dtype=np.float64)

    neg_table = _build_neg_table(vocab)
    train_seed = kernels.derive_seed(cfg.seed, 0x7EA1)
    kernels.sgns_train(
        words,
        offsets,
        w_in,
        w_out,
        neg_table,
        cfg.window,
        cfg.negatives,
        cfg.epochs,
        cfg.learning_rate,
        train_seed,
    )
    return TokenEmbeddings(vectors=w_in, vocab=vocab)


def embed_program(stream: TokenStream, emb: TokenEmbeddings) -> ProgramEmbedding:
    """Mean of the embeddings of the stream's in-vocab tokens."""
    index = emb.vocab.token_to_index
    rows = [index[t] for t in stream.tokens if t in index]
    if not rows:
        raise NoKnownTokens(
            f"submission {stream.submission_id!r} has no in-vocabulary tokens"
        )
    vector = emb.vectors[rows].mean(axis=0)
    return ProgramEmbedding(submission_id=stream.submission_id, vector=vector)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def jaccard_similarity(a, b) -> float:
    """|A n B| / |A u B|; two empty sets count as identical (1.0)."""
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def pairwise_similarity(embs) -> SimilarityMatrix:
    """All-pairs cosine similarity; symmetric with an exact unit diagonal."""
    ids = tuple(e.submission_id for e in embs)
    matrix = np.stack([np.asarray(e.vector, dtype=np.float64) for e in embs])
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        raise ZeroVector("zero vector in embedding set")
    normalized = matrix / norms[:, None]
    sims = normalized @ normalized.T
    sims = np.clip((sims + sims.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(sims, 1.0)
    return SimilarityMatrix(ids=ids, matrix=sims)


# --- persistence ---


def save_embeddings(emb: TokenEmbeddings, path) -> None:
    """Binary format: magic, version, n, dim (u32 LE), float32 rows, then the
    vocabulary as length-prefixed UTF-8 tokens in index order."""
    tokens = emb.vocab.tokens_by_index()
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<III", EMBEDDING_VERSION, len(tokens), emb.dim))
        fh.write(emb.vectors.astype("<f4").tobytes(order="C"))
        for token in tokens:
            raw = token.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def load_embeddings(path) -> TokenEmbeddings:
    """Inverse of save_embeddings. Counts are not stored in the file, so the
    reconstructed vocabulary reports count 1 / min_count 1 for every token."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != EMBEDDING_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {EMBEDDING_MAGIC!r}")
        version, n, dim = struct.unpack("<III", fh.read(12))
        if version != EMBEDDING_VERSION:
            raise ValueError(f"unsupported embedding file version {version}")
        vectors = np.frombuffer(fh.read(4 * n * dim), dtype="<f4").reshape(n, dim)
        tokens = []
        for _ in range(n):
            (length,) = struct.unpack("<I", fh.read(4))
            tokens.append(fh.read(length).decode("utf-8"))
    vocab = Vocab(
        token_to_index={t: i for i, t in enumerate(tokens)},
        counts={t: 1 for t in tokens},
        min_count=1,
    )
    return TokenEmbeddings(vectors=vectors.astype(np.float64), vocab=vocab)


def export_embeddings_csv(emb: TokenEmbeddings, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = ",".join(["token"] + [f"v{i}" for i in range(emb.dim)])
        fh.write(header + "\n")
        for token in emb.vocab.tokens_by_index():
            row = emb.vector(token)
            fh.write(",".join([json.dumps(token)] + [repr(x) for x in row]) + "\n")


def save_program_embeddings(embs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in embs:
            fh.write(
                json.dumps(
                    {"submission_id": e.submission_id, "vector": list(map(float, e.vector))}
                )
                + "\n"
            )


def load_program_embeddings(path) -> list[ProgramEmbedding]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out.append(
                    ProgramEmbedding(
                        submission_id=rec["submission_id"],
                        vector=np.asarray(rec["vector"], dtype=np.float64),
                    )
                )
    return out
