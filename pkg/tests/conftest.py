import numpy as np
import pytest

from simgrade import codeprep, embed, synth
from simgrade.corpus import Submission, SubmissionSet


def make_random_embeddings(n, dim=8, seed=0, prefix="s"):
    """Random nonzero program embeddings; no training involved."""
    rng = np.random.default_rng(seed)
    vectors = rng.normal(0, 1, (n, dim))
    return [
        embed.ProgramEmbedding(f"{prefix}{i:04d}", vectors[i]) for i in range(n)
    ]


def make_submission_set(n, problem_id="p1", seed=0):
    rng = np.random.default_rng(seed)
    subs = tuple(
        Submission(f"s{i:04d}", problem_id, f"x = {int(rng.integers(0, 100))}\n")
        for i in range(n)
    )
    return SubmissionSet(problem_id, subs)


@pytest.fixture(scope="session")
def demo_grammar():
    return synth.load_demo_grammar()


@pytest.fixture(scope="session")
def trained_corpus(demo_grammar):
    """A small grammar-sampled corpus with trained embeddings, shared across
    tests that need realistic (high-similarity) program embeddings."""
    programs = [synth.sample_program(demo_grammar, 5000 + i) for i in range(150)]
    subs = SubmissionSet(
        "p1",
        tuple(
            Submission(f"s{i:04d}", "p1", p.source_text)
            for i, p in enumerate(programs)
        ),
    )
    streams = [codeprep.preprocess(s.source_text, s.id) for s in subs]
    vocab = codeprep.build_vocab(streams, min_count=5)
    token_emb = embed.train_embeddings(
        streams, vocab, embed.EmbedConfig(dim=25, epochs=5, seed=11)
    )
    program_embs = [embed.embed_program(s, token_emb) for s in streams]
    return {
        "programs": programs,
        "subs": subs,
        "streams": streams,
        "vocab": vocab,
        "token_embeddings": token_emb,
        "program_embeddings": program_embs,
    }
