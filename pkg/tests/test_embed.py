import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simgrade import embed
from simgrade.codeprep import TokenStream, Vocab, build_vocab
from simgrade.embed import (
    EmbedConfig,
    ProgramEmbedding,
    cosine_similarity,
    embed_program,
    jaccard_similarity,
    pairwise_similarity,
    sgns_pair_gradients,
    sgns_pair_loss,
    train_embeddings,
)
from simgrade.errors import (
    DimensionMismatch,
    EmptyCorpusAfterFilter,
    NoKnownTokens,
    ZeroVector,
)


def streams_from(token_lists):
    return [TokenStream(f"s{i}", tuple(t)) for i, t in enumerate(token_lists)]


class TestCosine:
    def test_identical_vectors(self):
        assert cosine_similarity([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_known_value(self):
        # direct formula: 1 / sqrt(2)
        assert cosine_similarity([1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            0.70710678, abs=1e-8
        )

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine_similarity([0.0, 0.0], [1.0, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity([1.0], [1.0, 2.0])

    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=6),
        st.lists(st.floats(-10, 10), min_size=2, max_size=6),
        st.floats(0.01, 100.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_symmetry_and_scale_invariance(self, a, b, scale):
        n = min(len(a), len(b))
        a, b = np.array(a[:n]), np.array(b[:n])
        if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
            return
        assert cosine_similarity(a, b) == pytest.approx(cosine_similarity(b, a))
        assert cosine_similarity(a * scale, b) == pytest.approx(
            cosine_similarity(a, b), abs=1e-12
        )


class TestJaccard:
    def test_worked_example(self):
        a = {"off-by-one", "no-return"}
        b = {"off-by-one", "no-return", "bad-loop-cond"}
        assert jaccard_similarity(a, b) == pytest.approx(2 / 3)

    def test_identical_nonempty(self):
        assert jaccard_similarity({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint(self):
        assert jaccard_similarity({"a"}, {"b"}) == 0.0

    def test_both_empty(self):
        assert jaccard_similarity(set(), set()) == 1.0

    @given(
        st.sets(st.sampled_from("abcdef")),
        st.sets(st.sampled_from("abcdef")),
    )
    def test_symmetric_and_bounded(self, a, b):
        j = jaccard_similarity(a, b)
        assert 0.0 <= j <= 1.0
        assert j == jaccard_similarity(b, a)
        if a or b:
            assert (j == 1.0) == (a == b)


def small_vocab():
    return Vocab(token_to_index={"x": 0, "y": 1}, counts={"x": 5, "y": 5}, min_count=1)


def small_embeddings():
    vectors = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    return embed.TokenEmbeddings(vectors=vectors, vocab=small_vocab())


class TestEmbedProgram:
    def test_single_token(self):
        emb = small_embeddings()
        result = embed_program(TokenStream("s", ("x",)), emb)
        assert np.allclose(result.vector, [1.0, 0.0, 0.0])

    def test_mean_of_two(self):
        emb = small_embeddings()
        result = embed_program(TokenStream("s", ("x", "y")), emb)
        assert np.allclose(result.vector, [0.5, 1.0, 0.0])

    def test_unknown_tokens_only(self):
        with pytest.raises(NoKnownTokens):
            embed_program(TokenStream("s", ("zzz",)), small_embeddings())

    def test_out_of_vocab_skipped(self):
        emb = small_embeddings()
        result = embed_program(TokenStream("s", ("x", "zzz")), emb)
        assert np.allclose(result.vector, [1.0, 0.0, 0.0])

    def test_order_free(self):
        emb = small_embeddings()
        a = embed_program(TokenStream("s", ("x", "y", "x")), emb)
        b = embed_program(TokenStream("s", ("y", "x", "x")), emb)
        assert np.allclose(a.vector, b.vector)


class TestPairwiseSimilarity:
    def test_single(self):
        embs = [ProgramEmbedding("a", np.array([1.0, 2.0]))]
        sim = pairwise_similarity(embs)
        assert sim.matrix.tolist() == [[1.0]]

    def test_duplicate_rows(self):
        embs = [
            ProgramEmbedding("a", np.array([1.0, 2.0])),
            ProgramEmbedding("b", np.array([2.0, 4.0])),
        ]
        sim = pairwise_similarity(embs)
        assert sim.sim("a", "b") == pytest.approx(1.0)

    def test_matches_entrywise_recomputation(self):
        rng = np.random.default_rng(3)
        embs = [ProgramEmbedding(f"e{i}", rng.normal(0, 1, 7)) for i in range(5)]
        sim = pairwise_similarity(embs)
        for i in range(5):
            for j in range(5):
                expected = cosine_similarity(embs[i].vector, embs[j].vector)
                assert sim.matrix[i, j] == pytest.approx(expected, abs=1e-12)

    def test_symmetric_unit_diagonal(self):
        rng = np.random.default_rng(4)
        embs = [ProgramEmbedding(f"e{i}", rng.normal(0, 1, 5)) for i in range(8)]
        sim = pairwise_similarity(embs)
        assert np.allclose(sim.matrix, sim.matrix.T)
        assert np.all(np.diag(sim.matrix) == 1.0)
        assert np.all(np.abs(sim.matrix) <= 1.0)


class TestTraining:
    def corpus(self):
        # two interchangeable tokens "a"/"b" always in identical contexts
        rng = np.random.default_rng(0)
        streams = []
        for i in range(300):
            mid = "a" if rng.random() < 0.5 else "b"
            streams.append(TokenStream(f"s{i}", ("p", "q", mid, "r", "t")))
        return streams

    def test_deterministic_same_seed(self):
        streams = self.corpus()
        vocab = build_vocab(streams, min_count=1)
        cfg = EmbedConfig(dim=12, epochs=2, seed=9)
        emb1 = train_embeddings(streams, vocab, cfg)
        emb2 = train_embeddings(streams, vocab, cfg)
        assert np.array_equal(emb1.vectors, emb2.vectors)

    def test_different_seed_differs(self):
        streams = self.corpus()
        vocab = build_vocab(streams, min_count=1)
        emb1 = train_embeddings(streams, vocab, EmbedConfig(dim=12, epochs=2, seed=9))
        emb2 = train_embeddings(streams, vocab, EmbedConfig(dim=12, epochs=2, seed=10))
        assert not np.array_equal(emb1.vectors, emb2.vectors)

    def test_identical_context_tokens_become_similar(self):
        streams = self.corpus()
        vocab = build_vocab(streams, min_count=1)
        emb = train_embeddings(streams, vocab, EmbedConfig(dim=16, epochs=20, seed=4))
        sim = cosine_similarity(emb.vector("a"), emb.vector("b"))
        assert sim > 0.9

    def test_empty_corpus_after_filter(self):
        vocab = small_vocab()
        streams = [TokenStream("s0", ("unknown", "tokens"))]
        with pytest.raises(EmptyCorpusAfterFilter):
            train_embeddings(streams, vocab, EmbedConfig(dim=4, epochs=1, seed=0))

    def test_every_vocab_token_has_finite_vector(self):
        streams = self.corpus()
        vocab = build_vocab(streams, min_count=1)
        emb = train_embeddings(streams, vocab, EmbedConfig(dim=8, epochs=1, seed=0))
        assert emb.vectors.shape == (len(vocab), 8)
        assert np.isfinite(emb.vectors).all()


class TestGradientCheck:
    def test_analytic_matches_central_differences(self):
        rng = np.random.default_rng(5)
        dim = 10
        v = rng.normal(0, 0.5, dim)
        u_pos = rng.normal(0, 0.5, dim)
        u_negs = rng.normal(0, 0.5, (4, dim))
        grad_v, grad_u_pos, grad_u_negs = sgns_pair_gradients(v, u_pos, u_negs)

        eps = 1e-6

        def check(vector, grad, rebuild):
            for d in range(dim):
                bump = np.zeros(dim)
                bump[d] = eps
                hi = sgns_pair_loss(*rebuild(vector + bump))
                lo = sgns_pair_loss(*rebuild(vector - bump))
                numeric = (hi - lo) / (2 * eps)
                denom = max(abs(numeric), abs(grad[d]), 1e-8)
                assert abs(numeric - grad[d]) / denom < 1e-4

        check(v, grad_v, lambda w: (w, u_pos, u_negs))
        check(u_pos, grad_u_pos, lambda w: (v, w, u_negs))
        for n_idx in range(len(u_negs)):
            def rebuild(w, n_idx=n_idx):
                mod = u_negs.copy()
                mod[n_idx] = w
                return (v, u_pos, mod)
            check(u_negs[n_idx], grad_u_negs[n_idx], rebuild)


class TestPersistence:
    def test_binary_round_trip(self, tmp_path):
        streams = streams_from([["a", "b", "c", "a", "b"], ["b", "c", "a"]])
        vocab = build_vocab(streams, min_count=1)
        emb = train_embeddings(streams, vocab, EmbedConfig(dim=6, epochs=1, seed=2))
        path = tmp_path / "emb.bin"
        embed.save_embeddings(emb, path)
        loaded = embed.load_embeddings(path)
        assert loaded.vocab.tokens_by_index() == vocab.tokens_by_index()
        assert np.allclose(loaded.vectors, emb.vectors, atol=1e-6)

    def test_binary_header(self, tmp_path):
        emb = small_embeddings()
        path = tmp_path / "emb.bin"
        embed.save_embeddings(emb, path)
        raw = path.read_bytes()
        assert raw[:4] == b"SGEM"

    def test_program_embeddings_round_trip(self, tmp_path):
        embs = [
            ProgramEmbedding("a", np.array([1.0, 2.5])),
            ProgramEmbedding("b", np.array([-1.0, 0.5])),
        ]
        path = tmp_path / "progs.jsonl"
        embed.save_program_embeddings(embs, path)
        loaded = embed.load_program_embeddings(path)
        assert [e.submission_id for e in loaded] == ["a", "b"]
        assert np.allclose(loaded[0].vector, [1.0, 2.5])

    def test_csv_export(self, tmp_path):
        emb = small_embeddings()
        path = tmp_path / "emb.csv"
        embed.export_embeddings_csv(emb, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "token,v0,v1,v2"
        assert len(lines) == 3
