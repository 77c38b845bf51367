import math

import numpy as np
import pytest

from eagermt.aligner import (
    Alignment,
    LexTable,
    SentencePair,
    _diagonal_prior,
    corpus_log_likelihood,
    em_train,
    read_alignments,
    viterbi_align,
    write_alignments,
)


def make_dictionary_corpus(n_pairs, vocab_half, rng, min_len=3, max_len=9):
    """Monotone corpus from a bijective dictionary: source k -> target k + vocab_half.

    Token ids 0..2 stay reserved, so real ids start at 3.
    """
    pairs = []
    for _ in range(n_pairs):
        length = int(rng.integers(min_len, max_len + 1))
        src = [3 + int(rng.integers(0, vocab_half)) for _ in range(length)]
        tgt = [s + vocab_half for s in src]
        pairs.append(SentencePair(src, tgt))
    return pairs


class TestEmTrain:
    def test_single_cooccurrence_dominates_null(self):
        # one pair (a, x): after EM the lexical entry must beat the fixed
        # uniform NULL emission, and viterbi must link rather than drop
        corpus = [SentencePair([3], [4])]
        table = em_train(corpus, iterations=2, tension=4.0, vocab_size=5)
        assert table.prob(3, 4) > table.null_prob(4)
        align = viterbi_align(table, corpus[0])
        assert align.links == {(1, 1)}

    def test_pigeonhole_disambiguation(self):
        # (a b / x y) + (a / x): x co-occurs with a more than y does
        corpus = [SentencePair([3, 4], [5, 6]), SentencePair([3], [5])]
        table = em_train(corpus, iterations=5, tension=0.0, vocab_size=7)
        assert table.prob(3, 5) > table.prob(3, 6)

    def test_huge_tension_collapses_to_diagonal(self):
        # with a fresh uniform table the prior alone decides
        m, n = 4, 6
        table = em_train(
            [SentencePair(list(range(3, 3 + m)), list(range(10, 10 + n)))],
            iterations=1,
            tension=1e6,
            vocab_size=20,
        )
        pair = SentencePair(list(range(3, 3 + m)), list(range(10, 10 + n)))
        align = viterbi_align(table, pair)
        for i, j in align.links:
            assert i == max(1, min(m, round(j * m / n)))

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty corpus"):
            em_train([], iterations=1)

    def test_log_likelihood_monotone(self):
        rng = np.random.default_rng(11)
        corpus = make_dictionary_corpus(60, 12, rng)
        lls = []
        em_train(corpus, iterations=6, tension=4.0, log_likelihoods=lls)
        assert len(lls) == 6
        for a, b in zip(lls, lls[1:]):
            assert b >= a - 1e-9

    def test_distributions_normalized(self):
        rng = np.random.default_rng(5)
        corpus = make_dictionary_corpus(40, 8, rng)
        table = em_train(corpus, iterations=3, tension=4.0)
        for src_id, dist in table.t_prob.items():
            assert math.isclose(sum(dist.values()), 1.0, abs_tol=1e-9)

    def test_final_table_improves_over_logged(self):
        rng = np.random.default_rng(2)
        corpus = make_dictionary_corpus(30, 6, rng)
        lls = []
        table = em_train(corpus, iterations=3, tension=4.0, log_likelihoods=lls)
        assert corpus_log_likelihood(table, corpus) >= lls[-1] - 1e-9


class TestViterbi:
    def test_forced_argmax(self):
        table = LexTable(vocab_size=6, tension=0.0)
        table.t_prob = {3: {4: 1.0}}
        align = viterbi_align(table, SentencePair([3], [4]))
        assert align.links == {(1, 1)}

    def test_equal_probs_tension_gives_diagonal(self):
        table = LexTable(vocab_size=10, tension=2.0)
        table.t_prob = {s: {t: 0.25 for t in (6, 7, 8, 9)} for s in (3, 4, 5)}
        # verify by enumerating scores: with equal lexical probs the prior
        # exp(-tension*|i/m - j/n|) is maximal at i == j for equal lengths
        pair = SentencePair([3, 4, 5], [6, 7, 8])
        align = viterbi_align(table, pair)
        assert align.links == {(1, 1), (2, 2), (3, 3)}

    def test_null_best_leaves_unlinked(self):
        table = LexTable(vocab_size=6, tension=0.0)
        table.t_prob = {3: {5: 1.0}}  # source 3 never emits target 4
        align = viterbi_align(table, SentencePair([3], [4]))
        assert align.links == set()

    def test_at_most_one_source_per_target(self):
        rng = np.random.default_rng(9)
        corpus = make_dictionary_corpus(20, 6, rng)
        table = em_train(corpus, iterations=2, tension=4.0)
        for pair in corpus:
            align = viterbi_align(table, pair)
            targets = [j for _, j in align.links]
            assert len(targets) == len(set(targets))
            for i, j in align.links:
                assert 1 <= i <= len(pair.src) and 1 <= j <= len(pair.tgt)


class TestRecovery:
    def test_dictionary_recovery(self):
        # synthetic one-to-one dictionary, monotone order: viterbi after 5
        # iterations recovers at least 90% of the true diagonal links
        rng = np.random.default_rng(42)
        corpus = make_dictionary_corpus(500, 50, rng)
        table = em_train(corpus, iterations=5, tension=4.0)
        hit = 0
        total = 0
        for pair in corpus:
            truth = {(j, j) for j in range(1, len(pair.tgt) + 1)}
            found = viterbi_align(table, pair).links
            hit += len(truth & found)
            total += len(truth)
        assert hit / total >= 0.90


class TestAlignmentType:
    def test_duplicate_target_rejected(self):
        with pytest.raises(ValueError):
            Alignment({(1, 1), (2, 1)})

    def test_pharaoh_round_trip(self, tmp_path):
        aligns = [Alignment({(1, 1), (3, 2)}), Alignment(set()), Alignment({(2, 3)})]
        path = tmp_path / "a.align"
        write_alignments(aligns, path)
        loaded = read_alignments(path)
        assert [a.links for a in loaded] == [a.links for a in aligns]
        # file itself is 0-based
        assert path.read_text().splitlines()[0] == "0-0 2-1"


class TestLexTableFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        corpus = make_dictionary_corpus(25, 6, rng)
        table = em_train(corpus, iterations=2, tension=4.0)
        path = tmp_path / "table.tsv"
        table.save(path)
        loaded = LexTable.load(path)
        assert loaded.vocab_size == table.vocab_size
        assert loaded.tension == table.tension
        for src_id, dist in table.t_prob.items():
            for tgt_id, p in dist.items():
                assert loaded.prob(src_id, tgt_id) == pytest.approx(p, rel=1e-15)


class TestPrior:
    def test_prior_normalizes(self):
        for m, n, j in [(3, 5, 2), (1, 1, 1), (8, 2, 1)]:
            prior = _diagonal_prior(m, j, n, 4.0)
            assert math.isclose(sum(prior), 1.0, abs_tol=1e-12)
            assert len(prior) == m + 1

    def test_zero_tension_uniform(self):
        prior = _diagonal_prior(4, 2, 3, 0.0)
        assert all(math.isclose(p, prior[1], abs_tol=1e-12) for p in prior[1:])
