import numpy as np
import pytest

from eagermt.aligner import Alignment, SentencePair
from eagermt.eagerize import (
    EagerizeConfig,
    EagerPair,
    eagerize_corpus,
    eps_stats,
    internal_eps_count,
    make_feasible,
    verify_feasible,
)
from eagermt.text_pipeline import EPS_ID, strip_eps

from oracles import min_internal_eps_bruteforce

EPS = EPS_ID


def random_pair_and_alignment(rng, max_len=12, link_prob=0.7):
    m = int(rng.integers(1, max_len + 1))
    n = int(rng.integers(1, max_len + 1))
    links = set()
    for j in range(1, n + 1):
        if rng.random() < link_prob:
            links.add((int(rng.integers(1, m + 1)), j))
    src = [3 + int(t) for t in rng.integers(0, 50, size=m)]
    tgt = [3 + int(t) for t in rng.integers(0, 50, size=n)]
    return SentencePair(src, tgt), Alignment(links)


class TestMakeFeasible:
    def test_worked_example_one_swap(self):
        # "El perro blanco" -> "The white dog": the crossed link needs one
        # pad before "white", and the source gets the trailing equalizer
        src = [10, 11, 12]
        tgt = [20, 21, 22]
        pair = SentencePair(src, tgt)
        align = Alignment({(1, 1), (3, 2), (2, 3)})
        out = make_feasible(pair, align, EagerizeConfig(start_pad=0))
        assert out.tgt == [20, EPS, 21, 22]
        assert out.src == [10, 11, 12, EPS]

    def test_monotone_diagonal_unchanged(self):
        pair = SentencePair([10, 11, 12], [20, 21, 22])
        align = Alignment({(1, 1), (2, 2), (3, 3)})
        out = make_feasible(pair, align, EagerizeConfig(start_pad=0))
        assert out.tgt == [20, 21, 22]
        assert out.src == [10, 11, 12]

    def test_full_reversal_needs_two(self):
        pair = SentencePair([1, 2, 3], [4, 5, 6])
        align = Alignment({(3, 1), (1, 2), (2, 3)})
        out = make_feasible(pair, align, EagerizeConfig(start_pad=0))
        assert out.tgt == [EPS, EPS, 4, 5, 6]
        assert out.src == [1, 2, 3, EPS, EPS]

    def test_start_pad_absorbs_internal(self):
        pair = SentencePair([1, 2, 3], [4, 5, 6])
        align = Alignment({(3, 1), (1, 2), (2, 3)})
        out = make_feasible(pair, align, EagerizeConfig(start_pad=2))
        assert out.tgt == [EPS, EPS, 4, 5, 6]
        assert out.src == [1, 2, 3, EPS, EPS]
        assert internal_eps_count(out) == 0

    def test_feasibility_property_random(self):
        rng = np.random.default_rng(123)
        for _ in range(500):
            pair, align = random_pair_and_alignment(rng)
            b = int(rng.integers(0, 6))
            out = make_feasible(pair, align, EagerizeConfig(start_pad=b))
            assert verify_feasible(out, align)
            assert len(out.src) == len(out.tgt)
            assert out.tgt[:b] == [EPS] * b
            assert strip_eps(out.tgt, eps=EPS) == pair.tgt
            assert strip_eps(out.src, eps=EPS) == pair.src

    def test_minimality_small_exhaustive(self):
        rng = np.random.default_rng(321)
        for _ in range(150):
            pair, align = random_pair_and_alignment(rng, max_len=6)
            b = int(rng.integers(0, 3))
            out = make_feasible(pair, align, EagerizeConfig(start_pad=b))
            expected = min_internal_eps_bruteforce(
                len(pair.src), len(pair.tgt), align.links, b
            )
            assert internal_eps_count(out) == expected


class TestVerifyFeasible:
    def test_make_feasible_output_true(self):
        rng = np.random.default_rng(44)
        for _ in range(100):
            pair, align = random_pair_and_alignment(rng)
            out = make_feasible(pair, align, EagerizeConfig(start_pad=1))
            assert verify_feasible(out, align)

    def test_infeasible_raw_pair(self):
        raw = EagerPair(src=[1, 2], tgt=[5], start_pad=0)
        assert not verify_feasible(raw, Alignment({(2, 1)}))

    def test_matches_bruteforce_definition_exhaustive(self):
        # all pairs with m, n <= 4 and every possible alignment function
        from itertools import product

        for m in range(1, 5):
            for n in range(1, 5):
                # each target position: 0 = unlinked, else source index
                for choice in product(range(0, m + 1), repeat=n):
                    links = {(i, j + 1) for j, i in enumerate(choice) if i > 0}
                    align = Alignment(links)
                    raw = EagerPair(list(range(10, 10 + m)), list(range(30, 30 + n)), 0)
                    expected = all(i <= j for i, j in links)
                    assert verify_feasible(raw, align) == expected


class TestEpsStats:
    def test_monotone_corpus_zero(self):
        pairs = [
            make_feasible(
                SentencePair([1, 2], [3, 4]),
                Alignment({(1, 1), (2, 2)}),
                EagerizeConfig(start_pad=0),
            )
        ]
        assert eps_stats(pairs) == 0.0

    def test_worked_quarter(self):
        # one internal pad in a 4-token core
        pair = EagerPair(src=[1, 2, 3, EPS], tgt=[20, EPS, 21, 22], start_pad=0)
        assert eps_stats([pair]) == pytest.approx(0.25)

    def test_start_and_trailing_excluded(self):
        # core is [eps, eps, 5, eps, 6]; start_pad 2 -> internal 1, denom 3
        pair = EagerPair(src=[1, 2, 3, 4, 5, EPS], tgt=[EPS, EPS, 5, EPS, 6, EPS], start_pad=2)
        assert eps_stats([pair]) == pytest.approx(1 / 3)

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty corpus"):
            eps_stats([])


class TestEagerizeCorpus:
    def test_order_preserved(self):
        rng = np.random.default_rng(8)
        pairs, aligns = [], []
        for _ in range(20):
            p, a = random_pair_and_alignment(rng, max_len=6)
            pairs.append(p)
            aligns.append(a)
        out = eagerize_corpus(pairs, aligns, EagerizeConfig(start_pad=0))
        assert [strip_eps(e.tgt, eps=EPS) for e in out] == [p.tgt for p in pairs]

    def test_ratio_filter_drops(self, caplog):
        # a 1-token source aligned from position 1 to a late target blows
        # up the equalized length
        pair = SentencePair([1], list(range(10, 25)))
        align = Alignment({(1, 15)})
        cfg = EagerizeConfig(start_pad=0, max_len_ratio=9.0)
        import logging

        with caplog.at_level(logging.WARNING):
            out = eagerize_corpus([pair], [align], cfg)
        assert out == []
        assert "dropped" in caplog.text

    def test_mismatched_lengths_error(self):
        with pytest.raises(ValueError):
            eagerize_corpus([SentencePair([1], [2])], [], EagerizeConfig())
