import itertools
import math

import numpy as np
import pytest

from mods.errors import InvariantError
from mods.metrics import (
    RankedList,
    average_precision,
    inexact_match,
    mean_ap,
    ndcg_at,
    roc_auc,
)


def _ranked(grades, scores=None):
    n = len(grades)
    scores = scores if scores is not None else tuple(float(n - i) for i in range(n))
    items = tuple(f"i{k}" for k in range(n))
    return RankedList(items=items, scores=tuple(scores), grades=tuple(grades))


class TestRankedList:
    def test_scores_must_be_non_increasing(self):
        with pytest.raises(InvariantError):
            _ranked((0, 1), scores=(0.1, 0.9))

    def test_from_scored_sorts_desc_with_id_ties(self):
        ranked = RankedList.from_scored(
            [("b", 0.5), ("a", 0.5), ("c", 0.9)], {"a": 1, "b": 0, "c": 2}
        )
        assert ranked.items == ("c", "a", "b")


class TestAveragePrecision:
    def test_all_relevant_is_one(self):
        assert average_precision(_ranked((1, 1, 1, 1, 1))) == 1.0

    def test_hand_example(self):
        # relevant at ranks 1 and 3: (1/1 + 2/3) / 2
        assert average_precision(_ranked((1, 0, 1))) == pytest.approx(5 / 6)

    def test_single_relevant_ranked_last(self):
        n = 7
        grades = (0,) * (n - 1) + (1,)
        assert average_precision(_ranked(grades)) == pytest.approx(1 / n)

    def test_no_relevant_raises(self):
        with pytest.raises(InvariantError):
            average_precision(_ranked((0, 0)))

    def test_matches_pr_curve_oracle_exhaustively(self):
        # independent oracle: AP as the PR-curve sum P(k) * delta-recall(k)
        for n in range(1, 11):
            for flags in itertools.product((0, 1), repeat=n):
                if not any(flags):
                    continue
                total = sum(flags)
                hits = 0
                oracle = 0.0
                for k, f in enumerate(flags, start=1):
                    if f:
                        hits += 1
                        oracle += (hits / k) * (1 / total)
                assert average_precision(_ranked(flags)) == pytest.approx(oracle)

    def test_mean_ap_skips_and_counts_empty_queries(self):
        result = mean_ap([_ranked((1, 0)), _ranked((0, 0)), _ranked((0, 1))])
        assert result.evaluated == 2 and result.skipped == 1
        assert result.value == pytest.approx((1.0 + 0.5) / 2)


class TestNdcg:
    def test_ideal_ordering_is_one(self):
        assert ndcg_at(_ranked((3, 2, 1, 0)), 4) == pytest.approx(1.0)

    def test_hand_example(self):
        # grades [3, 0, 2]: DCG = 7 + 0 + 3/2 = 8.5, IDCG = 7 + 3/log2(3)
        value = ndcg_at(_ranked((3, 0, 2)), 3)
        idcg = 7 + 3 / math.log2(3)
        assert value == pytest.approx(8.5 / idcg)
        assert value == pytest.approx(0.9558, abs=1e-4)

    def test_all_zero_grades(self):
        assert ndcg_at(_ranked((0, 0, 0)), 3) == 0.0

    def test_permutations_bounded_by_one(self):
        grades = (3, 2, 2, 1, 0)
        for perm in itertools.permutations(grades):
            value = ndcg_at(_ranked(perm), len(perm))
            assert value <= 1.0 + 1e-12
            if list(perm) == sorted(perm, reverse=True):
                assert value == pytest.approx(1.0)

    def test_cutoff_validated(self):
        with pytest.raises(InvariantError):
            ndcg_at(_ranked((1,)), 0)


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [True, True, False, False]) == 1.0

    def test_hand_enumeration(self):
        # positives {0.9, 0.7} vs negatives {0.8, 0.2}: 3 wins of 4 pairs
        assert roc_auc([0.9, 0.7, 0.8, 0.2], [True, True, False, False]) == 0.75

    def test_all_ties_is_half(self):
        assert roc_auc([0.5, 0.5, 0.5], [True, False, True]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(InvariantError):
            roc_auc([0.1, 0.2], [True, True])

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(11)
        scores = rng.standard_normal(60)
        labels = rng.random(60) < 0.4
        if labels.all() or not labels.any():
            labels[0] = True
            labels[1] = False
        base = roc_auc(list(scores), list(labels))
        for transform in (lambda s: 3 * s + 2, np.tanh, lambda s: s**3):
            assert roc_auc(list(transform(scores)), list(labels)) == pytest.approx(base)

    def test_matches_pair_enumeration_on_random_data(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(4, 20))
            scores = np.round(rng.random(n), 1)  # coarse grid forces ties
            labels = rng.random(n) < 0.5
            if labels.all() or not labels.any():
                continue
            pos = scores[labels]
            neg = scores[~labels]
            wins = sum(
                1.0 if p > q else 0.5 if p == q else 0.0
                for p in pos
                for q in neg
            )
            assert roc_auc(list(scores), list(labels)) == pytest.approx(
                wins / (len(pos) * len(neg))
            )


class TestInexactMatch:
    def test_shared_suffix_family(self):
        assert inexact_match("surprise", "surprised")
        assert inexact_match("surprise", "surprising")

    def test_unrelated_words(self):
        assert not inexact_match("look", "book")

    def test_reflexive(self):
        for word in ("look", "Trees", "running"):
            assert inexact_match(word, word)

    def test_case_insensitive(self):
        assert inexact_match("Looking", "LOOKED")
