import math

import numpy as np
import pytest

from mods.ann import build, query_knn
from mods.errors import InvariantError


def _random_unit(rng, n, d):
    vecs = rng.standard_normal((n, d))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


class TestBuild:
    def test_empty_index_returns_nothing(self):
        index = build([], mode="exact")
        assert query_knn(index, np.array([1.0, 0.0]), 3) == []

    def test_axis_aligned_identity_lookup(self):
        items = [("x", [1, 0, 0]), ("y", [0, 1, 0]), ("z", [0, 0, 1])]
        index = build(items, mode="exact")
        for item_id, vec in items:
            top_id, dist = query_knn(index, np.array(vec, dtype=float), 1)[0]
            assert top_id == item_id and dist == 0.0

    def test_vectors_are_renormalized(self):
        index = build([("a", [3.0, 0.0])])
        assert query_knn(index, np.array([1.0, 0.0]), 1)[0][1] == 0.0

    def test_zero_vector_rejected(self):
        with pytest.raises(InvariantError, match="zeroid"):
            build([("zeroid", [0.0, 0.0])])

    def test_duplicate_id_rejected(self):
        with pytest.raises(InvariantError, match="twice"):
            build([("twice", [1, 0]), ("twice", [0, 1])])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InvariantError, match="odd"):
            build([("ok", [1, 0]), ("odd", [1, 0, 0])])


class TestQuery:
    def test_hand_distances(self):
        index = build([("a", [1.0, 0.0]), ("b", [0.0, 1.0])])
        results = query_knn(index, np.array([1.0, 0.0]), 2)
        assert results[0] == ("a", 0.0)
        assert results[1][0] == "b"
        assert results[1][1] == pytest.approx(math.sqrt(2))

    def test_k_clamped_to_index_size(self):
        index = build([(f"v{k}", np.eye(3)[k]) for k in range(3)])
        assert len(query_knn(index, np.array([1.0, 0, 0]), 5)) == 3

    def test_k_must_be_positive(self):
        index = build([("a", [1.0, 0.0])])
        with pytest.raises(InvariantError):
            query_knn(index, np.array([1.0, 0.0]), 0)

    def test_distances_non_decreasing(self):
        rng = np.random.default_rng(8)
        vecs = _random_unit(rng, 64, 8)
        index = build([(f"v{k:03d}", v) for k, v in enumerate(vecs)])
        dists = [d for _, d in query_knn(index, rng.standard_normal(8), 10)]
        assert dists == sorted(dists)

    def test_l2_cosine_identity(self):
        rng = np.random.default_rng(21)
        vecs = _random_unit(rng, 50, 16)
        q = _random_unit(rng, 1, 16)[0]
        index = build([(f"v{k}", v) for k, v in enumerate(vecs)])
        by_id = {f"v{k}": v for k, v in enumerate(vecs)}
        for item_id, dist in query_knn(index, q, 50):
            cosine = float(by_id[item_id] @ q)
            assert dist**2 == pytest.approx(2 * (1 - cosine), abs=1e-6)


class TestExactMatchesBruteForce:
    @pytest.mark.parametrize("d", [2, 8, 64])
    def test_exact_equals_scan(self, d):
        rng = np.random.default_rng(d)
        vecs = _random_unit(rng, 200, d)
        ids = [f"v{k:03d}" for k in range(200)]
        index = build(zip(ids, vecs), mode="exact")
        for _ in range(50):
            q = rng.standard_normal(d)
            qn = q / np.linalg.norm(q)
            d2 = ((vecs - qn) ** 2).sum(axis=1)
            want = sorted(zip(d2, ids))[:5]
            got = query_knn(index, q, 5)
            assert [i for _, i in want] == [i for i, _ in got]
            for (wd2, _), (_, gd) in zip(want, got):
                assert gd == pytest.approx(math.sqrt(wd2), abs=1e-12)


class TestKdTree:
    def test_unbounded_tree_equals_exact(self):
        rng = np.random.default_rng(77)
        vecs = _random_unit(rng, 500, 16)
        items = [(f"v{k:03d}", v) for k, v in enumerate(vecs)]
        exact = build(items, mode="exact")
        tree = build(items, mode="kdtree", leaf_size=8, max_visited_leaves=10**9)
        for _ in range(60):
            q = rng.standard_normal(16)
            assert query_knn(tree, q, 7) == query_knn(exact, q, 7)

    def test_default_params_recall_at_one(self):
        rng = np.random.default_rng(123)
        vecs = _random_unit(rng, 1000, 64)
        items = [(f"v{k:04d}", v) for k, v in enumerate(vecs)]
        exact = build(items, mode="exact")
        tree = build(items, mode="kdtree")  # leaf_size 16, 64 visited leaves
        hits = 0
        trials = 100
        for _ in range(trials):
            q = rng.standard_normal(64)
            if query_knn(tree, q, 1)[0][0] == query_knn(exact, q, 1)[0][0]:
                hits += 1
        assert hits / trials >= 0.95

    def test_tight_budget_degrades_gracefully(self):
        rng = np.random.default_rng(123)
        vecs = _random_unit(rng, 1000, 16)
        items = [(f"v{k:04d}", v) for k, v in enumerate(vecs)]
        exact = build(items, mode="exact")
        tight = build(items, mode="kdtree", leaf_size=16, max_visited_leaves=8)
        wide = build(items, mode="kdtree", leaf_size=16, max_visited_leaves=32)
        hits_tight = hits_wide = 0
        trials = 150
        for _ in range(trials):
            q = rng.standard_normal(16)
            truth = query_knn(exact, q, 1)[0][0]
            hits_tight += query_knn(tight, q, 1)[0][0] == truth
            hits_wide += query_knn(wide, q, 1)[0][0] == truth
        assert hits_tight / trials >= 0.4
        assert hits_wide >= hits_tight

    def test_duplicate_points_tie_break_by_id(self):
        items = [("b", [1.0, 0.0]), ("a", [1.0, 0.0]), ("c", [0.0, 1.0])]
        for mode in ("exact", "kdtree"):
            index = build(items, mode=mode, leaf_size=1, max_visited_leaves=10**9)
            results = query_knn(index, np.array([1.0, 0.0]), 2)
            assert [i for i, _ in results] == ["a", "b"]
