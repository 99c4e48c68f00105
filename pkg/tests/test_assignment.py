import itertools

import numpy as np
import pytest

from mods.assignment import solve, total_cost
from mods.errors import InvariantError


def brute_force_minimum(cost: np.ndarray) -> float:
    m, n = cost.shape
    if m <= n:
        return min(
            sum(cost[r, cols[r]] for r in range(m))
            for cols in itertools.permutations(range(n), m)
        )
    return min(
        sum(cost[rows[c], c] for c in range(n))
        for rows in itertools.permutations(range(m), n)
    )


class TestExamples:
    def test_diagonal_optimum(self):
        assert solve(np.array([[0.0, 1.0], [1.0, 0.0]])) == [(0, 0), (1, 1)]

    def test_three_by_three(self):
        cost = np.array([[4.0, 1, 3], [2, 0, 5], [3, 2, 2]])
        pairs = solve(cost)
        assert pairs == [(0, 1), (1, 0), (2, 2)]
        assert total_cost(cost, pairs) == 5.0

    def test_rectangular_leaves_a_column_unassigned(self):
        cost = np.array([[0.0, 9, 9], [9, 0, 9]])
        pairs = solve(cost)
        assert pairs == [(0, 0), (1, 1)]
        assert total_cost(cost, pairs) == 0.0

    def test_tall_matrix(self):
        cost = np.array([[9.0, 9], [0, 9], [9, 0]])
        pairs = solve(cost)
        assert pairs == [(1, 0), (2, 1)]


class TestValidation:
    def test_non_finite_entry_names_cell(self):
        cost = np.array([[1.0, 2.0], [np.nan, 0.0]])
        with pytest.raises(InvariantError, match=r"\(1, 0\)"):
            solve(cost)

    def test_negative_entry_names_cell(self):
        with pytest.raises(InvariantError, match=r"\(0, 1\)"):
            solve(np.array([[1.0, -2.0]]))

    def test_empty_rejected(self):
        with pytest.raises(InvariantError):
            solve(np.empty((0, 3)))


class TestProperties:
    def test_optimal_on_random_matrices(self):
        rng = np.random.default_rng(1234)
        for _ in range(250):
            m = int(rng.integers(1, 8))
            n = int(rng.integers(1, 8))
            cost = rng.random((m, n)) * 10
            pairs = solve(cost)
            assert len(pairs) == min(m, n)
            assert total_cost(cost, pairs) == pytest.approx(
                brute_force_minimum(cost), abs=1e-9
            )

    def test_partial_bijection(self):
        rng = np.random.default_rng(99)
        cost = rng.random((6, 4))
        pairs = solve(cost)
        rows = [r for r, _ in pairs]
        cols = [c for _, c in pairs]
        assert len(set(rows)) == len(rows)
        assert len(set(cols)) == len(cols)
        assert pairs == sorted(pairs)

    def test_shift_invariance_of_argmin(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            cost = rng.random((5, 5))
            base = solve(cost)
            shifted = solve(cost + 3.5)
            assert total_cost(cost, shifted) == pytest.approx(
                total_cost(cost, base), abs=1e-9
            )

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        cost = rng.random((7, 7))
        assert solve(cost) == solve(cost)
