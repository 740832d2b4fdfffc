"""Exact property sweeps over large construction prefixes."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _dense import dense_rows, find_rectangle_oracle, galfs_oracle
from _invariants import sweep_invariants
from rectfree import compute_galfs, generate_naive, generate_prefix, \
    new_generator

ORDERS = [1, 2, 3, 4, 5, 6]


class TestInvariantSweeps:
    @pytest.mark.parametrize("n", ORDERS)
    def test_ten_thousand_rows(self, n):
        # Row weight, strict ascent, length bound, first-one-on-frontier,
        # monotone frontier and first-one, min(ones) <= row index.
        sweep_invariants(n, 10_000)


class TestDeterminedPrefixSymmetry:
    @pytest.mark.parametrize("n", ORDERS)
    def test_square_prefix_is_symmetric(self, n):
        gen = new_generator(n)
        rows = [gen.next_row() for _ in range(2_000)]
        # Columns left of the frontier can never gain another one, so
        # the square prefix up to there is final — and must be symmetric.
        limit = min(gen.frontier_l - 1, len(rows))
        flags = {(row.index, j) for row in rows for j in row.ones}
        inside = {(i, j) for i, j in flags if i <= limit and j <= limit}
        assert limit > 100
        assert inside == {(j, i) for i, j in inside}


class TestRectangleFreedom:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_brute_force_on_500_row_prefixes(self, n):
        rows = [row.ones for row in generate_prefix(n, 500)]
        assert find_rectangle_oracle(rows) is None


class TestOracleEquivalence:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_windowed_engine_equals_dense_oracle(self, n):
        fast = [row.ones for row in generate_prefix(n, 200)]
        assert fast == dense_rows(n + 1, n + 1, 200)

    @pytest.mark.parametrize("caps", [(2, 3), (3, 2), (4, 4), (2, 5), (5, 3)])
    def test_rectangular_caps_equal_dense_oracle(self, caps):
        k, r = caps
        fast = [row.ones for row in generate_naive(k, r, 120)]
        assert fast == dense_rows(k, r, 120)

    @settings(max_examples=25, deadline=None)
    @given(k=st.integers(1, 6), r=st.integers(1, 6), rows=st.integers(1, 60))
    def test_arbitrary_caps_equal_dense_oracle(self, k, r, rows):
        fast = [row.ones for row in generate_naive(k, r, rows)]
        assert fast == dense_rows(k, r, rows)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.lists(st.integers(0, 1), min_size=1, max_size=6),
                    min_size=1, max_size=6).filter(
                        lambda m: len({len(r) for r in m}) == 1))
    def test_arbitrary_matrices_galfs_equal_oracle(self, dense):
        assert compute_galfs(dense) == galfs_oracle(dense)


class TestGalfsAgainstOracle:
    def test_random_matrices(self):
        import random
        rng = random.Random(2026)
        for trial in range(40):
            height = rng.randint(1, 7)
            width = rng.randint(1, 7)
            dense = [[rng.randint(0, 1) for _ in range(width)]
                     for _ in range(height)]
            assert compute_galfs(dense) == galfs_oracle(dense), \
                (trial, dense)

    def test_construction_prefix_galfs_are_disjoint_from_flags(self):
        rows = generate_prefix(3, 80)
        width = max(row.ones[-1] for row in rows)
        dense = [[0] * width for _ in rows]
        for row in rows:
            for j in row.ones:
                dense[row.index - 1][j - 1] = 1
        cells = compute_galfs(dense)
        assert cells == galfs_oracle(dense)
        flags = {(row.index, j) for row in rows for j in row.ones}
        assert not (cells & flags)
