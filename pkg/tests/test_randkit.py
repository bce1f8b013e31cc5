from fractions import Fraction

import numpy as np
import pytest

from qkdsec.core import randkit
from qkdsec.core.exceptions import CapacityError, InvalidInputError
from qkdsec.schemas.randomness import IndexSubset, ToeplitzHash


class TestSeeds:
    @pytest.mark.parametrize("text, expected", [("0", 0), ("42", 42), ("0x10", 16), (" 0xff ", 255)])
    def test_parse_seed(self, text, expected):
        assert randkit.parse_seed(text) == expected

    @pytest.mark.parametrize("text", ["-1", str(2 ** 64), "seven"])
    def test_rejects_bad_seeds(self, text):
        with pytest.raises(InvalidInputError):
            randkit.parse_seed(text)

    def test_streams_are_reproducible_and_labelled(self):
        a = randkit.stream(7, "selection.T").random(5)
        b = randkit.stream(7, "selection.T").random(5)
        c = randkit.stream(7, "selection.S").random(5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestToeplitz:
    def test_matrix_is_constant_along_diagonals(self, rng):
        h = randkit.draw_toeplitz(6, 3, rng)
        m = randkit.toeplitz_matrix(h)
        assert m.shape == (3, 6)
        for i in range(1, 3):
            assert np.array_equal(m[i, 1:], m[i - 1, :-1])

    def test_linearity(self, rng):
        h = randkit.draw_toeplitz(8, 4, rng)
        x, y = rng.integers(0, 2, 8), rng.integers(0, 2, 8)
        hx, hy = randkit.toeplitz_apply(h, x), randkit.toeplitz_apply(h, y)
        assert randkit.toeplitz_apply(h, x ^ y) == tuple(a ^ b for a, b in zip(hx, hy))

    def test_hex_round_trip(self, rng):
        h = randkit.draw_toeplitz(10, 4, rng)
        assert ToeplitzHash.from_hex(10, 4, h.diag_hex) == h

    def test_input_length_checked(self, rng):
        with pytest.raises(InvalidInputError):
            randkit.toeplitz_apply(randkit.draw_toeplitz(4, 2, rng), (0, 1, 0))

    @pytest.mark.parametrize("n_in, n_out", [(3, 1), (4, 2), (5, 3)])
    def test_literal_and_rank_agree(self, n_in, n_out):
        literal = randkit.collision_probability_exhaustive(n_in, n_out, method="literal")
        rank = randkit.collision_probability_exhaustive(n_in, n_out, method="rank")
        assert literal == rank == Fraction(1, 2 ** n_out)

    def test_collision_cap(self):
        with pytest.raises(CapacityError):
            randkit.collision_probability_exhaustive(11, 2)

    def test_gf2_rank(self):
        assert randkit.gf2_rank(np.eye(3, dtype=np.uint8)) == 3
        assert randkit.gf2_rank(np.array([[1, 1], [1, 1]])) == 1
        assert randkit.gf2_rank(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])) == 2


class TestSelections:
    def test_selection_within_ground_set(self):
        ground = IndexSubset(n=50, included=range(0, 50, 2))
        sel = randkit.p_random_select(0.5, 50, 3, "selection.S", within=ground)
        assert set(sel.included) <= set(ground.included)
        assert sel.within == ground.included

    def test_extreme_rates(self):
        assert len(randkit.p_random_select(0.0, 20, 1)) == 0
        assert len(randkit.p_random_select(1.0, 20, 1)) == 20

    def test_selection_rate(self):
        sel = randkit.p_random_select(0.25, 20000, 11)
        assert len(sel) / 20000 == pytest.approx(0.25, abs=0.02)

    def test_independent_selections_overlap_at_p_squared(self):
        sel_t = randkit.p_random_select(0.3, 20000, 11, "selection.T")
        sel_tp = randkit.p_random_select(0.3, 20000, 11, "selection.T_prime")
        assert len(sel_t.intersect(sel_tp)) / 20000 == pytest.approx(0.09, abs=0.01)

    def test_permutation(self):
        perm = randkit.random_permutation(10, 5)
        assert sorted(perm.order) == list(range(10))
        bits = (1, 0, 0, 0, 0, 0, 0, 0, 0, 0)
        out = randkit.apply_permutation(perm, bits)
        assert out[perm.order.index(0)] == 1
        assert sum(out) == 1

    def test_bit_strings(self):
        assert randkit.bits_to_str((1, 0, 1)) == "101"
        assert randkit.str_to_bits("0110") == (0, 1, 1, 0)
        with pytest.raises(InvalidInputError):
            randkit.str_to_bits("012")

    def test_monobit(self, rng):
        assert abs(randkit.monobit_zscore(rng.integers(0, 2, 10000))) < 5

    def test_subset_algebra(self):
        a = IndexSubset(n=6, included=(0, 1, 2, 3))
        b = IndexSubset(n=6, included=(2, 3, 4))
        assert a.intersect(b).included == (2, 3)
        assert a.union(b).included == (0, 1, 2, 3, 4)
        assert a.difference(b).complement().included == (2, 3, 4, 5)
        with pytest.raises(ValueError):
            a.intersect(IndexSubset(n=7))
