import pytest

from qkdsec.core import randkit
from qkdsec.core.config import IR_MIN_LAYOUT_RATE
from qkdsec.core.exceptions import CapacityError, InvalidInputError
from qkdsec.schemas.randomness import ToeplitzHash
from qkdsec.services.reconciliation_service import Reconciler

IDENTITY_4 = ToeplitzHash(n_in=4, n_out=4, diag=(0, 0, 0, 1, 0, 0, 0))


@pytest.fixture
def decoder():
    return Reconciler()


class TestLayout:
    def test_capacity_bounds_block_length(self, decoder):
        assert decoder.capacity() == 35
        assert decoder.block_size(760, 0.0) == 35
        assert decoder.block_size(20, 0.0) == 20

    def test_noisy_blocks_respect_candidate_cap(self, decoder):
        b = decoder.block_size(1000, 0.05)
        assert b == 20
        weight = decoder._likely_weight(b, 0.05)
        assert weight <= decoder.max_weight
        assert decoder._candidate_count(b, weight) <= decoder.max_candidates

    def test_empty_string(self, decoder):
        assert decoder.block_size(0, 0.1) == 0
        assert decoder.layout(0, 0.1, 0.5) == ([], [])

    def test_hash_length_margin(self, decoder):
        assert decoder.hash_length(35, 0.0) == 22
        assert decoder.hash_length(16, 0.5) == 16
        assert decoder.hash_length(35, 0.9) == 35

    def test_layout_covers_string(self, decoder):
        assert decoder.layout(100, 0.0, 0.0) == ([35, 35, 30], [22, 22, 21])

    def test_fixed_hash_length(self, decoder):
        assert decoder.layout(100, 0.0, 0.0, ir_length=4) == ([35, 35, 30], [4, 4, 4])

    def test_zero_estimate_still_corrects_scattered_errors(self, decoder):
        # a zero error estimate used to produce one block the decoder could not search
        x = tuple((i * 7) % 3 % 2 for i in range(760))
        y = list(x)
        for i in range(23):
            y[i * 34] ^= 1
        lengths, hashes = decoder.layout(760, IR_MIN_LAYOUT_RATE, 0.0)
        assert max(lengths) == decoder.capacity()
        result = decoder.reconcile_blocks(x, tuple(y), lengths, hashes, randkit.stream(5, "hash.F"))
        assert result.success
        assert result.guess == x


class TestDecoding:
    def test_corrects_single_flip(self, decoder):
        x = (1, 0, 1, 1)
        y = (1, 0, 0, 1)
        guess, found = decoder.decode_block(y, IDENTITY_4, randkit.toeplitz_apply(IDENTITY_4, x))
        assert found
        assert guess == x

    def test_no_hash_keeps_bob_string(self, decoder):
        assert decoder.decode_block((0, 1, 1), None, ()) == ((0, 1, 1), True)

    def test_unsatisfiable_syndrome(self, decoder):
        zero = ToeplitzHash(n_in=4, n_out=1, diag=(0, 0, 0, 0))
        guess, found = decoder.decode_block((0, 1, 1, 0), zero, (1,))
        assert not found
        assert guess == (0, 1, 1, 0)

    def test_candidate_cap(self):
        zero = ToeplitzHash(n_in=8, n_out=1, diag=(0,) * 8)
        with pytest.raises(CapacityError):
            Reconciler(max_candidates=10).decode_block((0,) * 8, zero, (1,))


class TestReconcile:
    def test_identical_strings(self, decoder):
        x = (0, 1, 1, 0, 1, 0, 0, 1)
        result = decoder.reconcile(x, x, 4, seed=3)
        assert result.success
        assert result.r_prime == 4

    def test_blocks_without_hash_pass_through(self, decoder, rng):
        x = (0, 1, 1, 0, 1, 0)
        y = (0, 1, 1, 0, 1, 1)
        result = decoder.reconcile_blocks(x, y, [3, 3], [0, 0], rng)
        assert result.guess == y
        assert not result.success
        assert result.r_prime == 0

    def test_full_length_hash_with_identity_layout(self, decoder, rng):
        x = (1, 1, 0, 0, 1, 0, 1, 0)
        result = decoder.reconcile_blocks(x, x, [4, 4], [4, 4], rng)
        assert result.success
        assert [len(b.syndrome) for b in result.blocks] == [4, 4]

    def test_layout_must_cover_strings(self, decoder, rng):
        with pytest.raises(InvalidInputError):
            decoder.reconcile_blocks((0, 1, 1), (0, 1, 1), [2], [1], rng)

    def test_hash_length_range(self, decoder):
        with pytest.raises(InvalidInputError):
            decoder.reconcile((0, 1), (0, 1), 3, seed=0)

    def test_single_block_cap(self, decoder):
        with pytest.raises(CapacityError):
            decoder.reconcile((0,) * 30, (0,) * 30, 5, seed=0)
