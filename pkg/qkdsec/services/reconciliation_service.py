import itertools
import logging
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from qkdsec.core import randkit
from qkdsec.core.config import IR_DEFAULT_MARGIN, IR_EXACT_MAX_LEN, IR_MAX_CANDIDATES, IR_MAX_WEIGHT
from qkdsec.core.exceptions import CapacityError, InvalidInputError
from qkdsec.schemas.randomness import ToeplitzHash

logger = logging.getLogger(__name__)


class BlockResult(NamedTuple):
    guess: Tuple[int, ...]
    hash: Optional[ToeplitzHash]
    syndrome: Tuple[int, ...]
    found: bool


class ReconciliationResult(NamedTuple):
    guess: Tuple[int, ...]
    success: bool
    blocks: List[BlockResult]

    @property
    def r_prime(self) -> int:
        return sum(len(b.syndrome) for b in self.blocks)


def _columns(h: ToeplitzHash) -> List[int]:
    """Hash matrix columns as integer bitmasks"""
    m = randkit.toeplitz_matrix(h)
    return [int("".join(str(int(b)) for b in m[:, j]), 2) for j in range(h.n_in)]


def _syndrome_mask(columns: Sequence[int], bits: Sequence[int]) -> int:
    mask = 0
    for col, b in zip(columns, bits):
        if b:
            mask ^= col
    return mask


class Reconciler:
    """One-way reconciliation: Toeplitz syndromes, Bob decodes by weight-ordered error patterns"""

    def __init__(self, max_weight: int = IR_MAX_WEIGHT, max_candidates: int = IR_MAX_CANDIDATES,
                 margin: int = IR_DEFAULT_MARGIN):
        self.max_weight = max_weight
        self.max_candidates = max_candidates
        self.margin = margin

    def _likely_weight(self, b: int, error_rate: float) -> int:
        mean = b * error_rate
        return math.ceil(mean + 3 * math.sqrt(mean * (1 - error_rate)) - 1e-12)

    def _candidate_count(self, b: int, weight: int) -> int:
        return sum(math.comb(b, k) for k in range(min(weight, b) + 1))

    def capacity(self) -> int:
        """Longest block whose whole weight-capped error ball fits in the candidate cap"""
        b = 1
        while self._candidate_count(b + 1, self.max_weight) <= self.max_candidates:
            b += 1
        return b

    def block_size(self, n_prime: int, error_rate: float) -> int:
        """Largest block within capacity whose likely error weight the decoder still reaches"""
        if n_prime <= 0:
            return 0
        b = min(n_prime, self.capacity())
        while b > 1 and self._likely_weight(b, error_rate) > self.max_weight:
            b -= 1
        return b

    def hash_length(self, b: int, h_x_given_y: float) -> int:
        """Enough syndrome bits to single out one pattern of the searched ball, plus the margin"""
        ball = math.ceil(math.log2(self._candidate_count(b, self.max_weight)) - 1e-9)
        return min(b, max(math.ceil(b * h_x_given_y - 1e-9), ball) + self.margin)

    def layout(self, n_prime: int, error_rate: float, h_x_given_y: float,
               ir_length: Optional[int] = None) -> Tuple[List[int], List[int]]:
        """Block lengths and per-block hash lengths covering n' sifted bits"""
        if n_prime <= 0:
            return [], []
        b = self.block_size(n_prime, error_rate)
        lengths = [b] * (n_prime // b) + ([n_prime % b] if n_prime % b else [])
        if ir_length is not None:
            return lengths, [min(lb, ir_length) for lb in lengths]
        return lengths, [self.hash_length(lb, h_x_given_y) for lb in lengths]

    def decode_block(self, y: Sequence[int], h: Optional[ToeplitzHash], syndrome: Sequence[int]) -> Tuple[
            Tuple[int, ...], bool]:
        """Lowest-weight x with h(x) = syndrome, ties in lexicographic position order"""
        y = tuple(int(b) for b in y)
        if h is None:
            return y, True
        columns = _columns(h)
        target = _syndrome_mask(columns, y) ^ int("".join(str(b) for b in syndrome), 2)
        tried = 0
        for weight in range(min(self.max_weight, len(y)) + 1):
            for positions in itertools.combinations(range(len(y)), weight):
                tried += 1
                if tried > self.max_candidates:
                    raise CapacityError(f"decoder exceeded {self.max_candidates} candidates on a block of {len(y)}")
                mask = 0
                for i in positions:
                    mask ^= columns[i]
                if mask == target:
                    guess = list(y)
                    for i in positions:
                        guess[i] ^= 1
                    return tuple(guess), True
        return y, False

    def reconcile_blocks(self, x: Sequence[int], y: Sequence[int], block_lengths: Sequence[int],
                         hash_lengths: Sequence[int], rng: np.random.Generator) -> ReconciliationResult:
        if len(x) != len(y) or sum(block_lengths) != len(x) or len(block_lengths) != len(hash_lengths):
            raise InvalidInputError("block layout does not cover the sifted strings")
        blocks, guess, start = [], [], 0
        for b, r_b in zip(block_lengths, hash_lengths):
            xb, yb = tuple(x[start:start + b]), tuple(y[start:start + b])
            start += b
            if r_b == 0:
                blocks.append(BlockResult(guess=yb, hash=None, syndrome=(), found=True))
                guess.extend(yb)
                continue
            h = randkit.draw_toeplitz(b, r_b, rng)
            syndrome = randkit.toeplitz_apply(h, xb)
            gb, found = self.decode_block(yb, h, syndrome)
            blocks.append(BlockResult(guess=gb, hash=h, syndrome=syndrome, found=found))
            guess.extend(gb)
        guess = tuple(guess)
        success = guess == tuple(int(b) for b in x)
        logger.debug(f"reconciled {len(x)} bits in {len(blocks)} blocks, success={success}")
        return ReconciliationResult(guess=guess, success=success, blocks=blocks)

    def reconcile(self, x: Sequence[int], y: Sequence[int], r: int, seed: int,
                  label: str = "hash.F") -> ReconciliationResult:
        """Single-block reconciliation with an r-bit syndrome"""
        if len(x) > IR_EXACT_MAX_LEN:
            raise CapacityError(f"single-block reconciliation is limited to {IR_EXACT_MAX_LEN} bits")
        if not 0 <= r <= len(x):
            raise InvalidInputError(f"hash length {r} outside [0, {len(x)}]")
        return self.reconcile_blocks(x, y, [len(x)], [r], randkit.stream(seed, label))


reconciler = Reconciler()
