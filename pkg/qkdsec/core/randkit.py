"""Seeded randomness: labelled streams, Toeplitz hashing, p-random selections, permutations."""

import hashlib
import itertools
import logging
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import toeplitz

from qkdsec.core.config import COLLISION_LITERAL_CAP, COLLISION_MAX_N_IN
from qkdsec.core.exceptions import CapacityError, InvalidInputError
from qkdsec.schemas.randomness import IndexSubset, PRandomSelection, SeededPermutation, ToeplitzHash

logger = logging.getLogger(__name__)

SEED_BITS = 64


def parse_seed(value: Union[str, int]) -> int:
    """Accept decimal or 0x-prefixed hex seeds in [0, 2^64)"""
    try:
        seed = value if isinstance(value, int) else int(str(value).strip(), 0)
    except ValueError as e:
        raise InvalidInputError(f"seed {value!r} is neither decimal nor 0x-hex") from e
    if not 0 <= seed < 2 ** SEED_BITS:
        raise InvalidInputError(f"seed {seed} outside [0, 2^{SEED_BITS})")
    return seed


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for one role, derived from the master seed and a label"""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    label_words = [int.from_bytes(digest[:4], "little"), int.from_bytes(digest[4:], "little")]
    seq = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32] + label_words)
    return np.random.Generator(np.random.PCG64(seq))


def bits_to_str(bits: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def str_to_bits(text: str) -> Tuple[int, ...]:
    if any(c not in "01" for c in text):
        raise InvalidInputError(f"not a bit string: {text!r}")
    return tuple(int(c) for c in text)


def draw_toeplitz(n_in: int, n_out: int, rng: np.random.Generator) -> ToeplitzHash:
    diag = rng.integers(0, 2, size=n_in + n_out - 1)
    return ToeplitzHash(n_in=n_in, n_out=n_out, diag=tuple(int(b) for b in diag))


def toeplitz_matrix(h: ToeplitzHash) -> np.ndarray:
    """n_out x n_in matrix; row i is the diag window starting at n_out-1-i"""
    diag = np.asarray(h.diag, dtype=np.uint8)
    first_col = diag[h.n_out - 1::-1]
    first_row = diag[h.n_out - 1:]
    return toeplitz(first_col, first_row).astype(np.uint8)


def toeplitz_apply(h: ToeplitzHash, x: Sequence[int]) -> Tuple[int, ...]:
    if len(x) != h.n_in:
        raise InvalidInputError(f"hash expects {h.n_in} input bits, got {len(x)}")
    out = toeplitz_matrix(h).astype(np.int64) @ np.asarray(x, dtype=np.int64) % 2
    return tuple(int(b) for b in out)


def gf2_rank(matrix: np.ndarray) -> int:
    """Rank over GF(2) by row reduction"""
    m = np.array(matrix, dtype=np.uint8) % 2
    rank = 0
    rows, cols = m.shape
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def _difference_matrix(d: np.ndarray, n_out: int) -> np.ndarray:
    """M with M @ diag = T(diag) @ d"""
    n_in = len(d)
    m = np.zeros((n_out, n_in + n_out - 1), dtype=np.uint8)
    for i in range(n_out):
        m[i, n_out - 1 - i:n_out - 1 - i + n_in] = d
    return m


def collision_probability_exhaustive(n_in: int, n_out: int, method: Optional[str] = None) -> Fraction:
    """Exact max over x != x' of Pr_diag[h(x) = h(x')] for uniformly random diagonals"""
    if n_in > COLLISION_MAX_N_IN:
        raise CapacityError(f"n_in={n_in} exceeds the enumeration cap {COLLISION_MAX_N_IN}")
    if n_out < 1 or n_out > n_in:
        raise InvalidInputError(f"need 1 <= n_out <= n_in, got n_in={n_in}, n_out={n_out}")
    length = n_in + n_out - 1
    if method is None:
        method = "literal" if 2 ** length * (2 ** n_in - 1) <= COLLISION_LITERAL_CAP else "rank"
    diffs = np.array(list(itertools.product((0, 1), repeat=n_in))[1:], dtype=np.uint8)
    worst = Fraction(0)
    if method == "literal":
        # by linearity a pair collides iff its difference is in the kernel
        kernels = np.zeros(len(diffs), dtype=np.int64)
        for diag in itertools.product((0, 1), repeat=length):
            t = toeplitz_matrix(ToeplitzHash(n_in=n_in, n_out=n_out, diag=diag)).astype(np.int64)
            kernels += ~np.any((diffs.astype(np.int64) @ t.T) % 2, axis=1)
        worst = Fraction(int(kernels.max()), 2 ** length)
    elif method == "rank":
        for d in diffs:
            worst = max(worst, Fraction(1, 2 ** gf2_rank(_difference_matrix(d, n_out))))
    else:
        raise InvalidInputError(f"unknown collision method {method!r}")
    logger.debug(f"collision probability n_in={n_in} n_out={n_out} via {method}: {worst}")
    return worst


def p_random_select(p: float, n: int, seed: int, label: str = "selection",
                    within: Optional[IndexSubset] = None) -> PRandomSelection:
    """Keep each index (of `within`, or of all n) independently with probability p"""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"selection probability {p} outside [0, 1]")
    rng = stream(seed, label)
    draws = rng.random(n)
    mask = draws < p
    if within is not None:
        mask &= within.mask()
    return PRandomSelection(n=n, included=np.flatnonzero(mask).tolist(), p=p, seed=seed, label=label,
                            within=within.included if within is not None else None)


def random_permutation(n: int, seed: int, label: str = "permutation.P") -> SeededPermutation:
    order = stream(seed, label).permutation(n)
    return SeededPermutation(n=n, order=tuple(int(i) for i in order), seed=seed, label=label)


def apply_permutation(perm: SeededPermutation, bits: Sequence[int]) -> Tuple[int, ...]:
    if len(bits) != perm.n:
        raise InvalidInputError(f"permutation over {perm.n} elements applied to {len(bits)} bits")
    return tuple(bits[i] for i in perm.order)


def monobit_zscore(bits: np.ndarray) -> float:
    """Standardised excess of ones over n/2"""
    bits = np.asarray(bits)
    n = bits.size
    return float((bits.sum() - n / 2) / np.sqrt(n / 4))
