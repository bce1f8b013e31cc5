import itertools
import logging
import math
from collections import defaultdict
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from qkdsec.core import qcore, randkit
from qkdsec.core.bounds import pa_distance_bound
from qkdsec.core.config import EXACT_EVE_MAX_N, MAX_TOTAL_DIM
from qkdsec.core.exceptions import CapacityError, InvalidInputError
from qkdsec.schemas.protocol import EveRecord, Transcript
from qkdsec.schemas.randomness import SeededPermutation, ToeplitzHash

logger = logging.getLogger(__name__)


class EveEvaluator:
    """Exact distance of the final key from uniform given Eve's purifying system"""

    @staticmethod
    def position_states(lambdas: Sequence[float]) -> Tuple[List[np.ndarray], int]:
        """omega(x) on the support of the Bell weights, for x = 0, 1"""
        lam = np.asarray(lambdas, dtype=float)
        support = np.flatnonzero(lam > 1e-12)
        bell = qcore.bell_states().real
        omegas = []
        for x in (0, 1):
            omega = np.zeros((len(support), len(support)))
            for y in (0, 1):
                v = np.sqrt(lam[support]) * bell[2 * x + y, support]
                omega += np.outer(v, v)
            omegas.append(omega)
        return omegas, len(support)

    @staticmethod
    def _hashes(transcript: Transcript) -> Tuple[List[int], List[Optional[ToeplitzHash]]]:
        ir = transcript.ir
        lengths = list(ir.block_lengths)
        hashes = []
        for b, r_b, hx in zip(lengths, ir.hash_lengths, ir.hashes):
            hashes.append(None if hx is None else ToeplitzHash.from_hex(b, r_b, hx))
        return lengths, hashes

    def distance(
        self,
        transcript: Transcript,
        lambdas: Sequence[float],
        pa_hash: Optional[ToeplitzHash] = None,
    ) -> EveRecord:
        """Sum over syndromes c and keys k of 1/2 |omega_{k,c} - 2^-s' omega_c|_1"""
        if transcript.ir is None or transcript.pa is None:
            raise InvalidInputError("exact Eve evaluation needs a transcript that reached privacy amplification")
        n_prime = transcript.sifted_length
        if n_prime > EXACT_EVE_MAX_N:
            raise CapacityError(f"exact Eve evaluation is limited to {EXACT_EVE_MAX_N} key positions")
        omegas, rank = self.position_states(lambdas)
        dim = rank ** n_prime
        if dim > MAX_TOTAL_DIM:
            raise CapacityError(f"Eve dimension {dim} exceeds the cap {MAX_TOTAL_DIM}")
        s_prime = transcript.pa.s_prime
        r_prime = transcript.ir.r_prime
        bound = pa_distance_bound(n_prime, r_prime + n_prime * math.log2(rank), s_prime, 0.0, 0.0)
        if s_prime == 0:
            return EveRecord(rank=rank, dim=dim, distance=0.0, bound=bound)

        lengths, hashes = self._hashes(transcript)
        perm = SeededPermutation(n=n_prime, order=tuple(transcript.pa.order), seed=transcript.config.seed)
        if pa_hash is None:
            pa_hash = ToeplitzHash.from_hex(n_prime, s_prime, transcript.pa.hash_hex)

        classes: Dict[Tuple[int, ...], Dict[Tuple[int, ...], List[Tuple[int, ...]]]] = defaultdict(
            lambda: defaultdict(list))
        for x in itertools.product((0, 1), repeat=n_prime):
            syndrome, start = [], 0
            for b, h in zip(lengths, hashes):
                if h is not None:
                    syndrome.extend(randkit.toeplitz_apply(h, x[start:start + b]))
                start += b
            key = randkit.toeplitz_apply(pa_hash, randkit.apply_permutation(perm, x))
            classes[tuple(syndrome)][key].append(x)

        def product_state(x):
            return reduce(np.kron, [omegas[b] for b in x], np.ones((1, 1)))

        scale = 2.0 ** (-s_prime)
        total = 0.0
        for by_key in classes.values():
            # first pass: omega_c, second pass: one key at a time
            omega_c = np.zeros((dim, dim))
            for members in by_key.values():
                for x in members:
                    omega_c += product_state(x)
            absent = 2 ** s_prime - len(by_key)
            total += 0.5 * absent * scale * float(np.trace(omega_c))
            for members in by_key.values():
                diff = -scale * omega_c
                for x in members:
                    diff += product_state(x)
                total += 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
        distance = min(1.0, total)
        logger.info(f"exact Eve distance {distance:.6g} (bound {bound:.6g}) over {dim} dimensions")
        return EveRecord(rank=rank, dim=dim, distance=distance, bound=bound)

    def averaged_distance(self, transcript: Transcript, lambdas: Sequence[float]) -> EveRecord:
        """Average of the exact distance over every Toeplitz privacy-amplification hash"""
        n_prime, s_prime = transcript.sifted_length, transcript.pa.s_prime if transcript.pa else 0
        if s_prime == 0:
            return self.distance(transcript, lambdas)
        length = n_prime + s_prime - 1
        records = [self.distance(transcript, lambdas, ToeplitzHash(n_in=n_prime, n_out=s_prime, diag=diag))
                   for diag in itertools.product((0, 1), repeat=length)]
        mean = float(np.mean([r.distance for r in records]))
        first = records[0]
        return EveRecord(rank=first.rank, dim=first.dim, distance=mean, bound=first.bound)


eve_evaluator = EveEvaluator()
