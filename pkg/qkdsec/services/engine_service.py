import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from qkdsec.core import qcore, randkit
from qkdsec.core.bounds import error_rate_upper
from qkdsec.core.cinfo import conditional_entropy, frequency_distribution, shannon_entropy
from qkdsec.core.config import IR_LAYOUT_CONFIDENCE, IR_MIN_LAYOUT_RATE
from qkdsec.core.exceptions import CapacityError, InfeasibleError, InvalidInputError, ProtocolAbort
from qkdsec.schemas.distributions import JointDist
from qkdsec.schemas.protocol import (
    AttackKind,
    AttackModel,
    AttackState,
    EstimationRecord,
    EveRecord,
    IRRecord,
    PARecord,
    Protocol,
    ProtocolConfig,
    SamplingMethod,
    Transcript,
)
from qkdsec.schemas.quantum import DensityOperator
from qkdsec.schemas.randomness import IndexSubset, SeededPermutation, ToeplitzHash
from qkdsec.services.analyzer_service import RateAnalyzer, rate_analyzer
from qkdsec.services.eve_service import EveEvaluator, eve_evaluator
from qkdsec.services.reconciliation_service import Reconciler, reconciler

logger = logging.getLogger(__name__)

PAIR_ALPHABET = ((0, 0), (0, 1), (1, 0), (1, 1))
BASIS_INDEX = {name: i for i, name in enumerate(qcore.BASIS_NAMES)}

ABORT_EMPTY = "empty estimation subset"
ABORT_NO_KEY = "no extractable key"
ABORT_IR_INFEASIBLE = "reconciliation infeasible"
ABORT_IR_FAILED = "reconciliation failed"


def _bits(values: Sequence[int]) -> str:
    return randkit.bits_to_str(values)


def amplify(bits: Sequence[int], s_prime: int, perm: SeededPermutation,
            h: Optional[ToeplitzHash]) -> Tuple[int, ...]:
    """Permute, then hash down to s' bits"""
    if s_prime < 0:
        raise InvalidInputError(f"final key length {s_prime} is negative")
    if s_prime == 0:
        return ()
    if h is None or h.n_out != s_prime:
        raise InvalidInputError("privacy amplification hash does not produce s' bits")
    return randkit.toeplitz_apply(h, randkit.apply_permutation(perm, bits))


def attack_state(model: AttackModel, protocol: Protocol) -> AttackState:
    """Per-position state left by the attack"""
    if protocol != Protocol.B92:
        if model.kind == AttackKind.BELL_DIAGONAL:
            lambdas = tuple(model.lambdas)
        elif model.kind == AttackKind.DEPOLARIZING:
            lambdas = (1 - model.p, model.p / 3, model.p / 3, model.p / 3)
        else:
            raise InvalidInputError("b92_unitary attacks only apply to B92 runs")
        rho = qcore.bell_diagonal_state(lambdas)
        return AttackState(kind=model.kind, lambdas=lambdas, rho=rho, purification=qcore.purify(rho))

    if model.kind == AttackKind.DEPOLARIZING:
        raise InvalidInputError("B92 depolarizing states depend on alpha; use b92_depolarizing_state")
    if model.kind != AttackKind.B92_UNITARY:
        raise InvalidInputError("B92 runs take a depolarizing or b92_unitary attack")
    u_plus, u_minus, ut_plus, ut_minus = qcore.b92_signal_states(model.alpha)
    env = qcore.b92_environment_vectors(model.alpha, model.delta, model.e_overlap, model.re_e_tilde,
                                        model.tilde_overlap)
    d = model.delta
    psis = (
        math.sqrt(1 - d) * np.kron(u_plus, env[0]) + math.sqrt(d) * np.kron(ut_plus, env[2]),
        math.sqrt(1 - d) * np.kron(u_minus, env[1]) + math.sqrt(d) * np.kron(ut_minus, env[3]),
    )
    bob = tuple(DensityOperator.from_matrix(qcore.partial_trace(np.outer(psi, psi.conj()), (2, 4), keep=[0]))
                for psi in psis)
    return AttackState(kind=model.kind, bob_states=bob, joint_states=psis)


def b92_depolarizing_state(p: float, alpha: float) -> AttackState:
    """Bob receives (1 - 4p/3)|u_a><u_a| + (2p/3) I"""
    if not 0.0 <= p <= 0.75:
        raise InvalidInputError(f"B92 depolarizing probability {p} outside [0, 0.75]")
    u_plus, u_minus, _, _ = qcore.b92_signal_states(alpha)
    bob = tuple(DensityOperator.from_matrix((1 - 4 * p / 3) * np.outer(u, u) + (2 * p / 3) * np.eye(2))
                for u in (u_plus, u_minus))
    return AttackState(kind=AttackKind.DEPOLARIZING, bob_states=bob)


class ProtocolEngine:
    """Runs the estimation, reconciliation and amplification phases on simulated data"""

    def __init__(self, analyzer: RateAnalyzer = rate_analyzer, decoder: Reconciler = reconciler,
                 evaluator: EveEvaluator = eve_evaluator):
        self.analyzer = analyzer
        self.decoder = decoder
        self.evaluator = evaluator

    def state_for(self, config: ProtocolConfig) -> AttackState:
        if config.protocol == Protocol.B92 and config.attack.kind == AttackKind.DEPOLARIZING:
            return b92_depolarizing_state(config.attack.p, config.b92_alpha)
        return attack_state(config.attack, config.protocol)

    # measurement sampling

    @staticmethod
    def _bases(selection: IndexSubset, protocol: Protocol, seed: int, label: str) -> np.ndarray:
        bases = np.full(selection.n, "Z")
        mask = selection.mask()
        if protocol == Protocol.SIX_STATE:
            split = randkit.stream(seed, label).random(selection.n) < 0.5
            bases[mask & split] = "X"
            bases[mask & ~split] = "Y"
        else:
            bases[mask] = "X"
        return bases

    def sample_measurements(self, config: ProtocolConfig, state: AttackState, bases_a: np.ndarray,
                            bases_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, EveRecord]:
        """Outcomes of Alice and Bob; the Pauli path also records Eve's per-position labels"""
        n = config.n
        rng = randkit.stream(config.seed, "channel")
        if config.method == SamplingMethod.PAULI:
            labels = rng.choice(4, size=n, p=np.asarray(state.lambdas) / sum(state.lambdas))
            x = rng.integers(0, 2, size=n)
            y_random = rng.integers(0, 2, size=n)
            index_a = np.array([BASIS_INDEX[b] for b in bases_a])
            flips = qcore.ERROR_FLIPS[index_a, labels]
            y = np.where(bases_a == bases_b, x ^ flips, y_random)
            eve = EveRecord(pauli_labels="".join(qcore.PAULI_LABELS[i] for i in labels))
            return x.astype(np.int64), y.astype(np.int64), eve
        x = np.zeros(n, dtype=np.int64)
        y = np.zeros(n, dtype=np.int64)
        for pair in sorted(set(zip(bases_a.tolist(), bases_b.tolist()))):
            idx = np.flatnonzero((bases_a == pair[0]) & (bases_b == pair[1]))
            probs = qcore.measure(state.rho, qcore.basis_pair_povm(*pair)).array
            outcomes = rng.choice(4, size=idx.size, p=probs / probs.sum())
            x[idx] = outcomes // 2
            y[idx] = outcomes % 2
        return x, y, EveRecord()

    # parameter estimation

    def estimate_parameters(self, config: ProtocolConfig, x: np.ndarray, y: np.ndarray, bases_a: np.ndarray,
                            bases_b: np.ndarray, sel_s: IndexSubset, sel_t: IndexSubset,
                            sel_tp: IndexSubset) -> EstimationRecord:
        """Joint statistics on S minus T', error rates on T and T'; box values r, t, u, s"""
        n = config.n
        est = sel_s.difference(sel_tp).included
        rng_set = [i for i in sel_t.intersect(sel_tp).included if bases_a[i] == bases_b[i]]
        if not est or not rng_set:
            if config.fixed_length:
                logger.info("estimation subset empty; fixed-length run continues without estimates")
                return EstimationRecord(skipped=True)
            raise ProtocolAbort(ABORT_EMPTY, "estimation")
        pairs = [(int(x[i]), int(y[i])) for i in est]
        q = frequency_distribution(pairs, PAIR_ALPHABET)
        pxy = JointDist(alphabet=q.alphabet, probs=q.probs)
        key_errors = sum(a != b for a, b in pairs)
        upper = error_rate_upper(key_errors, len(pairs), IR_LAYOUT_CONFIDENCE)
        rates = [key_errors / len(pairs)]
        for basis in ("X", "Y"):
            members = [i for i in rng_set if bases_a[i] == basis]
            if members:
                rates.append(float(np.mean([x[i] != y[i] for i in members])))
        qber = max(rates)
        h_x = shannon_entropy(pxy.marginal(0))
        h_xy = conditional_entropy(pxy)
        try:
            u_rate = self.analyzer.adversarial_entropy(config.protocol.value, rates, config.conditioned)
        except InvalidInputError as e:
            if config.fixed_length:
                return EstimationRecord(pxy=pxy, error_rates=tuple(rates), qber=qber, error_upper=upper, h_x=h_x,
                                        h_x_given_y=h_xy)
            raise ProtocolAbort(ABORT_NO_KEY, "estimation") from e
        return self._box(config, n, pxy, tuple(rates), qber, h_x, h_xy, u_rate, error_upper=upper)

    @staticmethod
    def _box(config: ProtocolConfig, scale: float, pxy: JointDist, rates: Tuple[float, ...], qber: float,
             h_x: float, h_xy: float, u_rate: float, acceptance: Optional[float] = None,
             error_upper: Optional[float] = None) -> EstimationRecord:
        r = math.ceil(scale * h_xy - 1e-9)
        t = math.floor(scale * h_x + 1e-9)
        u = math.ceil(scale * u_rate - 1e-9)
        record = EstimationRecord(pxy=pxy, error_rates=rates, qber=qber, error_upper=error_upper, h_x=h_x,
                                  h_x_given_y=h_xy, u_rate=u_rate, acceptance=acceptance, r=r, t=t, u=u, s=t - r - u)
        logger.info(f"estimation: qber={qber:.4f} r={r} t={t} u={u} s={record.s}")
        if record.s <= 0 and not config.fixed_length:
            raise ProtocolAbort(ABORT_NO_KEY, "estimation")
        return record

    # reconciliation and amplification

    def _key_length(self, config: ProtocolConfig, n_prime: int, r_prime: int, est: EstimationRecord) -> int:
        if config.fixed_length:
            if config.key_length > n_prime:
                raise ProtocolAbort(ABORT_NO_KEY, "privacy_amplification")
            return config.key_length
        pa_cost = math.ceil(2 * math.log2(1 / config.pa_epsilon))
        s_prime = (math.floor(n_prime * est.h_x + 1e-9) - r_prime - math.ceil(n_prime * est.u_rate - 1e-9)
                   - pa_cost)
        if s_prime <= 0:
            raise ProtocolAbort(ABORT_NO_KEY, "privacy_amplification")
        return s_prime

    def _layout(self, config: ProtocolConfig, n_prime: int, est: EstimationRecord) -> Tuple[List[int], List[int]]:
        upper = est.error_upper if est.error_upper is not None else (est.qber or 0.0)
        h_xy = est.h_x_given_y if est.h_x_given_y is not None else 0.0
        return self.decoder.layout(n_prime, max(upper, IR_MIN_LAYOUT_RATE), h_xy, config.ir_length)

    def _finish(self, config: ProtocolConfig, record: Dict[str, Any], x_prime: Sequence[int],
                y_prime: Sequence[int], est: EstimationRecord):
        """Reconciliation and privacy amplification on the sifted strings"""
        n_prime = len(x_prime)
        lengths, hash_lengths = self._layout(config, n_prime, est)
        s_prime = self._key_length(config, n_prime, sum(hash_lengths), est)
        try:
            result = self.decoder.reconcile_blocks(x_prime, y_prime, lengths, hash_lengths,
                                                   randkit.stream(config.seed, "hash.F"))
        except CapacityError as e:
            raise ProtocolAbort(ABORT_IR_INFEASIBLE, "reconciliation") from e
        record["ir"] = IRRecord(
            block_lengths=lengths,
            hash_lengths=hash_lengths,
            hashes=[b.hash.diag_hex if b.hash is not None else None for b in result.blocks],
            syndromes=[_bits(b.syndrome) for b in result.blocks],
            r_prime=result.r_prime,
            guess=_bits(result.guess),
            success=result.success,
        )
        if not result.success:
            raise ProtocolAbort(ABORT_IR_FAILED, "reconciliation")
        perm = randkit.random_permutation(n_prime, config.seed, "permutation.P")
        g = randkit.draw_toeplitz(n_prime, s_prime, randkit.stream(config.seed, "hash.G")) if s_prime else None
        record["pa"] = PARecord(s_prime=s_prime, order=list(perm.order), n_in=n_prime,
                                hash_hex=g.diag_hex if g is not None else None)
        record["key_alice"] = _bits(amplify(x_prime, s_prime, perm, g))
        record["key_bob"] = _bits(amplify(result.guess, s_prime, perm, g))

    # runs

    def run(self, config: ProtocolConfig) -> Transcript:
        """Execute every phase; aborts are recorded in the transcript"""
        state = self.state_for(config)
        record: Dict[str, Any] = {"config": config, "sampling_rate": config.sampling_rate}
        try:
            if config.protocol == Protocol.B92:
                self._run_b92(config, state, record)
            else:
                self._run_bell(config, state, record)
        except ProtocolAbort as abort:
            logger.warning(f"run aborted in {abort.phase}: {abort.reason}")
            record.update(aborted=True, abort_reason=abort.reason, abort_phase=abort.phase)
        transcript = Transcript(**record)
        if config.exact_eve and not transcript.aborted:
            exact = self.evaluator.distance(transcript, state.lambdas)
            eve = (transcript.eve or EveRecord()).model_copy(
                update={"rank": exact.rank, "dim": exact.dim, "distance": exact.distance, "bound": exact.bound})
            transcript = transcript.model_copy(update={"eve": eve})
        return transcript

    def _run_bell(self, config: ProtocolConfig, state: AttackState, record: Dict[str, Any]):
        n, p, seed = config.n, config.sampling_rate, config.seed
        sel_t = randkit.p_random_select(p, n, seed, "selection.T")
        sel_tp = randkit.p_random_select(p, n, seed, "selection.T_prime")
        sel_s = randkit.p_random_select(p, n, seed, "selection.S", within=sel_t.complement())
        bases_a = self._bases(sel_t, config.protocol, seed, "basis.alice")
        bases_b = self._bases(sel_tp, config.protocol, seed, "basis.bob")
        x, y, eve = self.sample_measurements(config, state, bases_a, bases_b)
        announced = sel_s.union(sel_t).included
        key_positions = sel_s.union(sel_t).union(sel_tp).complement().included
        record.update(
            selection_t=IndexSubset(n=n, included=sel_t.included),
            selection_t_prime=IndexSubset(n=n, included=sel_tp.included),
            selection_s=IndexSubset(n=n, included=sel_s.included),
            discarded=IndexSubset(n=n),
            bases_alice="".join(bases_a),
            bases_bob="".join(bases_b),
            x=_bits(x),
            y=_bits(y),
            announced=list(announced),
            announced_bits=_bits(x[list(announced)]),
            key_positions=list(key_positions),
            sifted_length=len(key_positions),
            eve=eve if eve.pauli_labels is not None else None,
        )
        est = self.estimate_parameters(config, x, y, bases_a, bases_b, sel_s, sel_t, sel_tp)
        record["estimation"] = est
        idx = list(key_positions)
        self._finish(config, record, x[idx].tolist(), y[idx].tolist(), est)

    def _run_b92(self, config: ProtocolConfig, state: AttackState, record: Dict[str, Any]):
        n, p, seed = config.n, config.sampling_rate, config.seed
        a = randkit.stream(seed, "basis.alice").integers(0, 2, size=n)
        m = randkit.stream(seed, "basis.bob").integers(0, 2, size=n)
        _, _, ut_plus, ut_minus = qcore.b92_signal_states(config.b92_alpha)
        # m = 0 tests u~- (conclusive for bit 0), m = 1 tests u~+ (conclusive for bit 1)
        projectors = (ut_minus, ut_plus)
        accept_prob = np.array([float(np.real(np.vdot(projectors[mi], state.bob_states[ai].matrix @ projectors[mi])))
                                for ai, mi in zip(a, m)])
        accepted = randkit.stream(seed, "channel").random(n) < accept_prob
        sel_s = randkit.p_random_select(p, n, seed, "selection.S")
        discarded = IndexSubset(n=n, included=np.flatnonzero(~accepted).tolist())
        key_positions = sel_s.union(discarded).complement().included
        record.update(
            selection_t=IndexSubset(n=n),
            selection_t_prime=IndexSubset(n=n),
            selection_s=IndexSubset(n=n, included=sel_s.included),
            discarded=discarded,
            bases_bob=_bits(m),
            x=_bits(a),
            y="".join(str(int(mi)) if ok else "?" for mi, ok in zip(m, accepted)),
            announced=list(sel_s.included),
            announced_bits=_bits(a[list(sel_s.included)]),
            key_positions=list(key_positions),
            sifted_length=len(key_positions),
        )
        est = self._estimate_b92(config, a, m, accepted, sel_s)
        record["estimation"] = est
        idx = list(key_positions)
        self._finish(config, record, a[idx].tolist(), m[idx].tolist(), est)

    def _estimate_b92(self, config: ProtocolConfig, a: np.ndarray, m: np.ndarray, accepted: np.ndarray,
                      sel_s: IndexSubset) -> EstimationRecord:
        """p_xy over S (inconclusive rounds count in the denominator), symmetrized"""
        idx = list(sel_s.included)
        conclusive = [i for i in idx if accepted[i]]
        if not conclusive:
            if config.fixed_length:
                return EstimationRecord(skipped=True)
            raise ProtocolAbort(ABORT_EMPTY, "estimation")
        counts = np.zeros((2, 2))
        for i in conclusive:
            counts[a[i], m[i]] += 1
        pxy = counts / len(idx)
        upper = error_rate_upper(int(counts[0, 1] + counts[1, 0]), len(conclusive), IR_LAYOUT_CONFIDENCE)
        same, diff = (pxy[0, 0] + pxy[1, 1]) / 2, (pxy[0, 1] + pxy[1, 0]) / 2
        joint = JointDist.from_matrix((0, 1), (0, 1), np.array([[same, diff], [diff, same]]) / (2 * (same + diff)))
        try:
            report = self.analyzer.b92_general_bound(same, diff, diff, same, alpha=config.b92_alpha)
        except (InvalidInputError, InfeasibleError) as e:
            logger.warning(f"B92 estimate rejected: {e}")
            if config.fixed_length:
                return EstimationRecord(pxy=joint, skipped=True)
            raise ProtocolAbort(ABORT_NO_KEY, "estimation") from e
        chain = report.b92
        eps = chain.epsilon
        u_rate = eps + (1 - eps) * chain.s_sigma
        rates = (eps,)
        h_x, h_xy = shannon_entropy(joint.marginal(0)), conditional_entropy(joint)
        return self._box(config, config.n * chain.acceptance, joint, rates, eps, h_x, h_xy, u_rate,
                         acceptance=chain.acceptance, error_upper=upper)


protocol_engine = ProtocolEngine()


def run_protocol(config: ProtocolConfig) -> Transcript:
    return protocol_engine.run(config)
