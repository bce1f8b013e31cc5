import logging
import math
from typing import Callable, Dict, List

import numpy as np

from qkdsec.core import bounds, cinfo, qcore, randkit
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.distributions import JointDist, ProbDist, SmoothingParam
from qkdsec.schemas.protocol import AttackModel, ProtocolConfig
from qkdsec.schemas.quantum import Povm
from qkdsec.schemas.reports import BoundDirection, BoundReport
from qkdsec.services.engine_service import ProtocolEngine, protocol_engine
from qkdsec.services.eve_service import EveEvaluator, eve_evaluator
from qkdsec.services.reconciliation_service import Reconciler, reconciler

logger = logging.getLogger(__name__)

SUITES = ("lemmas", "hashing", "smooth", "pa")

COLLISION_SHAPES = ((4, 1), (4, 2), (6, 3), (8, 4), (10, 5))
PA_ATTACKS = (
    (1.0, 0.0, 0.0, 0.0),
    (0.94, 0.02, 0.02, 0.02),
    (0.85, 0.05, 0.05, 0.05),
)


class VerificationService:
    """Monte-Carlo and enumeration checks of the bound calculators"""

    def __init__(self, engine: ProtocolEngine = protocol_engine, decoder: Reconciler = reconciler,
                 evaluator: EveEvaluator = eve_evaluator):
        self.engine = engine
        self.decoder = decoder
        self.evaluator = evaluator

    # lemmas

    @staticmethod
    def _frequency(trials: int, seed: int) -> List[BoundReport]:
        rng = randkit.stream(seed, "verify.freq")
        reports = []
        for probs in ((0.3, 0.7), (0.2, 0.3, 0.5)):
            for n in (100, 1000):
                eps = 0.1
                counts = rng.multinomial(n, probs, size=max(trials, 1))
                distance = 0.5 * np.abs(counts / n - np.asarray(probs)).sum(axis=1)
                empirical = float(np.mean(distance > eps)) if trials else 0.0
                reports.append(bounds.bound_report(
                    "freq_sampling", bounds.freq_sampling_bound(len(probs), n, eps),
                    inputs={"q": len(probs), "n": n, "eps": eps, "trials": trials}, empirical=empirical))
        return reports

    @staticmethod
    def _quantum_sampling(trials: int, seed: int) -> BoundReport:
        """X(x)X on the sampled half, Z(x)Z on the rest, Bell-diagonal i.i.d. source"""
        n, eps, p = 512, 0.3, 0.5
        rho = qcore.bell_diagonal_state((0.85, 0.05, 0.05, 0.05))
        povm_f = qcore.basis_pair_povm("X", "X")
        povm_key = qcore.basis_pair_povm("Z", "Z")
        gamma_f = qcore.measure(rho, povm_f).array
        gamma_key = qcore.measure(rho, povm_key).array
        rng = randkit.stream(seed, "verify.quanttom")
        violations = 0
        for _ in range(trials):
            sampled = rng.binomial(n, p)
            q_hat = rng.multinomial(sampled, gamma_f) / max(sampled, 1)
            q_rest = rng.multinomial(n - sampled, gamma_key) / max(n - sampled, 1)
            far_in = 0.5 * np.abs(q_hat - gamma_f).sum() > eps
            far_out = 0.5 * np.abs(q_rest - gamma_key).sum() > eps
            violations += bool(far_in or far_out)
        empirical = violations / trials if trials else 0.0
        mu = bounds.quanttom_bound(len(povm_f.labels), len(povm_key.labels), n, eps)
        return bounds.bound_report("quantum_sampling", mu, inputs={"n": n, "eps": eps, "p": p, "trials": trials},
                                   empirical=empirical,
                                   note="counts a trial whenever the true state leaves either ball")

    @staticmethod
    def _exchangeable() -> List[BoundReport]:
        reports = []
        for n in (5, 10, 20):
            worst = None
            for k in range(n + 1):
                q = ProbDist.from_array((0, 1), [k / n, (n - k) / n])
                result = bounds.hinf_exchangeable(n, 2, q)
                if worst is None or result.exact - result.bound < worst[1].exact - worst[1].bound:
                    worst = (k, result)
            k, result = worst
            reports.append(bounds.bound_report("hinf_exchangeable", result.bound, inputs={"n": n, "k": k},
                                               empirical=result.exact, direction=BoundDirection.LOWER,
                                               probability=False))
        return reports

    @staticmethod
    def _typical() -> BoundReport:
        size = cinfo.typical_set(2, 8, 0.5)
        return bounds.bound_report("typical_set", size.bound, inputs={"q": 2, "n": 8, "r": 0.5},
                                   empirical=float(size.exact), probability=False)

    def _reconciliation(self, trials: int, seed: int) -> BoundReport:
        """Single-block reconciliation over BSC(0.05) against the H_0 bound of weight <= 3 patterns"""
        n_prime, flip, weight, s = 16, 0.05, 3, 12
        tail = float(1.0 - sum(math.comb(n_prime, k) * flip ** k * (1 - flip) ** (n_prime - k)
                               for k in range(weight + 1)))
        h0 = math.log2(sum(math.comb(n_prime, k) for k in range(weight + 1)))
        rng = randkit.stream(seed, "verify.ir")
        runs = min(trials, 1000)
        failures = 0
        for i in range(runs):
            x = rng.integers(0, 2, size=n_prime)
            y = x ^ (rng.random(n_prime) < flip)
            result = self.decoder.reconcile(x.tolist(), y.tolist(), s, seed, label=f"verify.ir.{i}")
            failures += not result.success
        empirical = failures / runs if runs else 0.0
        return bounds.bound_report("ir_failure", bounds.ir_failure_bound(h0, s, tail),
                                   inputs={"n": n_prime, "flip": flip, "s": s, "trials": runs},
                                   empirical=empirical, note=bounds.IR_SIGN_NOTE)

    # distances and operations

    @staticmethod
    def _projection_disturbance(trials: int, rng: np.random.Generator) -> BoundReport:
        """delta(rho, E(rho)) against sqrt(1 - sum_z |tr(E_z rho)|^2) for random Kraus families"""
        worst = -math.inf
        for _ in range(trials):
            dim = int(rng.integers(2, 5))
            rho = qcore.random_density(dim, rng, rank=int(rng.integers(1, dim + 1)))
            op = qcore.random_kraus(dim, int(rng.integers(1, 4)), rng)
            moved = qcore.trace_distance(rho, qcore.apply_operation(op, rho))
            worst = max(worst, moved - qcore.projection_disturbance_bound(op, rho))
        return bounds.bound_report("projection_disturbance", 1e-9, inputs={"trials": trials},
                                   empirical=worst if trials else None, probability=False,
                                   note="trace distance moved minus the overlap bound")

    @staticmethod
    def _measured_distance(trials: int, rng: np.random.Generator) -> BoundReport:
        worst = -math.inf
        for _ in range(trials):
            dim = int(rng.integers(2, 5))
            rho, sigma = qcore.random_density(dim, rng), qcore.random_density(dim, rng)
            povm = qcore.random_orthogonal_povm(dim, rng)
            measured = cinfo.variational_distance(qcore.measure(rho, povm), qcore.measure(sigma, povm))
            worst = max(worst, measured - qcore.trace_distance(rho, sigma))
        return bounds.bound_report("measured_distance", 1e-9, inputs={"trials": trials},
                                   empirical=worst if trials else None, probability=False,
                                   note="distance of outcome statistics minus trace distance")

    @staticmethod
    def _basis_entropy(trials: int, rng: np.random.Generator) -> List[BoundReport]:
        """S(rho) is the minimum of the measured Shannon entropy over bases, reached at the eigenbasis"""
        worst_random, worst_eigen = -math.inf, 0.0
        for _ in range(trials):
            dim = int(rng.integers(2, 5))
            rho = qcore.random_density(dim, rng)
            s = qcore.von_neumann_entropy(rho)
            measured = cinfo.shannon_entropy(qcore.measure(rho, qcore.random_orthogonal_povm(dim, rng)))
            worst_random = max(worst_random, s - measured)
            _, vectors = np.linalg.eigh(rho.matrix)
            eigen = Povm.from_basis([vectors[:, i] for i in range(dim)], tuple(range(dim)))
            worst_eigen = max(worst_eigen, abs(cinfo.shannon_entropy(qcore.measure(rho, eigen)) - s))
        empirical = trials > 0
        return [
            bounds.bound_report("basis_entropy", 1e-9, inputs={"trials": trials},
                                empirical=worst_random if empirical else None, probability=False,
                                note="S(rho) minus the Shannon entropy in a random basis"),
            bounds.bound_report("eigenbasis_entropy", 1e-9, inputs={"trials": trials},
                                empirical=worst_eigen if empirical else None, probability=False,
                                note="gap between S(rho) and the eigenbasis Shannon entropy"),
        ]

    def _variational_metric(self, trials: int, rng: np.random.Generator) -> List[BoundReport]:
        """Symmetry and triangle inequality of delta, and E_W delta(P_Z|w, Q_Z|w) <= 2 delta(P_ZW, Q_ZW)"""
        worst_sym, worst_tri, worst_cond = 0.0, -math.inf, -math.inf
        for _ in range(trials):
            alphabet = tuple(range(int(rng.integers(2, 6))))
            p, q, r = (ProbDist.from_array(alphabet, self._random_dist(rng, alphabet)) for _ in range(3))
            pq = cinfo.variational_distance(p, q)
            worst_sym = max(worst_sym, abs(pq - cinfo.variational_distance(q, p)))
            worst_tri = max(worst_tri, cinfo.variational_distance(p, r) - pq - cinfo.variational_distance(q, r))
            z_alphabet, w_alphabet = (0, 1), tuple(range(int(rng.integers(2, 4))))
            size = len(z_alphabet) * len(w_alphabet)
            pzw, qzw = (JointDist.from_matrix(z_alphabet, w_alphabet,
                                              self._random_dist(rng, range(size)).reshape(2, -1)) for _ in range(2))
            gap = cinfo.expected_conditional_distance(pzw, qzw) - 2 * cinfo.variational_distance(pzw, qzw)
            worst_cond = max(worst_cond, gap)
        empirical = trials > 0
        return [
            bounds.bound_report("distance_symmetry", 1e-12, inputs={"trials": trials},
                                empirical=worst_sym if empirical else None, probability=False),
            bounds.bound_report("distance_triangle", 1e-12, inputs={"trials": trials},
                                empirical=worst_tri if empirical else None, probability=False),
            bounds.bound_report("conditional_distance", 1e-12, inputs={"trials": trials},
                                empirical=worst_cond if empirical else None, probability=False,
                                note="E_W delta minus twice the joint distance"),
        ]

    @staticmethod
    def _selection_overlap(trials: int, seed: int) -> BoundReport:
        """|T n T'|/n against p^2 within four standard errors"""
        n, p = 1000, 0.3
        rates = []
        for i in range(trials):
            sel_t = randkit.p_random_select(p, n, seed, f"verify.overlap.{i}.T")
            sel_tp = randkit.p_random_select(p, n, seed, f"verify.overlap.{i}.T_prime")
            rates.append(len(sel_t.intersect(sel_tp).included) / n)
        tolerance = 4 * math.sqrt(p * p * (1 - p * p) / (n * max(trials, 1)))
        empirical = abs(float(np.mean(rates)) - p * p) if rates else None
        return bounds.bound_report("selection_overlap", tolerance, inputs={"n": n, "p": p, "trials": trials},
                                   empirical=empirical, probability=False,
                                   note="deviation of the mean overlap rate from p^2")

    def lemmas(self, trials: int, seed: int) -> List[BoundReport]:
        rng = randkit.stream(seed, "verify.lemmas")
        quantum_trials = min(trials, 1000)
        reports = self._frequency(trials, seed)
        reports.append(self._quantum_sampling(trials, seed))
        reports.extend(self._exchangeable())
        reports.append(self._typical())
        reports.append(self._reconciliation(trials, seed))
        reports.append(self._projection_disturbance(quantum_trials, rng))
        reports.append(self._measured_distance(quantum_trials, rng))
        reports.extend(self._basis_entropy(quantum_trials, rng))
        reports.extend(self._variational_metric(trials, rng))
        reports.append(self._selection_overlap(quantum_trials, seed))
        return reports

    # hashing

    @staticmethod
    def hashing(trials: int, seed: int) -> List[BoundReport]:
        """Exact Toeplitz collision probabilities against 2^-n_out"""
        reports = []
        for n_in, n_out in COLLISION_SHAPES:
            worst = randkit.collision_probability_exhaustive(n_in, n_out)
            reports.append(bounds.bound_report("two_universal", 2.0 ** (-n_out),
                                               inputs={"n_in": n_in, "n_out": n_out, "exact": str(worst)},
                                               empirical=float(worst)))
        return reports

    # smoothing

    @staticmethod
    def _random_dist(rng: np.random.Generator, alphabet) -> np.ndarray:
        p = rng.dirichlet(np.ones(len(alphabet)) * 0.7)
        return p / p.sum()

    def smooth(self, trials: int, seed: int) -> List[BoundReport]:
        rng = randkit.stream(seed, "verify.smooth")
        reports = []
        for alpha in (math.inf, 0):
            worst = 0.0
            for _ in range(trials):
                alphabet = tuple(range(int(rng.integers(2, 4))))
                p = ProbDist.from_array(alphabet, self._random_dist(rng, alphabet))
                eps = float(rng.uniform(0.0, 0.3))
                worst = max(worst, abs(cinfo.smooth_renyi(p, alpha, eps) - cinfo.smooth_renyi_oracle(p, alpha, eps)))
            reports.append(bounds.bound_report("smooth_oracle", 1e-6,
                                               inputs={"alpha": str(alpha), "trials": trials},
                                               empirical=worst, probability=False))

        worst_add = -math.inf
        worst_chain = -math.inf
        chain_trials = min(trials, 50)
        for i in range(trials):
            z_alphabet, w_alphabet = (0, 1), tuple(range(int(rng.integers(2, 4))))
            matrix = self._random_dist(rng, z_alphabet * len(w_alphabet)).reshape(2, len(w_alphabet))
            pzw = JointDist.from_matrix(z_alphabet, w_alphabet, matrix)
            eps, eps_prime = (float(v) for v in rng.uniform(0.0, 0.2, size=2))
            lhs = cinfo.smooth_renyi(pzw, 0, eps + eps_prime)
            rhs = cinfo.smooth_renyi(pzw.marginal(0), 0, eps) + cinfo.smooth_renyi(pzw.marginal(1), 0, eps_prime)
            worst_add = max(worst_add, lhs - rhs)
            if i < chain_trials:
                smoothing = SmoothingParam(eps=eps / 2, eps_prime=eps_prime / 2, eps_dprime=0.05)
                chain = bounds.chain_rule_bound(cinfo.smooth_renyi(pzw, math.inf, smoothing.eps),
                                                cinfo.smooth_renyi(pzw.marginal(1), 0, smoothing.eps_prime),
                                                smoothing)
                exact = cinfo.smooth_min_entropy_cond(pzw, smoothing.eps + smoothing.eps_prime
                                                      + smoothing.eps_dprime)
                worst_chain = max(worst_chain, chain - exact)
        if trials:
            reports.append(bounds.bound_report("entropy_additivity", 0.0, inputs={"trials": trials},
                                               empirical=worst_add, probability=False))
            reports.append(bounds.bound_report("chain_rule", 0.0, inputs={"trials": chain_trials},
                                               empirical=worst_chain, probability=False,
                                               note="bound minus exact smoothed conditional min-entropy"))
            reports.extend(self._qubit_smoothing(min(trials, 50), rng))
        return reports

    @staticmethod
    def _qubit_smoothing(trials: int, rng: np.random.Generator) -> List[BoundReport]:
        """Commuting smoothing against the full-ball qubit oracle, and smoothing under measurement"""
        worst_gap = -math.inf
        worst_measured = -math.inf
        for _ in range(trials):
            rho = qcore.random_density(2, rng)
            eps = float(rng.uniform(0.0, 0.3))
            for alpha in (0, math.inf):
                commuting = qcore.q_entropy(rho, alpha, eps)
                oracle = qcore.q_entropy_qubit_oracle(rho, alpha, eps)
                worst_gap = max(worst_gap, oracle - commuting if math.isinf(alpha) else commuting - oracle)
            povm = qcore.random_orthogonal_povm(2, rng)
            lhs = qcore.q_entropy(rho, 0, min(1.0, math.sqrt(2 * eps)))
            rhs = cinfo.smooth_renyi(qcore.measure(rho, povm), 0, eps)
            worst_measured = max(worst_measured, lhs - rhs)
        return [
            bounds.bound_report("qubit_smoothing_oracle", 1e-9, inputs={"trials": trials}, empirical=worst_gap,
                                probability=False, note="full-ball oracle gain over commuting smoothing"),
            bounds.bound_report("measured_smoothing", 0.0, inputs={"trials": trials}, empirical=worst_measured,
                                probability=False, note="S_0 at sqrt(2 eps) minus H_0 at eps of a qubit measurement"),
        ]

    # privacy amplification

    def pa(self, trials: int, seed: int) -> List[BoundReport]:
        """Exact Eve distance averaged over the Toeplitz family at n = 4"""
        reports = []
        for k, lambdas in enumerate(PA_ATTACKS):
            config = ProtocolConfig(n=4, p=0.05, attack=AttackModel.bell_diagonal(lambdas),
                                    seed=(seed + k) % 2 ** 64, key_length=1, ir_length=1)
            transcript = self.engine.run(config)
            inputs = {"lambdas": ",".join(f"{v:g}" for v in lambdas), "seed": config.seed}
            if transcript.aborted:
                logger.warning(f"pa check for {lambdas} not evaluated: {transcript.abort_reason}")
                reports.append(bounds.bound_report("pa_distance", 1.0, inputs=inputs,
                                                   note=f"run aborted: {transcript.abort_reason}"))
                continue
            record = self.evaluator.averaged_distance(transcript, lambdas)
            inputs.update(n_prime=transcript.sifted_length, r_prime=transcript.ir.r_prime,
                          s_prime=transcript.pa.s_prime, rank=record.rank)
            note = None
            if record.bound >= 1.0:
                note = f"bound {record.bound:.6g} is vacuous and reported clamped to 1"
            reports.append(bounds.bound_report("pa_distance", record.bound, inputs=inputs,
                                               empirical=record.distance, note=note))
        return reports

    def run(self, suite: str, trials: int, seed: int) -> List[BoundReport]:
        """Run one suite, or every suite for "all" """
        if trials < 0:
            raise InvalidInputError(f"trials must be nonnegative, got {trials}")
        runners: Dict[str, Callable[[int, int], List[BoundReport]]] = {
            "lemmas": self.lemmas,
            "hashing": self.hashing,
            "smooth": self.smooth,
            "pa": self.pa,
        }
        if suite == "all":
            names = SUITES
        elif suite in runners:
            names = (suite,)
        else:
            raise InvalidInputError(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
        reports = []
        for name in names:
            logger.info(f"running verification suite {name} with {trials} trials")
            reports.extend(runners[name](trials, seed))
        failed = violations(reports)
        if failed:
            logger.warning(f"{len(failed)} of {len(reports)} checks violated their bound")
        return reports


def violations(reports: List[BoundReport]) -> List[BoundReport]:
    return [r for r in reports if r.satisfied is False]


verification_service = VerificationService()
