"""Finite-size bound calculators for sampling, reconciliation and privacy amplification."""

import logging
import math
from typing import Dict, NamedTuple, Optional

import numpy as np
from scipy import linalg, optimize, stats

from qkdsec.core import cinfo
from qkdsec.core.exceptions import InfeasibleError, InvalidInputError
from qkdsec.schemas.distributions import CondChannel, ProbDist, SmoothingParam
from qkdsec.schemas.quantum import DensityRangeSpec, Povm
from qkdsec.schemas.reports import BoundDirection, BoundReport

logger = logging.getLogger(__name__)

SAMPLING_VARIANTS = ("classical", "classical-conditional", "quantum", "measured")

IR_SIGN_NOTE = "failure reported as 2^-(s-r) + eps; the lemma's statement carries a plus sign on eps"


class SamplingBound(NamedTuple):
    entropy: float
    mu: float
    hmax: float


class ExchangeableBound(NamedTuple):
    bound: float
    exact: Optional[float]


def _check_eps(eps: float, name: str = "eps"):
    if eps < 0:
        raise InvalidInputError(f"{name} must be nonnegative, got {eps}")


def _check_rate(p: float):
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"sampling rate {p} outside (0, 1)")


def _log_term(size: int, alphabet: int) -> float:
    return math.log2(size) * (alphabet - 1) if size > 0 else 0.0


def _independent_rows(a_eq: np.ndarray, b_eq: np.ndarray):
    """Drop linearly dependent equality rows; SLSQP rejects a singular constraint Jacobian"""
    _, r, piv = linalg.qr(a_eq.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > 1e-10 * max(diag[0], 1.0))) if diag.size else 0
    keep = np.sort(piv[:rank])
    return a_eq[keep], b_eq[keep]


def freq_sampling_bound(q: int, n: int, eps: float) -> float:
    """2^q e^{-n eps^2 / 2}"""
    if q < 1 or n < 0:
        raise InvalidInputError(f"need q >= 1 and n >= 0, got q={q}, n={n}")
    _check_eps(eps)
    return 2.0 ** q * math.exp(-n * eps ** 2 / 2)


def quanttom_bound(z_size: int, zbar_size: int, n: int, eps: float) -> float:
    """2^{|Z|+|Zbar|} e^{-n eps^2 / 8}"""
    if z_size < 1 or zbar_size < 1 or n < 0:
        raise InvalidInputError("alphabet sizes must be >= 1 and n >= 0")
    _check_eps(eps)
    return 2.0 ** (z_size + zbar_size) * math.exp(-n * eps ** 2 / 8)


def hmax_quantum(
    range_spec: DensityRangeSpec,
    povm_in: Povm,
    povm_out: Povm,
    q_hat: ProbDist,
    radius_in: float,
    radius_out: float,
) -> float:
    """Max entropy of povm_out statistics within radius_out of some range member whose
    povm_in statistics lie within radius_in of q_hat"""
    if set(q_hat.alphabet) != set(povm_in.labels):
        raise InvalidInputError("observed statistics must be indexed by the estimation POVM labels")
    _check_eps(radius_in, "inner radius")
    _check_eps(radius_out, "outer radius")
    a_in = range_spec.outcome_matrix(povm_in)
    a_out = range_spec.outcome_matrix(povm_out)
    target = np.array([q_hat.prob(label) for label in povm_in.labels])
    k, m_in, m_out = a_in.shape[1], a_in.shape[0], a_out.shape[0]
    # x = [w (k), q (m_out), t_in (m_in), t_out (m_out)]
    size = k + 2 * m_out + m_in
    w_sl = slice(0, k)
    q_sl = slice(k, k + m_out)
    tin_sl = slice(k + m_out, k + m_out + m_in)
    tout_sl = slice(k + m_out + m_in, size)

    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []

    def row():
        return np.zeros(size)

    r = row()
    r[w_sl] = 1.0
    eq_rows.append(r)
    eq_rhs.append(1.0)
    r = row()
    r[q_sl] = 1.0
    eq_rows.append(r)
    eq_rhs.append(1.0)
    for constraint in range_spec.constraints:
        c_mat = range_spec.outcome_matrix(constraint.povm)
        for i, label in enumerate(constraint.povm.labels):
            r = row()
            r[w_sl] = c_mat[i]
            eq_rows.append(r)
            eq_rhs.append(constraint.target.prob(label))

    if radius_in == 0:
        for i in range(m_in):
            r = row()
            r[w_sl] = a_in[i]
            eq_rows.append(r)
            eq_rhs.append(target[i])
    else:
        for i in range(m_in):
            for sign in (1.0, -1.0):
                r = row()
                r[w_sl] = sign * a_in[i]
                r[tin_sl.start + i] = -1.0
                ub_rows.append(r)
                ub_rhs.append(sign * target[i])
        r = row()
        r[tin_sl] = 1.0
        ub_rows.append(r)
        ub_rhs.append(2 * radius_in)

    if radius_out == 0:
        for i in range(m_out):
            r = row()
            r[q_sl.start + i] = 1.0
            r[w_sl] = -a_out[i]
            eq_rows.append(r)
            eq_rhs.append(0.0)
    else:
        for i in range(m_out):
            for sign in (1.0, -1.0):
                r = row()
                r[q_sl.start + i] = sign
                r[w_sl] = -sign * a_out[i]
                r[tout_sl.start + i] = -1.0
                ub_rows.append(r)
                ub_rhs.append(0.0)
        r = row()
        r[tout_sl] = 1.0
        ub_rows.append(r)
        ub_rhs.append(2 * radius_out)

    a_eq, b_eq = _independent_rows(np.array(eq_rows), np.array(eq_rhs))
    a_ub = np.array(ub_rows) if ub_rows else None
    b_ub = np.array(ub_rhs) if ub_rhs else None
    bounds = [(0.0, None)] * (k + m_out)
    bounds += [(0.0, None) if radius_in > 0 else (0.0, 0.0)] * m_in
    bounds += [(0.0, None) if radius_out > 0 else (0.0, 0.0)] * m_out

    # averaging LP vertices for several objectives gives an interior-ish start
    starts = []
    for j in range(k):
        for sign in (1.0, -1.0):
            c = np.zeros(size)
            c[j] = sign
            res = optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
            if res.status == 2:
                raise InfeasibleError("no member of the density range is consistent with the observed statistics")
            if res.status == 0:
                starts.append(res.x)
    if not starts:
        raise InfeasibleError("feasibility programme for the density range did not solve")
    x0 = np.mean(starts, axis=0)

    def value_at(w: np.ndarray) -> float:
        w = np.clip(w, 0.0, None)
        out = np.clip(a_out @ (w / w.sum()), 0.0, None)
        return cinfo.max_entropy_ball(ProbDist.from_array(povm_out.labels, out / out.sum()), radius_out)

    def objective(x):
        q = np.maximum(x[q_sl], 1e-15)
        return float(np.sum(q * np.log2(q)))

    def gradient(x):
        g = np.zeros(size)
        q = np.maximum(x[q_sl], 1e-15)
        g[q_sl] = np.log2(q) + 1.0 / math.log(2)
        return g

    constraints = [{"type": "eq", "fun": lambda x: a_eq @ x - b_eq, "jac": lambda x: a_eq}]
    if a_ub is not None:
        constraints.append({"type": "ineq", "fun": lambda x: b_ub - a_ub @ x, "jac": lambda x: -a_ub})
    res = optimize.minimize(objective, x0, jac=gradient, bounds=bounds, constraints=constraints,
                            method="SLSQP", options={"ftol": 1e-12, "maxiter": 500})
    best = value_at(x0[w_sl])
    violation = np.max(np.abs(a_eq @ res.x - b_eq))
    if a_ub is not None:
        violation = max(violation, float(np.max(a_ub @ res.x - b_ub)))
    if violation <= 1e-7:
        best = max(best, value_at(res.x[w_sl]))
    else:
        logger.warning(f"SLSQP left constraint violation {violation:.3e}; keeping the LP start value")
    logger.debug(f"quantum H^max over {range_spec.label} range: {best:.9f} ({res.message})")
    return best


def sampling_H0_bound(variant: str, **params) -> SamplingBound:
    """Entropy bound on the unsampled part together with the E[mu] failure bound.

    classical: q_hat, n, a_bar, eps, p
    classical-conditional: channel, q_y, n, eps, p
    quantum / measured: range_spec, povm, povm_key, q_hat, n, a_bar, eps, p
    """
    if variant not in SAMPLING_VARIANTS:
        raise InvalidInputError(f"unknown sampling variant {variant!r}; expected one of {SAMPLING_VARIANTS}")
    eps, p, n = float(params["eps"]), float(params["p"]), int(params["n"])
    _check_eps(eps)
    _check_rate(p)
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")

    if variant == "classical":
        q_hat: ProbDist = params["q_hat"]
        a_bar = int(params["a_bar"])
        hmax = cinfo.max_entropy_ball(q_hat, eps / (p * (1 - p)))
        entropy = a_bar * hmax + _log_term(a_bar, q_hat.size)
        mu = 2.0 ** (2 * q_hat.size) * math.exp(-n * eps ** 2 / 2)
        return SamplingBound(entropy=entropy, mu=mu, hmax=hmax)

    if variant == "classical-conditional":
        channel: CondChannel = params["channel"]
        q_y: ProbDist = params["q_y"]
        if set(q_y.alphabet) != set(channel.input_alphabet):
            raise InvalidInputError("Q_Y must be indexed by the channel's conditioning alphabet")
        radius = eps / (p * (1 - p))
        hmax = sum(weight * cinfo.max_entropy_ball(channel.row(y), radius)
                   for y, weight in zip(q_y.alphabet, q_y.probs) if weight > 0)
        x_size, y_size = len(channel.output_alphabet), q_y.size
        entropy = n * (hmax + eps * y_size * math.log2(x_size)) + math.log2(n) * (x_size - 1)
        mu = y_size * 2.0 ** (2 * x_size) * math.exp(-n * eps ** 3 / 2)
        return SamplingBound(entropy=entropy, mu=mu, hmax=hmax)

    range_spec: DensityRangeSpec = params["range_spec"]
    povm: Povm = params["povm"]
    povm_key: Povm = params["povm_key"]
    a_bar = int(params["a_bar"])
    hmax = hmax_quantum(range_spec, povm, povm_key, params["q_hat"], eps / p, eps / (1 - p))
    z_size, zbar_size = len(povm.labels), len(povm_key.labels)
    if variant == "quantum":
        entropy = a_bar * hmax + _log_term(a_bar, range_spec.dim)
        mu = 2.0 ** ((range_spec.dim + z_size) / 2) * math.exp(-n * eps ** 2 / 16)
    else:
        entropy = a_bar * hmax + _log_term(a_bar, zbar_size)
        mu = quanttom_bound(z_size, zbar_size, n, eps)
    return SamplingBound(entropy=entropy, mu=mu, hmax=hmax)


def hinf_exchangeable(n: int, alphabet_size: int, Q: ProbDist, exact: bool = True) -> ExchangeableBound:
    """Min-entropy of a uniform draw from the type class of Q: log of the multinomial and its lower bound"""
    if n < 1 or alphabet_size < Q.size:
        raise InvalidInputError(f"need n >= 1 and alphabet size >= {Q.size}")
    bound = n * cinfo.shannon_entropy(Q) - alphabet_size * (math.log2(n) + 1)
    if not exact:
        return ExchangeableBound(bound=bound, exact=None)
    counts = n * Q.array
    rounded = np.rint(counts)
    if np.max(np.abs(counts - rounded)) > 1e-9:
        raise InvalidInputError(f"n*Q is not integral for n={n}")
    multinomial = math.factorial(n)
    for c in rounded.astype(int):
        multinomial //= math.factorial(int(c))
    return ExchangeableBound(bound=bound, exact=math.log2(multinomial))


def error_rate_upper(errors: int, samples: int, confidence: float) -> float:
    """One-sided Clopper-Pearson upper bound on a binomial error rate"""
    if samples < 0 or not 0 <= errors <= samples:
        raise InvalidInputError(f"need 0 <= errors <= samples, got {errors} of {samples}")
    if not 0.0 < confidence < 1.0:
        raise InvalidInputError(f"confidence must lie in (0, 1), got {confidence}")
    if errors == samples:
        return 1.0
    return float(stats.beta.ppf(confidence, errors + 1, samples - errors))


def ir_failure_bound(r: float, s: float, eps: float) -> float:
    """2^{-(s-r)} + eps for hash length s against an H_0 bound r"""
    if s < r:
        raise InvalidInputError(f"hash length {s} below the H_0 bound {r}")
    _check_eps(eps)
    return 2.0 ** (-(s - r)) + eps


def pa_distance_bound(n: float, r: float, s: float, eps: float, eps_prime: float) -> float:
    """3/4 2^{-(n-r-s)/2} + eps + eps'"""
    if min(n, r, s) < 0:
        raise InvalidInputError("n, r and s must be nonnegative")
    _check_eps(eps)
    _check_eps(eps_prime, "eps'")
    return 0.75 * 2.0 ** (-(n - r - s) / 2) + eps + eps_prime


def chain_rule_bound(hinf_zw: float, h0_w: float, eps: SmoothingParam) -> float:
    """H_inf(ZW) - H_0(W) - log(1/eps'')"""
    if eps.eps_dprime <= 0:
        raise InvalidInputError("the chain rule needs eps'' > 0")
    return hinf_zw - h0_w - math.log2(1.0 / eps.eps_dprime)


def bound_report(
    lemma: str,
    value: float,
    inputs: Optional[Dict] = None,
    empirical: Optional[float] = None,
    direction: BoundDirection = BoundDirection.UPPER,
    probability: bool = True,
    note: Optional[str] = None,
) -> BoundReport:
    reported = min(1.0, max(0.0, value)) if probability else value
    return BoundReport(lemma=lemma, inputs=inputs or {}, value=value, reported=reported,
                       empirical=empirical, direction=direction, note=note)
