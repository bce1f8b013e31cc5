"""Classical information theory: distances, entropies, smoothing, majorization."""

import itertools
import logging
import math
from collections import Counter
from typing import Any, Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy import optimize, special, stats

from qkdsec.core.config import EXACT_COND_MAX_ALPHABET, MAJORIZATION_TOL, TYPICAL_ENUM_CAP
from qkdsec.core.exceptions import CapacityError, InvalidInputError, UnsupportedError
from qkdsec.schemas.distributions import JointDist, ProbDist, SmoothingParam

logger = logging.getLogger(__name__)

Eps = Union[float, SmoothingParam]


def eps_value(eps: Eps) -> float:
    """Extract and range-check a smoothing radius"""
    value = eps.eps if isinstance(eps, SmoothingParam) else float(eps)
    if not 0.0 <= value <= 1.0:
        raise InvalidInputError(f"smoothing radius {value} outside [0, 1]")
    return value


def _aligned(P: ProbDist, Q: ProbDist):
    if set(P.alphabet) != set(Q.alphabet):
        raise InvalidInputError("distributions are defined on different alphabets")
    q = Q.as_dict()
    return P.array, np.array([q[s] for s in P.alphabet])


def variational_distance(P: ProbDist, Q: ProbDist) -> float:
    """Half the L1 distance between two distributions on one alphabet"""
    p, q = _aligned(P, Q)
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def non_uniformity(P: ProbDist) -> float:
    """Distance to the uniform distribution on the same alphabet"""
    return variational_distance(P, ProbDist.uniform(P.alphabet))


def frequency_distribution(z: Sequence[Any], alphabet: Sequence[Any] = None) -> ProbDist:
    """Empirical distribution Q_z with exact integer counts divided once"""
    if len(z) == 0:
        raise InvalidInputError("frequency distribution of an empty tuple")
    counts = Counter(z)
    if alphabet is None:
        try:
            alphabet = sorted(counts)
        except TypeError:
            alphabet = list(dict.fromkeys(z))
    missing = set(counts) - set(alphabet)
    if missing:
        raise InvalidInputError(f"symbols {sorted(map(str, missing))} are not in the declared alphabet")
    n = len(z)
    return ProbDist(alphabet=tuple(alphabet), probs=tuple(counts.get(s, 0) / n for s in alphabet))


def h_array(x) -> np.ndarray:
    """Binary entropy without range checks, for vectorised callers"""
    x = np.asarray(x, dtype=float)
    return (special.entr(x) + special.entr(1.0 - x)) / math.log(2)


def binary_entropy(eps: float) -> float:
    """h(eps) = -eps log eps - (1-eps) log(1-eps)"""
    if not 0.0 <= eps <= 1.0:
        raise InvalidInputError(f"binary entropy argument {eps} outside [0, 1]")
    return float(h_array(eps))


def shannon_entropy(P: Union[ProbDist, Sequence[float], np.ndarray]) -> float:
    probs = P.array if isinstance(P, ProbDist) else np.asarray(P, dtype=float)
    if probs.sum() <= 0:
        return 0.0
    return float(abs(stats.entropy(probs, base=2)))


def renyi_entropy(P: ProbDist, alpha: float) -> float:
    """Renyi entropy in bits; alpha may be math.inf"""
    if alpha < 0:
        raise InvalidInputError(f"Renyi order must be nonnegative, got {alpha}")
    p = P.array[P.array > 0]
    if alpha == 0:
        return math.log2(len(p))
    if alpha == 1:
        return shannon_entropy(p)
    if math.isinf(alpha):
        return float(-np.log2(p.max()))
    return float(np.log2(np.sum(p ** alpha)) / (1.0 - alpha))


def conditional_entropy(PXY: JointDist) -> float:
    """H(X|Y) = sum_y P(y) H(X|Y=y)"""
    py = PXY.marginal(1)
    channel = PXY.conditional(1)
    return float(sum(w * shannon_entropy(row) for w, row in zip(py.probs, channel.rows) if w > 0))


def mutual_information(PXY: JointDist) -> float:
    """H(X) - H(X|Y), clipped at 0 against rounding"""
    return max(0.0, shannon_entropy(PXY.marginal(0)) - conditional_entropy(PXY))


def majorizes(zp: Sequence[float], z: Sequence[float]) -> bool:
    """True iff z is majorized by zp (every top-k sum of z is at most that of zp)"""
    if len(zp) != len(z):
        raise InvalidInputError(f"length mismatch: {len(zp)} vs {len(z)}")
    top_zp = np.cumsum(np.sort(np.asarray(zp, dtype=float))[::-1])
    top_z = np.cumsum(np.sort(np.asarray(z, dtype=float))[::-1])
    return bool(np.all(top_z <= top_zp + MAJORIZATION_TOL))


def maximal_coupling(P: ProbDist, Q: ProbDist) -> JointDist:
    """Joint distribution of (Z, Z') with marginals P, Q and Prob[Z != Z'] = delta(P, Q)"""
    p, q = _aligned(P, Q)
    common = np.minimum(p, q)
    joint = np.diag(common)
    delta = 0.5 * np.abs(p - q).sum()
    if delta > 0:
        joint = joint + np.outer(p - common, q - common) / delta
    return JointDist.from_matrix(P.alphabet, P.alphabet, joint)


def push_forward(P: ProbDist, f: Callable[[Any], Any]) -> ProbDist:
    """Distribution of f(Z)"""
    mass = {}
    for s, p in zip(P.alphabet, P.probs):
        key = f(s)
        mass[key] = mass.get(key, 0.0) + p
    return ProbDist.from_array(tuple(mass), list(mass.values()))


def expected_conditional_distance(PZW: JointDist, QZW: JointDist) -> float:
    """E_W[delta(P_{Z|W=w}, Q_{Z|W=w})] with W distributed as under PZW"""
    pw = PZW.marginal(1)
    pc, qc = PZW.conditional(1), QZW.conditional(1)
    total = 0.0
    for w, weight in zip(pw.alphabet, pw.probs):
        if weight > 0:
            total += weight * variational_distance(pc.row(w), qc.row(w))
    return total


def _water_level(p_desc: np.ndarray, eps: float) -> float:
    """Level lam with sum max(p - lam, 0) = eps, clamped at the uniform level"""
    k = len(p_desc)
    csum = np.cumsum(p_desc)
    lam = 0.0
    for i in range(k):
        lam = (csum[i] - eps) / (i + 1)
        if i + 1 == k or lam >= p_desc[i + 1]:
            break
    return max(lam, 1.0 / k)


def flatten_within(Q: ProbDist, radius: float) -> ProbDist:
    """Most uniform distribution within variational distance `radius` of Q"""
    if radius < 0:
        raise InvalidInputError("ball radius must be nonnegative")
    k = Q.size
    q = Q.array
    if radius == 0:
        return Q
    if radius >= non_uniformity(Q) - 1e-15:
        return ProbDist.uniform(Q.alphabet)
    top = _water_level(np.sort(q)[::-1], radius)
    # raise the bottom: smallest lam_lo with sum max(lam_lo - q, 0) = radius
    q_asc = np.sort(q)
    csum = np.cumsum(q_asc)
    low = q_asc[0]
    for i in range(k):
        low = (radius + csum[i]) / (i + 1)
        if i + 1 == k or low <= q_asc[i + 1]:
            break
    if low >= top:
        return ProbDist.uniform(Q.alphabet)
    return ProbDist.from_array(Q.alphabet, np.clip(q, low, top))


def max_entropy_ball(Q: ProbDist, radius: float) -> float:
    """Maximum Shannon entropy over the variational ball of `radius` around Q"""
    return shannon_entropy(flatten_within(Q, radius))


def smooth_renyi(P: ProbDist, alpha: float, eps: Eps) -> float:
    """Smooth Renyi entropy for alpha in {0, inf}"""
    e = eps_value(eps)
    if math.isinf(alpha):
        if e == 0:
            return renyi_entropy(P, math.inf)
        lam = _water_level(np.sort(P.array)[::-1], e)
        return float(-math.log2(lam))
    if alpha == 0:
        p_asc = np.sort(P.array[P.array > 0])
        removed, kept = 0.0, len(p_asc)
        for p in p_asc[:-1]:
            if removed + p > e + 1e-12:
                break
            removed += p
            kept -= 1
        return math.log2(kept)
    raise UnsupportedError(f"smoothing is implemented for orders 0 and inf only, got {alpha}")


def smooth_renyi_oracle(P: ProbDist, alpha: float, eps: Eps) -> float:
    """Reference value by linear programming (alpha=inf) or subset enumeration (alpha=0)"""
    e = eps_value(eps)
    p = P.array
    k = len(p)
    if math.isinf(alpha):
        # variables (q_1..q_k, d_1..d_k, t); minimise t
        c = np.zeros(2 * k + 1)
        c[-1] = 1.0
        eye = np.eye(k)
        a_ub = np.vstack([
            np.hstack([eye, -eye, np.zeros((k, 1))]),
            np.hstack([-eye, -eye, np.zeros((k, 1))]),
            np.hstack([np.zeros(k), np.ones(k), [0.0]])[None, :],
            np.hstack([eye, np.zeros((k, k)), -np.ones((k, 1))]),
        ])
        b_ub = np.concatenate([p, -p, [2 * e], np.zeros(k)])
        a_eq = np.hstack([np.ones(k), np.zeros(k), [0.0]])[None, :]
        res = optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                               bounds=[(0, None)] * (2 * k + 1), method="highs")
        return float(-math.log2(res.x[-1]))
    if alpha == 0:
        best = k
        for size in range(1, k + 1):
            if any(p[list(idx)].sum() >= 1.0 - e - 1e-12 for idx in itertools.combinations(range(k), size)):
                best = size
                break
        return math.log2(best)
    raise UnsupportedError(f"oracle is implemented for orders 0 and inf only, got {alpha}")


def _cond_feasible(p: np.ndarray, nz: int, nw: int, eps: float, c: float) -> bool:
    m = nz * nw
    eye = np.eye(m)
    rows = [np.hstack([eye, -eye]), np.hstack([-eye, -eye]), np.hstack([np.zeros(m), np.ones(m)])[None, :]]
    rhs = [p, -p, [2 * eps]]
    # q(z, w) - c * sum_z' q(z', w) <= 0, flattened index z * nw + w
    guess = np.zeros((m, 2 * m))
    for z in range(nz):
        for w in range(nw):
            row = z * nw + w
            for z2 in range(nz):
                guess[row, z2 * nw + w] -= c
            guess[row, row] += 1.0
    rows.append(guess)
    rhs.append(np.zeros(m))
    a_eq = np.hstack([np.ones(m), np.zeros(m)])[None, :]
    res = optimize.linprog(np.zeros(2 * m), A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                           A_eq=a_eq, b_eq=[1.0], bounds=[(0, None)] * (2 * m), method="highs")
    return res.status == 0


def smooth_min_entropy_cond(PZW: JointDist, eps: Eps) -> float:
    """Smooth conditional min-entropy max over the eps-ball of min_w H_inf(Z|W=w)"""
    e = eps_value(eps)
    zs, ws = PZW.axis_alphabet(0), PZW.axis_alphabet(1)
    if len(zs) > EXACT_COND_MAX_ALPHABET or len(ws) > EXACT_COND_MAX_ALPHABET:
        raise UnsupportedError(
            f"exact conditional smoothing supports alphabets up to {EXACT_COND_MAX_ALPHABET}; "
            "use the sampling bounds in qkdsec.core.bounds for larger inputs"
        )
    m = PZW.matrix()
    if e == 0:
        col = m.sum(axis=0)
        worst = max(m[:, j].max() / col[j] for j in range(len(ws)) if col[j] > 0)
        return float(-math.log2(worst))
    p = m.reshape(-1)
    lo, hi = 1.0 / len(zs), 1.0
    if _cond_feasible(p, len(zs), len(ws), e, lo):
        return math.log2(len(zs))
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        if _cond_feasible(p, len(zs), len(ws), e, mid):
            hi = mid
        else:
            lo = mid
    logger.debug(f"conditional smoothing converged at guess probability {hi:.12f}")
    return float(-math.log2(hi))


class TypicalSetSize(NamedTuple):
    exact: Union[int, None]
    bound: float


def _compositions(n: int, q: int):
    if q == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, q - 1):
            yield (first,) + rest


def typical_set(q: int, n: int, r: float, exact: bool = True) -> TypicalSetSize:
    """Size of the r-typical set over a q-ary alphabet and the 2^{nr} n^{q-1} bound"""
    if q < 2 or n < 1 or r < 0:
        raise InvalidInputError("typical set needs q >= 2, n >= 1, r >= 0")
    bound = 2.0 ** (n * r) * float(n) ** (q - 1)
    if not exact:
        return TypicalSetSize(exact=None, bound=bound)
    if q ** n > TYPICAL_ENUM_CAP:
        raise CapacityError(f"{q}^{n} tuples exceed the enumeration cap {TYPICAL_ENUM_CAP}")
    count = 0
    for comp in _compositions(n, q):
        if shannon_entropy(np.array(comp, dtype=float) / n) <= r + 1e-12:
            multinomial = math.factorial(n)
            for c in comp:
                multinomial //= math.factorial(c)
            count += multinomial
    return TypicalSetSize(exact=count, bound=bound)
