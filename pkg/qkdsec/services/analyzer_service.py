import logging
import math
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import optimize

from qkdsec.core.cinfo import binary_entropy, shannon_entropy
from qkdsec.core.config import (
    B92_ALPHA_STEP,
    B92_NOISE_BRACKET,
    B92_X_SLACK,
    BELL_NOISE_BRACKET,
    DEFAULT_B92_ALPHA,
    GOLDEN_TOL,
    THRESHOLD_TOL,
)
from qkdsec.core.exceptions import InfeasibleError, InvalidInputError
from qkdsec.schemas.reports import B92Chain, RateReport

logger = logging.getLogger(__name__)

BELL_PROTOCOLS = ("bb84", "six_state")
B92_MAX_ALPHA = 1 / math.sqrt(2)


def _protocol_key(protocol: str) -> str:
    key = protocol.replace("-", "_").lower()
    if key not in BELL_PROTOCOLS + ("b92",):
        raise InvalidInputError(f"unknown protocol {protocol!r}")
    return key


def _check_alpha(alpha: float):
    if not 0.0 < alpha < B92_MAX_ALPHA:
        raise InvalidInputError(f"B92 alpha {alpha} outside (0, 1/sqrt(2))")


class RateAnalyzer:
    """Key rates and noise thresholds of BB84, six-state and B92"""

    # Bell-diagonal protocols

    @staticmethod
    def _bb84_lambdas(eps: float, lam4: float) -> Tuple[float, float, float, float]:
        return (1 - 2 * eps + lam4, eps - lam4, eps - lam4, lam4)

    @staticmethod
    def _bb84_conditioned_entropy(eps: float, lam4: float) -> float:
        if eps == 0:
            return 0.0
        return (1 - eps) * binary_entropy((1 - 2 * eps + lam4) / (1 - eps)) + eps * binary_entropy((eps - lam4) / eps)

    def bb84_worst_case(self, eps: float, conditioned: bool = False) -> Tuple[float, float]:
        """(lambda4, adversarial entropy) maximizing Eve's entropy over lambda4 in [0, eps]"""
        if not 0.0 <= eps < 0.5:
            raise InvalidInputError(f"BB84 QBER {eps} outside [0, 0.5)")
        if eps == 0:
            return 0.0, 0.0
        if conditioned:
            def objective(lam4):
                return -self._bb84_conditioned_entropy(eps, lam4)
        else:
            def objective(lam4):
                return -shannon_entropy(np.array(self._bb84_lambdas(eps, lam4)))
        res = optimize.minimize_scalar(objective, bounds=(0.0, eps), method="bounded",
                                       options={"xatol": GOLDEN_TOL * 1e-3})
        lam4 = float(res.x)
        return lam4, float(-res.fun)

    def bb84_rate(self, eps: float, conditioned: bool = False) -> RateReport:
        lam4, entropy = self.bb84_worst_case(eps, conditioned)
        rate = 1 - binary_entropy(eps) - entropy
        return RateReport(protocol="bb84", noise=eps, noise_kind="qber", conditioned=conditioned, rate=rate,
                          adversarial_entropy=entropy, lambdas=self._bb84_lambdas(eps, lam4))

    @staticmethod
    def six_state_lambdas(eps: float) -> Tuple[float, float, float, float]:
        return (1 - 1.5 * eps, eps / 2, eps / 2, eps / 2)

    def six_state_entropy(self, eps: float) -> float:
        if not 0.0 <= eps < 2 / 3:
            raise InvalidInputError(f"six-state QBER {eps} outside [0, 2/3)")
        return shannon_entropy(np.array(self.six_state_lambdas(eps)))

    def six_state_rate(self, eps: float, conditioned: bool = False) -> RateReport:
        h4 = self.six_state_entropy(eps)
        if conditioned:
            rate, entropy = 1 - h4, h4 - binary_entropy(eps)
            equation = "R = 1 - H(1-3e/2, e/2, e/2, e/2)"
        else:
            rate, entropy = 1 - binary_entropy(eps) - h4, h4
            equation = "R = 1 - h(e) - H(1-3e/2, e/2, e/2, e/2)"
        return RateReport(protocol="six_state", noise=eps, noise_kind="qber", conditioned=conditioned, rate=rate,
                          adversarial_entropy=entropy, lambdas=self.six_state_lambdas(eps), equation=equation)

    def adversarial_entropy(self, protocol: str, error_rates: Iterable[float], conditioned: bool = False) -> float:
        """Per-position worst-case entropy of Eve for the estimated error rates (the u-term rate)"""
        key = _protocol_key(protocol)
        eps = max(error_rates)
        if key == "bb84":
            return self.bb84_worst_case(eps, conditioned)[1]
        if key == "six_state":
            h4 = self.six_state_entropy(eps)
            return h4 - binary_entropy(eps) if conditioned else h4
        raise InvalidInputError("B92 adversarial entropy comes from the overlap chain, not error rates")

    # B92

    @staticmethod
    def _minimal_overlap(delta: float, eta: float, c: float) -> float:
        """Smallest <e+|e-> compatible with unitarity given Re<e|e~> = c"""
        if delta == 0:
            return 1.0
        k = 2 * math.sqrt(eta * delta * (1 - delta) / (1 - eta))
        if abs(c) < 1e-12:
            nu = (1 - delta) ** 2 / k ** 2
            return (nu - 1) / (nu + 1)

        def g(e):
            return (1 - delta) * (1 - e) - k * (c * e + math.sqrt(max(0.0, (1 - c * c) * (1 - e * e))))

        grid = np.linspace(-1.0, 1.0, 2001)
        values = np.array([g(e) for e in grid])
        feasible = np.flatnonzero(values <= 0)
        if feasible.size == 0:
            raise InfeasibleError("inconsistent b92 overlaps: no environment overlap satisfies unitarity")
        i = int(feasible[0])
        if i == 0:
            return -1.0
        return float(optimize.brentq(g, grid[i - 1], grid[i], xtol=1e-14))

    @staticmethod
    def worst_case_environment(alpha: float, delta: float, e: float) -> Tuple[float, float]:
        """Instantiate environment vectors for overlap e; returns (realized overlap, unitarity residual)"""
        beta = math.sqrt(1 - alpha ** 2)
        eta = (2 * alpha * beta) ** 2
        d = beta ** 2 - alpha ** 2

        def solve(e_val: float) -> Optional[float]:
            s = math.sqrt(max(0.0, 1 - e_val ** 2))
            a = -delta * d * (1 - e_val)
            b = 4 * alpha * beta * math.sqrt(delta * (1 - delta)) * s
            c0 = -(1 - delta) * d * (1 - e_val)
            if abs(a) < 1e-15:
                if abs(b) < 1e-15:
                    return 0.0 if abs(c0) < 1e-12 else None
                roots = [-c0 / b]
            else:
                disc = b * b - 4 * a * c0
                if disc < -1e-14:
                    return None
                sq = math.sqrt(max(0.0, disc))
                roots = [(-b + sq) / (2 * a), (-b - sq) / (2 * a)]
            inside = [r for r in roots if -1e-9 <= r <= 1 + 1e-9]
            return min(max(min(inside), 0.0), 1.0) if inside else None

        kappa = solve(e)
        if kappa is None:
            nu2 = (1 - eta) / (4 * eta * delta * (1 - delta))
            e = (nu2 - 1) / (nu2 + 1)
            kappa = solve(e)
            if kappa is None:
                raise InfeasibleError("inconsistent b92 overlaps: worst-case environment cannot be instantiated")
        s = math.sqrt(max(0.0, 1 - e ** 2))
        r = math.sqrt(max(0.0, 1 - kappa ** 2))
        env_plus, env_minus = np.array([1.0, 0.0, 0.0]), np.array([e, s, 0.0])
        envt_plus, envt_minus = np.array([0.0, kappa, r]), np.array([s * kappa, -e * kappa, -r])
        u_plus, u_minus = np.array([beta, alpha]), np.array([beta, -alpha])
        ut_plus, ut_minus = np.array([alpha, -beta]), np.array([alpha, beta])
        keep, flip = math.sqrt(1 - delta), math.sqrt(delta)
        psi_plus = keep * np.kron(u_plus, env_plus) + flip * np.kron(ut_plus, envt_plus)
        psi_minus = keep * np.kron(u_minus, env_minus) + flip * np.kron(ut_minus, envt_minus)
        residual = abs(float(np.vdot(psi_plus, psi_minus)) - d)
        return e, residual

    def b92_chain(self, alpha: float, delta: float, gamma: float, c: float = 0.0) -> B92Chain:
        _check_alpha(alpha)
        if not 0.0 <= delta <= 1.0 or not 0.0 < gamma <= 1.0:
            raise InvalidInputError(f"B92 probabilities out of range: delta={delta}, gamma={gamma}")
        beta = math.sqrt(1 - alpha ** 2)
        eta = (2 * alpha * beta) ** 2
        nu = None if delta == 0 else (1 - delta) * (1 - eta) / (4 * delta * eta)
        e = self._minimal_overlap(delta, eta, c)
        f = ((1 - delta) * e - (1 - eta)) / gamma
        x = (1 + f) / 2
        if x < -B92_X_SLACK or x > 1 + B92_X_SLACK:
            raise InvalidInputError(f"B92 chain value x={x} far outside [0, 1]")
        x = min(1.0, max(0.0, x))
        conservative = f < 0
        s_sigma = 1.0 if conservative else binary_entropy(x)
        if conservative:
            logger.debug(f"negative f-overlap {f:.6g} at alpha={alpha}, delta={delta}; using S(sigma) = 1")
        epsilon = delta / (gamma + delta)
        acceptance = (gamma + delta) / 2
        realized, residual = (None, None)
        if abs(c) < 1e-12:
            realized, residual = self.worst_case_environment(alpha, delta, e)
        return B92Chain(alpha=alpha, delta=delta, gamma=gamma, eta=eta, nu=nu, re_e_tilde=c, e_overlap=e,
                        f_overlap=f, x=x, epsilon=epsilon, acceptance=acceptance, s_sigma=s_sigma,
                        conservative=conservative, instantiated_overlap=realized, unitarity_residual=residual)

    @staticmethod
    def _b92_rate_from_chain(chain: B92Chain) -> float:
        eps = chain.epsilon
        return chain.acceptance * (1 - binary_entropy(eps) - eps - (1 - eps) * chain.s_sigma)

    def b92_rate_depolarizing(self, p: float, alpha: float) -> RateReport:
        if not 0.0 <= p <= 0.25:
            raise InvalidInputError(f"depolarizing probability {p} outside [0, 0.25]")
        _check_alpha(alpha)
        beta = math.sqrt(1 - alpha ** 2)
        eta = (2 * alpha * beta) ** 2
        delta = 2 * p / 3
        gamma = (1 - 2 * delta) * eta + delta
        chain = self.b92_chain(alpha, delta, gamma, 0.0)
        return RateReport(protocol="b92", noise=p, noise_kind="depolarizing", alpha=alpha,
                          rate=self._b92_rate_from_chain(chain), adversarial_entropy=chain.s_sigma, b92=chain)

    @staticmethod
    def depolarizing_pxy(p: float, alpha: float) -> Tuple[float, float, float, float]:
        """(p00, p01, p10, p11) of the depolarizing channel"""
        beta = math.sqrt(1 - alpha ** 2)
        eta = (2 * alpha * beta) ** 2
        p00 = ((1 - 4 * p / 3) * eta + 2 * p / 3) / 4
        return (p00, p / 6, p / 6, p00)

    def b92_general_bound(self, p00: float, p01: float, p10: float, p11: float, alpha: float,
                          re_e_tilde: Optional[float] = None) -> RateReport:
        _check_alpha(alpha)
        if abs(p00 - p11) > 1e-9 or abs(p01 - p10) > 1e-9:
            raise InvalidInputError("asymmetric p_xy: symmetrize the statistics by random flips or abort")
        delta, gamma = 4 * p01, 4 * p00
        if not 0.0 <= delta <= 1.0 or not 0.0 < gamma <= 1.0:
            raise InvalidInputError(f"p_xy imply delta={delta}, gamma={gamma} outside [0, 1]")
        beta = math.sqrt(1 - alpha ** 2)
        eta = (2 * alpha * beta) ** 2
        if re_e_tilde is None:
            scale = 2 * math.sqrt((1 - delta) * delta) * 2 * alpha * beta * (alpha ** 2 - beta ** 2)
            c = 0.0 if scale == 0 else (gamma - (1 - 2 * delta) * eta - delta) / scale
            if abs(c) < 1e-12:
                c = 0.0
        else:
            c = float(re_e_tilde)
        if abs(c) > 1.0:
            raise InvalidInputError(f"Re<e|e~> = {c} outside [-1, 1]; statistics inconsistent with alpha")
        chain = self.b92_chain(alpha, delta, gamma, c)
        return RateReport(protocol="b92", noise=3 * delta / 2, noise_kind="p_xy", alpha=alpha,
                          rate=self._b92_rate_from_chain(chain), adversarial_entropy=chain.s_sigma, b92=chain)

    # thresholds and sweeps

    def rate(self, protocol: str, noise: float, conditioned: bool = False, alpha: Optional[float] = None,
             noise_kind: str = "qber") -> RateReport:
        key = _protocol_key(protocol)
        if key == "b92":
            if noise_kind != "depolarizing":
                raise InvalidInputError(f"B92 noise must be a depolarizing probability, got {noise_kind}")
            return self.b92_rate_depolarizing(noise, alpha if alpha is not None else DEFAULT_B92_ALPHA)
        eps = 2 * noise / 3 if noise_kind == "depolarizing" else noise
        report = self.bb84_rate(eps, conditioned) if key == "bb84" else self.six_state_rate(eps, conditioned)
        if noise_kind == "depolarizing":
            report = report.model_copy(update={"noise": noise, "noise_kind": "depolarizing"})
        return report

    def _bisect(self, func, bracket) -> float:
        lo, hi = bracket
        f_lo, f_hi = func(lo), func(hi)
        if f_lo <= 0 or f_hi >= 0:
            raise InfeasibleError(f"no sign change of the rate in [{lo}, {hi}]: R={f_lo:.3g}, {f_hi:.3g}")
        return float(optimize.bisect(func, lo, hi, xtol=THRESHOLD_TOL))

    def _b92_root(self, alpha: float) -> float:
        def func(p):
            return self.b92_rate_depolarizing(p, alpha).rate
        try:
            return self._bisect(func, B92_NOISE_BRACKET)
        except InfeasibleError:
            return 0.0

    def threshold(self, protocol: str, conditioned: bool = False, alpha: Optional[float] = None) -> RateReport:
        """Largest noise with positive rate; B92 also optimizes alpha when none is given"""
        key = _protocol_key(protocol)
        if key == "b92":
            if alpha is not None:
                _check_alpha(alpha)
                best_alpha, best_p = alpha, self._bisect(
                    lambda p: self.b92_rate_depolarizing(p, alpha).rate, B92_NOISE_BRACKET)
            else:
                grid = np.arange(1, int(round(0.705 / B92_ALPHA_STEP)) + 1) * B92_ALPHA_STEP
                roots = [self._b92_root(float(a)) for a in grid]
                i = int(np.argmax(roots))
                lo = max(B92_ALPHA_STEP / 2, float(grid[i]) - B92_ALPHA_STEP)
                hi = min(B92_MAX_ALPHA - 1e-6, float(grid[i]) + B92_ALPHA_STEP)
                best_alpha, best_p = float(grid[i]), roots[i]
                try:
                    res = optimize.minimize_scalar(lambda a: -self._b92_root(a), bracket=(lo, best_alpha, hi),
                                                   method="golden", tol=THRESHOLD_TOL)
                    if lo <= res.x <= hi and -res.fun >= best_p:
                        best_alpha, best_p = float(res.x), -float(res.fun)
                except (ValueError, RuntimeError) as e:
                    # grid maximum at the edge of the alpha range leaves no interior bracket
                    logger.debug(f"golden-section refinement skipped: {e}")
                logger.info(f"b92 threshold p={best_p:.6f} at alpha={best_alpha:.6f}")
            report = self.b92_rate_depolarizing(best_p, best_alpha)
            return report.model_copy(update={"threshold": best_p, "threshold_alpha": best_alpha,
                                             "tolerance": THRESHOLD_TOL})
        if key == "bb84":
            def func(eps):
                return self.bb84_rate(eps, conditioned).rate
        else:
            def func(eps):
                return self.six_state_rate(eps, conditioned).rate
        root = self._bisect(func, BELL_NOISE_BRACKET)
        report = self.rate(key, root, conditioned)
        return report.model_copy(update={"threshold": root, "tolerance": THRESHOLD_TOL})

    def rate_sweep(self, protocol: str, values: Iterable[float], conditioned: bool = False,
                   alpha: Optional[float] = None, noise_kind: str = "qber") -> List[RateReport]:
        return [self.rate(protocol, float(v), conditioned, alpha, noise_kind) for v in values]


rate_analyzer = RateAnalyzer()
