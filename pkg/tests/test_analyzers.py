import math

import pytest

from qkdsec.core.cinfo import binary_entropy
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.services.analyzer_service import RateAnalyzer


@pytest.fixture
def analyzer():
    return RateAnalyzer()


class TestBellProtocols:
    def test_bb84_conditioned_rate(self, analyzer):
        report = analyzer.rate("bb84", 0.05, conditioned=True)
        assert report.rate == pytest.approx(1 - 2 * binary_entropy(0.05), abs=1e-6)
        assert report.lambdas[3] == pytest.approx(0.05 ** 2, abs=1e-5)

    def test_bb84_unconditioned_worst_case(self, analyzer):
        report = analyzer.rate("bb84", 0.05)
        assert report.rate == pytest.approx(1 - 3 * binary_entropy(0.05), abs=1e-6)

    @pytest.mark.parametrize("eps", [0.01, 0.05, 0.1])
    @pytest.mark.parametrize("conditioned", [False, True])
    def test_worst_case_weight_is_eps_squared(self, analyzer, eps, conditioned):
        lam4, entropy = analyzer.bb84_worst_case(eps, conditioned)
        assert lam4 == pytest.approx(eps ** 2, abs=1e-6)
        if not conditioned:
            assert entropy == pytest.approx(2 * binary_entropy(eps), abs=1e-9)

    def test_noiseless_rates_are_one(self, analyzer):
        assert analyzer.rate("bb84", 0.0).rate == pytest.approx(1.0)
        assert analyzer.rate("six-state", 0.0).rate == pytest.approx(1.0)

    def test_depolarizing_maps_to_qber(self, analyzer):
        report = analyzer.rate("bb84", 0.09, noise_kind="depolarizing")
        assert report.noise_kind == "depolarizing"
        assert report.rate == pytest.approx(analyzer.rate("bb84", 0.06).rate)

    @pytest.mark.parametrize("protocol, conditioned, expected, tol", [
        ("bb84", False, 0.0615, 1e-3),
        ("bb84", True, 0.1100, 5e-4),
        ("six-state", False, 0.0684, 1e-3),
        ("six-state", True, 0.1262, 5e-4),
    ])
    def test_thresholds(self, analyzer, protocol, conditioned, expected, tol):
        report = analyzer.threshold(protocol, conditioned)
        assert report.threshold == pytest.approx(expected, abs=tol)
        assert report.rate == pytest.approx(0.0, abs=1e-4)

    def test_sweep(self, analyzer):
        reports = analyzer.rate_sweep("six_state", [0.0, 0.05, 0.1])
        assert [r.noise for r in reports] == [0.0, 0.05, 0.1]
        assert reports[0].rate > reports[1].rate > reports[2].rate

    def test_adversarial_entropy(self, analyzer):
        assert analyzer.adversarial_entropy("six_state", [0.02, 0.03]) == pytest.approx(
            analyzer.six_state_entropy(0.03))
        with pytest.raises(InvalidInputError):
            analyzer.adversarial_entropy("b92", [0.01])

    def test_out_of_range(self, analyzer):
        with pytest.raises(InvalidInputError):
            analyzer.rate("bb84", 0.5)
        with pytest.raises(InvalidInputError):
            analyzer.rate("e91", 0.01)


class TestB92:
    def test_noiseless_rate_is_acceptance(self, analyzer):
        alpha = 0.38
        eta = (2 * alpha * math.sqrt(1 - alpha ** 2)) ** 2
        report = analyzer.rate("b92", 0.0, alpha=alpha, noise_kind="depolarizing")
        assert report.rate == pytest.approx(eta / 2)
        assert report.b92.s_sigma == pytest.approx(0.0)

    def test_positive_rate_at_low_noise(self, analyzer):
        report = analyzer.rate("b92", 0.02, alpha=0.38, noise_kind="depolarizing")
        assert report.rate > 0
        assert report.b92.epsilon == pytest.approx(report.b92.delta / (report.b92.gamma + report.b92.delta))

    def test_general_bound_matches_depolarizing(self, analyzer):
        pxy = analyzer.depolarizing_pxy(0.02, 0.38)
        general = analyzer.b92_general_bound(*pxy, alpha=0.38)
        assert general.b92.re_e_tilde == 0.0
        assert general.rate == pytest.approx(analyzer.b92_rate_depolarizing(0.02, 0.38).rate)

    def test_asymmetric_statistics_rejected(self, analyzer):
        with pytest.raises(InvalidInputError):
            analyzer.b92_general_bound(0.12, 0.01, 0.02, 0.12, alpha=0.38)

    def test_qber_noise_rejected(self, analyzer):
        with pytest.raises(InvalidInputError):
            analyzer.rate("b92", 0.02, alpha=0.38)

    def test_threshold_at_fixed_alpha(self, analyzer):
        report = analyzer.threshold("b92", alpha=0.38)
        assert 0.02 < report.threshold < 0.25
        assert report.threshold_alpha == 0.38

    def test_threshold_optimizes_alpha(self, analyzer):
        fixed = analyzer.threshold("b92", alpha=0.38)
        best = analyzer.threshold("b92")
        assert best.threshold >= fixed.threshold - 1e-6
        assert best.threshold_alpha == pytest.approx(0.38, abs=0.02)
        assert best.threshold == pytest.approx(0.036, abs=0.002)
