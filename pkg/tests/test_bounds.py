import math

import pytest

from qkdsec.core import bounds, cinfo, qcore
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.distributions import ProbDist, SmoothingParam
from qkdsec.schemas.reports import BoundDirection


class TestClosedForms:
    def test_frequency_sampling(self):
        assert bounds.freq_sampling_bound(2, 0, 0.1) == 4.0
        assert bounds.freq_sampling_bound(3, 200, 0.1) == pytest.approx(8 * math.exp(-1.0))

    def test_quanttom(self):
        assert bounds.quanttom_bound(4, 4, 800, 0.1) == pytest.approx(256 * math.exp(-1.0))

    def test_pa_distance(self):
        assert bounds.pa_distance_bound(10, 5, 5, 0.0, 0.0) == 0.75
        assert bounds.pa_distance_bound(40, 10, 10, 0.0, 0.0) == pytest.approx(7.32421875e-4)
        assert bounds.pa_distance_bound(40, 10, 10, 0.01, 0.02) == pytest.approx(7.32421875e-4 + 0.03)

    def test_ir_failure(self):
        assert bounds.ir_failure_bound(4.0, 14.0, 0.0) == pytest.approx(2 ** -10)
        with pytest.raises(InvalidInputError):
            bounds.ir_failure_bound(5.0, 4.0, 0.0)

    def test_chain_rule(self):
        assert bounds.chain_rule_bound(100.0, 30.0, SmoothingParam(eps_dprime=2 ** -10)) == pytest.approx(60.0)
        with pytest.raises(InvalidInputError):
            bounds.chain_rule_bound(100.0, 30.0, SmoothingParam())

    def test_negative_eps_rejected(self):
        with pytest.raises(InvalidInputError):
            bounds.freq_sampling_bound(2, 10, -0.1)


class TestErrorRateUpper:
    def test_no_errors_closed_form(self):
        assert bounds.error_rate_upper(0, 1, 0.5) == pytest.approx(0.5)
        assert bounds.error_rate_upper(0, 10, 0.5) == pytest.approx(1 - 0.5 ** 0.1)

    def test_all_errors(self):
        assert bounds.error_rate_upper(7, 7, 0.9) == 1.0

    def test_exceeds_observed_rate(self):
        upper = bounds.error_rate_upper(5, 100, 0.5)
        assert 0.05 < upper < 0.07
        assert bounds.error_rate_upper(5, 100, 0.99) > upper

    def test_invalid_counts(self):
        with pytest.raises(InvalidInputError):
            bounds.error_rate_upper(3, 2, 0.5)
        with pytest.raises(InvalidInputError):
            bounds.error_rate_upper(0, 10, 1.0)


class TestExchangeable:
    def test_exact_dominates_bound(self):
        result = bounds.hinf_exchangeable(10, 2, ProbDist.from_array((0, 1), [0.3, 0.7]))
        assert result.exact == pytest.approx(math.log2(120))
        assert result.exact >= result.bound

    def test_bound_only(self):
        result = bounds.hinf_exchangeable(10, 2, ProbDist.from_array((0, 1), [0.3, 0.7]), exact=False)
        assert result.exact is None

    def test_non_integral_type_rejected(self):
        with pytest.raises(InvalidInputError):
            bounds.hinf_exchangeable(7, 2, ProbDist.from_array((0, 1), [0.3, 0.7]))


class TestSampling:
    def test_point_mass_classical(self):
        q_hat = ProbDist.point((0, 1, 2), 0)
        result = bounds.sampling_H0_bound("classical", q_hat=q_hat, n=100, a_bar=50, eps=0.0, p=0.5)
        assert result.hmax == pytest.approx(0.0)
        assert result.entropy == pytest.approx(math.log2(50) * 2)
        assert result.mu == pytest.approx(2.0 ** 6)

    def test_unknown_variant(self):
        with pytest.raises(InvalidInputError):
            bounds.sampling_H0_bound("bogus", n=10, eps=0.1, p=0.5)

    def test_rate_must_be_interior(self):
        with pytest.raises(InvalidInputError):
            bounds.sampling_H0_bound("classical", q_hat=ProbDist.uniform((0, 1)), n=10, a_bar=5, eps=0.1, p=1.0)

    def test_bb84_max_entropy(self, bb84_estimation_povm):
        """Zero radii leave the product Bell weights; the Bell outcome entropy is 2 h(e)"""
        e = 0.1
        rho = qcore.bell_diagonal_state(((1 - e) ** 2, e * (1 - e), e * (1 - e), e ** 2))
        q_hat = qcore.measure(rho, bb84_estimation_povm)
        value = bounds.hmax_quantum(qcore.bell_diagonal_range(), bb84_estimation_povm, qcore.bell_measurement(),
                                    q_hat, 0.0, 0.0)
        assert value == pytest.approx(2 * cinfo.binary_entropy(e), abs=1e-4)

    def test_statistics_must_match_povm(self, bb84_estimation_povm):
        with pytest.raises(InvalidInputError):
            bounds.hmax_quantum(qcore.bell_diagonal_range(), bb84_estimation_povm, qcore.bell_measurement(),
                                ProbDist.uniform((0, 1)), 0.0, 0.0)


class TestReports:
    def test_probability_is_clamped(self):
        report = bounds.bound_report("freq_sampling", 4.0, empirical=0.2)
        assert report.reported == 1.0
        assert report.satisfied

    def test_lower_direction(self):
        report = bounds.bound_report("hinf_exchangeable", 3.0, empirical=2.5, direction=BoundDirection.LOWER,
                                     probability=False)
        assert report.satisfied is False

    def test_no_empirical_leaves_satisfied_unset(self):
        assert bounds.bound_report("pa_distance", 0.1).satisfied is None
