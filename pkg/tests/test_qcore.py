import math

import numpy as np
import pytest

from qkdsec.core import cinfo, qcore
from qkdsec.core.exceptions import InvalidInputError, UnsupportedError
from qkdsec.schemas.distributions import ProbDist
from qkdsec.schemas.quantum import DensityOperator, QuantumOperation

BELL_WEIGHTS = (0.85, 0.05, 0.05, 0.05)


class TestStates:
    def test_bell_diagonal_spectrum(self):
        rho = qcore.bell_diagonal_state(BELL_WEIGHTS)
        assert qcore.eigenvalues(rho) == pytest.approx(sorted(BELL_WEIGHTS, reverse=True))

    def test_von_neumann_entropy_of_bell_diagonal_state(self):
        rho = qcore.bell_diagonal_state(BELL_WEIGHTS)
        assert qcore.von_neumann_entropy(rho) == pytest.approx(0.8476, abs=1e-4)

    def test_smooth_quantum_min_entropy(self):
        rho = qcore.bell_diagonal_state(BELL_WEIGHTS)
        expected = cinfo.smooth_renyi(ProbDist.from_array(range(4), BELL_WEIGHTS), math.inf, 0.05)
        assert qcore.q_entropy(rho, math.inf, 0.05) == pytest.approx(expected)

    def test_pure_state_has_zero_entropy(self):
        assert qcore.von_neumann_entropy(DensityOperator.pure([1, 1j])) == pytest.approx(0.0, abs=1e-12)

    def test_weights_off_simplex(self):
        with pytest.raises(InvalidInputError):
            qcore.bell_diagonal_state((0.5, 0.5, 0.5, 0.0))

    def test_partial_trace_of_bell_state_is_maximally_mixed(self):
        psi = qcore.bell_states()[:, 0]
        reduced = qcore.partial_trace(np.outer(psi, psi.conj()), (2, 2), keep=[0])
        assert reduced == pytest.approx(np.eye(2) / 2)

    def test_purification_reduces_to_state(self, rng):
        rho = qcore.random_density(3, rng)
        vec = qcore.purify(rho)
        reduced = qcore.partial_trace(np.outer(vec, vec.conj()), (3, 3), keep=[0])
        assert qcore.trace_distance(reduced, rho) < 1e-9


class TestDistances:
    def test_trace_distance_to_itself(self, rng):
        rho = qcore.random_density(4, rng)
        assert qcore.trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)

    def test_pure_state_formula(self):
        assert qcore.trace_distance_pure([1, 0], [0, 1]) == pytest.approx(1.0)
        phi, psi = np.array([1, 0]), np.array([1, 1]) / math.sqrt(2)
        dense = qcore.trace_distance(DensityOperator.pure(phi), DensityOperator.pure(psi))
        assert qcore.trace_distance_pure(phi, psi) == pytest.approx(dense)

    def test_measurement_contracts_distance(self, rng):
        for dim in (2, 3, 4):
            rho, sigma = qcore.random_density(dim, rng), qcore.random_density(dim, rng)
            povm = qcore.random_orthogonal_povm(dim, rng)
            measured = cinfo.variational_distance(qcore.measure(rho, povm), qcore.measure(sigma, povm))
            assert measured <= qcore.trace_distance(rho, sigma) + 1e-9


class TestMeasurements:
    @pytest.mark.parametrize("basis", qcore.BASIS_NAMES)
    def test_psi_plus_is_correlated_in_every_basis(self, basis):
        psi = qcore.bell_states()[:, 0]
        probs = qcore.measure(DensityOperator.pure(psi), qcore.basis_pair_povm(basis, basis))
        assert probs.prob((0, 1)) + probs.prob((1, 0)) == pytest.approx(0.0, abs=1e-12)

    def test_depolarized_error_rates(self):
        p = 0.09
        assert qcore.bell_error_rates((1 - p, p / 3, p / 3, p / 3)) == pytest.approx((2 * p / 3,) * 3)

    @pytest.mark.parametrize("basis, row", [("Z", 0), ("X", 1), ("Y", 2)])
    def test_error_table_matches_measurement(self, basis, row):
        for label in range(4):
            lam = np.zeros(4)
            lam[label] = 1.0
            probs = qcore.measure(qcore.bell_diagonal_state(lam), qcore.basis_pair_povm(basis, basis))
            error = probs.prob((0, 1)) + probs.prob((1, 0))
            assert error == pytest.approx(qcore.ERROR_FLIPS[row, label], abs=1e-12)

    def test_mixed_povm_labels(self, bb84_estimation_povm):
        assert ("Z", 0, 1) in bb84_estimation_povm.labels
        assert len(bb84_estimation_povm.labels) == 8

    def test_bell_measurement_reads_weights(self):
        probs = qcore.measure(qcore.bell_diagonal_state(BELL_WEIGHTS), qcore.bell_measurement())
        assert probs.probs == pytest.approx(BELL_WEIGHTS)


class TestOperations:
    def test_depolarizing_channel_on_bell_half(self):
        p = 0.3
        op = qcore.extend_operation(qcore.depolarizing_operation(p), 2, position=1)
        psi = qcore.bell_states()[:, 0]
        out = qcore.apply_operation(op, DensityOperator.pure(psi))
        probs = qcore.measure(out, qcore.bell_measurement())
        assert probs.probs == pytest.approx((1 - p, p / 3, p / 3, p / 3), abs=1e-12)

    def test_random_kraus_is_trace_preserving(self, rng):
        op = qcore.random_kraus(2, 3, rng)
        total = sum(k.conj().T @ k for k in op.kraus)
        assert total == pytest.approx(np.eye(2), abs=1e-9)

    def test_unitary_disturbance_meets_bound(self, rng):
        psi = DensityOperator.pure([1, 0])
        op = QuantumOperation(kraus=(qcore.random_unitary(2, rng),))
        moved = qcore.trace_distance(psi, qcore.apply_operation(op, psi))
        assert moved == pytest.approx(qcore.projection_disturbance_bound(op, psi), abs=1e-9)

    def test_identity_does_not_disturb(self, rng):
        rho = qcore.random_density(3, rng)
        assert qcore.projection_disturbance_bound(QuantumOperation(kraus=(np.eye(3),)), rho) == pytest.approx(
            0.0, abs=1e-7)

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_disturbance_bound_on_random_families(self, rng, dim):
        for rank in (1, dim):
            for count in (1, 2, 3):
                rho = qcore.random_density(dim, rng, rank=rank)
                op = qcore.random_kraus(dim, count, rng)
                moved = qcore.trace_distance(rho, qcore.apply_operation(op, rho))
                assert moved <= qcore.projection_disturbance_bound(op, rho) + 1e-9


class TestB92Geometry:
    def test_signal_states(self):
        u_plus, u_minus, ut_plus, ut_minus = qcore.b92_signal_states(0.38)
        assert abs(u_plus @ ut_plus) < 1e-12
        assert abs(u_minus @ ut_minus) < 1e-12
        beta = math.sqrt(1 - 0.38 ** 2)
        assert u_plus @ u_minus == pytest.approx(beta ** 2 - 0.38 ** 2)

    def test_noiseless_environment(self):
        env = qcore.b92_environment_vectors(0.38, 0.0, 1.0, 0.0, 1.0)
        gram = env @ env.T
        assert gram[0, 1] == pytest.approx(1.0)
        assert gram[0, 2] == pytest.approx(0.0, abs=1e-12)

    def test_inconsistent_overlaps(self):
        with pytest.raises(InvalidInputError):
            qcore.b92_environment_vectors(0.38, 0.0, 0.5, 0.0, 1.0)


class TestQubitSmoothingOracle:
    RHO = DensityOperator.from_matrix(np.diag([0.9, 0.1]))

    @pytest.mark.parametrize("eps, expected", [(0.15, 0.0), (0.05, 1.0)])
    def test_rank_smoothing(self, eps, expected):
        assert qcore.q_entropy_qubit_oracle(self.RHO, 0, eps) == expected
        assert qcore.q_entropy(self.RHO, 0, eps) == expected

    def test_min_entropy_smoothing_matches_commuting_value(self):
        oracle = qcore.q_entropy_qubit_oracle(self.RHO, math.inf, 0.1)
        assert oracle == pytest.approx(-math.log2(0.8), abs=1e-9)
        assert oracle <= qcore.q_entropy(self.RHO, math.inf, 0.1) + 1e-9

    def test_random_qubits_gain_nothing_off_basis(self, rng):
        for _ in range(5):
            rho = qcore.random_density(2, rng)
            assert qcore.q_entropy_qubit_oracle(rho, math.inf, 0.05, steps=20) <= (
                qcore.q_entropy(rho, math.inf, 0.05) + 1e-9)

    def test_qubits_only(self):
        with pytest.raises(InvalidInputError):
            qcore.q_entropy_qubit_oracle(qcore.bell_diagonal_state((1, 0, 0, 0)), 0, 0.1)
        with pytest.raises(UnsupportedError):
            qcore.q_entropy_qubit_oracle(self.RHO, 2.0, 0.1)

class TestConditioningAndSteering:
    def test_conditioning_on_bobs_outcome(self):
        psi = DensityOperator.pure(qcore.bell_states()[:, 0])
        post = qcore.condition_on_outcome(psi, qcore.qubit_povm("Z"), 1)
        assert qcore.trace_distance(post, DensityOperator.pure([0, 1])) == pytest.approx(0.0, abs=1e-12)

    def test_zero_probability_outcome(self):
        product = DensityOperator.pure([1, 0, 0, 0])
        with pytest.raises(InvalidInputError):
            qcore.condition_on_outcome(product, qcore.qubit_povm("Z"), 1)

    def test_steering_reaches_target(self):
        target = ProbDist.uniform((0, 1))
        steered = qcore.steer_to_distribution(DensityOperator.pure([1, 0]), qcore.qubit_povm("Z"), target)
        assert cinfo.variational_distance(qcore.measure(steered, qcore.qubit_povm("Z")), target) == pytest.approx(
            0.0, abs=1e-12)

    def test_steering_stays_close(self, rng):
        rho = qcore.random_density(3, rng)
        povm = qcore.random_orthogonal_povm(3, rng)
        target = ProbDist.from_array(povm.labels, [0.2, 0.3, 0.5])
        steered = qcore.steer_to_distribution(rho, povm, target)
        distance = cinfo.variational_distance(qcore.measure(rho, povm), target)
        assert qcore.trace_distance(rho, steered) <= math.sqrt(2 * distance) + 1e-9
        assert cinfo.variational_distance(qcore.measure(steered, povm), target) == pytest.approx(0.0, abs=1e-10)

    def test_schur_check_holds_for_random_states(self, rng):
        for _ in range(10):
            assert qcore.schur_check(qcore.random_density(4, rng), qcore.random_orthogonal_povm(4, rng))


@pytest.mark.slow
class TestRandomInstancesAtScale:
    TRIALS = 10_000

    def test_schur_majorization(self, rng):
        for _ in range(self.TRIALS):
            dim = int(rng.integers(2, 5))
            assert qcore.schur_check(qcore.random_density(dim, rng), qcore.random_orthogonal_povm(dim, rng))

    def test_steering_distance(self, rng):
        for _ in range(self.TRIALS):
            dim = int(rng.integers(2, 5))
            rho = qcore.random_density(dim, rng)
            povm = qcore.random_orthogonal_povm(dim, rng)
            target = ProbDist.from_array(povm.labels, rng.dirichlet(np.ones(dim)))
            distance = cinfo.variational_distance(qcore.measure(rho, povm), target)
            assert qcore.trace_distance(rho, qcore.steer_to_distribution(rho, povm, target)) <= math.sqrt(
                2 * distance) + 1e-9

    def test_measurement_contracts_distance(self, rng):
        for _ in range(self.TRIALS):
            dim = int(rng.integers(2, 5))
            rho, sigma = qcore.random_density(dim, rng), qcore.random_density(dim, rng)
            povm = qcore.random_orthogonal_povm(dim, rng)
            measured = cinfo.variational_distance(qcore.measure(rho, povm), qcore.measure(sigma, povm))
            assert measured <= qcore.trace_distance(rho, sigma) + 1e-9
