import numpy as np
import pytest

from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.protocol import AttackModel, ProtocolConfig
from qkdsec.services.engine_service import ProtocolEngine
from qkdsec.services.eve_service import EveEvaluator

NOISELESS = (1.0, 0.0, 0.0, 0.0)


@pytest.fixture
def evaluator():
    return EveEvaluator()


def _first_completed_run(lambdas, **kwargs):
    engine = ProtocolEngine()
    for seed in range(50):
        config = ProtocolConfig(n=4, p=0.01, seed=seed, attack=AttackModel.bell_diagonal(lambdas), key_length=1,
                                ir_length=0, **kwargs)
        transcript = engine.run(config)
        if not transcript.aborted:
            return transcript
    pytest.fail("no seed produced a completed run")


def _pa_diagonal(transcript):
    bits = format(int(transcript.pa.hash_hex, 16), "b").zfill(transcript.sifted_length)
    return [int(b) for b in bits]


class TestPositionStates:
    def test_noiseless_source_has_rank_one(self, evaluator):
        omegas, rank = evaluator.position_states(NOISELESS)
        assert rank == 1
        assert omegas[0][0, 0] == pytest.approx(0.5)
        assert omegas[1][0, 0] == pytest.approx(0.5)

    def test_states_sum_to_purified_weights(self, evaluator):
        lambdas = (0.85, 0.05, 0.05, 0.05)
        omegas, rank = evaluator.position_states(lambdas)
        assert rank == 4
        assert np.trace(omegas[0] + omegas[1]) == pytest.approx(1.0)


class TestDistance:
    def test_uninformed_eve(self, evaluator):
        transcript = _first_completed_run(NOISELESS)
        record = evaluator.distance(transcript, NOISELESS)
        diag = _pa_diagonal(transcript)
        assert record.distance == pytest.approx(0.0 if any(diag) else 0.5, abs=1e-12)
        assert record.rank == 1

    def test_average_over_hashes(self, evaluator):
        transcript = _first_completed_run(NOISELESS)
        n_prime = transcript.sifted_length
        record = evaluator.averaged_distance(transcript, NOISELESS)
        # only the all-zero hash leaks
        assert record.distance == pytest.approx(0.5 / 2 ** n_prime, abs=1e-12)
        assert record.distance <= record.bound

    def test_engine_attaches_exact_distance(self):
        transcript = _first_completed_run(NOISELESS, exact_eve=True)
        assert transcript.eve.distance is not None
        assert transcript.summary().eve_distance == transcript.eve.distance

    def test_needs_amplified_transcript(self, evaluator):
        transcript = ProtocolEngine().run(ProtocolConfig(n=4, p=0.5, seed=1, attack=AttackModel.bell_diagonal(
            (0.25, 0.25, 0.25, 0.25))))
        assert transcript.aborted
        with pytest.raises(InvalidInputError):
            evaluator.distance(transcript, (0.25, 0.25, 0.25, 0.25))
