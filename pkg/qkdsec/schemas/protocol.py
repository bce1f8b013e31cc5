import math
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qkdsec.core.config import (
    DEFAULT_B92_ALPHA,
    DEFAULT_PA_EPSILON,
    DEFAULT_SAMPLING_EXPONENT,
    EXACT_EVE_MAX_N,
    PROB_TOL,
)
from qkdsec.core.qcore import b92_environment_vectors
from qkdsec.schemas.distributions import JointDist, SmoothingParam
from qkdsec.schemas.quantum import DensityOperator
from qkdsec.schemas.randomness import IndexSubset
from qkdsec.schemas.reports import RunSummary

TRANSCRIPT_SCHEMA = 1


class Protocol(str, Enum):
    BB84 = "bb84"
    SIX_STATE = "six_state"
    B92 = "b92"


class AttackKind(str, Enum):
    BELL_DIAGONAL = "bell_diagonal"
    DEPOLARIZING = "depolarizing"
    B92_UNITARY = "b92_unitary"


class SamplingMethod(str, Enum):
    PAULI = "pauli"
    POVM = "povm"


class AttackModel(BaseModel):
    """Eve's per-position interaction with the transmitted systems"""

    model_config = ConfigDict(frozen=True)

    kind: AttackKind
    lambdas: Optional[Tuple[float, float, float, float]] = Field(None, description="Bell-diagonal weights")
    p: Optional[float] = Field(None, ge=0.0, le=1.0, description="Depolarizing probability")
    alpha: Optional[float] = Field(None, gt=0.0, lt=1 / math.sqrt(2), description="B92 signal parameter")
    delta: Optional[float] = Field(None, ge=0.0, le=1.0, description="Weight of the disturbed branch")
    e_overlap: Optional[float] = Field(None, ge=-1.0, le=1.0, description="<e+|e->")
    re_e_tilde: Optional[float] = Field(None, ge=-1.0, le=1.0, description="Re<e+-|e~+->")
    tilde_overlap: Optional[float] = Field(None, ge=-1.0, le=1.0, description="<e~+|e~->")

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == AttackKind.BELL_DIAGONAL:
            if self.lambdas is None:
                raise ValueError("bell_diagonal attack needs four weights")
            if any(v < -PROB_TOL for v in self.lambdas) or abs(sum(self.lambdas) - 1.0) > PROB_TOL:
                raise ValueError(f"Bell weights {self.lambdas} are not a point of the simplex")
        elif self.kind == AttackKind.DEPOLARIZING:
            if self.p is None:
                raise ValueError("depolarizing attack needs p")
        else:
            missing = [name for name in ("alpha", "delta", "e_overlap", "re_e_tilde", "tilde_overlap")
                       if getattr(self, name) is None]
            if missing:
                raise ValueError(f"b92_unitary attack is missing {', '.join(missing)}")
            b92_environment_vectors(self.alpha, self.delta, self.e_overlap, self.re_e_tilde, self.tilde_overlap)
        return self

    @classmethod
    def bell_diagonal(cls, lambdas) -> "AttackModel":
        return cls(kind=AttackKind.BELL_DIAGONAL, lambdas=tuple(float(v) for v in lambdas))

    @classmethod
    def depolarizing(cls, p: float) -> "AttackModel":
        return cls(kind=AttackKind.DEPOLARIZING, p=p)


class ProtocolConfig(BaseModel):
    """Everything a run depends on; identical configs give identical transcripts"""

    protocol: Protocol = Protocol.BB84
    n: int = Field(..., ge=4, description="Number of transmitted systems")
    p: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Explicit sampling rate")
    alpha_exponent: float = Field(DEFAULT_SAMPLING_EXPONENT, gt=0.0, lt=1.0, description="p = n^-alpha")
    attack: AttackModel
    seed: int = Field(0, ge=0, lt=2 ** 64)
    smoothing: SmoothingParam = Field(default_factory=lambda: SmoothingParam(eps=1e-6, eps_prime=1e-6,
                                                                              eps_dprime=1e-6))
    pa_epsilon: float = Field(DEFAULT_PA_EPSILON, gt=0.0, lt=1.0)
    exact_eve: bool = False
    method: SamplingMethod = SamplingMethod.PAULI
    key_length: Optional[int] = Field(None, ge=0, description="Fixed final key length")
    ir_length: Optional[int] = Field(None, ge=0, description="Fixed per-block hash length")
    conditioned: bool = False
    b92_alpha: float = Field(DEFAULT_B92_ALPHA, gt=0.0, lt=1 / math.sqrt(2))

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.protocol == Protocol.B92:
            if self.attack.kind == AttackKind.BELL_DIAGONAL:
                raise ValueError("B92 runs take a depolarizing or b92_unitary attack")
            if self.attack.kind == AttackKind.B92_UNITARY and abs(self.attack.alpha - self.b92_alpha) > 1e-12:
                raise ValueError("b92_unitary attack alpha must match b92_alpha")
        elif self.attack.kind == AttackKind.B92_UNITARY:
            raise ValueError("b92_unitary attacks only apply to B92 runs")
        if self.exact_eve:
            if self.n > EXACT_EVE_MAX_N:
                raise ValueError(f"exact Eve evaluation is limited to n <= {EXACT_EVE_MAX_N}")
            if self.protocol == Protocol.B92:
                raise ValueError("exact Eve evaluation needs a Bell-diagonal attack")
        if not 0.0 < self.sampling_rate < 1.0:
            raise ValueError(f"sampling rate {self.sampling_rate} outside (0, 1)")
        return self

    @property
    def sampling_rate(self) -> float:
        return self.p if self.p is not None else self.n ** (-self.alpha_exponent)

    @property
    def fixed_length(self) -> bool:
        return self.key_length is not None


class EstimationRecord(BaseModel):
    """Parameter-estimation box"""

    pxy: Optional[JointDist] = None
    error_rates: Tuple[float, ...] = ()
    qber: Optional[float] = None
    error_upper: Optional[float] = Field(None, description="Upper confidence bound on the key-basis error rate")
    h_x: Optional[float] = None
    h_x_given_y: Optional[float] = None
    u_rate: Optional[float] = Field(None, description="Eve's worst-case entropy per key position")
    acceptance: Optional[float] = None
    r: Optional[int] = None
    t: Optional[int] = None
    u: Optional[int] = None
    s: Optional[int] = None
    skipped: bool = False

    @model_validator(mode="after")
    def _check_box(self):
        if None not in (self.r, self.t, self.u, self.s) and self.s != self.t - self.r - self.u:
            raise ValueError(f"s={self.s} differs from t - r - u = {self.t - self.r - self.u}")
        return self


class IRRecord(BaseModel):
    """Information reconciliation messages and Bob's guess"""

    block_lengths: List[int] = Field(default_factory=list)
    hash_lengths: List[int] = Field(default_factory=list)
    hashes: List[Optional[str]] = Field(default_factory=list, description="Toeplitz diagonals in hex")
    syndromes: List[str] = Field(default_factory=list)
    r_prime: int = 0
    guess: str = ""
    success: Optional[bool] = None


class PARecord(BaseModel):
    """Privacy amplification: permutation order and Toeplitz hash"""

    s_prime: int
    order: List[int] = Field(default_factory=list)
    n_in: int = 0
    hash_hex: Optional[str] = None


class EveRecord(BaseModel):
    """Eve's side: Pauli labels of the sampled channel or the exact distance"""

    pauli_labels: Optional[str] = None
    rank: Optional[int] = None
    dim: Optional[int] = None
    distance: Optional[float] = None
    bound: Optional[float] = None


class Transcript(BaseModel):
    """Complete public and private record of one protocol run"""

    schema_version: int = Field(TRANSCRIPT_SCHEMA, alias="schema")
    config: ProtocolConfig
    sampling_rate: float
    selection_t: IndexSubset
    selection_t_prime: IndexSubset
    selection_s: IndexSubset
    discarded: IndexSubset
    bases_alice: str = ""
    bases_bob: str = ""
    x: str
    y: str
    announced: List[int] = Field(default_factory=list)
    announced_bits: str = ""
    estimation: Optional[EstimationRecord] = None
    key_positions: List[int] = Field(default_factory=list)
    sifted_length: int
    ir: Optional[IRRecord] = None
    pa: Optional[PARecord] = None
    key_alice: str = ""
    key_bob: str = ""
    eve: Optional[EveRecord] = None
    aborted: bool = False
    abort_reason: Optional[str] = None
    abort_phase: Optional[str] = None

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def _check_invariants(self):
        n = self.config.n
        used = self.selection_s.union(self.selection_t).union(self.selection_t_prime).union(self.discarded)
        if self.sifted_length != n - len(used):
            raise ValueError(f"sifted length {self.sifted_length} differs from n - |S u T u T' u D| = {n - len(used)}")
        if len(self.x) != n or len(self.y) != n:
            raise ValueError("raw strings must have one symbol per transmitted system")
        if self.aborted and not self.abort_reason:
            raise ValueError("an aborted transcript needs a reason")
        if not self.aborted and self.pa is not None:
            if not len(self.key_alice) == len(self.key_bob) == self.pa.s_prime:
                raise ValueError("final keys must both have length s'")
        return self

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)

    def summary(self) -> RunSummary:
        est, eve = self.estimation, self.eve
        return RunSummary(
            protocol=self.config.protocol.value,
            n=self.config.n,
            seed=self.config.seed,
            n_prime=self.sifted_length,
            r_prime=self.ir.r_prime if self.ir else None,
            s_prime=self.pa.s_prime if self.pa else None,
            qber=est.qber if est else None,
            keys_equal=(self.key_alice == self.key_bob) if self.pa and not self.aborted else None,
            aborted=self.aborted,
            abort_reason=self.abort_reason,
            eve_distance=eve.distance if eve else None,
            eve_bound=eve.bound if eve else None,
        )


class AttackState(BaseModel):
    """Per-position state an attack leaves behind"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: AttackKind
    lambdas: Optional[Tuple[float, float, float, float]] = None
    rho: Optional[DensityOperator] = Field(None, description="Joint state on A (x) B")
    purification: Optional[np.ndarray] = None
    bob_states: Optional[Tuple[DensityOperator, DensityOperator]] = Field(
        None, description="Bob's qubit for Alice's bit 0 and 1 (B92)")
    joint_states: Optional[Tuple[np.ndarray, np.ndarray]] = Field(None, description="Psi+ and Psi- on B (x) E")
