import math
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from qkdsec.core.config import PROB_TOL

Scalar = Union[int, float, str, bool, None]


class BoundDirection(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class BoundReport(BaseModel):
    """One evaluated bound, optionally checked against an empirical value"""

    lemma: str
    inputs: Dict[str, Scalar] = Field(default_factory=dict)
    value: float = Field(..., description="Raw bound value")
    reported: float = Field(..., description="Bound clamped to [0, 1] where it is a probability")
    empirical: Optional[float] = None
    direction: BoundDirection = BoundDirection.UPPER
    satisfied: Optional[bool] = None
    note: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _derive_satisfied(cls, data: Any):
        if isinstance(data, dict) and data.get("empirical") is not None and data.get("satisfied") is None:
            direction = BoundDirection(data.get("direction", BoundDirection.UPPER))
            value, empirical = float(data["value"]), float(data["empirical"])
            slack = 1e-12 * max(1.0, abs(value))
            if direction == BoundDirection.UPPER:
                data["satisfied"] = empirical <= value + slack
            else:
                data["satisfied"] = empirical >= value - slack
        return data

    @model_validator(mode="after")
    def _check_finite(self):
        if not math.isfinite(self.value):
            raise ValueError(f"bound value for {self.lemma} is not finite")
        return self


class B92Chain(BaseModel):
    """Scalar-product chain of the B92 estimate"""

    alpha: float = Field(..., gt=0.0, lt=1 / math.sqrt(2))
    delta: float = Field(..., ge=0.0, le=1.0)
    gamma: float = Field(..., ge=0.0, le=1.0)
    eta: float = Field(..., ge=0.0, le=1.0)
    nu: Optional[float] = Field(None, description="None encodes the noiseless limit nu = inf")
    re_e_tilde: float = Field(..., ge=-1.0, le=1.0)
    e_overlap: float = Field(..., ge=-1.0 - PROB_TOL, le=1.0 + PROB_TOL, description="Lower bound on <e+|e->")
    f_overlap: float = Field(..., description="Lower bound on <f+|f->")
    x: float = Field(..., ge=0.0, le=1.0)
    epsilon: float = Field(..., ge=0.0, le=1.0, description="Error rate conditioned on acceptance")
    acceptance: float = Field(..., ge=0.0, le=1.0)
    s_sigma: float = Field(..., ge=0.0, le=1.0)
    conservative: bool = Field(False, description="True when a negative f-overlap forced S(sigma) = 1")
    instantiated_overlap: Optional[float] = None
    unitarity_residual: Optional[float] = None


class RateReport(BaseModel):
    """Key rate of one protocol at one noise level"""

    protocol: str
    noise: float
    noise_kind: str = Field(..., description="qber | depolarizing | p_xy")
    alpha: Optional[float] = None
    conditioned: bool = False
    rate: float
    adversarial_entropy: Optional[float] = None
    lambdas: Optional[Tuple[float, float, float, float]] = None
    b92: Optional[B92Chain] = None
    threshold: Optional[float] = None
    threshold_alpha: Optional[float] = None
    tolerance: Optional[float] = None
    equation: Optional[str] = None
    note: Optional[str] = None

    @model_validator(mode="after")
    def _check_rate(self):
        if self.rate > 1.0 + 1e-12:
            raise ValueError(f"rate {self.rate} exceeds 1")
        if self.lambdas is not None:
            if any(v < -PROB_TOL for v in self.lambdas) or abs(sum(self.lambdas) - 1.0) > PROB_TOL:
                raise ValueError("worst-case eigenvalues must form a probability vector")
        return self


class EntropyReport(BaseModel):
    """Value of one (smooth) entropy evaluation"""

    source: str = Field(..., description="distribution | density")
    alpha: str = Field(..., description="Renyi order; 'inf' for min-entropy")
    eps: float = Field(0.0, ge=0.0, le=1.0)
    value: float


class RunSummary(BaseModel):
    """One-line outcome of a simulated run"""

    protocol: str
    n: int
    seed: int
    n_prime: int
    r_prime: Optional[int] = None
    s_prime: Optional[int] = None
    qber: Optional[float] = None
    keys_equal: Optional[bool] = None
    aborted: bool = False
    abort_reason: Optional[str] = None
    eve_distance: Optional[float] = None
    eve_bound: Optional[float] = None
