from typing import Any, Dict, Hashable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qkdsec.core.config import PROB_TOL


def _freeze(symbol: Any) -> Hashable:
    """Turn JSON lists back into hashable tuples"""
    if isinstance(symbol, (list, tuple)):
        return tuple(_freeze(s) for s in symbol)
    return symbol


def _thaw(symbol: Any) -> Any:
    if isinstance(symbol, tuple):
        return [_thaw(s) for s in symbol]
    return symbol


class ProbDist(BaseModel):
    """Finite probability distribution over an ordered alphabet"""

    model_config = ConfigDict(frozen=True)

    alphabet: Tuple[Any, ...] = Field(..., description="Ordered distinct symbols")
    probs: Tuple[float, ...] = Field(..., description="One probability per symbol")

    @field_validator("alphabet", mode="before")
    @classmethod
    def _freeze_alphabet(cls, value):
        return tuple(_freeze(s) for s in value)

    @model_validator(mode="after")
    def _check_simplex(self):
        if len(self.alphabet) == 0:
            raise ValueError("alphabet must be nonempty")
        if len(self.alphabet) != len(self.probs):
            raise ValueError(
                f"alphabet has {len(self.alphabet)} symbols but {len(self.probs)} probabilities were given"
            )
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet symbols must be distinct")
        if any(p < -PROB_TOL or p > 1 + PROB_TOL for p in self.probs):
            raise ValueError("probabilities must lie in [0, 1]")
        total = sum(self.probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        return self

    @classmethod
    def from_array(cls, alphabet: Sequence[Any], probs) -> "ProbDist":
        """Build from an array, clipping float noise below zero"""
        arr = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        return cls(alphabet=tuple(alphabet), probs=tuple(float(p) for p in arr))

    @classmethod
    def uniform(cls, alphabet: Sequence[Any]) -> "ProbDist":
        k = len(alphabet)
        return cls(alphabet=tuple(alphabet), probs=tuple(1.0 / k for _ in range(k)))

    @classmethod
    def point(cls, alphabet: Sequence[Any], symbol: Any) -> "ProbDist":
        return cls(alphabet=tuple(alphabet), probs=tuple(1.0 if s == symbol else 0.0 for s in alphabet))

    @classmethod
    def binary(cls, p: float) -> "ProbDist":
        """P^bin_p over (0, 1) with P(1) = p"""
        return cls(alphabet=(0, 1), probs=(1.0 - p, p))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def prob(self, symbol: Any) -> float:
        return self.probs[self.alphabet.index(_freeze(symbol))]

    def as_dict(self) -> Dict[Hashable, float]:
        return dict(zip(self.alphabet, self.probs))

    def p_max(self) -> float:
        return max(self.probs)

    def support(self) -> List[Any]:
        return [s for s, p in zip(self.alphabet, self.probs) if p > 0]

    def to_payload(self) -> Dict[str, list]:
        return {"alphabet": [_thaw(s) for s in self.alphabet], "probs": list(self.probs)}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "ProbDist":
        return cls(alphabet=payload["alphabet"], probs=payload["probs"])


class CondChannel(BaseModel):
    """Conditional distribution Q(.|y) from an input alphabet to an output alphabet"""

    model_config = ConfigDict(frozen=True)

    input_alphabet: Tuple[Any, ...]
    rows: Tuple[ProbDist, ...]

    @field_validator("input_alphabet", mode="before")
    @classmethod
    def _freeze_inputs(cls, value):
        return tuple(_freeze(s) for s in value)

    @model_validator(mode="after")
    def _check_rows(self):
        if len(self.rows) != len(self.input_alphabet):
            raise ValueError("one row per input symbol is required")
        if len(set(self.input_alphabet)) != len(self.input_alphabet):
            raise ValueError("input symbols must be distinct")
        outputs = self.rows[0].alphabet
        if any(row.alphabet != outputs for row in self.rows):
            raise ValueError("all rows must share the output alphabet")
        return self

    @property
    def output_alphabet(self) -> Tuple[Any, ...]:
        return self.rows[0].alphabet

    def row(self, y: Any) -> ProbDist:
        return self.rows[self.input_alphabet.index(_freeze(y))]

    def joint(self, input_dist: ProbDist) -> "JointDist":
        """Joint distribution of (X, Y) with X drawn from the row of Y"""
        matrix = np.array([[input_dist.prob(y) * row.probs[i] for y, row in zip(self.input_alphabet, self.rows)]
                           for i in range(len(self.output_alphabet))])
        return JointDist.from_matrix(self.output_alphabet, self.input_alphabet, matrix)


class JointDist(ProbDist):
    """Distribution over pairs (x, y); the alphabet lists 2-tuples"""

    @model_validator(mode="after")
    def _check_pairs(self):
        if any(not isinstance(s, tuple) or len(s) != 2 for s in self.alphabet):
            raise ValueError("joint alphabet entries must be pairs")
        return self

    @classmethod
    def from_matrix(cls, x_alphabet: Sequence[Any], y_alphabet: Sequence[Any], matrix) -> "JointDist":
        m = np.clip(np.asarray(matrix, dtype=float), 0.0, None)
        pairs = [(x, y) for x in x_alphabet for y in y_alphabet]
        return cls(alphabet=tuple(pairs), probs=tuple(float(v) for v in m.reshape(-1)))

    @classmethod
    def product(cls, px: ProbDist, py: ProbDist) -> "JointDist":
        return cls.from_matrix(px.alphabet, py.alphabet, np.outer(px.array, py.array))

    def axis_alphabet(self, axis: int) -> Tuple[Any, ...]:
        return tuple(dict.fromkeys(s[axis] for s in self.alphabet))

    def matrix(self) -> np.ndarray:
        """Probabilities as a |X| x |Y| array (missing pairs read as 0)"""
        xs, ys = self.axis_alphabet(0), self.axis_alphabet(1)
        m = np.zeros((len(xs), len(ys)))
        for (x, y), p in zip(self.alphabet, self.probs):
            m[xs.index(x), ys.index(y)] += p
        return m

    def marginal(self, axis: int) -> ProbDist:
        sums = self.matrix().sum(axis=1 - axis)
        return ProbDist.from_array(self.axis_alphabet(axis), sums / sums.sum())

    def conditional(self, given_axis: int = 1) -> CondChannel:
        """Channel from the given axis to the other one; zero-mass inputs get uniform rows"""
        m = self.matrix()
        if given_axis == 0:
            m = m.T
        out_alphabet = self.axis_alphabet(1 - given_axis)
        rows = []
        for col in m.T:
            total = col.sum()
            rows.append(ProbDist.from_array(out_alphabet, col / total) if total > 0 else ProbDist.uniform(out_alphabet))
        return CondChannel(input_alphabet=self.axis_alphabet(given_axis), rows=tuple(rows))

    def xor_marginal(self) -> ProbDist:
        """Distribution of W = X xor Y for bit-valued pairs"""
        w = [0.0, 0.0]
        for (x, y), p in zip(self.alphabet, self.probs):
            w[(int(x) ^ int(y)) & 1] += p
        return ProbDist.from_array((0, 1), w)


class SmoothingParam(BaseModel):
    """Variational-distance radii used by smooth entropies and composed bounds"""

    model_config = ConfigDict(frozen=True)

    eps: float = Field(0.0, ge=0.0, le=1.0, description="Main smoothing radius")
    eps_prime: float = Field(0.0, ge=0.0, le=1.0, description="Secondary radius")
    eps_dprime: float = Field(0.0, ge=0.0, le=1.0, description="Tertiary radius")
