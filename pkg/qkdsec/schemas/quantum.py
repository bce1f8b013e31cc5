from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from qkdsec.core.config import HERMITIAN_TOL, MAX_TOTAL_DIM, PROB_TOL
from qkdsec.schemas.distributions import ProbDist, _freeze


def _as_square(value: Any) -> np.ndarray:
    m = np.array(value, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


class DensityOperator(BaseModel):
    """Positive unit-trace operator on a dim-dimensional space"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce(cls, value):
        return _as_square(value)

    @model_validator(mode="after")
    def _check_state(self):
        m = self.matrix
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.dim}")
        if self.dim < 1 or self.dim > MAX_TOTAL_DIM:
            raise ValueError(f"dimension {self.dim} outside [1, {MAX_TOTAL_DIM}]")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density operator must be Hermitian")
        if abs(np.trace(m) - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"density operator trace is {np.trace(m).real}, not 1")
        if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -HERMITIAN_TOL:
            raise ValueError("density operator has a negative eigenvalue")
        return self

    @classmethod
    def from_matrix(cls, matrix) -> "DensityOperator":
        m = _as_square(matrix)
        return cls(dim=m.shape[0], matrix=(m + m.conj().T) / 2)

    @classmethod
    def pure(cls, vector) -> "DensityOperator":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls.from_matrix(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(dim=dim, matrix=np.eye(dim, dtype=complex) / dim)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues clamped to [0, 1] and renormalized, descending"""
        w = np.clip(np.linalg.eigvalsh(self.matrix), 0.0, 1.0)
        return np.sort(w / w.sum())[::-1]

    def to_payload(self) -> Dict[str, Any]:
        return {"dim": self.dim, "re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "DensityOperator":
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
        return cls(dim=int(payload["dim"]), matrix=re + 1j * im)


class Povm(BaseModel):
    """Positive operators summing to the identity, one per outcome label"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    elements: Tuple[np.ndarray, ...]
    labels: Tuple[Any, ...]
    orthogonal: bool = False

    @field_validator("elements", mode="before")
    @classmethod
    def _coerce(cls, value):
        return tuple(_as_square(e) for e in value)

    @field_validator("labels", mode="before")
    @classmethod
    def _freeze_labels(cls, value):
        return tuple(_freeze(s) for s in value)

    @model_validator(mode="after")
    def _check_povm(self):
        if not self.elements or len(self.elements) != len(self.labels):
            raise ValueError("one element per label is required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("POVM labels must be distinct")
        dim = self.elements[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for e in self.elements:
            if e.shape != (dim, dim):
                raise ValueError("POVM elements must share one dimension")
            if np.max(np.abs(e - e.conj().T)) > HERMITIAN_TOL:
                raise ValueError("POVM elements must be Hermitian")
            if np.min(np.linalg.eigvalsh((e + e.conj().T) / 2)) < -HERMITIAN_TOL:
                raise ValueError("POVM elements must be positive")
            total += e
        if np.max(np.abs(total - np.eye(dim))) > HERMITIAN_TOL:
            raise ValueError("POVM elements must sum to the identity")
        if self.orthogonal:
            if len(self.elements) != dim:
                raise ValueError("an orthogonal POVM needs one projector per basis vector")
            for i, a in enumerate(self.elements):
                if np.max(np.abs(a @ a - a)) > HERMITIAN_TOL or abs(np.trace(a) - 1.0) > HERMITIAN_TOL:
                    raise ValueError("orthogonal POVM elements must be rank-1 projectors")
                for b in self.elements[i + 1:]:
                    if np.max(np.abs(a @ b)) > HERMITIAN_TOL:
                        raise ValueError("orthogonal POVM projectors must be mutually orthogonal")
        return self

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @classmethod
    def from_basis(cls, vectors, labels) -> "Povm":
        """Orthogonal POVM from an orthonormal list of vectors"""
        elements = []
        for v in vectors:
            v = np.asarray(v, dtype=complex).reshape(-1)
            v = v / np.linalg.norm(v)
            elements.append(np.outer(v, v.conj()))
        return cls(elements=tuple(elements), labels=tuple(labels), orthogonal=True)

    def basis_vectors(self) -> np.ndarray:
        """Columns are the unit vectors spanned by the projectors (orthogonal POVMs only)"""
        if not self.orthogonal:
            raise ValueError("basis vectors exist only for orthogonal POVMs")
        cols = []
        for e in self.elements:
            w, v = np.linalg.eigh(e)
            cols.append(v[:, int(np.argmax(w))])
        return np.stack(cols, axis=1)

    def index(self, label: Any) -> int:
        return self.labels.index(_freeze(label))


class QuantumOperation(BaseModel):
    """Kraus family with sum E_z^dagger E_z = identity"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kraus: Tuple[np.ndarray, ...]

    @field_validator("kraus", mode="before")
    @classmethod
    def _coerce(cls, value):
        return tuple(_as_square(k) for k in value)

    @model_validator(mode="after")
    def _check_complete(self):
        if not self.kraus:
            raise ValueError("at least one Kraus operator is required")
        dim = self.kraus[0].shape[0]
        total = sum(k.conj().T @ k for k in self.kraus)
        if any(k.shape != (dim, dim) for k in self.kraus) or np.max(np.abs(total - np.eye(dim))) > HERMITIAN_TOL:
            raise ValueError("Kraus operators must satisfy sum E^dagger E = identity")
        return self

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]


class MeasurementConstraint(BaseModel):
    """Members of a range must reproduce `target` when measured with `povm`"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    povm: Povm
    target: ProbDist

    @model_validator(mode="after")
    def _check_labels(self):
        if tuple(self.target.alphabet) != tuple(self.povm.labels):
            raise ValueError("constraint target must be indexed by the POVM labels")
        return self


class DensityRangeSpec(BaseModel):
    """Convex hull of extreme points, cut by measurement constraints"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    extreme_points: Tuple[DensityOperator, ...]
    constraints: Tuple[MeasurementConstraint, ...] = ()
    label: str = "explicit"

    @model_validator(mode="after")
    def _check_points(self):
        if not self.extreme_points:
            raise ValueError("a density range needs at least one extreme point")
        dim = self.extreme_points[0].dim
        if any(p.dim != dim for p in self.extreme_points):
            raise ValueError("extreme points must share one dimension")
        if any(c.povm.dim != dim for c in self.constraints):
            raise ValueError("constraint POVMs must act on the range's space")
        return self

    @property
    def dim(self) -> int:
        return self.extreme_points[0].dim

    def outcome_matrix(self, povm: Povm) -> np.ndarray:
        """Column j holds the outcome distribution of extreme point j"""
        return np.array([[float(np.real(np.trace(e @ p.matrix))) for p in self.extreme_points]
                         for e in povm.elements])

    def member(self, weights) -> DensityOperator:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(self.extreme_points),) or np.any(w < -PROB_TOL) or abs(w.sum() - 1) > PROB_TOL:
            raise ValueError("weights must be a probability vector over the extreme points")
        return DensityOperator.from_matrix(sum(wi * p.matrix for wi, p in zip(w, self.extreme_points)))
