from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ToeplitzHash(BaseModel):
    """Binary Toeplitz matrix described by its n_in + n_out - 1 diagonals"""

    model_config = ConfigDict(frozen=True)

    n_in: int = Field(..., ge=1)
    n_out: int = Field(..., ge=1)
    diag: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_shape(self):
        if self.n_out > self.n_in:
            raise ValueError(f"n_out={self.n_out} exceeds n_in={self.n_in}")
        if len(self.diag) != self.n_in + self.n_out - 1:
            raise ValueError(f"diag must have {self.n_in + self.n_out - 1} bits, got {len(self.diag)}")
        if any(b not in (0, 1) for b in self.diag):
            raise ValueError("diag entries must be bits")
        return self

    @property
    def diag_hex(self) -> str:
        """Diagonal bits, most significant first, as a hex string"""
        value = int("".join(str(b) for b in self.diag), 2)
        return format(value, "x")

    @classmethod
    def from_hex(cls, n_in: int, n_out: int, diag_hex: str) -> "ToeplitzHash":
        length = n_in + n_out - 1
        bits = format(int(diag_hex, 16), "b").zfill(length)
        return cls(n_in=n_in, n_out=n_out, diag=tuple(int(b) for b in bits))


class IndexSubset(BaseModel):
    """Sorted subset of {0, ..., n-1}"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0)
    included: Tuple[int, ...] = ()

    @field_validator("included", mode="before")
    @classmethod
    def _normalise(cls, value):
        return tuple(sorted({int(i) for i in value}))

    @model_validator(mode="after")
    def _check_range(self):
        if self.included and (self.included[0] < 0 or self.included[-1] >= self.n):
            raise ValueError(f"indices must lie in [0, {self.n})")
        return self

    def __len__(self) -> int:
        return len(self.included)

    def __contains__(self, index: int) -> bool:
        return index in set(self.included)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(self.included)] = True
        return m

    def _check_same(self, other: "IndexSubset"):
        if other.n != self.n:
            raise ValueError(f"ground sets differ: {self.n} vs {other.n}")

    def intersect(self, other: "IndexSubset") -> "IndexSubset":
        self._check_same(other)
        return IndexSubset(n=self.n, included=set(self.included) & set(other.included))

    def union(self, other: "IndexSubset") -> "IndexSubset":
        self._check_same(other)
        return IndexSubset(n=self.n, included=set(self.included) | set(other.included))

    def difference(self, other: "IndexSubset") -> "IndexSubset":
        self._check_same(other)
        return IndexSubset(n=self.n, included=set(self.included) - set(other.included))

    def complement(self) -> "IndexSubset":
        return IndexSubset(n=self.n, included=set(range(self.n)) - set(self.included))


class PRandomSelection(IndexSubset):
    """Subset where each index was kept independently with probability p"""

    p: float = Field(..., ge=0.0, le=1.0)
    seed: int = Field(..., ge=0)
    label: str = "selection"
    within: Optional[Tuple[int, ...]] = Field(None, description="Ground subset the selection was drawn on")


class SeededPermutation(BaseModel):
    """Permutation of {0, ..., n-1}; position i receives element order[i]"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0)
    order: Tuple[int, ...]
    seed: int = Field(..., ge=0)
    label: str = "permutation.P"

    @model_validator(mode="after")
    def _check_bijection(self):
        if sorted(self.order) != list(range(self.n)):
            raise ValueError("order must be a permutation of range(n)")
        return self
