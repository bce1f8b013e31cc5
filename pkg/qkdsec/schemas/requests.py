from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from qkdsec.core.exceptions import InvalidInputError

SUBCOMMANDS = ("rate", "threshold", "simulate", "verify", "entropy")


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TABLE = "table"


class RunRequest(BaseModel):
    """One CLI invocation: subcommand, parsed flags and output target"""

    model_config = ConfigDict(extra="forbid")

    subcommand: str
    flags: Dict[str, Any] = Field(default_factory=dict)
    output_format: OutputFormat = OutputFormat.JSON
    out: Optional[str] = Field(None, description="Output path; standard output when unset")
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @field_validator("subcommand")
    @classmethod
    def _known(cls, value: str) -> str:
        if value not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {value!r}")
        return value


def parse_sweep(text: str) -> List[float]:
    """A single value, a comma list, or start:stop:step with the end included within step/2"""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise InvalidInputError(f"sweep {text!r} needs step > 0 and stop >= start")
            count = int((stop - start + step / 2) // step) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        if isinstance(e, InvalidInputError):
            raise
        raise InvalidInputError(f"cannot parse {text!r} as a number or sweep") from e


def parse_floats(text: str, count: Optional[int] = None) -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from e
    if count is not None and len(values) != count:
        raise InvalidInputError(f"expected {count} comma-separated numbers, got {len(values)}")
    return values
