import csv
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence

import click
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from qkdsec.schemas.requests import OutputFormat


def _flatten(payload: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    row = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            row.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            row[name] = ";".join(str(v) for v in value)
        else:
            row[name] = value
    return row


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    if value is None:
        return ""
    return str(value)


def to_rows(items: Sequence[BaseModel]) -> List[Dict[str, Any]]:
    return [_flatten(item.model_dump(mode="json", by_alias=True)) for item in items]


def render(items: Sequence[BaseModel], fmt: OutputFormat, single: bool = False) -> str:
    """Serialize models as JSON (full precision), CSV or a rich table (6 significant digits)"""
    if fmt == OutputFormat.JSON:
        if single and len(items) == 1:
            return items[0].model_dump_json(by_alias=True, indent=2) + "\n"
        return json.dumps([item.model_dump(mode="json", by_alias=True) for item in items], indent=2) + "\n"

    rows = to_rows(items)
    columns: List[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)

    if fmt == OutputFormat.CSV:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in columns})
        return buffer.getvalue()

    table = Table(show_header=True, header_style="bold")
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*(_cell(row.get(k)) for k in columns))
    buffer = io.StringIO()
    Console(file=buffer, width=200, color_system=None).print(table)
    return buffer.getvalue()


def emit(text: str, out: Optional[str] = None):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)
