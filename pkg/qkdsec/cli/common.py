import functools
import logging
from typing import Any, Dict

import click
from pydantic import ValidationError

from qkdsec.core.exceptions import QKDSecError
from qkdsec.core.randkit import parse_seed
from qkdsec.schemas.requests import OutputFormat, RunRequest

logger = logging.getLogger(__name__)

FORMAT_KEY = "qkdsec.format"
OUT_KEY = "qkdsec.out"
SEED_KEY = "qkdsec.seed"


def _remember(key: str):
    def callback(ctx: click.Context, param: click.Parameter, value: Any):
        if value is not None:
            ctx.meta[key] = value
        return value

    return callback


def _remember_seed(ctx: click.Context, param: click.Parameter, value: Any):
    if value is not None:
        try:
            ctx.meta[SEED_KEY] = parse_seed(value)
        except QKDSecError as e:
            raise click.BadParameter(str(e), ctx=ctx, param=param) from e
    return value


def run_options(func):
    """--format, --out and --seed after the subcommand; they override the group-level values"""
    options = (
        click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default=None,
                     expose_value=False, callback=_remember(FORMAT_KEY), help="Output format for this command"),
        click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None, expose_value=False,
                     callback=_remember(OUT_KEY), help="Write output to a file instead of stdout"),
        click.option("--seed", default=None, expose_value=False, callback=_remember_seed,
                     help="Master seed for this command, decimal or 0x-hex"),
    )
    for option in reversed(options):
        func = option(func)
    return func


def build_request(ctx: click.Context, subcommand: str, flags: Dict[str, Any]) -> RunRequest:
    opts = ctx.find_root().obj
    return RunRequest(subcommand=subcommand, flags=flags,
                      output_format=OutputFormat(ctx.meta.get(FORMAT_KEY, opts["format"])),
                      out=ctx.meta.get(OUT_KEY, opts["out"]), seed=ctx.meta.get(SEED_KEY, opts["seed"]))


def usage_errors(func):
    """Invalid input becomes a click usage error (exit 2)"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (QKDSecError, ValidationError) as e:
            logger.debug(f"rejected input: {e}")
            raise click.UsageError(str(e)) from e

    return wrapper
