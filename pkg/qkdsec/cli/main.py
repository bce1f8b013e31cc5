import logging

import click
from rich.console import Console
from rich.logging import RichHandler

from qkdsec import __version__
from qkdsec.cli.entropy import entropy
from qkdsec.cli.rate import rate, threshold
from qkdsec.cli.simulate import simulate
from qkdsec.cli.verify import verify
from qkdsec.core.config import settings
from qkdsec.core.exceptions import QKDSecError
from qkdsec.core.randkit import parse_seed
from qkdsec.schemas.requests import OutputFormat


def configure_logging(level: str):
    """Rich handler on stderr so stdout stays byte-deterministic"""
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name=settings.APP_NAME)
@click.option("--format", "fmt", type=click.Choice([f.value for f in OutputFormat]), default="json",
              show_default=True, help="Output format")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write output to a file instead of stdout")
@click.option("--seed", default=None, help="Master seed, decimal or 0x-hex [env: QKDSEC_DEFAULT_SEED]")
@click.option("--log-level", default=None,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Log level for stderr diagnostics")
@click.pass_context
def cli(ctx: click.Context, fmt: str, out: str, seed: str, log_level: str):
    """Key rates, thresholds, protocol simulation and bound verification for QKD"""
    configure_logging(log_level or ("DEBUG" if settings.DEBUG else settings.LOG_LEVEL))
    try:
        master_seed = parse_seed(seed if seed is not None else settings.DEFAULT_SEED)
    except QKDSecError as e:
        raise click.BadParameter(str(e), param_hint="--seed") from e
    ctx.obj = {"format": OutputFormat(fmt), "out": out, "seed": master_seed}


# Subcommands
cli.add_command(rate)
cli.add_command(threshold)
cli.add_command(simulate)
cli.add_command(verify)
cli.add_command(entropy)
