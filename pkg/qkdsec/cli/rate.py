import logging
from typing import Optional

import click

from qkdsec.cli.common import build_request, run_options, usage_errors
from qkdsec.cli.render import emit, render
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.requests import parse_sweep
from qkdsec.services.analyzer_service import rate_analyzer

logger = logging.getLogger(__name__)

PROTOCOL_CHOICES = ["bb84", "six-state", "six_state", "b92"]


@click.command()
@click.option("--protocol", required=True, type=click.Choice(PROTOCOL_CHOICES, case_sensitive=False))
@click.option("--qber", default=None, help="QBER, comma list or start:stop:step sweep")
@click.option("--depol", default=None, help="Depolarizing probability, comma list or sweep")
@click.option("--alpha", type=float, default=None, help="B92 signal parameter (default 0.38)")
@click.option("--conditioned", is_flag=True, help="Condition Eve's entropy on W = X xor Y")
@run_options
@click.pass_context
@usage_errors
def rate(ctx: click.Context, protocol: str, qber: Optional[str], depol: Optional[str], alpha: Optional[float],
         conditioned: bool):
    """Key rate at one noise level or along a sweep"""
    if (qber is None) == (depol is None):
        raise InvalidInputError("give exactly one of --qber or --depol")
    request = build_request(ctx, "rate", {"protocol": protocol, "qber": qber, "depol": depol, "alpha": alpha,
                                          "conditioned": conditioned})
    noise_kind, values = ("qber", parse_sweep(qber)) if qber is not None else ("depolarizing", parse_sweep(depol))
    reports = rate_analyzer.rate_sweep(protocol, values, conditioned, alpha, noise_kind)
    logger.info(f"computed {len(reports)} rate point(s) for {protocol}")
    emit(render(reports, request.output_format, single=len(reports) == 1), request.out)


@click.command()
@click.option("--protocol", required=True, type=click.Choice(PROTOCOL_CHOICES, case_sensitive=False))
@click.option("--alpha", type=float, default=None, help="Fix the B92 signal parameter instead of optimizing it")
@click.option("--conditioned", is_flag=True, help="Condition Eve's entropy on W = X xor Y")
@run_options
@click.pass_context
@usage_errors
def threshold(ctx: click.Context, protocol: str, alpha: Optional[float], conditioned: bool):
    """Largest noise level with a positive key rate"""
    request = build_request(ctx, "threshold", {"protocol": protocol, "alpha": alpha, "conditioned": conditioned})
    report = rate_analyzer.threshold(protocol, conditioned, alpha)
    emit(render([report], request.output_format, single=True), request.out)
