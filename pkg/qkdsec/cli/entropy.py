import json
import math
from typing import Optional

import click

from qkdsec.cli.common import build_request, run_options, usage_errors
from qkdsec.cli.render import emit, render
from qkdsec.core import cinfo, qcore
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.distributions import ProbDist
from qkdsec.schemas.quantum import DensityOperator
from qkdsec.schemas.reports import EntropyReport
from qkdsec.schemas.requests import parse_floats


def parse_order(text: str) -> float:
    if text.lower() in ("inf", "infinity", "max"):
        return math.inf
    try:
        order = float(text)
    except ValueError as e:
        raise InvalidInputError(f"Renyi order {text!r} is not a number or 'inf'") from e
    if order < 0:
        raise InvalidInputError(f"Renyi order must be nonnegative, got {order}")
    return order


def load_source(path: Optional[str], dist: Optional[str], lambdas: Optional[str]):
    """A ProbDist or DensityOperator from a JSON file, an inline distribution or Bell weights"""
    if sum(v is not None for v in (path, dist, lambdas)) != 1:
        raise InvalidInputError("give exactly one of --input, --dist or --lambdas")
    if dist is not None:
        probs = parse_floats(dist)
        return ProbDist.from_array(range(len(probs)), probs)
    if lambdas is not None:
        return qcore.bell_diagonal_state(parse_floats(lambdas, 4))
    try:
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e
    if not isinstance(payload, dict):
        raise InvalidInputError("entropy input must be a JSON object")
    if "probs" in payload:
        return ProbDist.from_payload(payload)
    if "re" in payload:
        return DensityOperator.from_payload(payload)
    raise InvalidInputError("entropy input needs either alphabet/probs or dim/re/im")


@click.command()
@click.option("--input", "path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON distribution {alphabet, probs} or density operator {dim, re, im}")
@click.option("--dist", default=None, help="Inline probabilities, comma separated")
@click.option("--lambdas", default=None, help="Bell-diagonal state weights l1,l2,l3,l4")
@click.option("--alpha", default="1", show_default=True, help="Renyi order (0, 1, ..., inf)")
@click.option("--eps", type=float, default=0.0, show_default=True, help="Smoothing radius")
@run_options
@click.pass_context
@usage_errors
def entropy(ctx: click.Context, path: Optional[str], dist: Optional[str], lambdas: Optional[str], alpha: str,
            eps: float):
    """(Smooth) Renyi entropy of a distribution or density operator"""
    request = build_request(ctx, "entropy", {"input": path, "dist": dist, "lambdas": lambdas, "alpha": alpha,
                                             "eps": eps})
    order = parse_order(alpha)
    source = load_source(path, dist, lambdas)
    if isinstance(source, DensityOperator):
        value, kind = qcore.q_entropy(source, order, eps), "density"
    else:
        value = cinfo.smooth_renyi(source, order, eps) if eps > 0 else cinfo.renyi_entropy(source, order)
        kind = "distribution"
    report = EntropyReport(source=kind, alpha="inf" if math.isinf(order) else f"{order:g}", eps=eps, value=value)
    emit(render([report], request.output_format, single=True), request.out)
