import logging
from typing import Optional

import click

from qkdsec.cli.common import build_request, run_options, usage_errors
from qkdsec.cli.render import emit, render
from qkdsec.core.config import DEFAULT_B92_ALPHA, DEFAULT_PA_EPSILON, DEFAULT_SAMPLING_EXPONENT
from qkdsec.core.exceptions import InvalidInputError
from qkdsec.schemas.protocol import AttackKind, AttackModel, ProtocolConfig
from qkdsec.schemas.requests import OutputFormat, parse_floats
from qkdsec.services.engine_service import run_protocol

logger = logging.getLogger(__name__)


def build_attack(lambdas: Optional[str], depol: Optional[float], b92_overlaps: Optional[str],
                 b92_alpha: float) -> AttackModel:
    given = [v is not None for v in (lambdas, depol, b92_overlaps)]
    if sum(given) != 1:
        raise InvalidInputError("give exactly one of --lambdas, --depol or --b92-overlaps")
    if lambdas is not None:
        return AttackModel.bell_diagonal(parse_floats(lambdas, 4))
    if depol is not None:
        return AttackModel.depolarizing(depol)
    delta, e, c, t = parse_floats(b92_overlaps, 4)
    return AttackModel(kind=AttackKind.B92_UNITARY, alpha=b92_alpha, delta=delta, e_overlap=e, re_e_tilde=c,
                       tilde_overlap=t)


@click.command()
@click.option("--protocol", default="bb84", show_default=True,
              type=click.Choice(["bb84", "six-state", "six_state", "b92"], case_sensitive=False))
@click.option("--n", "n", type=int, required=True, help="Number of transmitted systems")
@click.option("--lambdas", default=None, help="Bell-diagonal attack weights l1,l2,l3,l4")
@click.option("--depol", type=float, default=None, help="Depolarizing attack probability")
@click.option("--b92-overlaps", default=None, help="B92 unitary attack: delta,<e+|e->,Re<e|e~>,<e~+|e~->")
@click.option("--b92-alpha", type=float, default=DEFAULT_B92_ALPHA, show_default=True)
@click.option("--p", "p", type=float, default=None, help="Sampling rate (default n^-alpha_exponent)")
@click.option("--alpha-exponent", type=float, default=DEFAULT_SAMPLING_EXPONENT, show_default=True)
@click.option("--method", type=click.Choice(["pauli", "povm"]), default="pauli", show_default=True)
@click.option("--key-length", type=int, default=None, help="Fixed final key length (desk mode)")
@click.option("--ir-length", type=int, default=None, help="Fixed per-block reconciliation hash length")
@click.option("--pa-epsilon", type=float, default=DEFAULT_PA_EPSILON, show_default=True)
@click.option("--exact-eve", is_flag=True, help="Exact distance of the key from uniform given Eve (n <= 6)")
@click.option("--conditioned", is_flag=True, help="Use the W-conditioned adversarial entropy")
@run_options
@click.pass_context
@usage_errors
def simulate(ctx: click.Context, protocol: str, n: int, lambdas: Optional[str], depol: Optional[float],
             b92_overlaps: Optional[str], b92_alpha: float, p: Optional[float], alpha_exponent: float, method: str,
             key_length: Optional[int], ir_length: Optional[int], pa_epsilon: float, exact_eve: bool,
             conditioned: bool):
    """Run the protocol on simulated data and print the transcript"""
    flags = {k: v for k, v in locals().items() if k != "ctx"}
    request = build_request(ctx, "simulate", flags)
    config = ProtocolConfig(
        protocol=protocol.replace("-", "_").lower(),
        n=n,
        p=p,
        alpha_exponent=alpha_exponent,
        attack=build_attack(lambdas, depol, b92_overlaps, b92_alpha),
        seed=request.seed,
        pa_epsilon=pa_epsilon,
        exact_eve=exact_eve,
        method=method,
        key_length=key_length,
        ir_length=ir_length,
        conditioned=conditioned,
        b92_alpha=b92_alpha,
    )
    transcript = run_protocol(config)
    summary = transcript.summary()
    status = f"aborted ({summary.abort_reason})" if summary.aborted else "ok"
    click.echo(f"n'={summary.n_prime} r'={summary.r_prime} s'={summary.s_prime} {status}", err=True)
    if request.output_format == OutputFormat.JSON:
        emit(transcript.to_json() + "\n", request.out)
    else:
        emit(render([summary], request.output_format), request.out)
