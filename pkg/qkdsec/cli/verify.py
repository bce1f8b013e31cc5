import click

from qkdsec.cli.common import build_request, run_options, usage_errors
from qkdsec.cli.render import emit, render
from qkdsec.services.verification_service import SUITES, verification_service, violations


@click.command()
@click.option("--suite", type=click.Choice(SUITES + ("all",)), default="all", show_default=True)
@click.option("--trials", type=int, default=1000, show_default=True, help="Monte-Carlo trials per check")
@run_options
@click.pass_context
@usage_errors
def verify(ctx: click.Context, suite: str, trials: int):
    """Check the bound calculators against Monte-Carlo and exact enumeration"""
    request = build_request(ctx, "verify", {"suite": suite, "trials": trials})
    reports = verification_service.run(suite, trials, request.seed)
    emit(render(reports, request.output_format), request.out)
    failed = violations(reports)
    if failed:
        for report in failed:
            click.echo(f"violated: {report.lemma} {report.inputs} empirical={report.empirical} "
                       f"bound={report.value}", err=True)
        ctx.exit(1)
