"""
Scan command: one calibration sweep of a mask parameter.
"""
import click

from commands import console, print_outputs, run_options, summary_table
from services.bench_service import SCAN_PARAMETERS
from services.run_service import RunService
from utils.decorators import collect_arguments, exits_with_status, seed_required


@click.command('scan')
@click.argument('parameter', type=click.Choice(SCAN_PARAMETERS))
@run_options('out/scan')
@click.option('--start', type=float, default=None, help='First value; defaults to the search range of PARAMETER.')
@click.option('--stop', type=float, default=None, help='Last value; defaults to the search range of PARAMETER.')
@click.option('--steps', type=int, default=None, help='Number of scan points.')
@click.option('--export-grid', is_flag=True, default=False, help='Also write the integration nodes to grid.csv.')
@click.pass_context
@exits_with_status
@seed_required
@collect_arguments
def scan(ctx, arguments):
    """Sweep PARAMETER and record 45/-45 coincidences at every point."""
    summary, manifest = RunService.execute(ctx.obj, 'scan', arguments)
    console.print(summary_table(f"Scan of {summary['parameter']}", [('analytic minimum', summary['minimum'])]))
    print_outputs(manifest)
