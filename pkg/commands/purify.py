"""
Purification command: calibration scans, mask search and the visibility ladder.
"""
import click

from commands import console, print_outputs, run_options, summary_table
from services.run_service import RunService
from utils.decorators import collect_arguments, exits_with_status, seed_required


@click.command('purify')
@run_options('out/purify')
@click.option('--steps', type=int, default=None, help='Points per scan and per search stage.')
@click.pass_context
@exits_with_status
@seed_required
@collect_arguments
def purify(ctx, arguments):
    """Find the purification mask and report the visibility at each stage."""
    summary, manifest = RunService.execute(ctx.obj, 'purify', arguments)
    mask = summary['optimal_mask']
    rows = [
        ('a1 (rad/pixel)', mask['a1']),
        ('a2 (rad/pixel)', mask['a2']),
        ('b1 + b2 (rad)', mask['b_sum']),
        ('analytic a1', summary['analytic_mask']['a1']),
    ]
    for stage in summary['ladder']:
        rows.append((f"V {stage['stage']}", stage['visibility']))
        rows.append((f"V {stage['stage']} (counts)",
                     f"{stage['count_visibility']:.4f} +/- {stage['count_visibility_error']:.4f}"))
    console.print(summary_table('Purification', rows))
    print_outputs(manifest)
