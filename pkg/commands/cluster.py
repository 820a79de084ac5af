"""
Cluster command: sector-gated states and their fidelities.
"""
import click

from commands import console, print_outputs, run_options, summary_table
from services.run_service import RunService
from utils.decorators import collect_arguments, exits_with_status


@click.command('cluster')
@run_options('out/cluster')
@click.option('--sectors', default='c3', show_default=True,
              help="Sector layout: c3[:phi], xi4:<phi_0i>,<phi_1s> or NxM[:s=..;i=..][/anticorrelated].")
@click.option('--mask', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Drive pattern CSV (pixel,signal_phase,idler_phase) used instead of the analytic mask.')
@click.pass_context
@exits_with_status
@collect_arguments
def cluster(ctx, arguments):
    """Synthesize a hyperentangled state; with --seed also run per-sector tomography."""
    summary, manifest = RunService.execute(ctx.obj, 'cluster', arguments)
    rows = [('target', summary['target']), ('fidelity', summary['fidelity'])]
    rows += [(f'sector {name} fidelity', value) for name, value in summary['conditional_fidelities'].items()]
    for name, report in (summary.get('tomography') or {}).items():
        rows.append((f'sector {name} tomography', report['fidelity']))
    console.print(summary_table('Cluster state', rows))
    print_outputs(manifest)
