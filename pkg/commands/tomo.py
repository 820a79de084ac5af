"""
Tomography command: maximum-likelihood reconstruction from counts.
"""
import click

from commands import console, print_outputs, run_options, summary_table
from services.run_service import RunService
from utils.decorators import collect_arguments, exits_with_status


@click.command('tomo')
@run_options('out/tomo')
@click.option('--counts', type=click.Path(dir_okay=False), default=None,
              help='Counts CSV (setting,counts,window); simulates the purified source when omitted.')
@click.option('--targets', default='bell_phi+', show_default=True,
              help='Comma-separated targets: bell_phi+, bell_phi-, delta+:<phi>, delta-:<phi>.')
@click.option('--sectors', default=None, help='Sector layout of the simulated source.')
@click.option('--sector', type=int, default=None, help='Signal sector selected by the slit.')
@click.option('--mask', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Drive pattern CSV of the simulated source; defaults to the analytic mask.')
@click.option('--bootstrap', type=int, default=None, help='Bootstrap resamples (0 disables).')
@click.pass_context
@exits_with_status
@collect_arguments
def tomo(ctx, arguments):
    """Reconstruct the polarization state and report target fidelities."""
    if not arguments.get('counts') and arguments.get('seed') is None:
        raise click.UsageError("simulated tomography draws random counts; pass --seed or --counts")
    report, manifest = RunService.execute(ctx.obj, 'tomo', arguments)
    rows = [('iterations', report['iterations']), ('converged', report['converged']), ('stalled', report['stalled'])]
    for name, fidelity in report['fidelities'].items():
        value = f"{fidelity['value']:.4f}"
        if 'std' in fidelity:
            value += f" +/- {fidelity['std']:.4f}"
        rows.append((f'F({name})', value))
    rows += sorted(report['metrics'].items())
    console.print(summary_table('Tomography', rows))
    print_outputs(manifest)
