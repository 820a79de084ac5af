"""
Report command: summarize a finished run and optionally repeat it.
"""
from pathlib import Path

import click

from commands import console, summary_table
from config import load_settings
from models.manifest import MANIFEST_NAME, RunManifest
from services.run_service import RunService
from utils.decorators import exits_with_status
from utils.errors import SimulationError
from utils.qmath import purity
from utils.serialization import read_density_csv, read_scan

DENSITY_OUTPUTS = ('state.csv', 'rho_mle.csv')


def compare_outputs(original, repeated, names):
    """Byte comparison of each named output; returns {name: bool}."""
    return {name: (Path(original) / name).read_bytes() == (Path(repeated) / name).read_bytes() for name in names}


def output_rows(run_dir, names):
    """Scan minimum and state purity read back from the written files."""
    rows = []
    for name in names:
        path = Path(run_dir) / name
        if name.startswith('scan_'):
            lowest = min(read_scan(path), key=lambda row: row[1])
            rows.append((f'{name} minimum', lowest[0]))
        elif name in DENSITY_OUTPUTS:
            rows.append((f'{name} purity', purity(read_density_csv(path))))
    return rows


@click.command('report')
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--rerun', type=click.Path(file_okay=False), default=None,
              help='Repeat the recorded command into this directory and compare outputs.')
@click.pass_context
@exits_with_status
def report(ctx, run_dir, rerun):
    """Print the manifest of RUN_DIR; with --rerun check the outputs reproduce."""
    manifest = RunManifest.read(Path(run_dir) / MANIFEST_NAME)
    rows = [
        ('command', manifest.command),
        ('seed', manifest.seed),
        ('config', manifest.config_path),
        ('profile', manifest.profile),
        ('version', manifest.tool_version),
        ('timestamp', manifest.timestamp),
    ]
    rows += [(f'argument {key}', value) for key, value in sorted(manifest.arguments.items())
             if key not in ('seed', 'config', 'out')]
    rows += [('output', name) for name in manifest.outputs]
    rows += output_rows(run_dir, manifest.outputs)
    console.print(summary_table(f'Run {run_dir}', rows))

    if rerun is None:
        return
    settings = load_settings(manifest.profile)
    _, repeated = RunService.execute(settings, manifest.command, {**manifest.arguments, 'out': rerun})
    matches = compare_outputs(run_dir, rerun, manifest.outputs)
    console.print(summary_table('Rerun', [(name, 'identical' if same else 'DIFFERS')
                                          for name, same in matches.items()]))
    if not all(matches.values()):
        raise SimulationError(f"rerun outputs differ: {', '.join(n for n, same in matches.items() if not same)}")
    console.print(f"[green]all {len(matches)} outputs reproduced in {repeated.output_dir}[/green]")
