"""
Subcommands of the slmsource command line, one module per command.
"""
import click
from rich.console import Console
from rich.table import Table

console = Console()


def run_options(default_out):
    """Options shared by every pipeline command."""
    def decorator(f):
        f = click.option('--windows', default=None,
                         help='Acquisition windows in seconds as scan[,tomo].')(f)
        f = click.option('--set', 'set', multiple=True, metavar='KEY=VALUE',
                         help='Override one physical configuration key; repeatable.')(f)
        f = click.option('--out', default=default_out, show_default=True, type=click.Path(file_okay=False),
                         help='Output directory.')(f)
        f = click.option('--seed', type=int, default=None, help='Master seed for every random stream.')(f)
        f = click.option('--config', type=click.Path(dir_okay=False), default=None,
                         help='Physical configuration file (key = value).')(f)
        return f
    return decorator


def summary_table(title, rows):
    """Two-column rich table of (name, value) rows."""
    table = Table(title=title)
    table.add_column('quantity', style='cyan')
    table.add_column('value', justify='right')
    for name, value in rows:
        if isinstance(value, float):
            value = f'{value:.6g}'
        table.add_row(str(name), '-' if value is None else str(value))
    return table


def print_outputs(manifest):
    console.print(f"[green]wrote[/green] {', '.join(manifest.outputs)} to {manifest.output_dir}")
