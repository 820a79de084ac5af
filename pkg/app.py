"""
Main entry point of the slmsource command line.
"""
import logging
import os

import click
from rich.console import Console
from rich.logging import RichHandler

from config import load_settings
from config.base import Config
from load_env import load_environment
from utils.decorators import exits_with_status

logger = logging.getLogger(__name__)


def configure_logging(level):
    """Route every logger through one rich handler on stderr."""
    logging.basicConfig(
        level=level,
        format='%(message)s',
        datefmt='[%X]',
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def create_context(profile=None):
    """Application factory: environment files, run profile and logging.

    Returns:
        dict of profile settings, used as the click context object
    """
    load_environment()
    profile = profile or os.environ.get('SLMSOURCE_ENV', 'development')
    settings = load_settings(profile)
    configure_logging(settings['LOG_LEVEL'])
    logger.debug(f"Using profile {settings['PROFILE']}")
    return settings


@click.group()
@click.option('--profile', type=click.Choice(['development', 'testing', 'production']), default=None,
              help='Run profile; defaults to SLMSOURCE_ENV or development.')
@click.version_option(Config.VERSION, prog_name='slmsource')
@click.pass_context
@exits_with_status
def cli(ctx, profile):
    """Simulator of a programmable two-crystal polarization-entanglement source."""
    ctx.obj = create_context(profile)


def register_commands(group):
    from commands.cluster import cluster
    from commands.purify import purify
    from commands.report import report
    from commands.scan import scan
    from commands.tomo import tomo

    for command in (purify, scan, cluster, tomo, report):
        group.add_command(command)


register_commands(cli)


def main():
    cli()


if __name__ == '__main__':
    main()
