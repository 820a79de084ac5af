"""
Custom decorators for the command-line layer.
"""
import logging
from functools import wraps

import click

from utils.errors import SimulationError

logger = logging.getLogger(__name__)


def exits_with_status(f):
    """Translate simulator errors into their process exit codes."""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except SimulationError as e:
            logger.error(f"{type(e).__name__}: {e}")
            raise click.exceptions.Exit(e.exit_code) from e
    return decorated_function


def seed_required(f):
    """Refuse to run a stochastic command without --seed."""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        if kwargs.get('seed') is None:
            raise click.UsageError("this command draws random counts; pass --seed")
        return f(*args, **kwargs)
    return decorated_function


def collect_arguments(f):
    """Pack the command's options into one JSON-ready ``arguments`` dict.

    Path options become strings and ``--set`` pairs a dict, so the same dict
    can be stored in the run manifest and replayed.
    """
    @wraps(f)
    def decorated_function(ctx, **kwargs):
        from services.run_service import parse_overrides
        arguments = {}
        for key, value in kwargs.items():
            if key == 'set':
                value = parse_overrides(value)
            elif value is not None and not isinstance(value, (int, float, str, bool)):
                value = str(value)
            arguments[key] = value
        return f(ctx, arguments)
    return decorated_function
