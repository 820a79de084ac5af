# Development-specific configuration overrides

from .base import Config


class DevelopmentConfig(Config):
    """Development-specific configuration overrides."""

    # Logging
    LOG_LEVEL = 'DEBUG'

    # Fewer resamples for quick iterations
    BOOTSTRAP_RESAMPLES = 100
