# Testing-specific configuration overrides

from .base import Config


class TestingConfig(Config):
    """Testing configuration settings"""

    # Logging
    LOG_LEVEL = 'WARNING'

    # Coarser quadrature and short runs for speed
    GRID_RESOLUTION = (32, 32, 32)
    SCAN_STEPS = 21
    BOOTSTRAP_RESAMPLES = 20
    MAX_WORKERS = 1
