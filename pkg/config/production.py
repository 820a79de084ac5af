# Production-specific configuration overrides

from .base import Config


class ProductionConfig(Config):
    """Production configuration settings"""

    # Logging
    LOG_LEVEL = 'INFO'

    # Finer quadrature for published numbers
    GRID_RESOLUTION = (128, 128, 64)
    BOOTSTRAP_RESAMPLES = 500
