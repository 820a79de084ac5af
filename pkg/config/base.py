"""
Base configuration class with common settings.
"""


class Config:
    """Base run profile with common settings."""

    VERSION = '0.1.0'

    # Logging
    LOG_LEVEL = 'INFO'

    # Quadrature: (n_theta, n_omega_s, n_omega_p)
    GRID_RESOLUTION = (64, 64, 32)

    # Acquisition
    SCAN_WINDOW_S = 30.0
    TOMO_WINDOW_S = 60.0
    RATE_SCALE = 100.0
    BACKGROUND_RATE = 0.0
    SCAN_STEPS = 41

    # Maximum-likelihood tomography
    MLE_MAX_ITERATIONS = 5000
    MLE_TOLERANCE = 1e-10
    BOOTSTRAP_RESAMPLES = 200

    # Worker threads for scan points and bootstrap resamples (None: executor default)
    MAX_WORKERS = None
