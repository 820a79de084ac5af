# Configuration package initialization

import os

from utils.errors import ConfigurationError

from .development import DevelopmentConfig
from .testing import TestingConfig
from .production import ProductionConfig

ENV_PREFIX = 'SLMSOURCE_'

# Configuration mapping
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig
}


def get_config(env_name='development'):
    """Get configuration class based on environment name"""
    return config.get(env_name, DevelopmentConfig)


def _coerce(raw, default):
    if isinstance(default, bool):
        return raw.strip().lower() in ('true', 'on', '1', 'yes')
    if isinstance(default, int) or default is None:
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(int(part) for part in raw.split(','))
    return raw


def load_settings(env_name='development'):
    """Profile values as a dict; SLMSOURCE_<KEY> environment variables take precedence.

    Raises:
        ConfigurationError: if an SLMSOURCE_<KEY> value does not parse
    """
    profile = get_config(env_name)
    settings = {key: getattr(profile, key) for key in dir(profile) if key.isupper()}
    for key, default in settings.items():
        raw = os.environ.get(ENV_PREFIX + key)
        if not raw:
            continue
        try:
            settings[key] = _coerce(raw, default)
        except ValueError as e:
            raise ConfigurationError(f"{ENV_PREFIX}{key}='{raw}' does not parse: {e}", key=key) from e
    settings['PROFILE'] = env_name if env_name in config else 'development'
    return settings
