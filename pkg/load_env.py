#!/usr/bin/env python3
"""
Environment loader utility for the entanglement source simulator
Loads appropriate .env file based on SLMSOURCE_ENV environment variable
"""

import logging
import os

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_FILES = {
    'development': '.env.development',
    'testing': '.env.testing',
    'production': '.env.production'
}


def load_environment():
    """Load environment variables from appropriate .env file"""

    # Get current environment
    profile = os.environ.get('SLMSOURCE_ENV', 'development')

    # Load the appropriate .env file
    env_file = ENV_FILES.get(profile, '.env.development')

    if os.path.exists(env_file):
        load_dotenv(env_file, override=False)
        logger.debug(f"Loaded environment from {env_file}")
    else:
        logger.debug(f"{env_file} not found, using system environment variables")

    # Also try to load .env.local for local overrides (not tracked in git)
    local_env = '.env.local'
    if os.path.exists(local_env):
        load_dotenv(local_env, override=True)
        logger.debug(f"Loaded local overrides from {local_env}")

    return os.environ.get('SLMSOURCE_ENV', profile)


if __name__ == '__main__':
    load_environment()
