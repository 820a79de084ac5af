#!/usr/bin/env python3
"""
Environment validation script for the SLM entanglement source simulator
Validates that every SLMSOURCE_ variable names a profile setting and parses
"""

import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import ENV_PREFIX, config, get_config, load_settings  # noqa: E402
from load_env import load_environment  # noqa: E402
from models.physical_config import PhysicalConfig  # noqa: E402
from utils.errors import ConfigurationError  # noqa: E402

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def validate_profile(name):
    """Validate the selected run profile"""
    if name not in config:
        return False, f"Unknown profile '{name}', expected one of {', '.join(config)}"
    return True, "Valid"


def validate_settings(settings):
    """Validate value ranges that the profile loader does not check"""
    resolution = settings['GRID_RESOLUTION']
    if len(resolution) != 3 or min(resolution) < 8:
        return False, f"GRID_RESOLUTION needs three values >= 8, got {resolution}"
    if settings['LOG_LEVEL'] not in LOG_LEVELS:
        return False, f"Invalid LOG_LEVEL: {settings['LOG_LEVEL']}"
    for key in ('SCAN_WINDOW_S', 'TOMO_WINDOW_S', 'RATE_SCALE'):
        if not settings[key] > 0:
            return False, f"{key} must be positive"
    if settings['BACKGROUND_RATE'] < 0:
        return False, "BACKGROUND_RATE must be non-negative"
    return True, "Valid"


def validate_physical_config(path):
    """Validate a physical configuration file"""
    try:
        PhysicalConfig.from_file(path)
    except ConfigurationError as e:
        return False, str(e)
    return True, "Valid"


def main():
    """Main validation function"""
    print("SLM entanglement source - Environment Validation")
    print("=" * 50)

    errors = []
    warnings = []

    profile = load_environment()
    print(f"\nProfile: {profile}")
    is_valid, message = validate_profile(profile)
    if not is_valid:
        errors.append(message)

    # Unknown SLMSOURCE_ variables are ignored by the loader; flag them here
    known = {key for key in dir(get_config(profile)) if key.isupper()} | {'ENV'}
    print("\nChecking SLMSOURCE_ variables...")
    for var in sorted(v for v in os.environ if v.startswith(ENV_PREFIX)):
        key = var[len(ENV_PREFIX):]
        if key not in known:
            warnings.append(f"{var} does not name a profile setting")
        else:
            print(f"{var} is set: {os.environ[var]}")

    print("\nParsing profile settings...")
    try:
        settings = load_settings(profile)
    except ConfigurationError as e:
        errors.append(f"Profile settings: {e}")
    else:
        is_valid, message = validate_settings(settings)
        if is_valid:
            print(f"Profile settings: {message}")
        else:
            errors.append(f"Profile settings: {message}")

    config_path = 'physical.conf'
    print(f"\nValidating physical configuration {config_path}...")
    if os.path.exists(config_path):
        is_valid, message = validate_physical_config(config_path)
        if is_valid:
            print(f"Physical config: {message}")
        else:
            errors.append(f"Physical config: {message}")
    else:
        warnings.append(f"{config_path} not found, commands will use the calibrated defaults")

    # Print summary
    print("\n" + "=" * 50)
    print("VALIDATION SUMMARY")
    print("=" * 50)

    if errors:
        print(f"\n{len(errors)} ERROR(S) FOUND:")
        for error in errors:
            print(f"   {error}")

    if warnings:
        print(f"\n{len(warnings)} WARNING(S):")
        for warning in warnings:
            print(f"   {warning}")

    if not errors and not warnings:
        print("\nAll environment variables are properly configured!")
    elif not errors:
        print("\nEnvironment is valid (warnings can be ignored)")
    else:
        print(f"\nEnvironment validation failed with {len(errors)} error(s)")
        sys.exit(1)


if __name__ == '__main__':
    main()
