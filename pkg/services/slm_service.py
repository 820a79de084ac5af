"""
Service for building and reading spatial light modulator phase masks.
"""
import logging
import math

import numpy as np

from models.phase_mask import LinearRamp, PhaseMask, check_arm
from utils.errors import ConfigurationError, MaskRangeError

logger = logging.getLogger(__name__)


class SlmService:
    """Angle to pixel mapping, purification ramps and sector phase gates."""

    # Steeper ramps alias on the pixel grid
    MAX_SLOPE = math.pi

    @staticmethod
    def center_pixel(cfg, arm):
        return cfg.signal_center_pixel if check_arm(arm) == 'signal' else cfg.idler_center_pixel

    @staticmethod
    def pixel_coordinate(cfg, arm, angle):
        """Fractional pixel coordinate x_c + (D/d) * angle."""
        return SlmService.center_pixel(cfg, arm) + cfg.pixels_per_radian * np.asarray(angle, dtype=float)

    @staticmethod
    def pixel_of(cfg, arm, angle):
        """
        Map an emission angle to the pixel that intercepts it.

        Halfway cases round away from the centre pixel.

        Args:
            cfg: PhysicalConfig
            arm: 'signal' (theta) or 'idler' (theta')
            angle: angle in rad, scalar or array

        Returns:
            int or integer ndarray of pixel indices

        Raises:
            MaskRangeError: if any angle lands outside [0, pixel_count)
        """
        center = SlmService.center_pixel(cfg, arm)
        angle = np.asarray(angle, dtype=float)
        relative = cfg.pixels_per_radian * angle
        pixels = center + (np.sign(relative) * np.floor(np.abs(relative) + 0.5)).astype(int)
        outside = (pixels < 0) | (pixels >= cfg.pixel_count)
        if np.any(outside):
            first = np.argwhere(np.atleast_1d(outside))[0][0]
            raise MaskRangeError(arm, float(np.atleast_1d(angle)[first]), int(np.atleast_1d(pixels)[first]))
        return int(pixels) if pixels.ndim == 0 else pixels

    @staticmethod
    def pixel_angle(cfg, arm, pixel):
        """Emission angle imaged onto the centre of ``pixel``."""
        return (np.asarray(pixel, dtype=float) - SlmService.center_pixel(cfg, arm)) / cfg.pixels_per_radian

    @staticmethod
    def linear_mask(cfg, a1=0.0, b1=0.0, a2=0.0, b2=0.0):
        """
        Tabulate phi'(x) = a1 (x - xc1) + b1 on the idler and phi(x) = a2 (x - xc2) + b2 on the signal.

        Args:
            cfg: PhysicalConfig providing pixel_count and the centre pixels
            a1, b1: idler slope (rad/pixel) and offset (rad)
            a2, b2: signal slope (rad/pixel) and offset (rad)

        Returns:
            PhaseMask with wrapped tables and the ramp parameters attached
        """
        ramp = LinearRamp(float(a1), float(b1), float(a2), float(b2),
                          float(cfg.idler_center_pixel), float(cfg.signal_center_pixel))
        return PhaseMask.from_ramp(cfg.pixel_count, ramp)

    @staticmethod
    def purification_mask(cfg):
        """Analytic optimum a1 = -a2 = beta*L*d/(gamma*D), b1 = phi0, b2 = 0."""
        slope = cfg.compensation_slope
        return SlmService.linear_mask(cfg, slope, cfg.phi0, -slope, 0.0)

    @staticmethod
    def check_slope(slope):
        if not abs(slope) < SlmService.MAX_SLOPE:
            raise ConfigurationError(f"ramp slope {slope:.4g} rad/pixel exceeds the pixel Nyquist limit of pi")

    @staticmethod
    def sector_offsets(cfg, sectors):
        """Per-pixel offset tables (signal, idler) for the sector phases.

        Each pixel takes the phase of the sector containing the angle imaged
        on its centre; the outer sectors extend to the device edges.
        """
        pixels = np.arange(cfg.pixel_count)
        signal_index = sectors.signal_index(SlmService.pixel_angle(cfg, 'signal', pixels))
        idler_index = sectors.idler_index(SlmService.pixel_angle(cfg, 'idler', pixels))
        return (np.asarray(sectors.signal_phases)[signal_index],
                np.asarray(sectors.idler_phases)[idler_index])

    @staticmethod
    def with_sector_offsets(mask, cfg, sectors):
        """
        Add the constant controlled-phase offsets of each sector to ``mask``.

        The purification ramp is kept; only the offsets change.

        Raises:
            ConfigurationError: if the sectors do not tile the acceptance window
        """
        sectors.check_window(cfg)
        if mask.pixel_count != cfg.pixel_count:
            raise ConfigurationError(f"mask has {mask.pixel_count} pixels, device has {cfg.pixel_count}")
        signal_offsets, idler_offsets = SlmService.sector_offsets(cfg, sectors)
        logger.debug(f"Sector offsets: signal {sectors.signal_phases}, idler {sectors.idler_phases}")
        return mask.with_sectors(sectors, signal_offsets, idler_offsets)

    @staticmethod
    def mask_phase(cfg, mask, arm, angle):
        """Phase the mask imprints on ``arm`` at ``angle``.

        Pixelated configurations read the drive table; otherwise the ramp is
        evaluated at the fractional pixel coordinate.
        """
        pixels = SlmService.pixel_of(cfg, arm, angle)
        if cfg.pixelated:
            return mask.lookup(arm, pixels)
        return mask.continuous(arm, SlmService.pixel_coordinate(cfg, arm, angle), angle)
