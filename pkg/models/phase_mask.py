"""
Pixelated phase patterns of the spatial light modulator.

One device carries both arms: the idler window is centred on
``idler_center`` and the signal window on ``signal_center``. Phases act on
horizontally polarized light only.
"""
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from utils.errors import ConfigurationError, UsageError

ARMS = ('signal', 'idler')
MASK_CSV_HEADER = ['pixel', 'signal_phase', 'idler_phase']


def wrap_phase(phase):
    """Map phases into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(phase, dtype=float), 2 * np.pi)


def check_arm(arm):
    if arm not in ARMS:
        raise UsageError(f"arm must be 'signal' or 'idler', got '{arm}'")
    return arm


@dataclass(frozen=True)
class LinearRamp:
    """Ramp parameters phi'(x) = a1 (x - xc1) + b1 (idler), phi(x) = a2 (x - xc2) + b2 (signal)."""

    a1: float = 0.0
    b1: float = 0.0
    a2: float = 0.0
    b2: float = 0.0
    idler_center: float = 0.0
    signal_center: float = 0.0

    def value(self, arm, x):
        """Unwrapped ramp phase at (possibly fractional) pixel coordinate ``x``."""
        x = np.asarray(x, dtype=float)
        if check_arm(arm) == 'idler':
            return self.a1 * (x - self.idler_center) + self.b1
        return self.a2 * (x - self.signal_center) + self.b2

    def parameters(self):
        return (self.a1, self.b1, self.a2, self.b2)

    def to_dict(self):
        return {
            'a1': self.a1, 'b1': self.b1, 'a2': self.a2, 'b2': self.b2,
            'idler_center': self.idler_center, 'signal_center': self.signal_center,
        }


@dataclass(frozen=True, eq=False)
class PhaseMask:
    """Per-pixel phase tables for both arms.

    ``signal_phases``/``idler_phases`` are the wrapped drive tables. When the
    mask was built from a ramp, ``ramp`` keeps the parameters and
    ``*_offsets`` the per-pixel sector offsets (unwrapped) so the pattern can
    also be evaluated off the pixel grid.
    """

    pixel_count: int
    signal_phases: np.ndarray
    idler_phases: np.ndarray
    ramp: LinearRamp = None
    signal_offsets: np.ndarray = None
    idler_offsets: np.ndarray = None
    sectors: object = None

    def __post_init__(self):
        if self.pixel_count < 1:
            raise ConfigurationError("pixel_count must be positive")
        for name in ('signal_phases', 'idler_phases', 'signal_offsets', 'idler_offsets'):
            value = getattr(self, name)
            if value is None:
                value = np.zeros(self.pixel_count)
            array = np.array(value, dtype=float).reshape(-1)
            if array.size != self.pixel_count:
                raise UsageError(f"{name} has {array.size} entries, expected {self.pixel_count}")
            if name.endswith('_phases'):
                array = wrap_phase(array)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @classmethod
    def zeros(cls, pixel_count):
        return cls(pixel_count, np.zeros(pixel_count), np.zeros(pixel_count))

    @classmethod
    def from_ramp(cls, pixel_count, ramp, signal_offsets=None, idler_offsets=None):
        """Tabulate ``ramp`` plus offsets at the pixel centres."""
        pixels = np.arange(pixel_count)
        signal_offsets = np.zeros(pixel_count) if signal_offsets is None else np.asarray(signal_offsets, dtype=float)
        idler_offsets = np.zeros(pixel_count) if idler_offsets is None else np.asarray(idler_offsets, dtype=float)
        return cls(
            pixel_count,
            ramp.value('signal', pixels) + signal_offsets,
            ramp.value('idler', pixels) + idler_offsets,
            ramp,
            signal_offsets,
            idler_offsets,
        )

    def table(self, arm):
        return self.signal_phases if check_arm(arm) == 'signal' else self.idler_phases

    def offsets(self, arm):
        return self.signal_offsets if check_arm(arm) == 'signal' else self.idler_offsets

    def lookup(self, arm, pixel):
        """Wrapped phase of ``pixel`` (int or integer array)."""
        return self.table(arm)[np.asarray(pixel, dtype=int)]

    def continuous(self, arm, x, angle=None):
        """Phase at fractional coordinate ``x`` (off the pixel grid).

        The ramp is evaluated at ``x``. Sector offsets come from the sector
        containing ``angle`` when the mask knows its sectors, otherwise from
        the nearest pixel. Masks without a ramp (read from CSV) fall back to
        the table.
        """
        x = np.asarray(x, dtype=float)
        nearest = np.clip(np.rint(x).astype(int), 0, self.pixel_count - 1)
        if self.ramp is None:
            return self.table(arm)[nearest]
        if self.sectors is not None and angle is not None:
            return self.ramp.value(arm, x) + self.sectors.phase_of(arm, angle)
        return self.ramp.value(arm, x) + self.offsets(arm)[nearest]

    def with_sectors(self, sectors, signal_offsets, idler_offsets):
        """Add the per-pixel offsets of ``sectors`` on top of this mask."""
        if self.sectors is not None:
            raise UsageError("mask already carries sector offsets")
        signal_offsets = np.asarray(signal_offsets, dtype=float)
        idler_offsets = np.asarray(idler_offsets, dtype=float)
        return PhaseMask(
            self.pixel_count,
            self.signal_phases + signal_offsets,
            self.idler_phases + idler_offsets,
            self.ramp,
            self.signal_offsets + signal_offsets,
            self.idler_offsets + idler_offsets,
            sectors,
        )

    def __repr__(self):
        return f'<PhaseMask pixels={self.pixel_count} ramp={self.ramp is not None}>'

    def to_dict(self):
        """Convert mask to dictionary (tables are left to the CSV export)."""
        return {
            'pixel_count': self.pixel_count,
            'ramp': self.ramp.to_dict() if self.ramp else None,
            'signal_offset_levels': sorted({float(v) for v in self.signal_offsets}),
            'idler_offset_levels': sorted({float(v) for v in self.idler_offsets}),
            'sectors': self.sectors.to_dict() if self.sectors else None,
        }

    # -- drive-pattern CSV ----------------------------------------------------

    def to_csv(self, path):
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle)
            writer.writerow(MASK_CSV_HEADER)
            for pixel in range(self.pixel_count):
                writer.writerow([pixel, repr(float(self.signal_phases[pixel])), repr(float(self.idler_phases[pixel]))])

    @classmethod
    def from_csv(cls, path):
        """Read a drive pattern; rows must list every pixel in order."""
        path = Path(path)
        signal, idler = [], []
        with open(path, newline='', encoding='utf-8') as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != MASK_CSV_HEADER:
                raise ConfigurationError(f"{path.name}: expected header {','.join(MASK_CSV_HEADER)}", line_number=1)
            for line_number, row in enumerate(reader, start=2):
                try:
                    pixel, signal_phase, idler_phase = int(row[0]), float(row[1]), float(row[2])
                except (ValueError, IndexError) as e:
                    raise ConfigurationError(f"{path.name}: malformed row ({e})", line_number=line_number) from e
                if pixel != len(signal):
                    raise ConfigurationError(f"{path.name}: expected pixel {len(signal)}, got {pixel}",
                                             line_number=line_number)
                if not (math.isfinite(signal_phase) and math.isfinite(idler_phase)):
                    raise ConfigurationError(f"{path.name}: phases must be finite", line_number=line_number)
                signal.append(signal_phase)
                idler.append(idler_phase)
        if not signal:
            raise ConfigurationError(f"{path.name}: no pixels")
        return cls(len(signal), signal, idler)
