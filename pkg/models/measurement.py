"""
Measurement settings of the detection bench and the counts they produce.
"""
import math
from dataclasses import asdict, dataclass, replace

from utils.errors import UsageError

DEFAULT_RATE_SCALE = 100.0
DEFAULT_SCAN_WINDOW = 30.0
DEFAULT_TOMO_WINDOW = 60.0

# Single-arm analyzer settings used for tomography: (quarter-wave, half-wave, polarizer), degrees
ANALYZERS = {
    'H': (None, None, 0.0),
    'V': (None, None, 90.0),
    'D': (None, None, 45.0),
    'A': (None, None, -45.0),
    'R': (45.0, None, 0.0),
    'L': (-45.0, None, 0.0),
}


@dataclass(frozen=True)
class MeasurementSetting:
    """Waveplate and polarizer angles (degrees) for both arms.

    A waveplate angle of ``None`` means the plate is not inserted. ``sector``
    selects one signal momentum sector with the slit; ``None`` leaves the
    slit open.
    """

    signal_polarizer: float = 0.0
    idler_polarizer: float = 0.0
    signal_qwp: float = None
    signal_hwp: float = None
    idler_qwp: float = None
    idler_hwp: float = None
    sector: int = None
    window: float = DEFAULT_SCAN_WINDOW
    rate_scale: float = DEFAULT_RATE_SCALE
    background_rate: float = 0.0
    label: str = ''

    def __post_init__(self):
        for name in ('signal_polarizer', 'idler_polarizer', 'signal_qwp', 'signal_hwp', 'idler_qwp', 'idler_hwp'):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise UsageError(f"{name} must be finite")
        if not self.window > 0:
            raise UsageError("acquisition window must be positive")
        if not self.rate_scale > 0:
            raise UsageError("rate scale must be positive")
        if self.background_rate < 0:
            raise UsageError("background rate must be non-negative")
        if self.sector is not None and self.sector < 0:
            raise UsageError("sector index must be non-negative")

    @classmethod
    def polarizers(cls, signal_angle, idler_angle, **kwargs):
        """Bare polarizers, no waveplates."""
        return cls(signal_polarizer=signal_angle, idler_polarizer=idler_angle, **kwargs)

    @classmethod
    def analyzer(cls, signal_label, idler_label, **kwargs):
        """Tomography setting from single-arm analyzer labels such as 'H' and 'R'."""
        try:
            s_qwp, s_hwp, s_pol = ANALYZERS[signal_label]
            i_qwp, i_hwp, i_pol = ANALYZERS[idler_label]
        except KeyError as e:
            raise UsageError(f"unknown analyzer {e.args[0]}; expected one of {', '.join(ANALYZERS)}") from e
        kwargs.setdefault('label', signal_label + idler_label)
        return cls(s_pol, i_pol, s_qwp, s_hwp, i_qwp, i_hwp, **kwargs)

    def arm(self, arm):
        """(quarter-wave, half-wave, polarizer) of one arm."""
        if arm == 'signal':
            return self.signal_qwp, self.signal_hwp, self.signal_polarizer
        return self.idler_qwp, self.idler_hwp, self.idler_polarizer

    def with_changes(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        """Convert setting to dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class CountRecord:
    """Coincidences recorded for one setting."""

    setting: MeasurementSetting
    counts: int
    expected_rate: float = None

    def __post_init__(self):
        if int(self.counts) != self.counts or self.counts < 0:
            raise UsageError(f"counts must be a non-negative integer, got {self.counts}")
        object.__setattr__(self, 'counts', int(self.counts))

    @property
    def window(self):
        return self.setting.window

    @property
    def label(self):
        return self.setting.label

    def with_counts(self, counts):
        return CountRecord(self.setting, counts, self.expected_rate)

    def to_dict(self):
        """Convert record to dictionary."""
        return {
            'setting': self.setting.to_dict(),
            'counts': self.counts,
            'expected_rate': self.expected_rate,
        }


@dataclass(frozen=True)
class ScanPoint:
    """One point of a calibration scan."""

    value: float
    analytic_rate: float
    sampled_counts: int
    window: float

    def to_row(self):
        return [repr(float(self.value)), repr(float(self.analytic_rate)), str(self.sampled_counts),
                repr(float(self.window))]

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SearchSpec:
    """Bounded grids for the two-stage mask search.

    ``b_range`` bounds the idler offset b1 (rad) and ``a_range`` the slope
    a1 = -a2 (rad/pixel). Each stage samples ``steps`` points; every
    refinement pass re-samples +/- one previous step around the best point.
    """

    b_range: tuple = (-math.pi, math.pi)
    a_range: tuple = (-0.2, 0.2)
    steps: int = 41
    refinements: int = 1
    max_evaluations: int = 1000

    def __post_init__(self):
        if self.steps < 3:
            raise UsageError("a search stage needs at least 3 steps")
        for name in ('b_range', 'a_range'):
            low, high = getattr(self, name)
            if not (math.isfinite(low) and math.isfinite(high) and low < high):
                raise UsageError(f"{name} must be a bounded interval, got {(low, high)}")
        if self.refinements < 0:
            raise UsageError("refinements must be non-negative")
