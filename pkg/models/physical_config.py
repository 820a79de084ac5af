"""
Optical parameters of the two-crystal source, the modulator and the noise model.

The file format is flat ``key = value`` with ``#`` comments; units are given
in the comments written by ``to_file``. Defaults are calibrated: the
dispersion coefficients are chosen so that beta*L*d/(gamma*D) = -0.05, the
uncompensated visibility is about 0.42 and the SLM-compensated visibility is
about 0.886. They are calibrations, not predictions.
"""
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from utils.errors import ConfigurationError

ANGULAR_PROFILES = ('uniform', 'gaussian')
_TRUE = {'true', 'yes', 'on', '1'}
_FALSE = {'false', 'no', 'off', '0'}


def _param(default, unit, doc):
    return field(default=default, metadata={'unit': unit, 'doc': doc})


@dataclass(frozen=True)
class PhysicalConfig:
    """All optical parameters; immutable, validated on construction."""

    crystal_length: float = _param(1.0, 'mm', 'L, length of each crystal')
    slm_distance: float = _param(500.0, 'mm', 'D, crystal to modulator distance')
    pixel_width: float = _param(0.1, 'mm', 'd, modulator pixel width')
    pixel_count: int = _param(640, 'pixels', 'horizontal pixels of the modulator')
    acceptance: float = _param(6.5e-3, 'rad', 'angular acceptance set by the slits')
    gamma: float = _param(2.26e-17, 'rad*s', 'idler angle dispersion d(theta\')/d(omega_s)')
    alpha: float = _param(2.0285e-13, 'rad/(mm*rad/s)', 'delay-time coefficient of the pump frequency')
    beta: float = _param(-5.65e-15, 'rad/(mm*rad/s)', 'signal frequency phase coefficient')
    delta: float = _param(None, 'rad/(mm*rad)', 'angular phase coefficient, defaults to 2*beta/gamma')
    phi0: float = _param(1.0, 'rad', 'zero-order phase between H and V')
    pump_bandwidth: float = _param(5.0e12, 'rad/s', 'Gaussian rms width of the pump spectrum')
    delay_compensated: bool = _param(False, 'flag', 'drop the alpha*L*omega_p term')
    residual_dephasing: float = _param(0.492, 'rad', 'rms phase noise from the multimode pump')
    idler_center_pixel: int = _param(160, 'pixel', 'x_c1, pixel of the central idler angle')
    signal_center_pixel: int = _param(480, 'pixel', 'x_c2, pixel of the central signal angle')
    pixelated: bool = _param(True, 'flag', 'evaluate masks on the pixel grid (false: continuous ramps)')
    angular_profile: str = _param('uniform', 'name', 'shape of |f(omega_s, theta)|^2: uniform or gaussian')
    angular_sigma: float = _param(None, 'rad', 'rms width of the gaussian angular profile')
    momentum_coherence: float = _param(1.0, '1', 'coherence between momentum sectors, in [0, 1]')

    def __post_init__(self):
        if self.delta is None:
            object.__setattr__(self, 'delta', 2 * self.beta / self.gamma if self.gamma else 0.0)
        if self.angular_sigma is None:
            object.__setattr__(self, 'angular_sigma', self.acceptance / 4)
        self.validate()

    def validate(self):
        """Check the configuration invariants."""
        for key in ('crystal_length', 'slm_distance', 'pixel_width', 'acceptance'):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"{key} must be positive", key=key)
        if self.pixel_count < 1:
            raise ConfigurationError("pixel_count must be positive", key='pixel_count')
        if self.pump_bandwidth < 0:
            raise ConfigurationError("pump_bandwidth must be non-negative", key='pump_bandwidth')
        if self.residual_dephasing < 0:
            raise ConfigurationError("residual_dephasing must be non-negative", key='residual_dephasing')
        if not 0 <= self.momentum_coherence <= 1:
            raise ConfigurationError("momentum_coherence must lie in [0, 1]", key='momentum_coherence')
        if self.angular_profile not in ANGULAR_PROFILES:
            raise ConfigurationError(
                f"angular_profile must be one of {', '.join(ANGULAR_PROFILES)}", key='angular_profile')
        if not self.angular_sigma > 0:
            raise ConfigurationError("angular_sigma must be positive", key='angular_sigma')
        for key in ('gamma', 'alpha', 'beta', 'delta', 'phi0'):
            if not math.isfinite(getattr(self, key)):
                raise ConfigurationError(f"{key} must be finite", key=key)

        span = self.pixels_per_radian * self.acceptance
        if span > self.pixel_count:
            raise ConfigurationError(
                f"acceptance spans {span:.1f} pixels, more than the {self.pixel_count} available",
                key='acceptance')
        for key in ('idler_center_pixel', 'signal_center_pixel'):
            center = getattr(self, key)
            if center - span / 2 < -0.5 or center + span / 2 > self.pixel_count - 0.5:
                raise ConfigurationError(f"acceptance window around {key}={center} leaves the device", key=key)

    @property
    def pixels_per_radian(self):
        """D/d, the pixel displacement per radian of emission angle."""
        return self.slm_distance / self.pixel_width

    @property
    def compensation_slope(self):
        """beta*L*d/(gamma*D), the ideal idler ramp a1 in rad per pixel."""
        return self.beta * self.crystal_length / (self.gamma * self.pixels_per_radian)

    @property
    def delay_phase_width(self):
        """alpha*L*sigma_p, rms of the delay phase over the pump spectrum."""
        return self.alpha * self.crystal_length * self.pump_bandwidth

    def replace(self, **changes):
        """Copy with changes; ``delta`` is recomputed unless given explicitly."""
        if 'delta' not in changes and ({'beta', 'gamma'} & set(changes)):
            changes['delta'] = None
        if 'angular_sigma' not in changes and 'acceptance' in changes:
            changes['angular_sigma'] = None
        return dataclasses.replace(self, **changes)

    @classmethod
    def ideal(cls, **changes):
        """Noise-free limit: no residual dephasing, delay compensated, continuous masks."""
        values = {'residual_dephasing': 0.0, 'delay_compensated': True, 'pixelated': False}
        values.update(changes)
        return cls(**values)

    def to_dict(self):
        """Convert configuration to dictionary."""
        return dataclasses.asdict(self)

    # -- flat key = value files -------------------------------------------

    @classmethod
    def keys(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def coerce(cls, key, raw, line_number=None):
        """Convert the text ``raw`` to the type of field ``key``."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        if key not in fields:
            raise ConfigurationError(f"unknown key '{key}'", line_number=line_number, key=key)
        text = raw.strip()
        default = fields[key].default
        try:
            if isinstance(default, bool):
                lowered = text.lower()
                if lowered in _TRUE:
                    return True
                if lowered in _FALSE:
                    return False
                raise ValueError(f"expected a boolean, got '{text}'")
            if isinstance(default, int):
                return int(text)
            if isinstance(default, str):
                return text
            if text.lower() in ('none', ''):
                return None
            return float(text)
        except ValueError as e:
            raise ConfigurationError(f"bad value for {key}: {e}", line_number=line_number, key=key) from e

    @classmethod
    def from_text(cls, text, overrides=None):
        """Parse configuration text, then apply ``overrides`` (key -> raw text)."""
        values = {}
        key_lines = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            content = line.split('#', 1)[0].strip()
            if not content:
                continue
            if '=' not in content:
                raise ConfigurationError(f"expected 'key = value', got '{content}'", line_number=line_number)
            key, raw = (part.strip() for part in content.split('=', 1))
            if key in values:
                raise ConfigurationError(f"duplicate key '{key}'", line_number=line_number, key=key)
            values[key] = cls.coerce(key, raw, line_number)
            key_lines[key] = line_number
        for key, raw in (overrides or {}).items():
            values[key] = cls.coerce(key, raw)
            key_lines.pop(key, None)
        try:
            return cls(**values)
        except ConfigurationError as e:
            if e.line_number is None and e.key in key_lines:
                raise ConfigurationError(e.message, line_number=key_lines[e.key], key=e.key) from e
            raise

    @classmethod
    def from_file(cls, path, overrides=None):
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise ConfigurationError(f"cannot read config file {path}: {e.strerror}") from e
        return cls.from_text(text, overrides)

    def to_text(self):
        """Render as a flat config file with units in the comments."""
        lines = ['# Physical configuration of the programmable two-photon source']
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                rendered = 'true' if value else 'false'
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{f.name} = {rendered}  # [{f.metadata['unit']}] {f.metadata['doc']}")
        return '\n'.join(lines) + '\n'

    def to_file(self, path):
        Path(path).write_text(self.to_text(), encoding='utf-8')
