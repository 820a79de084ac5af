"""
Tests for run profiles and the physical configuration file.
"""
import math
from pathlib import Path

import pytest

from config import get_config, load_settings
from config.development import DevelopmentConfig
from config.testing import TestingConfig
from models.physical_config import PhysicalConfig
from utils.errors import ConfigurationError


@pytest.fixture
def cfg():
    """Calibrated default configuration."""
    return PhysicalConfig()


@pytest.fixture
def config_file(tmp_path):
    """A small configuration file with comments."""
    path = tmp_path / 'physical.conf'
    path.write_text(
        '# two-crystal source\n'
        'crystal_length = 2.0   # mm\n'
        '\n'
        'phi0 = 0.25\n'
        'pixelated = false\n',
        encoding='utf-8',
    )
    return path


class TestProfiles:
    """Test the run profiles."""

    def test_get_config_falls_back_to_development(self):
        """Test that an unknown profile name resolves to development."""
        assert get_config('staging') is DevelopmentConfig
        assert get_config('testing') is TestingConfig

    def test_load_settings_reads_profile(self):
        """Test that settings carry the profile values and name."""
        settings = load_settings('testing')
        assert settings['PROFILE'] == 'testing'
        assert settings['LOG_LEVEL'] == 'WARNING'
        assert settings['TOMO_WINDOW_S'] == 60.0
        assert settings['MAX_WORKERS'] == 1

    def test_environment_overrides(self, monkeypatch):
        """Test that SLMSOURCE_ variables take precedence over the profile."""
        monkeypatch.setenv('SLMSOURCE_GRID_RESOLUTION', '16,16,8')
        monkeypatch.setenv('SLMSOURCE_SCAN_WINDOW_S', '12.5')
        monkeypatch.setenv('SLMSOURCE_MAX_WORKERS', '3')
        settings = load_settings('production')
        assert settings['GRID_RESOLUTION'] == (16, 16, 8)
        assert settings['SCAN_WINDOW_S'] == 12.5
        assert settings['MAX_WORKERS'] == 3

    @pytest.mark.parametrize('key,raw', [
        ('SCAN_WINDOW_S', 'thirty'),
        ('GRID_RESOLUTION', '16,x,8'),
        ('MAX_WORKERS', 'many'),
    ])
    def test_unparsable_environment_value(self, monkeypatch, key, raw):
        """Test that a bad SLMSOURCE_ value names its key."""
        monkeypatch.setenv(f'SLMSOURCE_{key}', raw)
        with pytest.raises(ConfigurationError) as excinfo:
            load_settings('testing')
        assert excinfo.value.key == key
        assert excinfo.value.exit_code == 2


class TestPhysicalConfig:
    """Test PhysicalConfig defaults, derived values and validation."""

    def test_compensation_slope(self, cfg):
        """Test beta*L*d/(gamma*D) = -0.05 rad per pixel for the defaults."""
        assert cfg.compensation_slope == pytest.approx(-0.05, rel=1e-12)

    def test_delta_defaults_to_two_beta_over_gamma(self, cfg):
        """Test the default angular phase coefficient."""
        assert cfg.delta == pytest.approx(2 * cfg.beta / cfg.gamma)

    def test_replace_recomputes_delta(self, cfg):
        """Test that changing beta updates the derived delta."""
        changed = cfg.replace(beta=-1e-15)
        assert changed.delta == pytest.approx(2 * -1e-15 / cfg.gamma)

    def test_delay_phase_width(self, cfg):
        """Test alpha*L*sigma_p for the calibrated defaults."""
        assert cfg.delay_phase_width == pytest.approx(1.01425)

    def test_ideal_limit(self):
        """Test the noise-free configuration."""
        ideal = PhysicalConfig.ideal()
        assert ideal.residual_dephasing == 0.0
        assert ideal.delay_compensated
        assert not ideal.pixelated

    @pytest.mark.parametrize('changes,key', [
        ({'crystal_length': 0.0}, 'crystal_length'),
        ({'momentum_coherence': 1.5}, 'momentum_coherence'),
        ({'angular_profile': 'lorentzian'}, 'angular_profile'),
        ({'acceptance': 0.2}, 'acceptance'),
        ({'idler_center_pixel': 5}, 'idler_center_pixel'),
    ])
    def test_invalid_values(self, changes, key):
        """Test that invariant violations name the offending key."""
        with pytest.raises(ConfigurationError) as excinfo:
            PhysicalConfig(**changes)
        assert excinfo.value.key == key
        assert excinfo.value.exit_code == 2


class TestConfigFile:
    """Test the flat key = value format."""

    def test_from_file(self, config_file):
        """Test parsing values, comments and blank lines."""
        cfg = PhysicalConfig.from_file(config_file)
        assert cfg.crystal_length == 2.0
        assert cfg.phi0 == 0.25
        assert cfg.pixelated is False

    def test_overrides_apply_after_file(self, config_file):
        """Test that --set style overrides win over the file."""
        cfg = PhysicalConfig.from_file(config_file, {'phi0': '1.5', 'pixel_count': '800'})
        assert cfg.phi0 == 1.5
        assert cfg.pixel_count == 800

    def test_text_round_trip(self, cfg):
        """Test that to_text parses back to an equal configuration."""
        assert PhysicalConfig.from_text(cfg.to_text()) == cfg

    def test_unknown_key_reports_line(self):
        """Test that an unknown key carries its line number."""
        with pytest.raises(ConfigurationError) as excinfo:
            PhysicalConfig.from_text('phi0 = 1.0\nwavelength = 810\n')
        assert excinfo.value.line_number == 2
        assert str(excinfo.value).startswith('line 2:')

    def test_bad_value_reports_line(self):
        """Test that an unparsable value carries its line number."""
        with pytest.raises(ConfigurationError) as excinfo:
            PhysicalConfig.from_text('# header\nbeta = fast\n')
        assert excinfo.value.line_number == 2

    def test_duplicate_key(self):
        """Test that a repeated key is rejected."""
        with pytest.raises(ConfigurationError, match='duplicate'):
            PhysicalConfig.from_text('phi0 = 1\nphi0 = 2\n')

    def test_missing_equals(self):
        """Test that a line without '=' is rejected."""
        with pytest.raises(ConfigurationError) as excinfo:
            PhysicalConfig.from_text('phi0 1.0\n')
        assert excinfo.value.line_number == 1

    def test_validation_error_points_at_line(self):
        """Test that a semantic error is attributed to the line that set the key."""
        with pytest.raises(ConfigurationError) as excinfo:
            PhysicalConfig.from_text('phi0 = 0\n\nmomentum_coherence = 2\n')
        assert excinfo.value.line_number == 3

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file is a configuration error."""
        with pytest.raises(ConfigurationError, match='cannot read'):
            PhysicalConfig.from_file(tmp_path / 'absent.conf')

    def test_boolean_spellings(self):
        """Test the accepted boolean spellings."""
        assert PhysicalConfig.from_text('delay_compensated = yes').delay_compensated
        assert not PhysicalConfig.from_text('delay_compensated = off').delay_compensated

    def test_non_finite_rejected(self):
        """Test that non-finite coefficients are rejected."""
        with pytest.raises(ConfigurationError):
            PhysicalConfig.from_text(f'alpha = {math.inf}')

    def test_sample_file_holds_defaults(self, cfg):
        """Test that the shipped config/physical.conf parses to the calibrated defaults."""
        sample = Path(__file__).resolve().parent.parent / 'config' / 'physical.conf'
        assert PhysicalConfig.from_file(sample) == cfg
