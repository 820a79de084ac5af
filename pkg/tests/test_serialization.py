"""
Tests for CSV and JSON outputs and the run manifest.
"""
import json

import numpy as np
import pytest

from models.manifest import MANIFEST_NAME, RunManifest
from models.measurement import ScanPoint
from services.tomography_service import TomographyService
from utils.errors import ConfigurationError
from utils.qmath import bell_state, random_density_matrix
from utils.serialization import (
    COUNTS_HEADER,
    read_counts,
    read_density_csv,
    read_json,
    read_scan,
    write_counts,
    write_density_csv,
    write_json,
    write_scan,
)


@pytest.fixture
def protocol():
    """Canonical tomography protocol."""
    return TomographyService.canonical_protocol()


@pytest.fixture
def counts(protocol):
    """Simulated counts for |Phi+>."""
    return TomographyService.simulate_counts(protocol, bell_state(+1).density_matrix(), seed=10)


def write_rows(path, rows):
    path.write_text('\n'.join([','.join(COUNTS_HEADER)] + rows) + '\n', encoding='utf-8')
    return path


class TestJson:
    """Test JSON output."""

    def test_keys_sorted_and_numpy_converted(self, tmp_path):
        """Test sorted keys and conversion of numpy and complex values."""
        path = write_json(tmp_path / 'out.json', {'b': np.float64(1.5), 'a': np.arange(2), 'c': 1 + 2j})
        text = path.read_text(encoding='utf-8')
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert json.loads(text) == {'a': [0, 1], 'b': 1.5, 'c': [1.0, 2.0]}

    def test_invalid_json_reports_line(self, tmp_path):
        """Test that a parse error carries its line number."""
        path = tmp_path / 'bad.json'
        path.write_text('{\n  "a": 1,\n  oops\n}\n', encoding='utf-8')
        with pytest.raises(ConfigurationError) as excinfo:
            read_json(path)
        assert excinfo.value.line_number == 3


class TestDensityCsv:
    """Test the density-matrix CSV."""

    def test_round_trip(self, tmp_path):
        """Test that a written matrix parses back exactly."""
        rho = random_density_matrix(4, np.random.default_rng(1))
        path = write_density_csv(tmp_path / 'rho.csv', rho)
        restored = read_density_csv(path, (2, 2))
        assert np.array_equal(restored.entries, rho.entries)
        assert restored.subsystem_dims == (2, 2)

    def test_header(self, tmp_path):
        """Test the re/im column header."""
        path = write_density_csv(tmp_path / 'rho.csv', bell_state(+1).density_matrix())
        assert path.read_text(encoding='utf-8').splitlines()[0] == 're0,im0,re1,im1,re2,im2,re3,im3'

    def test_malformed_entry(self, tmp_path):
        """Test that a non-numeric entry names its line."""
        path = tmp_path / 'rho.csv'
        path.write_text('re0,im0\nabc,0\n', encoding='utf-8')
        with pytest.raises(ConfigurationError) as excinfo:
            read_density_csv(path)
        assert excinfo.value.line_number == 2


class TestCountsCsv:
    """Test the tomography counts file."""

    def test_round_trip(self, tmp_path, protocol, counts):
        """Test that written counts read back in protocol order."""
        path = write_counts(tmp_path / 'counts.csv', counts)
        restored = read_counts(path, protocol)
        assert [r.counts for r in restored] == [r.counts for r in counts]
        assert [r.label for r in restored] == protocol.labels

    def test_malformed_row(self, tmp_path, protocol):
        """Test that a non-integer count names its row."""
        path = write_rows(tmp_path / 'counts.csv', ['HH,12,60', 'HV,many,60'])
        with pytest.raises(ConfigurationError) as excinfo:
            read_counts(path, protocol)
        assert excinfo.value.line_number == 3

    def test_unknown_setting(self, tmp_path, protocol):
        """Test that a label outside the protocol names its row."""
        path = write_rows(tmp_path / 'counts.csv', ['XY,1,60'])
        with pytest.raises(ConfigurationError) as excinfo:
            read_counts(path, protocol)
        assert excinfo.value.line_number == 2

    def test_duplicate_setting(self, tmp_path, protocol):
        """Test that a repeated setting is rejected."""
        path = write_rows(tmp_path / 'counts.csv', ['HH,1,60', 'HH,2,60'])
        with pytest.raises(ConfigurationError, match='duplicate'):
            read_counts(path, protocol)

    def test_missing_settings(self, tmp_path, protocol):
        """Test that every protocol setting must be present."""
        path = write_rows(tmp_path / 'counts.csv', ['HH,1,60'])
        with pytest.raises(ConfigurationError, match='missing settings'):
            read_counts(path, protocol)

    def test_negative_window(self, tmp_path, protocol):
        """Test that a non-positive window is rejected."""
        path = write_rows(tmp_path / 'counts.csv', ['HH,1,0'])
        with pytest.raises(ConfigurationError) as excinfo:
            read_counts(path, protocol)
        assert excinfo.value.line_number == 2

    def test_wrong_header(self, tmp_path, protocol):
        """Test that the header must match."""
        path = tmp_path / 'counts.csv'
        path.write_text('label,n\nHH,1\n', encoding='utf-8')
        with pytest.raises(ConfigurationError) as excinfo:
            read_counts(path, protocol)
        assert excinfo.value.line_number == 1

    def test_per_row_windows_kept(self, tmp_path, protocol, counts):
        """Test that each row's window is attached to its record."""
        rows = [f"{r.label},{r.counts},{30.0 if i == 0 else 60.0}" for i, r in enumerate(counts)]
        restored = read_counts(write_rows(tmp_path / 'counts.csv', rows), protocol)
        assert restored[0].window == 30.0
        assert restored[1].window == 60.0


class TestScanCsv:
    """Test the scan CSV."""

    def test_round_trip(self, tmp_path):
        """Test that scan rows read back exactly."""
        points = [ScanPoint(-0.1, 2.5, 80, 30.0), ScanPoint(0.1 / 3, 1e-17, 0, 30.0)]
        rows = read_scan(write_scan(tmp_path / 'scan.csv', points))
        assert rows == [(p.value, p.analytic_rate, p.sampled_counts, p.window) for p in points]


class TestManifest:
    """Test the run manifest."""

    def test_write_and_read(self, tmp_path):
        """Test that a manifest written to a directory reads back."""
        manifest = RunManifest('scan', {'parameter': 'b1', 'seed': 4}, seed=4, outputs=['scan_b1.csv']).stamp()
        manifest.write(tmp_path)
        restored = RunManifest.read(tmp_path)
        assert restored == manifest
        assert (tmp_path / MANIFEST_NAME).exists()

    def test_malformed_manifest(self, tmp_path):
        """Test that unknown fields are a configuration error."""
        write_json(tmp_path / MANIFEST_NAME, {'command': 'scan', 'arguments': {}, 'colour': 'red'})
        with pytest.raises(ConfigurationError, match='manifest'):
            RunManifest.read(tmp_path)
