"""
Tests for the slmsource command line and its exit codes.
"""
import json

import click
import numpy as np
import pytest
from click.testing import CliRunner

from app import cli
from models.manifest import RunManifest
from models.physical_config import PhysicalConfig
from services.run_service import RunService, parse_overrides
from services.slm_service import SlmService
from services.tomography_service import TomographyService
from utils.decorators import exits_with_status
from utils.errors import ConfigurationError, ConvergenceError, UsageError
from utils.qmath import bell_state
from utils.serialization import read_scan, write_counts


@pytest.fixture
def runner(monkeypatch, tmp_path):
    """CLI runner isolated from any local .env files."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv('SLMSOURCE_ENV', raising=False)
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, ['--profile', 'testing', *[str(a) for a in args]])


class TestDecorators:
    """Test the exit-code translation."""

    def test_convergence_error_exits_with_four(self):
        """Test that a failed search maps to exit code 4."""
        @exits_with_status
        def search():
            raise ConvergenceError("budget exhausted", iterations=3)

        with pytest.raises(click.exceptions.Exit) as excinfo:
            search()
        assert excinfo.value.exit_code == 4

    @pytest.mark.parametrize('error,code', [
        (ConfigurationError("bad key"), 2),
        (UsageError("bad argument"), 3),
    ])
    def test_error_kinds(self, error, code):
        """Test configuration and runtime exit codes."""
        @exits_with_status
        def command():
            raise error

        with pytest.raises(click.exceptions.Exit) as excinfo:
            command()
        assert excinfo.value.exit_code == code

    def test_overrides_need_equals_sign(self):
        """Test the --set syntax."""
        assert parse_overrides(['phi0 = 0.5', 'pixelated=false']) == {'phi0': '0.5', 'pixelated': 'false'}
        with pytest.raises(ConfigurationError):
            parse_overrides(['phi0'])


class TestRunService:
    """Test argument helpers shared by the commands."""

    def test_windows_override(self):
        """Test scan[,tomo] window parsing."""
        settings = RunService.with_windows({'SCAN_WINDOW_S': 30.0, 'TOMO_WINDOW_S': 60.0}, '10,120')
        assert (settings['SCAN_WINDOW_S'], settings['TOMO_WINDOW_S']) == (10.0, 120.0)
        single = RunService.with_windows({}, '5')
        assert (single['SCAN_WINDOW_S'], single['TOMO_WINDOW_S']) == (5.0, 5.0)

    @pytest.mark.parametrize('windows', ['abc', '0', '1,2,3', '-4'])
    def test_bad_windows(self, windows):
        """Test that malformed windows are usage errors."""
        with pytest.raises(UsageError):
            RunService.with_windows({}, windows)

    def test_parse_targets(self):
        """Test the --targets syntax."""
        targets = RunService.parse_targets('bell_phi+, delta-:0.3')
        assert sorted(targets) == ['bell_phi+', 'delta-:0.3']
        with pytest.raises(UsageError):
            RunService.parse_targets('c3')


class TestCommands:
    """Test the subcommands end to end on the testing profile."""

    def test_version(self, runner):
        """Test the version flag."""
        result = runner.invoke(cli, ['--version'])
        assert result.exit_code == 0
        assert '0.1.0' in result.output

    @pytest.mark.parametrize('command', [['purify'], ['scan', 'b1']])
    def test_seed_required(self, runner, command):
        """Test that stochastic commands refuse to run without a seed."""
        result = invoke(runner, *command)
        assert result.exit_code == 2
        assert '--seed' in result.output

    def test_tomo_needs_seed_or_counts(self, runner):
        """Test that tomo needs either --seed or --counts."""
        assert invoke(runner, 'tomo').exit_code == 2

    def test_bad_config_file(self, runner, tmp_path):
        """Test that an unknown key in the config file exits with 2."""
        config = tmp_path / 'physical.conf'
        config.write_text('phi0 = 0.5\nwavelength = 810\n', encoding='utf-8')
        result = invoke(runner, 'cluster', '--config', config, '--out', tmp_path / 'run')
        assert result.exit_code == 2

    def test_bad_override(self, runner, tmp_path):
        """Test that an invalid --set value exits with 2."""
        result = invoke(runner, 'cluster', '--set', 'momentum_coherence=2', '--out', tmp_path / 'run')
        assert result.exit_code == 2

    def test_unknown_target_is_runtime_error(self, runner, tmp_path):
        """Test that a non-polarization target exits with 3."""
        result = invoke(runner, 'tomo', '--seed', 1, '--targets', 'xi4', '--bootstrap', 0,
                        '--out', tmp_path / 'run')
        assert result.exit_code == 3

    def test_cluster(self, runner, tmp_path):
        """Test that cluster c3 writes the state, summary and manifest."""
        out = tmp_path / 'c3'
        result = invoke(runner, 'cluster', '--sectors', 'c3', '--out', out)
        assert result.exit_code == 0, result.output
        summary = json.loads((out / 'cluster.json').read_text(encoding='utf-8'))
        assert summary['target'] == 'c3'
        assert set(summary['conditional_fidelities']) == {'0', '1'}
        for value in summary['conditional_fidelities'].values():
            assert value == pytest.approx(0.92, abs=0.05)
        manifest = RunManifest.read(out)
        assert manifest.command == 'cluster'
        assert manifest.profile == 'testing'
        assert manifest.outputs == ['cluster.json', 'state.csv']

    def test_tomo_simulated(self, runner, tmp_path):
        """Test simulated tomography of the purified source."""
        out = tmp_path / 'tomo'
        result = invoke(runner, 'tomo', '--seed', 7, '--bootstrap', 0, '--out', out)
        assert result.exit_code == 0, result.output
        report = json.loads((out / 'tomo.json').read_text(encoding='utf-8'))
        assert report['fidelities']['bell_phi+']['value'] == pytest.approx(0.943, abs=0.05)
        assert 'fidelity_to_source' in report['metrics']
        assert sorted(RunManifest.read(out).outputs) == ['counts.csv', 'rho_linear.csv', 'rho_mle.csv', 'tomo.json']

    def test_tomo_from_counts(self, runner, tmp_path):
        """Test reconstruction from a counts file without a seed."""
        protocol = TomographyService.canonical_protocol()
        counts = TomographyService.simulate_counts(protocol, bell_state(+1).density_matrix(), seed=3)
        counts_path = write_counts(tmp_path / 'counts.csv', counts)
        out = tmp_path / 'tomo'
        result = invoke(runner, 'tomo', '--counts', counts_path, '--out', out)
        assert result.exit_code == 0, result.output
        report = json.loads((out / 'tomo.json').read_text(encoding='utf-8'))
        assert report['fidelities']['bell_phi+']['value'] > 0.95
        assert 'std' not in report['fidelities']['bell_phi+']

    def test_scan_rerun_reproduces(self, runner, tmp_path):
        """Test that report --rerun regenerates byte-identical outputs."""
        first, second = tmp_path / 'first', tmp_path / 'second'
        result = invoke(runner, 'scan', 'b1', '--seed', 11, '--steps', 5, '--windows', '10', '--out', first)
        assert result.exit_code == 0, result.output
        result = invoke(runner, 'report', first, '--rerun', second)
        assert result.exit_code == 0, result.output
        assert (first / 'scan_b1.csv').read_bytes() == (second / 'scan_b1.csv').read_bytes()

    def test_rerun_detects_changed_output(self, runner, tmp_path):
        """Test that a tampered output fails the rerun with exit 3."""
        first = tmp_path / 'first'
        assert invoke(runner, 'scan', 'a_pair', '--seed', 2, '--steps', 5, '--start', -0.1, '--stop', 0.1,
                      '--out', first).exit_code == 0
        path = first / 'scan_a_pair.csv'
        path.write_text(path.read_text(encoding='utf-8') + '0.0,0.0,0,1.0\n', encoding='utf-8')
        result = invoke(runner, 'report', first, '--rerun', tmp_path / 'second')
        assert result.exit_code == 3

    def test_report_without_rerun(self, runner, tmp_path):
        """Test that report prints the manifest of a finished run."""
        out = tmp_path / 'run'
        assert invoke(runner, 'cluster', '--out', out).exit_code == 0
        result = invoke(runner, 'report', out)
        assert result.exit_code == 0
        assert 'cluster' in result.output

    def test_scan_default_range_follows_parameter(self, runner, tmp_path):
        """Test that a slope scan without --start/--stop stays inside the slope search range."""
        out = tmp_path / 'scan'
        result = invoke(runner, 'scan', 'a_pair', '--seed', 5, '--steps', 3, '--out', out)
        assert result.exit_code == 0, result.output
        rows = read_scan(out / 'scan_a_pair.csv')
        assert [row[0] for row in rows] == pytest.approx([-0.2, 0.0, 0.2])

    def test_purify_ladder_and_reproducibility(self, runner, tmp_path):
        """Test the visibility ladder and that a repeated seed writes identical files."""
        first, second = tmp_path / 'first', tmp_path / 'second'
        for out in (first, second):
            result = invoke(runner, 'purify', '--seed', 7, '--out', out)
            assert result.exit_code == 0, result.output

        manifest = RunManifest.read(first)
        assert manifest.outputs == ['mask.csv', 'purify.json', 'scan_a_pair.csv', 'scan_b1.csv']
        for name in manifest.outputs:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

        summary = json.loads((first / 'purify.json').read_text(encoding='utf-8'))
        ladder = [row['visibility'] for row in summary['ladder']]
        assert [row['stage'] for row in summary['ladder']] == ['uncompensated', 'delay_compensated',
                                                               'slm_compensated']
        assert ladder[0] < ladder[1] < ladder[2]
        assert ladder == pytest.approx([0.423, 0.707, 0.886], abs=0.01)
        assert 'calibration' in summary['note']

    def test_purify_without_residual_dephasing(self, runner, tmp_path):
        """Test that the purified visibility reaches 0.999 once the residual dephasing is removed."""
        out = tmp_path / 'purify'
        result = invoke(runner, 'purify', '--seed', 3, '--set', 'residual_dephasing=0', '--out', out)
        assert result.exit_code == 0, result.output
        summary = json.loads((out / 'purify.json').read_text(encoding='utf-8'))
        assert summary['ladder'][-1]['visibility'] >= 0.999

    @pytest.mark.slow
    def test_cluster_tomography_over_seeds(self, runner, tmp_path):
        """Test the per-sector MLE fidelities of C3 averaged over 20 seeds."""
        sector_fidelities = {'0': [], '1': []}
        for seed in range(20):
            out = tmp_path / f'c3-{seed}'
            result = invoke(runner, 'cluster', '--sectors', 'c3', '--seed', seed, '--out', out)
            assert result.exit_code == 0, result.output
            tomography = json.loads((out / 'cluster.json').read_text(encoding='utf-8'))['tomography']
            for sector, values in sector_fidelities.items():
                values.append(tomography[sector]['fidelity'])
        assert np.mean(sector_fidelities['0']) == pytest.approx(0.92, abs=0.05)
        assert np.mean(sector_fidelities['1']) == pytest.approx(0.90, abs=0.05)

    def test_scan_exports_grid(self, runner, tmp_path):
        """Test that --export-grid adds the integration nodes to the outputs."""
        out = tmp_path / 'scan'
        result = invoke(runner, 'scan', 'b1', '--seed', 4, '--steps', 3, '--export-grid', '--out', out)
        assert result.exit_code == 0, result.output
        assert RunManifest.read(out).outputs == ['grid.csv', 'scan_b1.csv']
        lines = (out / 'grid.csv').read_text(encoding='utf-8').splitlines()
        assert len(lines) == 1 + 32 * 32

    def test_cluster_with_drive_pattern(self, runner, tmp_path):
        """Test that a mask read from CSV reproduces the analytic-mask cluster state."""
        mask_path = tmp_path / 'mask.csv'
        SlmService.purification_mask(PhysicalConfig()).to_csv(mask_path)
        analytic, loaded = tmp_path / 'analytic', tmp_path / 'loaded'
        assert invoke(runner, 'cluster', '--out', analytic).exit_code == 0
        result = invoke(runner, 'cluster', '--mask', mask_path, '--out', loaded)
        assert result.exit_code == 0, result.output
        expected = json.loads((analytic / 'cluster.json').read_text(encoding='utf-8'))
        actual = json.loads((loaded / 'cluster.json').read_text(encoding='utf-8'))
        assert actual['fidelity'] == pytest.approx(expected['fidelity'], abs=1e-9)
        assert actual['conditional_fidelities'] == pytest.approx(expected['conditional_fidelities'], abs=1e-9)

    def test_mask_pixel_count_must_match(self, runner, tmp_path):
        """Test that a drive pattern for another modulator is a configuration error."""
        mask_path = tmp_path / 'mask.csv'
        SlmService.linear_mask(PhysicalConfig(pixel_count=800)).to_csv(mask_path)
        result = invoke(runner, 'cluster', '--mask', mask_path, '--out', tmp_path / 'run')
        assert result.exit_code == 2

    def test_report_reads_outputs_back(self, runner, tmp_path):
        """Test that report shows the scan minimum and state purity from the files."""
        scan_dir, cluster_dir = tmp_path / 'scan', tmp_path / 'cluster'
        assert invoke(runner, 'scan', 'b1', '--seed', 1, '--steps', 3, '--out', scan_dir).exit_code == 0
        assert invoke(runner, 'cluster', '--out', cluster_dir).exit_code == 0
        assert 'minimum' in invoke(runner, 'report', scan_dir).output
        assert 'purity' in invoke(runner, 'report', cluster_dir).output

    def test_bad_environment_value_exits_with_two(self, runner, monkeypatch, tmp_path):
        """Test that an unparsable SLMSOURCE_ variable is a configuration error."""
        monkeypatch.setenv('SLMSOURCE_SCAN_WINDOW_S', 'thirty')
        result = invoke(runner, 'cluster', '--out', tmp_path / 'run')
        assert result.exit_code == 2
