"""
Tests for the biphoton grid, the phase model and state synthesis.
"""
import math

import numpy as np
import pytest

from models.physical_config import PhysicalConfig
from models.quantum import Ket
from models.sectors import SectorConfig
from services.bench_service import BenchService
from services.slm_service import SlmService
from services.spdc_service import SpdcService
from utils.errors import ConfigurationError, UsageError
from utils.qmath import bell_state, conditional_state, fidelity, partial_trace, target_state

RESOLUTION = (32, 32, 32)
XI4_PHASES = [tuple(pair) for pair in np.random.default_rng(20).uniform(-math.pi, math.pi, (20, 2)).tolist()]


@pytest.fixture
def cfg():
    """Calibrated default configuration."""
    return PhysicalConfig()


@pytest.fixture
def ideal():
    """Noise-free configuration with continuous masks."""
    return PhysicalConfig.ideal()


@pytest.fixture
def grid(cfg):
    """Coarse grid used throughout."""
    return SpdcService.build_grid(cfg, RESOLUTION)


def visibility(cfg, mask, grid):
    state = SpdcService.synthesize_state(cfg, mask, grid=grid)
    return BenchService.visibility_measurement(state)


class TestGrid:
    """Test the integration grid."""

    def test_normalized(self, grid):
        """Test that the joint density integrates to one."""
        assert grid.normalization() == pytest.approx(1.0, abs=1e-12)

    def test_idler_angles_cover_acceptance(self, cfg, grid):
        """Test that every idler node lies inside the acceptance window."""
        assert np.all(np.abs(grid.theta_idler) < cfg.acceptance / 2)
        assert np.allclose(grid.theta_idler, -grid.theta_nodes + cfg.gamma * grid.omega_s)

    def test_gaussian_profile_normalized(self, cfg):
        """Test the normalization of the gaussian angular profile."""
        grid = SpdcService.build_grid(cfg.replace(angular_profile='gaussian'), RESOLUTION)
        assert np.sum(grid.angular_probability) == pytest.approx(1.0)
        assert grid.angular_density[16, 16] > grid.angular_density[0, 0]

    def test_zero_bandwidth_pump(self, cfg):
        """Test that a monochromatic pump collapses to one node."""
        grid = SpdcService.build_grid(cfg.replace(pump_bandwidth=0.0), RESOLUTION)
        assert grid.omega_p.shape == (1,)
        assert SpdcService.pump_coherence(cfg.replace(pump_bandwidth=0.0), grid) == pytest.approx(1.0)

    def test_resolution_floor(self, cfg):
        """Test that resolutions below 8 are rejected."""
        with pytest.raises(UsageError):
            SpdcService.build_grid(cfg, (4, 32, 32))

    def test_zero_gamma(self):
        """Test that gamma = 0 is a configuration error."""
        with pytest.raises(ConfigurationError, match='gamma'):
            SpdcService.build_grid(PhysicalConfig(gamma=0.0), RESOLUTION)

    def test_export_csv(self, tmp_path, grid):
        """Test one CSV row per angular node."""
        path = tmp_path / 'grid.csv'
        grid.export_csv(path)
        lines = path.read_text(encoding='utf-8').splitlines()
        assert lines[0] == 'theta,omega_s,theta_idler,weight,density'
        assert len(lines) == 1 + 32 * 32


class TestDephasing:
    """Test the phase function and the coherence factors."""

    def test_phase_at_origin(self, cfg):
        """Test that the flat-mask phase at the centre is phi0."""
        assert SpdcService.phase_at(cfg, SlmService.linear_mask(cfg), 0.0, 0.0) == pytest.approx(cfg.phi0)

    def test_delay_term(self, cfg):
        """Test the alpha*L*omega_p term and its removal by delay compensation."""
        flat = SlmService.linear_mask(cfg)
        omega_p = 1e12
        shifted = SpdcService.phase_at(cfg, flat, 0.0, 0.0, omega_p)
        assert shifted - cfg.phi0 == pytest.approx(cfg.alpha * omega_p)
        compensated = SpdcService.phase_at(cfg.replace(delay_compensated=True), flat, 0.0, 0.0, omega_p)
        assert compensated == pytest.approx(cfg.phi0)

    def test_purification_cancels_angular_phase(self, ideal):
        """Test that the analytic mask flattens the phase in the continuous limit."""
        mask = SlmService.purification_mask(ideal)
        theta = np.array([-2e-3, 0.0, 1.5e-3])
        omega_s = np.array([1e13, -3e13, 5e13])
        assert np.allclose(SpdcService.phase_at(ideal, mask, theta, omega_s), 0.0, atol=1e-12)

    def test_pump_coherence_closed_form(self, cfg, grid):
        """Test the pump average against exp(-(alpha L sigma_p)^2 / 2)."""
        expected = math.exp(-cfg.delay_phase_width ** 2 / 2)
        assert abs(SpdcService.pump_coherence(cfg, grid)) == pytest.approx(expected, abs=1e-8)

    def test_residual_factor(self, cfg):
        """Test exp(-sigma^2/2) for the calibrated residual dephasing."""
        assert SpdcService.residual_factor(cfg) == pytest.approx(0.886, abs=1e-3)

    def test_ideal_dephasing_factor(self, ideal):
        """Test |D| = 1 for the purified ideal source."""
        coherence = SpdcService.dephasing_factor(ideal, SlmService.purification_mask(ideal),
                                                 grid=SpdcService.build_grid(ideal, RESOLUTION))
        assert coherence.visibility == pytest.approx(1.0, abs=1e-9)
        assert coherence.weight == pytest.approx(1.0)

    @pytest.mark.parametrize('extra_slope', [0.02, 0.06, 0.12])
    def test_linear_ramp_dephasing_is_sinc(self, ideal, extra_slope):
        """Test |<exp(i c theta)>| = |sinc(c dtheta / 2)| for a residual signal ramp."""
        a1, b1, a2, b2 = SlmService.purification_mask(ideal).ramp.parameters()
        mask = SlmService.linear_mask(ideal, a1, b1, a2 + extra_slope, b2)
        grid = SpdcService.build_grid(ideal, (128, 32, 8))
        coherence = SpdcService.dephasing_factor(ideal, mask, grid=grid)
        c = extra_slope * ideal.pixels_per_radian
        expected = abs(np.sinc(c * ideal.acceptance / 2 / math.pi))
        assert coherence.visibility == pytest.approx(expected, abs=1e-3)

    def test_residual_dephasing_lowers_every_block(self, cfg, grid):
        """Test that a larger residual dephasing strictly lowers every nonzero |D|."""
        sectors = SectorConfig.uniform(cfg, 2, 2)
        masks = (SlmService.linear_mask(cfg), SlmService.purification_mask(cfg))
        for mask in masks:
            previous = None
            for sigma in (0.0, 0.2, 0.5, 1.0):
                coherences = SpdcService.sector_coherences(cfg.replace(residual_dephasing=sigma), mask, sectors, grid)
                current = {region: c.visibility for region, c in coherences.items() if c.visibility > 0}
                if previous is not None:
                    assert current.keys() == previous.keys()
                    assert all(current[region] < previous[region] for region in current)
                previous = current

    def test_region_outside_sectors(self, cfg, grid):
        """Test that a region index beyond the partition is rejected."""
        with pytest.raises(UsageError):
            SpdcService.dephasing_factor(cfg, SlmService.linear_mask(cfg), (1, 0), grid=grid)


class TestVisibilityLadder:
    """Test the visibility at the three purification stages."""

    def test_uncompensated(self, cfg, grid):
        """Test V ~ 0.423 with no delay compensation and a flat mask."""
        assert visibility(cfg, SlmService.linear_mask(cfg), grid) == pytest.approx(0.423, abs=0.005)

    def test_delay_compensated(self, cfg, grid):
        """Test V ~ 0.707 once the pump term is removed."""
        compensated = cfg.replace(delay_compensated=True)
        assert visibility(compensated, SlmService.linear_mask(cfg), grid) == pytest.approx(0.707, abs=0.005)

    def test_slm_compensated(self, cfg, grid):
        """Test V ~ 0.886 with the purification mask."""
        compensated = cfg.replace(delay_compensated=True)
        assert visibility(compensated, SlmService.purification_mask(cfg), grid) == pytest.approx(0.886, abs=0.005)

    def test_ideal_limit_is_pure(self, ideal):
        """Test that the purified ideal source emits |Phi+>."""
        grid = SpdcService.build_grid(ideal, RESOLUTION)
        state = SpdcService.synthesize_state(ideal, SlmService.purification_mask(ideal), grid=grid)
        assert fidelity(SpdcService.polarization_state(state), bell_state(+1)) == pytest.approx(1.0, abs=1e-9)


class TestStateSynthesis:
    """Test sector-gated state synthesis."""

    def test_dims_follow_sectors(self, cfg, grid):
        """Test the (2, 2, N, M) factorization."""
        sectors = SectorConfig.uniform(cfg, 2, 2)
        state = SpdcService.synthesize_state(cfg, SlmService.purification_mask(cfg), sectors, grid)
        assert state.subsystem_dims == (2, 2, 2, 2)
        assert state.dim == 16

    def test_dimension_cap(self, cfg, grid):
        """Test that states above 16 dimensions are refused."""
        with pytest.raises(ConfigurationError, match='exceeds'):
            SpdcService.synthesize_state(cfg, SlmService.purification_mask(cfg),
                                         SectorConfig.uniform(cfg, 3, 2), grid)

    def test_partial_momentum_coherence_stays_physical(self, cfg, grid):
        """Test that damping the momentum coherence keeps a valid density matrix."""
        damped = cfg.replace(momentum_coherence=0.3, delay_compensated=True)
        state = SpdcService.synthesize_state(damped, SlmService.purification_mask(cfg),
                                             SectorConfig.cluster_c3(cfg), grid)
        assert np.min(state.eigenvalues()) > -1e-10
        assert np.trace(state.entries).real == pytest.approx(1.0)

    def test_c3_ideal(self, ideal):
        """Test fidelity 1 to C3 with phase pi on signal sector 1."""
        grid = SpdcService.build_grid(ideal, RESOLUTION)
        state = SpdcService.synthesize_state(ideal, SlmService.purification_mask(ideal),
                                             SectorConfig.cluster_c3(ideal), grid)
        assert fidelity(state, target_state('c3')) == pytest.approx(1.0, abs=1e-9)

    def test_c3_branches(self, ideal):
        """Test that the slit on each sector leaves |Phi+> and |Phi->."""
        grid = SpdcService.build_grid(ideal, RESOLUTION)
        state = SpdcService.synthesize_state(ideal, SlmService.purification_mask(ideal),
                                             SectorConfig.cluster_c3(ideal), grid)
        assert fidelity(conditional_state(state, 0), bell_state(+1)) == pytest.approx(1.0, abs=1e-9)
        assert fidelity(conditional_state(state, 1), bell_state(-1)) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize('phi_0i,phi_1s', XI4_PHASES)
    def test_xi4_matches_controlled_phase_construction(self, ideal, phi_0i, phi_1s):
        """Test the Xi4 gating against diagonal phase gates applied to |Phi+> x |++>."""
        signal_phases, idler_phases = (-phi_0i, phi_1s), (phi_0i, math.pi - phi_1s)
        product = np.kron(bell_state(+1).amplitudes, np.full(4, 0.5))
        gates = np.ones(16, dtype=complex)
        for n in range(2):
            for m in range(2):
                # |HH>|nm>; V passes the modulator unchanged
                gates[2 * n + m] = np.exp(1j * (signal_phases[n] + idler_phases[m]))
        expected = Ket(gates * product, (2, 2, 2, 2))

        assert np.allclose(target_state('xi4', phi_0i=phi_0i, phi_1s=phi_1s).amplitudes,
                           expected.amplitudes, atol=1e-12)
        grid = SpdcService.build_grid(ideal, RESOLUTION)
        state = SpdcService.synthesize_state(ideal, SlmService.purification_mask(ideal),
                                             SectorConfig.xi4(ideal, phi_0i, phi_1s), grid)
        assert fidelity(state, expected) == pytest.approx(1.0, abs=1e-10)

    def test_anticorrelated_momentum(self, ideal):
        """Test that the anticorrelated option empties the n = m blocks."""
        grid = SpdcService.build_grid(ideal, RESOLUTION)
        sectors = SectorConfig.parse(ideal, '2x2/anticorrelated')
        state = SpdcService.synthesize_state(ideal, SlmService.purification_mask(ideal), sectors, grid)
        momentum = partial_trace(state, state.subsystem_dims, (2, 3)).entries
        assert np.diag(momentum).real == pytest.approx([0.0, 0.5, 0.5, 0.0], abs=1e-12)

    def test_sector_weights_sum_to_one(self, cfg, grid):
        """Test that sector weights partition the grid probability."""
        weights = SpdcService.sector_weights(cfg, grid, SectorConfig.uniform(cfg, 2, 2))
        assert weights.shape == (2, 2)
        assert weights.sum() == pytest.approx(1.0)

    def test_pixel_edge_imbalance_shrinks_with_pixel_width(self):
        """Test that halving the pixel width never worsens the sector split."""
        imbalances = []
        for width in (0.1, 0.05, 0.025, 0.0125):
            cfg = PhysicalConfig(pixel_width=width)
            grid = SpdcService.build_grid(cfg, (64, 16, 8))
            weights = SpdcService.sector_weights(cfg, grid, SectorConfig.cluster_c3(cfg))
            imbalances.append(abs(weights[0, 0] - weights[1, 0]))
        assert imbalances[0] == pytest.approx(2 / 64)
        assert all(b <= a + 1e-12 for a, b in zip(imbalances, imbalances[1:]))

    def test_pixelated_c3_fidelity_improves_with_pixel_width(self):
        """Test that halving the pixel width brings the pixelated C3 fidelity toward 1."""
        fidelities = []
        for width in (0.1, 0.05, 0.025, 0.0125):
            cfg = PhysicalConfig.ideal(pixelated=True, pixel_width=width)
            grid = SpdcService.build_grid(cfg, (128, 64, 8))
            state = SpdcService.synthesize_state(cfg, SlmService.purification_mask(cfg),
                                                 SectorConfig.cluster_c3(cfg), grid)
            fidelities.append(fidelity(state, target_state('c3')))
        assert all(b > a for a, b in zip(fidelities, fidelities[1:]))
        assert fidelities[0] < 1.0
        assert fidelities[-1] > 0.9999
