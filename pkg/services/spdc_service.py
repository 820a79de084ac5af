"""
Service for the two-crystal biphoton state: integration grid, phase
function, dephasing averages and the polarization-momentum density matrix.
"""
import logging
import math

import numpy as np

from models.grid import BiphotonGrid
from models.quantum import DensityMatrix
from models.sectors import MOMENTUM_ANTICORRELATED, SectorCoherence, SectorConfig
from services.slm_service import SlmService
from utils.errors import ConfigurationError, SimulationError, UsageError
from utils.qmath import conditional_state, partial_trace

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = (64, 64, 32)
MIN_RESOLUTION = 8
MAX_STATE_DIM = 16
# Half-width of the pump spectrum window in units of its rms width
PUMP_SPAN_SIGMAS = 8.0


def _resolution(resolution):
    if resolution is None:
        return DEFAULT_RESOLUTION
    if isinstance(resolution, dict):
        resolution = (resolution['n_theta'], resolution['n_omega_s'], resolution['n_omega_p'])
    values = tuple(int(n) for n in resolution)
    if len(values) != 3:
        raise UsageError(f"resolution needs (n_theta, n_omega_s, n_omega_p), got {resolution}")
    if min(values) < MIN_RESOLUTION:
        raise UsageError(f"every resolution must be at least {MIN_RESOLUTION}, got {values}")
    return values


def _midpoints(low, high, count):
    step = (high - low) / count
    return low + (np.arange(count) + 0.5) * step, step


class SpdcService:
    """Pure functions of (PhysicalConfig, PhaseMask, SectorConfig)."""

    @staticmethod
    def build_grid(cfg, resolution=None):
        """
        Discretize the admissible (theta, omega_s) wedge and the pump spectrum.

        Signal angles and idler angles theta' = -theta + gamma*omega_s both
        take midpoint nodes over the acceptance, so for every theta the
        omega_s nodes cover [(theta - dtheta/2)/gamma, (theta + dtheta/2)/gamma].

        Args:
            cfg: PhysicalConfig
            resolution: (n_theta, n_omega_s, n_omega_p), each at least 8

        Returns:
            BiphotonGrid normalized to 1

        Raises:
            ConfigurationError: if gamma is zero (the wedge has no measure)
        """
        n_theta, n_omega_s, n_omega_p = _resolution(resolution)
        if cfg.gamma == 0:
            raise ConfigurationError("gamma = 0 collapses the integration domain", key='gamma')

        half = cfg.acceptance / 2
        theta, theta_step = _midpoints(-half, half, n_theta)
        theta_idler_nodes, idler_step = _midpoints(-half, half, n_omega_s)
        theta_idler = np.broadcast_to(theta_idler_nodes[None, :], (n_theta, n_omega_s)).copy()
        omega_s = (theta[:, None] + theta_idler) / cfg.gamma
        weights = np.full((n_theta, n_omega_s), theta_step * idler_step / abs(cfg.gamma))

        if cfg.angular_profile == 'gaussian':
            shape = np.exp(-(theta[:, None] ** 2 + theta_idler ** 2) / (2 * cfg.angular_sigma ** 2))
        else:
            shape = np.ones((n_theta, n_omega_s))
        density = shape / np.sum(weights * shape)

        if cfg.pump_bandwidth > 0:
            span = PUMP_SPAN_SIGMAS * cfg.pump_bandwidth
            omega_p, pump_step = _midpoints(-span, span, n_omega_p)
            pump_weights = np.full(n_omega_p, pump_step)
            pump_shape = np.exp(-omega_p ** 2 / (2 * cfg.pump_bandwidth ** 2))
            pump_density = pump_shape / np.sum(pump_weights * pump_shape)
        else:
            omega_p, pump_weights, pump_density = np.zeros(1), np.ones(1), np.ones(1)

        grid = BiphotonGrid(theta, omega_s, theta_idler, weights, density,
                            omega_p, pump_weights, pump_density, cfg.acceptance, cfg.gamma)
        logger.debug(f"Built {grid!r}")
        return grid

    @staticmethod
    def phase_at(cfg, mask, theta, omega_s, omega_p=0.0):
        """
        Relative H/V phase phi(omega_p, omega_s, theta) including both mask lookups.

        phi = phi0 + alpha*L*omega_p + beta*L*omega_s - delta*L*theta - phi(theta) - phi'(theta'),
        with theta' = -theta + gamma*omega_s. The alpha term is dropped when
        the delay is compensated. Accepts scalars or broadcastable arrays.

        Raises:
            MaskRangeError: if theta or theta' falls off the modulator
        """
        theta = np.asarray(theta, dtype=float)
        omega_s = np.asarray(omega_s, dtype=float)
        theta_idler = -theta + cfg.gamma * omega_s
        length = cfg.crystal_length
        phase = cfg.phi0 + cfg.beta * length * omega_s - cfg.delta * length * theta
        if not cfg.delay_compensated:
            phase = phase + cfg.alpha * length * np.asarray(omega_p, dtype=float)
        phase = (phase
                 - SlmService.mask_phase(cfg, mask, 'signal', theta)
                 - SlmService.mask_phase(cfg, mask, 'idler', theta_idler))
        return float(phase) if np.ndim(phase) == 0 else phase

    @staticmethod
    def angular_phases(cfg, mask, grid):
        """Phase at every angular node with the pump term left out."""
        return SpdcService.phase_at(cfg.replace(delay_compensated=True), mask, grid.theta_nodes, grid.omega_s)

    @staticmethod
    def pump_coherence(cfg, grid):
        """Average of exp(i*alpha*L*omega_p) over the pump spectrum; 1 when compensated."""
        if cfg.delay_compensated:
            return 1.0 + 0.0j
        phases = cfg.alpha * cfg.crystal_length * grid.omega_p
        return complex(np.sum(grid.pump_probability * np.exp(1j * phases)))

    @staticmethod
    def residual_factor(cfg):
        """exp(-sigma^2/2) for the Gaussian residual phase noise."""
        return math.exp(-cfg.residual_dephasing ** 2 / 2)

    @staticmethod
    def region_masks(grid, sectors):
        """Boolean node masks keyed by (n, m)."""
        signal = sectors.signal_index(grid.theta_nodes)
        idler = sectors.idler_index(grid.theta_idler)
        return {
            (n, m): (signal == n) & (idler == m)
            for n in range(sectors.n_signal) for m in range(sectors.n_idler)
        }

    @staticmethod
    def sector_weights(cfg, grid, sectors):
        """(N, M) array of grid probability per sector block; sums to 1."""
        sectors.check_window(cfg)
        probability = grid.angular_probability
        weights = np.zeros(sectors.momentum_dims)
        for region, selected in SpdcService.region_masks(grid, sectors).items():
            weights[region] = np.sum(probability[selected])
        return weights

    @staticmethod
    def sector_coherences(cfg, mask, sectors, grid=None):
        """Dephasing factor of every sector block, as a dict (n, m) -> SectorCoherence."""
        grid = grid if grid is not None else SpdcService.build_grid(cfg)
        sectors.check_window(cfg)
        probability = grid.angular_probability
        phasors = np.exp(1j * SpdcService.angular_phases(cfg, mask, grid))
        common = SpdcService.pump_coherence(cfg, grid) * SpdcService.residual_factor(cfg)

        coherences = {}
        for region, selected in SpdcService.region_masks(grid, sectors).items():
            weight = float(np.sum(probability[selected]))
            if weight <= 0:
                coherences[region] = SectorCoherence(region, 0j, 0.0, empty=True)
                continue
            average = np.sum(probability[selected] * phasors[selected]) / weight
            coherences[region] = SectorCoherence(region, complex(common * average), weight)
        return coherences

    @staticmethod
    def dephasing_factor(cfg, mask, region=(0, 0), sectors=None, grid=None):
        """
        Coherence <exp(i*phi)> between |HH> and |VV> over one sector block.

        The angular average is taken over nodes whose signal angle lies in
        sector n and idler angle in sector m, then multiplied by the pump
        average and exp(-residual_dephasing^2/2).

        Args:
            cfg: PhysicalConfig
            mask: PhaseMask acting on both arms (sector offsets included)
            region: (n, m) sector pair
            sectors: SectorConfig, defaults to a single block
            grid: BiphotonGrid, built from cfg when omitted

        Returns:
            SectorCoherence; an empty block has weight 0 and ``empty`` set
        """
        sectors = sectors if sectors is not None else SectorConfig.single(cfg)
        n, m = region
        if not (0 <= n < sectors.n_signal and 0 <= m < sectors.n_idler):
            raise UsageError(f"region {region} outside {sectors.n_signal}x{sectors.n_idler} sectors")
        return SpdcService.sector_coherences(cfg, mask, sectors, grid)[(n, m)]

    @staticmethod
    def synthesize_state(cfg, mask, sectors=None, grid=None):
        """
        Density matrix over polarization (signal, idler) and momentum (signal, idler).

        ``mask`` is the purification mask; the sector phases are added here.
        Each block (n, m) contributes sqrt(p_nm) (|HH> e^{i(phi_ns+phi_mi)} + |VV> e^{i(...+arg D)})/sqrt(2)
        to a pure reference state, which is then damped entrywise: |D_nm|
        on the HH-VV coherence of a block, momentum_coherence across blocks.

        Raises:
            ConfigurationError: if 4*N*M exceeds 16
        """
        sectors = sectors if sectors is not None else SectorConfig.single(cfg)
        n_signal, n_idler = sectors.momentum_dims
        dims = sectors.subsystem_dims
        dim = 4 * n_signal * n_idler
        if dim > MAX_STATE_DIM:
            raise ConfigurationError(f"state dimension {dim} exceeds {MAX_STATE_DIM}")

        grid = grid if grid is not None else SpdcService.build_grid(cfg)
        gated = SlmService.with_sector_offsets(mask, cfg, sectors)
        coherences = SpdcService.sector_coherences(cfg, gated, sectors, grid)

        weights = np.array([[coherences[(n, m)].weight for m in range(n_idler)] for n in range(n_signal)])
        if sectors.momentum == MOMENTUM_ANTICORRELATED:
            weights[np.eye(n_signal, n_idler, dtype=bool)] = 0.0
        total = np.sum(weights)
        if total <= 0:
            raise SimulationError("no grid weight falls inside the selected sectors")
        weights = weights / total

        blocks = n_signal * n_idler
        amplitudes = np.zeros(dim, dtype=complex)
        # u scales each amplitude's participation in coherences across blocks
        participation = np.ones(dim)
        block_of = np.full(dim, -1)
        hh_index, vv_index = {}, {}
        for n in range(n_signal):
            for m in range(n_idler):
                block = n * n_idler + m
                coherence = coherences[(n, m)].value
                gate = sectors.block_phase(n, m)
                hh, vv = block, 3 * blocks + block
                amplitude = math.sqrt(weights[n, m] / 2)
                amplitudes[hh] = amplitude * np.exp(1j * gate)
                amplitudes[vv] = amplitude * np.exp(1j * (gate + np.angle(coherence)))
                participation[vv] = abs(coherence)
                block_of[hh] = block_of[vv] = block
                hh_index[block], vv_index[block] = hh, vv

        damping = cfg.momentum_coherence * np.outer(participation, participation)
        for block in range(blocks):
            members = block_of == block
            damping[np.ix_(members, members)] = 1.0
            hh, vv = hh_index[block], vv_index[block]
            damping[hh, vv] = damping[vv, hh] = participation[vv]

        matrix = np.outer(amplitudes, amplitudes.conj()) * damping
        logger.debug(f"Synthesized state dims={dims} weights={weights.ravel().tolist()}")
        return DensityMatrix.from_matrix(matrix, dims)

    @staticmethod
    def polarization_state(state, sector=None):
        """Polarization state, optionally conditioned on a signal momentum sector."""
        if sector is None:
            return partial_trace(state, state.subsystem_dims, keep=(0, 1))
        return conditional_state(state, sector)
