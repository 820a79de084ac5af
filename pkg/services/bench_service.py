"""
Service simulating the detection bench: Jones-calculus analyzers,
coincidence rates, Poisson counts, calibration scans and the two-stage
mask search.

Waveplates use the standard Jones matrices with the fast axis measured from
horizontal. Light crosses the quarter-wave plate, then the half-wave plate,
then the polarizer, so the analyzed state is Q^dagger H^dagger |p>.
"""
import logging
import math

import numpy as np

from models.measurement import CountRecord, MeasurementSetting, ScanPoint, SearchSpec
from models.quantum import Operator
from services.slm_service import SlmService
from services.spdc_service import SpdcService
from utils.errors import ConvergenceError, SimulationError, UsageError
from utils.parallel import map_ordered, spawn_seeds

logger = logging.getLogger(__name__)

SCAN_PARAMETERS = ('b1', 'b2', 'a_pair')
RATE_FLOOR = -1e-12


def _rotation(radians):
    c, s = math.cos(radians), math.sin(radians)
    return np.array([[c, -s], [s, c]])


class BenchService:
    """Measurement side of the simulator."""

    @staticmethod
    def waveplate(angle_deg, retardance):
        """Jones matrix of a retarder with its fast axis at ``angle_deg`` from horizontal."""
        t = math.radians(angle_deg)
        return _rotation(t) @ np.diag([1.0, np.exp(1j * retardance)]) @ _rotation(-t)

    @staticmethod
    def analyzer_state(qwp, hwp, polarizer):
        """Single-photon state transmitted with certainty by one arm's optics."""
        state = np.array([math.cos(math.radians(polarizer)), math.sin(math.radians(polarizer))], dtype=complex)
        if hwp is not None:
            state = BenchService.waveplate(hwp, math.pi).conj().T @ state
        if qwp is not None:
            state = BenchService.waveplate(qwp, math.pi / 2).conj().T @ state
        return state

    @staticmethod
    def projector(setting):
        """
        Two-qubit polarization projector of a measurement setting.

        Args:
            setting: MeasurementSetting

        Returns:
            Operator P = |a_s a_i><a_s a_i| on (signal, idler) polarization
        """
        signal = BenchService.analyzer_state(*setting.arm('signal'))
        idler = BenchService.analyzer_state(*setting.arm('idler'))
        joint = np.kron(signal, idler)
        return Operator(np.outer(joint, joint.conj()), (2, 2))

    @staticmethod
    def measurement_operator(state, setting):
        """Polarization projector times the slit selector on the signal momentum."""
        polarization = BenchService.projector(setting).entries
        dims = state.subsystem_dims
        if state.dim % 4 or tuple(dims[:2]) != (2, 2):
            raise UsageError(f"state dims {dims} do not start with two polarization qubits")
        rest = state.dim // 4
        if setting.sector is None:
            return np.kron(polarization, np.eye(rest))
        if len(dims) < 3:
            raise UsageError("sector selection needs a momentum subsystem")
        n_signal = dims[2]
        if setting.sector >= n_signal:
            raise UsageError(f"sector {setting.sector} outside {n_signal} signal sectors")
        selector = np.zeros((n_signal, n_signal))
        selector[setting.sector, setting.sector] = 1.0
        return np.kron(polarization, np.kron(selector, np.eye(rest // n_signal)))

    @staticmethod
    def coincidence_rate(state, setting):
        """
        Expected coincidence rate rate_scale * Tr[rho (P_pol x Pi_sector)] + background.

        Args:
            state: DensityMatrix over polarization (and optionally momentum)
            setting: MeasurementSetting

        Returns:
            float: counts per second, never negative
        """
        operator = BenchService.measurement_operator(state, setting)
        probability = float(np.real(np.sum(state.entries * operator.T)))
        if probability < RATE_FLOOR:
            raise SimulationError(f"negative detection probability {probability:.3g}")
        return setting.rate_scale * max(probability, 0.0) + setting.background_rate

    @staticmethod
    def sample_counts(rate, window, rng_seed, setting=None):
        """Poisson coincidences with mean rate * window; reproducible per seed."""
        if rate < 0:
            raise UsageError(f"rate must be non-negative, got {rate}")
        rng = np.random.default_rng(rng_seed)
        counts = int(rng.poisson(rate * window))
        setting = setting if setting is not None else MeasurementSetting(window=window)
        return CountRecord(setting, counts, rate)

    @staticmethod
    def measure(state, setting, rng_seed):
        """Expected rate and one Poisson sample for ``setting``."""
        rate = BenchService.coincidence_rate(state, setting)
        return BenchService.sample_counts(rate, setting.window, rng_seed, setting)

    @staticmethod
    def fringe_setting(**kwargs):
        """Signal at 45 deg, idler at -45 deg: the purification minimum."""
        return MeasurementSetting.polarizers(45.0, -45.0, **kwargs)

    @staticmethod
    def scan_parameters(base, parameter, value):
        a1, b1, a2, b2 = base
        if parameter == 'b1':
            return (a1, value, a2, b2)
        if parameter == 'b2':
            return (a1, b1, a2, value)
        if parameter == 'a_pair':
            SlmService.check_slope(value)
            return (value, b1, -value, b2)
        raise UsageError(f"unknown scan parameter '{parameter}'; expected one of {', '.join(SCAN_PARAMETERS)}")

    @staticmethod
    def fringe_rate(cfg, params, grid, setting):
        """Noise-free rate at ``setting`` for mask parameters (a1, b1, a2, b2)."""
        mask = SlmService.linear_mask(cfg, *params)
        state = SpdcService.synthesize_state(cfg, mask, grid=grid)
        return BenchService.coincidence_rate(state, setting)

    @staticmethod
    def scan(parameter, value_range, steps, cfg, base_mask, seed, grid=None,
             window=30.0, rate_scale=100.0, background_rate=0.0, max_workers=None):
        """
        Sweep one mask parameter and record the 45/-45 coincidences.

        Args:
            parameter: 'b1', 'b2' or 'a_pair' (a1 = value, a2 = -value)
            value_range: (start, stop), both included
            steps: number of points, at least 3
            cfg: PhysicalConfig
            base_mask: PhaseMask whose ramp supplies the other parameters
            seed: master seed; point i uses the i-th spawned stream
            grid: BiphotonGrid, built from cfg when omitted

        Returns:
            list of ScanPoint in scan order
        """
        if steps < 3:
            raise UsageError("a scan needs at least 3 steps")
        if base_mask.ramp is None:
            raise UsageError("scans need a mask built from ramp parameters")
        grid = grid if grid is not None else SpdcService.build_grid(cfg)
        base = base_mask.ramp.parameters()
        values = np.linspace(value_range[0], value_range[1], steps)
        setting = BenchService.fringe_setting(window=window, rate_scale=rate_scale, background_rate=background_rate)
        points = [(float(v), BenchService.scan_parameters(base, parameter, float(v))) for v in values]

        def run(item):
            (value, params), point_seed = item
            rate = BenchService.fringe_rate(cfg, params, grid, setting)
            record = BenchService.sample_counts(rate, window, point_seed, setting)
            return ScanPoint(value, rate, record.counts, window)

        results = map_ordered(run, list(zip(points, spawn_seeds(seed, steps))), max_workers)
        best = min(results, key=lambda p: p.analytic_rate)
        logger.info(f"Scan of {parameter}: {steps} points, analytic minimum at {best.value:.6g}")
        return results

    @staticmethod
    def optimize_mask(cfg, init=None, search=None, grid=None, seed=None, window=30.0, rate_scale=100.0):
        """
        Two-stage coordinate descent on the 45/-45 coincidence rate.

        Stage one scans b1, stage two the slope pair a1 = -a2; each
        refinement pass repeats both stages on a window of +/- one step
        around the current best. Without ``seed`` the objective is the
        noise-free rate; with a seed every evaluation is a Poisson sample of
        ``window`` seconds.

        Args:
            cfg: PhysicalConfig
            init: starting (a1, b1, a2, b2), zeros by default
            search: SearchSpec with bounded intervals

        Returns:
            tuple (a1, b1, a2, b2), never worse than ``init`` on the objective

        Raises:
            ConvergenceError: when the evaluation budget runs out; carries the best point
        """
        search = search or SearchSpec()
        grid = grid if grid is not None else SpdcService.build_grid(cfg)
        setting = BenchService.fringe_setting(window=window, rate_scale=rate_scale)
        streams = iter(spawn_seeds(seed, search.max_evaluations + 1)) if seed is not None else None
        evaluations = 0

        def objective(params):
            nonlocal evaluations
            if evaluations >= search.max_evaluations:
                raise ConvergenceError(
                    f"mask search used {evaluations} evaluations without finishing",
                    best=best, iterations=evaluations)
            evaluations += 1
            rate = BenchService.fringe_rate(cfg, params, grid, setting)
            if streams is None:
                return rate
            return BenchService.sample_counts(rate, window, next(streams)).counts / window

        best = tuple(float(p) for p in (init or (0.0, 0.0, 0.0, 0.0)))
        best_value = objective(best)
        initial_value = best_value

        def stage(parameter, low, high):
            nonlocal best, best_value
            for value in np.linspace(low, high, search.steps):
                candidate = BenchService.scan_parameters(best, parameter, float(value))
                score = objective(candidate)
                if score < best_value:
                    best, best_value = candidate, score
            return (high - low) / (search.steps - 1)

        try:
            b_step = stage('b1', *search.b_range)
            a_step = stage('a_pair', *search.a_range)
            for _ in range(search.refinements):
                b_center, a_center = best[1], best[0]
                b_step = stage('b1', b_center - b_step, b_center + b_step)
                a_step = stage('a_pair', a_center - a_step, a_center + a_step)
        except ConvergenceError:
            logger.warning(f"Mask search stopped at {best} (objective {best_value:.6g})")
            raise

        logger.info(f"Mask search: {evaluations} evaluations, objective {initial_value:.6g} -> {best_value:.6g}, "
                    f"a1={best[0]:.6g} b1+b2={best[1] + best[3]:.6g}")
        return best

    @staticmethod
    def phase_compensated(rho):
        """Rotate the idler H phase so that rho[HH, VV] is real and non-negative."""
        if rho.dim != 4:
            raise UsageError("phase compensation acts on a two-qubit polarization state")
        chi = -np.angle(rho.entries[0, 3])
        unitary = np.kron(np.eye(2), np.diag([np.exp(1j * chi), 1.0]))
        return type(rho).from_matrix(unitary @ rho.entries @ unitary.conj().T, rho.subsystem_dims)

    @staticmethod
    def visibility_measurement(state, sector=None, points=36):
        """
        Fringe visibility in the 45 deg basis.

        The polarization state (conditioned on ``sector`` when given) is
        phase-compensated, the idler polarizer is swept over half a turn with
        the signal at 45 deg, and rate = A + B cos 2a + C sin 2a is fitted by
        least squares; the contrast (Cmax - Cmin)/(Cmax + Cmin) is sqrt(B^2 + C^2)/A.

        Raises:
            SimulationError: if every rate is zero
        """
        if points < 3:
            raise UsageError("a visibility sweep needs at least 3 points")
        rho = SpdcService.polarization_state(state, sector) if state.dim > 4 else state
        rho = BenchService.phase_compensated(rho)
        angles = np.linspace(0.0, 180.0, points, endpoint=False)
        rates = np.array([
            BenchService.coincidence_rate(rho, MeasurementSetting.polarizers(45.0, float(a), rate_scale=1.0))
            for a in angles
        ])
        if not np.any(rates > 0):
            raise SimulationError("all fringe rates are zero")
        doubled = np.radians(2 * angles)
        design = np.column_stack([np.ones_like(doubled), np.cos(doubled), np.sin(doubled)])
        (offset, cos_part, sin_part), *_ = np.linalg.lstsq(design, rates, rcond=None)
        return float(min(max(math.hypot(cos_part, sin_part) / offset, 0.0), 1.0))

    @staticmethod
    def count_visibility(state, seed, window=30.0, rate_scale=100.0, background_rate=0.0, sector=None):
        """
        Visibility (C++ - C+-)/(C++ + C+-) from two Poisson samples.

        Returns:
            dict with visibility, its Poisson standard error and both counts
        """
        rho = SpdcService.polarization_state(state, sector) if state.dim > 4 else state
        rho = BenchService.phase_compensated(rho)
        same_seed, opposite_seed = spawn_seeds(seed, 2)
        options = {'window': window, 'rate_scale': rate_scale, 'background_rate': background_rate}
        same = BenchService.measure(rho, MeasurementSetting.polarizers(45.0, 45.0, **options), same_seed).counts
        opposite = BenchService.measure(rho, MeasurementSetting.polarizers(45.0, -45.0, **options), opposite_seed).counts
        total = same + opposite
        if total == 0:
            raise SimulationError("no coincidences recorded for the count visibility")
        return {
            'visibility': (same - opposite) / total,
            'error': 2 * math.sqrt(same * opposite / total ** 3),
            'counts_same': same,
            'counts_opposite': opposite,
        }
