"""
Service running the end-to-end pipelines behind each subcommand.

Every pipeline is a pure function of (physical config, arguments, seed) and
writes its outputs into one directory together with a run manifest.
"""
import logging
import math
from pathlib import Path

import numpy as np

from models.manifest import RunManifest
from models.measurement import SearchSpec
from models.phase_mask import PhaseMask
from models.physical_config import PhysicalConfig
from models.sectors import MOMENTUM_ANTICORRELATED, MOMENTUM_PRODUCT, SectorConfig
from services.bench_service import BenchService
from services.slm_service import SlmService
from services.spdc_service import SpdcService
from services.tomography_service import TomographyService
from utils.errors import ConfigurationError, UsageError
from utils.parallel import spawn_seeds
from utils.qmath import conditional_state, delta_state, fidelity, state_fidelity, target_state
from utils.serialization import read_counts, write_counts, write_density_csv, write_json, write_scan

logger = logging.getLogger(__name__)

LADDER_STAGES = ('uncompensated', 'delay_compensated', 'slm_compensated')
PHASE_TOLERANCE = 1e-9
CALIBRATION_NOTE = ('alpha, beta, gamma, pump_bandwidth and residual_dephasing are calibrated to the '
                    'measured visibilities; the ladder is a calibration reproduction, not a prediction')


def _same_phase(a, b):
    return abs(math.remainder(a - b, 2 * math.pi)) < PHASE_TOLERANCE


def parse_overrides(pairs):
    """['key=value', ...] -> {'key': 'value'}."""
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition('=')
        if not sep or not key.strip():
            raise ConfigurationError(f"override '{pair}' is not of the form key=value")
        overrides[key.strip()] = value.strip()
    return overrides


class RunService:
    """Pipelines for purify, scan, cluster and tomo."""

    COMMANDS = ('purify', 'scan', 'cluster', 'tomo')

    @staticmethod
    def load_config(arguments):
        overrides = arguments.get('set') or {}
        if arguments.get('config'):
            return PhysicalConfig.from_file(arguments['config'], overrides)
        return PhysicalConfig.from_text('', overrides)

    @staticmethod
    def with_windows(settings, windows):
        """Apply a '--windows scan[,tomo]' override (seconds) to a copy of ``settings``."""
        if not windows:
            return settings
        try:
            values = [float(w) for w in str(windows).split(',')]
        except ValueError as e:
            raise UsageError(f"--windows expects seconds as scan[,tomo], got '{windows}'") from e
        if len(values) not in (1, 2) or min(values) <= 0:
            raise UsageError(f"--windows expects one or two positive durations, got '{windows}'")
        scan_window, tomo_window = values[0], values[-1]
        return {**settings, 'SCAN_WINDOW_S': scan_window, 'TOMO_WINDOW_S': tomo_window}

    @staticmethod
    def purified_config(cfg):
        """Delay compensation on; the SLM supplies the rest of the purification."""
        return cfg.replace(delay_compensated=True)

    @staticmethod
    def source_mask(cfg, arguments):
        """Analytic purification mask, or the drive pattern named by --mask."""
        if not arguments.get('mask'):
            return SlmService.purification_mask(cfg)
        mask = PhaseMask.from_csv(arguments['mask'])
        if mask.pixel_count != cfg.pixel_count:
            raise ConfigurationError(f"{arguments['mask']} drives {mask.pixel_count} pixels, "
                                     f"the modulator has {cfg.pixel_count}", key='pixel_count')
        logger.info(f"Using drive pattern {arguments['mask']}")
        return mask

    @staticmethod
    def execute(settings, command, arguments):
        """
        Run ``command`` with ``arguments`` and write its manifest.

        Args:
            settings: profile dict from config.load_settings
            command: one of COMMANDS
            arguments: JSON-serializable dict; 'out' names the output directory

        Returns:
            (summary dict, RunManifest)
        """
        if command not in RunService.COMMANDS:
            raise UsageError(f"unknown command '{command}'")
        out = Path(arguments['out'])
        out.mkdir(parents=True, exist_ok=True)
        cfg = RunService.load_config(arguments)
        settings = RunService.with_windows(settings, arguments.get('windows'))
        logger.info(f"Running {command} into {out}")

        pipeline = getattr(RunService, command)
        summary, written = pipeline(settings, cfg, out, arguments)

        manifest = RunManifest(
            command=command,
            arguments=arguments,
            config_path=arguments.get('config'),
            seed=arguments.get('seed'),
            output_dir=str(out),
            profile=settings.get('PROFILE', 'development'),
            tool_version=settings.get('VERSION'),
            outputs=sorted(p.name for p in written),
        ).stamp()
        manifest.write(out)
        return summary, manifest

    # -- purification ---------------------------------------------------------

    @staticmethod
    def ladder(settings, cfg, mask, grid, seed):
        """Visibility at the three purification stages, noise-free and from counts."""
        flat = SlmService.linear_mask(cfg)
        stages = (
            (cfg.replace(delay_compensated=False), flat),
            (cfg.replace(delay_compensated=True), flat),
            (cfg.replace(delay_compensated=True), mask),
        )
        rows = []
        for name, (stage_cfg, stage_mask), stream in zip(LADDER_STAGES, stages, spawn_seeds(seed, len(stages))):
            state = SpdcService.synthesize_state(stage_cfg, stage_mask, grid=grid)
            counted = BenchService.count_visibility(
                state, stream, window=settings['SCAN_WINDOW_S'], rate_scale=settings['RATE_SCALE'],
                background_rate=settings['BACKGROUND_RATE'])
            rows.append({
                'stage': name,
                'visibility': BenchService.visibility_measurement(state),
                'count_visibility': counted['visibility'],
                'count_visibility_error': counted['error'],
            })
            logger.info(f"Visibility {name}: {rows[-1]['visibility']:.4f}")
        return rows

    @staticmethod
    def purify(settings, cfg, out, arguments):
        """b1 scan, a-pair scan, two-stage mask search and the visibility ladder."""
        seed = arguments['seed']
        steps = arguments.get('steps') or settings['SCAN_STEPS']
        grid = SpdcService.build_grid(cfg, settings['GRID_RESOLUTION'])
        compensated = RunService.purified_config(cfg)
        slope = cfg.compensation_slope
        search = SearchSpec(steps=steps)
        b_seed, a_seed, ladder_seed = spawn_seeds(seed, 3)
        scan_options = {'grid': grid, 'window': settings['SCAN_WINDOW_S'], 'rate_scale': settings['RATE_SCALE'],
                        'background_rate': settings['BACKGROUND_RATE'], 'max_workers': settings['MAX_WORKERS']}

        b_scan = BenchService.scan('b1', search.b_range, steps, compensated,
                                   SlmService.linear_mask(cfg, slope, 0.0, -slope, 0.0), b_seed, **scan_options)
        a_scan = BenchService.scan('a_pair', search.a_range, steps, compensated,
                                   SlmService.linear_mask(cfg, 0.0, cfg.phi0, 0.0, 0.0), a_seed, **scan_options)
        params = BenchService.optimize_mask(compensated, search=search, grid=grid)
        mask = SlmService.linear_mask(cfg, *params)

        written = [
            write_scan(out / 'scan_b1.csv', b_scan),
            write_scan(out / 'scan_a_pair.csv', a_scan),
        ]
        mask.to_csv(out / 'mask.csv')
        written.append(out / 'mask.csv')

        summary = {
            'optimal_mask': dict(zip(('a1', 'b1', 'a2', 'b2'), params), b_sum=params[1] + params[3]),
            'analytic_mask': {'a1': slope, 'a2': -slope, 'b_sum': cfg.phi0},
            'scan_minima': {
                'b1': min(b_scan, key=lambda p: p.analytic_rate).value,
                'a_pair': min(a_scan, key=lambda p: p.analytic_rate).value,
            },
            'ladder': RunService.ladder(settings, cfg, mask, grid, ladder_seed),
            'note': CALIBRATION_NOTE,
        }
        written.append(write_json(out / 'purify.json', summary))
        return summary, written

    @staticmethod
    def scan(settings, cfg, out, arguments):
        """One calibration scan around the analytic purification mask."""
        parameter = arguments['parameter']
        steps = arguments.get('steps') or settings['SCAN_STEPS']
        default_range = SearchSpec().a_range if parameter == 'a_pair' else SearchSpec().b_range
        start = default_range[0] if arguments.get('start') is None else arguments['start']
        stop = default_range[1] if arguments.get('stop') is None else arguments['stop']
        compensated = RunService.purified_config(cfg)
        base = SlmService.purification_mask(cfg)
        if parameter == 'b1':
            base = SlmService.linear_mask(cfg, cfg.compensation_slope, 0.0, -cfg.compensation_slope, 0.0)
        grid = SpdcService.build_grid(cfg, settings['GRID_RESOLUTION'])
        points = BenchService.scan(
            parameter, (start, stop), steps, compensated, base, arguments['seed'],
            grid=grid, window=settings['SCAN_WINDOW_S'],
            rate_scale=settings['RATE_SCALE'], background_rate=settings['BACKGROUND_RATE'],
            max_workers=settings['MAX_WORKERS'])
        written = [write_scan(out / f'scan_{parameter}.csv', points)]
        if arguments.get('export_grid'):
            written.append(grid.export_csv(out / 'grid.csv'))
        summary = {'parameter': parameter, 'minimum': min(points, key=lambda p: p.analytic_rate).value}
        return summary, written

    # -- cluster states ---------------------------------------------------------

    @staticmethod
    def block_targets(sectors):
        """Expected polarization state of every sector block: (|HH> + e^{-i phase}|VV>)/sqrt(2)."""
        return {
            (n, m): delta_state(+1, sectors.block_phase(n, m))
            for n in range(sectors.n_signal) for m in range(sectors.n_idler)
        }

    @staticmethod
    def named_target(sectors):
        """Closed-form target for the sector pattern, when it is a known family."""
        signal, idler = sectors.signal_phases, sectors.idler_phases
        if sectors.momentum != MOMENTUM_PRODUCT:
            return None, None
        if sectors.momentum_dims == (2, 1) and _same_phase(signal[0], 0) and _same_phase(signal[1], math.pi) \
                and _same_phase(idler[0], 0):
            return 'c3', target_state('c3')
        if sectors.momentum_dims == (2, 2) and _same_phase(signal[0], -idler[0]) \
                and _same_phase(idler[1], math.pi - signal[1]):
            return 'xi4', target_state('xi4', phi_0i=idler[0], phi_1s=signal[1])
        if sectors.momentum_dims == (1, 1) and _same_phase(signal[0] + idler[0], 0):
            return 'bell_phi+', target_state('bell_phi+')
        return None, None

    @staticmethod
    def block_state(state, sectors, n, m):
        """Polarization state with the slit on signal sector n (and idler sector m when M > 1)."""
        if sectors.n_idler == 1:
            return conditional_state(state, n)
        partial = conditional_state(state, n, subsystem=2, keep=(0, 1, 3))
        return conditional_state(partial, m, subsystem=2, keep=(0, 1))

    @staticmethod
    def cluster(settings, cfg, out, arguments):
        """Synthesize a sector-gated state and report its fidelities."""
        sectors = SectorConfig.parse(cfg, arguments.get('sectors') or 'c3')
        compensated = RunService.purified_config(cfg)
        grid = SpdcService.build_grid(cfg, settings['GRID_RESOLUTION'])
        state = SpdcService.synthesize_state(compensated, RunService.source_mask(cfg, arguments), sectors, grid)

        name, target = RunService.named_target(sectors)
        weights = SpdcService.sector_weights(cfg, grid, sectors)
        if sectors.momentum == MOMENTUM_ANTICORRELATED:
            weights[np.eye(*sectors.momentum_dims, dtype=bool)] = 0.0
            weights = weights / weights.sum()
        blocks = {}
        for (n, m), expected in RunService.block_targets(sectors).items():
            if weights[n].sum() <= 0 or (sectors.n_idler > 1 and weights[n, m] <= 0):
                continue
            blocks[f'{n}{m}' if sectors.n_idler > 1 else str(n)] = fidelity(
                RunService.block_state(state, sectors, n, m), expected)

        summary = {
            'sectors': sectors.to_dict(),
            'sector_weights': weights,
            'target': name,
            'fidelity': fidelity(state, target) if target is not None else None,
            'conditional_fidelities': blocks,
        }

        seed = arguments.get('seed')
        if seed is not None:
            summary['tomography'] = RunService.cluster_tomography(settings, state, sectors, seed)
        write_density_csv(out / 'state.csv', state)
        written = [out / 'state.csv', write_json(out / 'cluster.json', summary)]
        logger.info(f"Cluster {name or 'custom'}: fidelity {summary['fidelity']}, conditional {blocks}")
        return summary, written

    @staticmethod
    def cluster_tomography(settings, state, sectors, seed):
        """Slit on each signal sector, simulated counts, MLE fidelity to the block target."""
        if sectors.n_idler != 1:
            logger.info("Sector tomography needs M = 1; skipped")
            return None
        protocol = TomographyService.canonical_protocol(
            window=settings['TOMO_WINDOW_S'], rate_scale=settings['RATE_SCALE'],
            background_rate=settings['BACKGROUND_RATE'])
        targets = RunService.block_targets(sectors)
        report = {}
        for n, stream in zip(range(sectors.n_signal), spawn_seeds(seed, sectors.n_signal)):
            counts = TomographyService.simulate_counts(protocol, state, stream, sector=n)
            result = TomographyService.mle_reconstruct(
                protocol, counts, settings['MLE_MAX_ITERATIONS'], settings['MLE_TOLERANCE'],
                {'target': targets[(n, 0)]})
            report[str(n)] = {'fidelity': result.fidelities['target'], 'iterations': result.iterations,
                              'converged': result.converged, 'stalled': result.stalled}
        return report

    # -- tomography ---------------------------------------------------------------

    @staticmethod
    def parse_targets(names):
        """'bell_phi+,delta-:0.3' -> {name: Ket} for two-qubit targets."""
        targets = {}
        for name in filter(None, (n.strip() for n in (names or 'bell_phi+').split(','))):
            family, _, parameter = name.partition(':')
            if family in ('delta+', 'delta-'):
                targets[name] = target_state(family, phi_t=float(parameter or 0.0))
            elif family in ('bell_phi+', 'bell_phi-'):
                targets[name] = target_state(family)
            else:
                raise UsageError(f"target '{name}' is not a two-qubit polarization state")
        return targets

    @staticmethod
    def tomo(settings, cfg, out, arguments):
        """Reconstruct from a counts file, or simulate the purified source and reconstruct."""
        protocol = TomographyService.canonical_protocol(
            window=settings['TOMO_WINDOW_S'], rate_scale=settings['RATE_SCALE'],
            background_rate=settings['BACKGROUND_RATE'])
        targets = RunService.parse_targets(arguments.get('targets'))
        seed = arguments.get('seed')
        written = []
        truth = None

        if arguments.get('counts'):
            counts = read_counts(arguments['counts'], protocol)
        else:
            if seed is None:
                raise UsageError("simulated tomography needs --seed")
            simulate_seed, seed = spawn_seeds(seed, 2)
            compensated = RunService.purified_config(cfg)
            sectors = SectorConfig.parse(cfg, arguments['sectors']) if arguments.get('sectors') else None
            state = SpdcService.synthesize_state(
                compensated, RunService.source_mask(cfg, arguments), sectors,
                SpdcService.build_grid(cfg, settings['GRID_RESOLUTION']))
            sector = arguments.get('sector')
            counts = TomographyService.simulate_counts(protocol, state, simulate_seed, sector=sector)
            truth = SpdcService.polarization_state(state, sector)
            written.append(write_counts(out / 'counts.csv', counts))

        result = TomographyService.mle_reconstruct(
            protocol, counts, settings['MLE_MAX_ITERATIONS'], settings['MLE_TOLERANCE'], targets)
        resamples = arguments.get('bootstrap')
        if resamples is None:
            resamples = settings['BOOTSTRAP_RESAMPLES']
        if resamples and seed is not None:
            result.errors = TomographyService.bootstrap_errors(
                protocol, counts, targets, resamples, seed, settings['MAX_WORKERS'],
                settings['MLE_MAX_ITERATIONS'], settings['MLE_TOLERANCE'])
        elif resamples:
            logger.info("No seed given; bootstrap error bars skipped")
        if truth is not None:
            result.metrics['fidelity_to_source'] = state_fidelity(result.rho_mle, truth)

        report = result.to_dict()
        report['protocol'] = {
            'settings': protocol.labels,
            'normalization': 'N = sum_mu Tr[Gamma_mu] c_mu / t_mu (H/V basis rates)',
        }
        written.append(write_json(out / 'tomo.json', report))
        written.append(write_density_csv(out / 'rho_mle.csv', result.rho_mle))
        written.append(write_density_csv(out / 'rho_linear.csv', result.rho_linear))
        logger.info(f"Tomography: {result.iterations} iterations, fidelities {result.fidelities}")
        return report, written
