"""
Service for two-qubit polarization tomography: projector sets, dual-basis
linear inversion, maximum-likelihood refinement and bootstrap error bars.
"""
import logging
from itertools import product

import numpy as np

from models.measurement import ANALYZERS, DEFAULT_RATE_SCALE, DEFAULT_TOMO_WINDOW, CountRecord, MeasurementSetting
from models.quantum import DensityMatrix
from models.tomography import TomoProtocol, TomoResult
from services.bench_service import BenchService
from utils.errors import SimulationError, UsageError
from utils.parallel import map_ordered, spawn_seeds
from utils.qmath import concurrence, fidelity, psd_project, purity, trace_distance

logger = logging.getLogger(__name__)

CANONICAL_ANALYZERS = ('H', 'V', 'D', 'R')
MAX_GRAM_CONDITION = 1e12
SEED_MIXING = 1e-6
MAX_STEP_HALVINGS = 50
MIN_BOOTSTRAP_SUCCESS = 0.9
RECOMMENDED_RESAMPLES = 100


class TomographyService:
    """Tomographic reconstruction of the polarization state."""

    @staticmethod
    def build_protocol(settings):
        """
        Projectors, Gram matrix and dual basis for an ordered setting list.

        Raises:
            SimulationError: if the projectors are not linearly independent
        """
        settings = list(settings)
        projectors = np.array([BenchService.projector(s).entries for s in settings])
        gram = np.real(np.einsum('mij,nji->mn', projectors, projectors))
        if len(settings) != 16 or np.linalg.cond(gram) > MAX_GRAM_CONDITION:
            raise SimulationError("measurement projectors are not informationally complete")
        inverse = np.linalg.inv(gram)
        dual = np.einsum('mn,nij->mij', inverse, projectors)
        return TomoProtocol(settings, projectors, dual, gram)

    @staticmethod
    def canonical_protocol(analyzers=CANONICAL_ANALYZERS, window=DEFAULT_TOMO_WINDOW,
                           rate_scale=DEFAULT_RATE_SCALE, background_rate=0.0):
        """The {H,V,D,R} x {H,V,D,R} protocol with signal analyzer as the slow index."""
        unknown = [a for a in analyzers if a not in ANALYZERS]
        if unknown:
            raise UsageError(f"unknown analyzers {unknown}")
        settings = [
            MeasurementSetting.analyzer(s, i, window=window, rate_scale=rate_scale, background_rate=background_rate)
            for s, i in product(analyzers, repeat=2)
        ]
        return TomographyService.build_protocol(settings)

    @staticmethod
    def _arrays(protocol, counts):
        if len(counts) != len(protocol):
            raise UsageError(f"expected {len(protocol)} count records, got {len(counts)}")
        ordered = sorted(counts, key=lambda r: protocol.index(r.label)) if all(r.label for r in counts) else counts
        values = np.array([r.counts for r in ordered], dtype=float)
        windows = np.array([r.window for r in ordered], dtype=float)
        return values, windows

    @staticmethod
    def frequencies(protocol, counts):
        """
        Normalized frequencies f_mu = (c_mu / t_mu) / N.

        N = sum_mu Tr[Gamma_mu] c_mu / t_mu estimates the total rate from
        the settings that decompose the identity (the H/V subset for the
        canonical protocol).

        Returns:
            (frequencies ndarray, N)
        """
        values, windows = TomographyService._arrays(protocol, counts)
        rates = values / windows
        normalization = float(np.dot(protocol.dual_traces(), rates))
        if not normalization > 0:
            raise SimulationError("counts give a non-positive normalization; is the H/V basis empty?")
        return rates / normalization, normalization

    @staticmethod
    def linear_invert(protocol, frequencies):
        """sum_mu f_mu Gamma_mu, Hermitized; may have negative eigenvalues."""
        frequencies = np.asarray(frequencies, dtype=float)
        if frequencies.shape != (len(protocol),):
            raise UsageError(f"expected {len(protocol)} frequencies")
        matrix = np.einsum('m,mij->ij', frequencies, protocol.dual_basis)
        return (matrix + matrix.conj().T) / 2

    @staticmethod
    def log_likelihood(protocol, rho, values, windows):
        """Multinomial log-likelihood sum c_mu log(t_mu p_mu / sum t p)."""
        probabilities = protocol.probabilities(rho)
        expected = windows * probabilities
        observed = values > 0
        if np.any(expected[observed] <= 0):
            return -np.inf
        return float(np.sum(values[observed] * np.log(expected[observed] / np.sum(expected))))

    @staticmethod
    def mle_reconstruct(protocol, counts, max_iterations=5000, tolerance=1e-10, targets=None):
        """
        Maximum-likelihood state from 16 count records.

        Starts from the PSD-projected linear inversion (lightly mixed with the
        identity) and iterates rho <- K rho K^dagger / Tr with
        K = I + eps (R - G), R = sum (c_mu / C) P_mu / p_mu and
        G = sum t_mu P_mu / sum t p. For equal windows and a POVM this is the
        R rho R update. eps starts at 1 and halves until the likelihood does
        not decrease, so the recorded likelihoods never decrease.

        Args:
            protocol: TomoProtocol
            counts: list of CountRecord, matched to settings by label
            max_iterations: iteration cap
            tolerance: stop once the likelihood gain falls below this
            targets: optional dict name -> Ket for fidelity reporting

        Returns:
            TomoResult; ``converged`` is False when the cap was hit or the
            step search stalled, and ``stalled`` marks the latter

        Raises:
            SimulationError: if every count is zero
        """
        values, windows = TomographyService._arrays(protocol, counts)
        if np.any(values < 0) or not np.any(values > 0):
            raise SimulationError("tomography needs non-negative counts with at least one positive")

        frequencies, normalization = TomographyService.frequencies(protocol, counts)
        rho_linear = TomographyService.linear_invert(protocol, frequencies)
        rho = (1 - SEED_MIXING) * psd_project(rho_linear).entries + SEED_MIXING * np.eye(4) / 4

        total = values.sum()
        observed = values > 0
        identity = np.eye(4)
        likelihood = TomographyService.log_likelihood(protocol, rho, values, windows)
        trace = [likelihood]
        converged = stalled = False
        iterations = 0

        while iterations < max_iterations:
            probabilities = protocol.probabilities(rho)
            ratio = np.zeros_like(values)
            ratio[observed] = values[observed] / (total * probabilities[observed])
            gradient = (np.einsum('m,mij->ij', ratio, protocol.projectors)
                        - np.einsum('m,mij->ij', windows, protocol.projectors) / np.dot(windows, probabilities))
            gradient = (gradient + gradient.conj().T) / 2

            step = 1.0
            for _ in range(MAX_STEP_HALVINGS):
                operator = identity + step * gradient
                candidate = operator @ rho @ operator.conj().T
                candidate = (candidate + candidate.conj().T) / 2
                candidate /= np.trace(candidate).real
                candidate_likelihood = TomographyService.log_likelihood(protocol, candidate, values, windows)
                if candidate_likelihood >= likelihood:
                    break
                step /= 2
            else:
                stalled = True
                break

            gain = candidate_likelihood - likelihood
            rho, likelihood = candidate, candidate_likelihood
            trace.append(likelihood)
            iterations += 1
            if gain < tolerance:
                converged = True
                break

        if stalled:
            logger.warning(f"MLE stalled after {iterations} iterations: no step raises the log-likelihood "
                           f"{likelihood:.10g}")
        elif not converged:
            logger.warning(f"MLE stopped after {iterations} iterations without converging; "
                           f"returning the last iterate (log-likelihood {likelihood:.10g})")

        rho_mle = DensityMatrix.from_matrix(rho, (2, 2))
        result = TomoResult(rho_linear, rho_mle, likelihood, iterations, converged, trace,
                            normalization=normalization, stalled=stalled)
        result.metrics = {
            'purity': purity(rho_mle),
            'concurrence': concurrence(rho_mle),
            'linear_mle_trace_distance': trace_distance(rho_linear, rho_mle),
            'linear_min_eigenvalue': float(np.linalg.eigvalsh(rho_linear)[0]),
        }
        for name, target in (targets or {}).items():
            result.fidelities[name] = fidelity(rho_mle, target)
        logger.debug(f"MLE finished: {iterations} iterations, converged={converged} stalled={stalled}")
        return result

    @staticmethod
    def simulate_counts(protocol, state, seed=None, sector=None, noise_free=False):
        """
        Count records for every protocol setting.

        Uses each setting's window, rate scale and background; ``sector``
        puts the slit on one signal momentum sector. Noise-free records hold
        the rounded expected counts; otherwise setting mu draws from the mu-th
        stream spawned from ``seed``.
        """
        settings = [s.with_changes(sector=sector) if sector is not None else s for s in protocol.settings]
        if noise_free:
            records = []
            for setting in settings:
                rate = BenchService.coincidence_rate(state, setting)
                records.append(CountRecord(setting, int(round(rate * setting.window)), rate))
            return records
        return [
            BenchService.measure(state, setting, stream)
            for setting, stream in zip(settings, spawn_seeds(seed, len(settings)))
        ]

    @staticmethod
    def bootstrap_errors(protocol, counts, targets, resamples, seed, max_workers=None,
                         max_iterations=5000, tolerance=1e-10):
        """
        Parametric Poisson bootstrap of the target fidelities.

        Every resample redraws each setting's counts from a Poisson law with
        the observed mean and reruns the reconstruction.

        Returns:
            dict name -> {'mean': float, 'std': float, 'resamples': int}

        Raises:
            SimulationError: if fewer than 90% of the resamples reconstruct
        """
        if resamples < 1:
            raise UsageError("bootstrap needs at least one resample")
        if resamples < RECOMMENDED_RESAMPLES:
            logger.warning(f"Bootstrap with {resamples} resamples; error bars below "
                           f"{RECOMMENDED_RESAMPLES} resamples are rough")
        counts = list(counts)

        def run(stream):
            rng = np.random.default_rng(stream)
            redrawn = [record.with_counts(int(rng.poisson(record.counts))) for record in counts]
            try:
                result = TomographyService.mle_reconstruct(protocol, redrawn, max_iterations, tolerance, targets)
            except SimulationError as e:
                logger.debug(f"Bootstrap resample failed: {e}")
                return None
            return result.fidelities

        outcomes = map_ordered(run, spawn_seeds(seed, resamples), max_workers)
        successes = [o for o in outcomes if o is not None]
        if len(successes) < MIN_BOOTSTRAP_SUCCESS * resamples:
            raise SimulationError(f"only {len(successes)} of {resamples} bootstrap resamples succeeded")

        ddof = 1 if len(successes) > 1 else 0
        summary = {}
        for name in targets:
            values = np.array([o[name] for o in successes])
            summary[name] = {'mean': float(values.mean()), 'std': float(values.std(ddof=ddof)),
                             'resamples': len(successes)}
        return summary
