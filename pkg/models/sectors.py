"""
Partition of the signal and idler acceptance windows into momentum sectors.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from utils.errors import ConfigurationError

MOMENTUM_PRODUCT = 'product'
MOMENTUM_ANTICORRELATED = 'anticorrelated'
MOMENTUM_MODES = (MOMENTUM_PRODUCT, MOMENTUM_ANTICORRELATED)

BOUNDARY_TOLERANCE = 1e-12


def _parse_phase(token):
    """Parse a phase such as '0.3', 'pi', '-pi', '0.5pi'."""
    token = token.strip().lower()
    if token.endswith('pi'):
        coefficient = token[:-2].rstrip('*')
        if coefficient in ('', '+'):
            return math.pi
        if coefficient == '-':
            return -math.pi
        return float(coefficient) * math.pi
    return float(token)


def _snap_to_pixel_edge(cfg, angle):
    edge = math.floor(cfg.pixels_per_radian * angle) + 0.5
    return edge / cfg.pixels_per_radian


@dataclass(frozen=True)
class SectorConfig:
    """Sector boundaries (rad) and per-sector constant phases (rad) for each arm.

    Sector n of the signal covers [signal_boundaries[n], signal_boundaries[n+1]);
    likewise for the idler. The phases act on the horizontal component only.
    """

    signal_boundaries: tuple
    idler_boundaries: tuple
    signal_phases: tuple = None
    idler_phases: tuple = None
    momentum: str = field(default=MOMENTUM_PRODUCT)

    def __post_init__(self):
        signal = tuple(float(b) for b in self.signal_boundaries)
        idler = tuple(float(b) for b in self.idler_boundaries)
        for arm, bounds in (('signal', signal), ('idler', idler)):
            if len(bounds) < 2:
                raise ConfigurationError(f"{arm} needs at least one sector")
            if any(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:])):
                raise ConfigurationError(f"{arm} sectors overlap: boundaries must increase strictly")
        object.__setattr__(self, 'signal_boundaries', signal)
        object.__setattr__(self, 'idler_boundaries', idler)

        signal_phases = tuple(float(p) for p in (self.signal_phases or (0.0,) * (len(signal) - 1)))
        idler_phases = tuple(float(p) for p in (self.idler_phases or (0.0,) * (len(idler) - 1)))
        if len(signal_phases) != len(signal) - 1 or len(idler_phases) != len(idler) - 1:
            raise ConfigurationError("one phase per sector is required")
        object.__setattr__(self, 'signal_phases', signal_phases)
        object.__setattr__(self, 'idler_phases', idler_phases)

        if self.momentum not in MOMENTUM_MODES:
            raise ConfigurationError(f"momentum must be one of {', '.join(MOMENTUM_MODES)}")
        if self.momentum == MOMENTUM_ANTICORRELATED and (self.n_signal, self.n_idler) != (2, 2):
            raise ConfigurationError("anticorrelated momentum needs N = M = 2")

    @property
    def n_signal(self):
        return len(self.signal_boundaries) - 1

    @property
    def n_idler(self):
        return len(self.idler_boundaries) - 1

    @property
    def momentum_dims(self):
        return (self.n_signal, self.n_idler)

    @property
    def subsystem_dims(self):
        """Tensor factorization of the synthesized state (global ordering)."""
        return (2, 2, self.n_signal, self.n_idler)

    def check_window(self, cfg):
        """Raise unless both partitions cover exactly the acceptance window."""
        half = cfg.acceptance / 2
        for arm, bounds in (('signal', self.signal_boundaries), ('idler', self.idler_boundaries)):
            if abs(bounds[0] + half) > BOUNDARY_TOLERANCE or abs(bounds[-1] - half) > BOUNDARY_TOLERANCE:
                raise ConfigurationError(f"{arm} sectors must span [-{half:.6g}, {half:.6g}] rad")

    def signal_index(self, theta):
        """Sector index of each signal angle (clamped to the outer sectors)."""
        return self._index(self.signal_boundaries, theta)

    def idler_index(self, theta_idler):
        return self._index(self.idler_boundaries, theta_idler)

    @staticmethod
    def _index(bounds, angles):
        inner = np.asarray(bounds[1:-1])
        return np.searchsorted(inner, np.asarray(angles), side='right')

    def phase_of(self, arm, angle):
        """Sector phase applied to ``arm`` at ``angle``."""
        if arm == 'signal':
            return np.asarray(self.signal_phases)[self.signal_index(angle)]
        return np.asarray(self.idler_phases)[self.idler_index(angle)]

    def block_phase(self, n, m):
        """Controlled phase phi_ns + phi_mi picked up by the HH branch of block (n, m)."""
        return self.signal_phases[n] + self.idler_phases[m]

    def with_phases(self, signal_phases=None, idler_phases=None):
        return SectorConfig(
            self.signal_boundaries, self.idler_boundaries,
            signal_phases if signal_phases is not None else self.signal_phases,
            idler_phases if idler_phases is not None else self.idler_phases,
            self.momentum,
        )

    # -- constructors --------------------------------------------------------

    @classmethod
    def uniform(cls, cfg, n_signal=1, n_idler=1, signal_phases=None, idler_phases=None,
                momentum=MOMENTUM_PRODUCT, snap=None):
        """Equal sectors over the acceptance.

        Inner boundaries are snapped to pixel edges (ties round up) when
        ``snap`` is set; it defaults to ``cfg.pixelated``.
        """
        if snap is None:
            snap = cfg.pixelated
        if n_signal < 1 or n_idler < 1:
            raise ConfigurationError("sector counts must be at least 1")

        def bounds(count):
            half = cfg.acceptance / 2
            edges = [-half + k * cfg.acceptance / count for k in range(count + 1)]
            edges[0], edges[-1] = -half, half
            if snap:
                edges[1:-1] = [_snap_to_pixel_edge(cfg, e) for e in edges[1:-1]]
            return tuple(edges)

        return cls(bounds(n_signal), bounds(n_idler), signal_phases, idler_phases, momentum)

    @classmethod
    def single(cls, cfg):
        return cls.uniform(cfg, 1, 1)

    @classmethod
    def cluster_c3(cls, cfg, phi=math.pi):
        """N=2, M=1 with phase ``phi`` on signal sector 1."""
        return cls.uniform(cfg, 2, 1, signal_phases=(0.0, phi))

    @classmethod
    def xi4(cls, cfg, phi_0i, phi_1s):
        """N=M=2 with phi_0s = -phi_0i and phi_1i = pi - phi_1s."""
        return cls.uniform(cfg, 2, 2, signal_phases=(-phi_0i, phi_1s), idler_phases=(phi_0i, math.pi - phi_1s))

    @classmethod
    def parse(cls, cfg, text):
        """Parse a command-line sector spec.

        Accepted forms: ``c3``, ``c3:<phi>``, ``xi4:<phi_0i>,<phi_1s>``,
        ``<N>x<M>`` optionally followed by ``:s=<p0>,<p1>;i=<q0>`` and a
        trailing ``/anticorrelated``. Phases accept ``pi`` multiples.
        """
        spec = text.strip().lower()
        momentum = MOMENTUM_PRODUCT
        if spec.endswith('/' + MOMENTUM_ANTICORRELATED):
            spec = spec[: -len(MOMENTUM_ANTICORRELATED) - 1]
            momentum = MOMENTUM_ANTICORRELATED
        head, _, tail = spec.partition(':')
        try:
            if head == 'c3':
                return cls.cluster_c3(cfg, _parse_phase(tail) if tail else math.pi)
            if head == 'xi4':
                phi_0i, phi_1s = (_parse_phase(t) for t in tail.split(','))
                return cls.xi4(cfg, phi_0i, phi_1s)
            n_text, _, m_text = head.partition('x')
            n_signal, n_idler = int(n_text), int(m_text)
            phases = {'s': None, 'i': None}
            for part in filter(None, tail.split(';')):
                arm, _, values = part.partition('=')
                arm = arm.strip()
                if arm not in phases:
                    raise ConfigurationError(f"invalid sector spec '{text}': unknown arm '{arm}', expected s or i")
                phases[arm] = tuple(_parse_phase(v) for v in values.split(','))
            return cls.uniform(cfg, n_signal, n_idler, phases['s'], phases['i'], momentum)
        except (ValueError, KeyError) as e:
            raise ConfigurationError(f"invalid sector spec '{text}': {e}") from e

    def to_dict(self):
        """Convert sector configuration to dictionary."""
        return {
            'n_signal': self.n_signal,
            'n_idler': self.n_idler,
            'signal_boundaries': list(self.signal_boundaries),
            'idler_boundaries': list(self.idler_boundaries),
            'signal_phases': list(self.signal_phases),
            'idler_phases': list(self.idler_phases),
            'momentum': self.momentum,
        }


@dataclass(frozen=True)
class SectorCoherence:
    """Weighted average of exp(i*phi) over one (signal, idler) sector block.

    ``empty`` marks a block with no grid nodes; its value and weight are 0.
    """

    region: tuple
    value: complex
    weight: float
    empty: bool = False

    @property
    def visibility(self):
        return abs(self.value)

    def to_dict(self):
        return {
            'region': list(self.region),
            'value': [float(self.value.real), float(self.value.imag)],
            'visibility': self.visibility,
            'weight': self.weight,
            'empty': self.empty,
        }
