"""
Two-qubit tomography protocol and reconstruction result.
"""
from dataclasses import dataclass, field

import numpy as np

from utils.errors import UsageError

DUAL_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class TomoProtocol:
    """Ordered projector set P_mu with its dual basis Gamma_mu.

    ``gram`` is G[mu, nu] = Tr[P_mu P_nu]; the dual basis is
    Gamma_mu = sum_nu (G^-1)[mu, nu] P_nu so that Tr[P_mu Gamma_nu] = delta.
    """

    settings: tuple
    projectors: np.ndarray   # (n, 4, 4)
    dual_basis: np.ndarray   # (n, 4, 4)
    gram: np.ndarray         # (n, n)

    def __post_init__(self):
        for name in ('projectors', 'dual_basis', 'gram'):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(self, 'settings', tuple(self.settings))
        if not len(self.settings) == len(self.projectors) == len(self.dual_basis):
            raise UsageError("settings, projectors and dual basis must have equal length")

    def __len__(self):
        return len(self.settings)

    @property
    def labels(self):
        return [s.label for s in self.settings]

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError as e:
            raise UsageError(f"setting '{label}' is not part of the protocol") from e

    def dual_traces(self):
        """Tr[Gamma_mu], the weights of the identity decomposition."""
        return np.real(np.trace(self.dual_basis, axis1=1, axis2=2))

    def probabilities(self, rho):
        """p_mu = Tr[rho P_mu] for a 4x4 state."""
        entries = getattr(rho, 'entries', rho)
        return np.real(np.einsum('ij,mji->m', entries, self.projectors))

    def to_dict(self):
        return {
            'settings': [s.to_dict() for s in self.settings],
            'gram_condition': float(np.linalg.cond(self.gram)),
        }


@dataclass
class TomoResult:
    """Outcome of a maximum-likelihood reconstruction."""

    rho_linear: np.ndarray
    rho_mle: object
    log_likelihood: float
    iterations: int
    converged: bool
    likelihood_trace: list = field(default_factory=list)
    fidelities: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    normalization: float = None
    stalled: bool = False

    def to_dict(self):
        """Convert result to the JSON report object."""
        linear = np.asarray(self.rho_linear)
        return {
            'rho_linear': {
                'dim': int(linear.shape[0]),
                'entries': [[[float(z.real), float(z.imag)] for z in row] for row in linear],
            },
            'rho_mle': self.rho_mle.to_dict(),
            'log_likelihood': self.log_likelihood,
            'iterations': self.iterations,
            'converged': self.converged,
            'stalled': self.stalled,
            'normalization': self.normalization,
            'fidelities': {
                name: {'value': value, **self.errors.get(name, {})}
                for name, value in sorted(self.fidelities.items())
            },
            'metrics': dict(sorted(self.metrics.items())),
        }
