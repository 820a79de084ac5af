"""
Hilbert-space value types: kets, operators and density matrices.

All three wrap a dense complex numpy array that is made read-only on
construction. ``subsystem_dims`` records the tensor factorization so that
partial traces and sector selections can find the right axes; the global
factor ordering is polarization-signal, polarization-idler,
momentum-signal, momentum-idler.
"""
from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy import linalg

from utils.errors import UsageError

HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-10
EIGENVALUE_TOLERANCE = 1e-10
NORM_TOLERANCE = 1e-12


def _readonly(array):
    array.setflags(write=False)
    return array


def _resolve_dims(dim, subsystem_dims):
    if subsystem_dims is None:
        return (dim,)
    dims = tuple(int(d) for d in subsystem_dims)
    if any(d < 1 for d in dims) or prod(dims) != dim:
        raise UsageError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


@dataclass(frozen=True, eq=False)
class Ket:
    """State vector in a finite-dimensional Hilbert space."""

    amplitudes: np.ndarray
    subsystem_dims: tuple = field(default=None)

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size == 0:
            raise UsageError("a ket needs at least one amplitude")
        object.__setattr__(self, 'amplitudes', _readonly(amplitudes))
        object.__setattr__(self, 'subsystem_dims', _resolve_dims(amplitudes.size, self.subsystem_dims))

    @classmethod
    def basis(cls, dim, index, subsystem_dims=None):
        """Computational basis vector |index> of dimension ``dim``."""
        if not 0 <= index < dim:
            raise UsageError(f"basis index {index} outside dimension {dim}")
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes, subsystem_dims)

    @property
    def dim(self):
        return self.amplitudes.size

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def is_normalized(self, tolerance=NORM_TOLERANCE):
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0) < tolerance

    def unit(self):
        """Return the normalized copy of this ket."""
        norm = self.norm()
        if norm == 0:
            raise UsageError("cannot normalize the zero vector")
        return Ket(self.amplitudes / norm, self.subsystem_dims)

    def projector(self):
        """Return |psi><psi| as an Operator."""
        return Operator(np.outer(self.amplitudes, self.amplitudes.conj()), self.subsystem_dims)

    def density_matrix(self):
        return DensityMatrix.from_ket(self)

    def __repr__(self):
        return f'<Ket dim={self.dim} dims={self.subsystem_dims}>'

    def to_dict(self):
        """Convert ket to dictionary."""
        return {
            'dim': self.dim,
            'subsystem_dims': list(self.subsystem_dims),
            'amplitudes': [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on a finite-dimensional space."""

    entries: np.ndarray
    subsystem_dims: tuple = field(default=None)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise UsageError(f"operator entries must be square, got shape {entries.shape}")
        object.__setattr__(self, 'entries', _readonly(entries))
        object.__setattr__(self, 'subsystem_dims', _resolve_dims(entries.shape[0], self.subsystem_dims))

    @classmethod
    def identity(cls, dim, subsystem_dims=None):
        return cls(np.eye(dim, dtype=complex), subsystem_dims)

    @property
    def dim(self):
        return self.entries.shape[0]

    def dagger(self):
        return Operator(self.entries.conj().T, self.subsystem_dims)

    def trace(self):
        return complex(np.trace(self.entries))

    def is_hermitian(self, tolerance=HERMITIAN_TOLERANCE):
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tolerance)

    def is_projector(self, tolerance=HERMITIAN_TOLERANCE):
        """True when P = P† and P² = P within ``tolerance``."""
        squared = self.entries @ self.entries
        return self.is_hermitian(tolerance) and bool(np.max(np.abs(squared - self.entries)) <= tolerance)

    def expectation(self, rho):
        """Real part of Tr[rho A]."""
        if rho.dim != self.dim:
            raise UsageError(f"operator dim {self.dim} does not match state dim {rho.dim}")
        return float(np.real(np.sum(rho.entries * self.entries.T)))

    def __repr__(self):
        return f'<Operator dim={self.dim} dims={self.subsystem_dims}>'


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator.

    The invariants are checked on construction; a matrix that violates them
    raises ``UsageError`` naming the failed check.
    """

    entries: np.ndarray
    subsystem_dims: tuple = field(default=None)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise UsageError(f"density matrix must be square, got shape {entries.shape}")
        object.__setattr__(self, 'subsystem_dims', _resolve_dims(entries.shape[0], self.subsystem_dims))
        if np.max(np.abs(entries - entries.conj().T)) > HERMITIAN_TOLERANCE:
            raise UsageError("density matrix is not Hermitian")
        trace = np.trace(entries)
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise UsageError(f"density matrix trace is {trace.real:.12g}, expected 1")
        if linalg.eigvalsh(entries)[0] < -EIGENVALUE_TOLERANCE:
            raise UsageError("density matrix has a negative eigenvalue")
        object.__setattr__(self, 'entries', _readonly(entries))

    @classmethod
    def from_ket(cls, ket):
        return cls(np.outer(ket.amplitudes, ket.amplitudes.conj()), ket.subsystem_dims)

    @classmethod
    def from_matrix(cls, matrix, subsystem_dims=None, normalize=False):
        """Build from an arbitrary matrix, Hermitizing it first.

        With ``normalize`` the trace is divided out; the eigenvalue check
        still applies.
        """
        matrix = np.asarray(matrix, dtype=complex)
        matrix = (matrix + matrix.conj().T) / 2
        if normalize:
            trace = np.trace(matrix).real
            if trace <= 0:
                raise UsageError("cannot normalize a matrix with non-positive trace")
            matrix = matrix / trace
        return cls(matrix, subsystem_dims)

    @classmethod
    def maximally_mixed(cls, dim, subsystem_dims=None):
        return cls(np.eye(dim, dtype=complex) / dim, subsystem_dims)

    @property
    def dim(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        return linalg.eigvalsh(self.entries)

    def element(self, row, col):
        return complex(self.entries[row, col])

    def as_operator(self):
        return Operator(self.entries, self.subsystem_dims)

    def __repr__(self):
        return f'<DensityMatrix dim={self.dim} dims={self.subsystem_dims}>'

    def to_dict(self):
        """Convert density matrix to the JSON interchange object."""
        return {
            'dim': self.dim,
            'subsystem_dims': list(self.subsystem_dims),
            'entries': [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }

    @classmethod
    def from_dict(cls, payload):
        """Inverse of ``to_dict``."""
        try:
            dim = int(payload['dim'])
            rows = payload['entries']
            matrix = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"malformed density matrix object: {e}") from e
        if matrix.shape != (dim, dim):
            raise UsageError(f"entries shape {matrix.shape} does not match dim {dim}")
        return cls(matrix, payload.get('subsystem_dims'))
