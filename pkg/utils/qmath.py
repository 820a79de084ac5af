"""
Small dense Hilbert-space toolkit.

Tensor products, partial traces, fidelities and the named target states of
the two-photon source. Every module that builds multi-qubit objects uses the
ordering fixed here.
"""
import string
from math import prod

import numpy as np
from scipy import linalg

from models.quantum import DensityMatrix, Ket, Operator, NORM_TOLERANCE
from utils.errors import UsageError

# Global qubit ordering, most significant first
QUBIT_ORDER = (
    'polarization_signal',
    'polarization_idler',
    'momentum_signal',
    'momentum_idler',
)

IMAGINARY_TOLERANCE = 1e-12

TARGET_NAMES = ('bell_phi+', 'bell_phi-', 'c3', 'xi4', 'delta+', 'delta-')

SQRT_HALF = 1 / np.sqrt(2)


def normalized(ket):
    """Return ``ket`` unchanged after asserting unit norm."""
    if not ket.is_normalized(NORM_TOLERANCE):
        raise UsageError(f"ket is not normalized (norm {ket.norm():.15g})")
    return ket


def tensor(a, b):
    """Kronecker product with the first argument as the most significant index."""
    if type(a) is not type(b):
        raise UsageError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    dims = a.subsystem_dims + b.subsystem_dims
    if isinstance(a, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes), dims)
    if isinstance(a, DensityMatrix):
        return DensityMatrix.from_matrix(np.kron(a.entries, b.entries), dims)
    if isinstance(a, Operator):
        return Operator(np.kron(a.entries, b.entries), dims)
    raise UsageError(f"unsupported kind {type(a).__name__}")


def tensor_all(*items):
    result = items[0]
    for item in items[1:]:
        result = tensor(result, item)
    return result


def partial_trace(rho, subsystem_dims, keep):
    """Trace out every subsystem whose index is not in ``keep``."""
    dims = tuple(int(d) for d in subsystem_dims)
    if prod(dims) != rho.dim:
        raise UsageError(f"subsystem dims {dims} do not match state dim {rho.dim}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise UsageError(f"keep indices {keep} outside {len(dims)} subsystems")

    n = len(dims)
    rows = list(string.ascii_letters[:n])
    cols = list(string.ascii_letters[n:2 * n])
    for index in range(n):
        if index not in keep:
            cols[index] = rows[index]
    out = ''.join(rows[i] for i in keep) + ''.join(cols[i] for i in keep)
    reduced = np.einsum(''.join(rows) + ''.join(cols) + '->' + out, rho.entries.reshape(dims + dims))

    kept_dims = tuple(dims[i] for i in keep) or (1,)
    kept_dim = prod(kept_dims)
    return DensityMatrix.from_matrix(reduced.reshape(kept_dim, kept_dim), kept_dims)


def subsystem_projector(subsystem_dims, subsystem, outcome):
    """|outcome><outcome| on one subsystem, identity on the others."""
    dims = tuple(subsystem_dims)
    if not 0 <= outcome < dims[subsystem]:
        raise UsageError(f"outcome {outcome} outside subsystem {subsystem} of dim {dims[subsystem]}")
    factors = [np.eye(d) for d in dims]
    factors[subsystem] = np.outer(np.eye(dims[subsystem])[outcome], np.eye(dims[subsystem])[outcome])
    matrix = factors[0]
    for factor in factors[1:]:
        matrix = np.kron(matrix, factor)
    return Operator(matrix, dims)


def conditional_state(rho, outcome, subsystem=2, keep=(0, 1)):
    """State of ``keep`` after selecting ``outcome`` on ``subsystem`` (a slit on one sector)."""
    dims = rho.subsystem_dims
    projector = subsystem_projector(dims, subsystem, outcome).entries
    selected = projector @ rho.entries @ projector
    probability = np.trace(selected).real
    if probability <= 0:
        raise UsageError(f"outcome {outcome} on subsystem {subsystem} has zero probability")
    return partial_trace(DensityMatrix.from_matrix(selected / probability, dims), dims, keep)


def fidelity(rho, target):
    """Overlap <psi|rho|psi> of a state with a normalized target ket."""
    if rho.dim != target.dim:
        raise UsageError(f"state dim {rho.dim} does not match target dim {target.dim}")
    normalized(target)
    value = np.vdot(target.amplitudes, rho.entries @ target.amplitudes)
    if abs(value.imag) > IMAGINARY_TOLERANCE:
        raise UsageError(f"fidelity has imaginary part {value.imag:.3g}")
    return float(min(max(value.real, 0.0), 1.0))


def sqrt_psd(matrix):
    """Principal square root of a Hermitian positive semidefinite matrix."""
    values, vectors = linalg.eigh(matrix)
    values = np.clip(values, 0, None)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def state_fidelity(rho, sigma):
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dim != sigma.dim:
        raise UsageError(f"dims {rho.dim} and {sigma.dim} differ")
    root = sqrt_psd(rho.entries)
    inner = root @ sigma.entries @ root
    inner = (inner + inner.conj().T) / 2
    value = np.sum(np.sqrt(np.clip(linalg.eigvalsh(inner), 0, None))) ** 2
    return float(min(value, 1.0))


def trace_distance(a, b):
    """Half the trace norm of the difference; accepts arrays or DensityMatrix."""
    left = getattr(a, 'entries', a)
    right = getattr(b, 'entries', b)
    difference = np.asarray(left) - np.asarray(right)
    difference = (difference + difference.conj().T) / 2
    return float(0.5 * np.sum(np.abs(linalg.eigvalsh(difference))))


def purity(rho):
    return float(np.real(np.trace(rho.entries @ rho.entries)))


def concurrence(rho):
    """Wootters concurrence of a two-qubit state."""
    if rho.dim != 4:
        raise UsageError("concurrence is defined for two qubits only")
    sigma_y = np.array([[0, -1j], [1j, 0]])
    flip = np.kron(sigma_y, sigma_y)
    tilde = flip @ rho.entries.conj() @ flip
    values = np.linalg.eigvals(rho.entries @ tilde)
    roots = np.sort(np.sqrt(np.clip(values.real, 0, None)))[::-1]
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


def psd_project(matrix, subsystem_dims=None):
    """Clip negative eigenvalues at zero and renormalize to unit trace."""
    matrix = np.asarray(matrix, dtype=complex)
    matrix = (matrix + matrix.conj().T) / 2
    values, vectors = linalg.eigh(matrix)
    values = np.clip(values, 0, None)
    if values.sum() <= 0:
        raise UsageError("matrix has no positive part to project onto")
    values = values / values.sum()
    return DensityMatrix.from_matrix((vectors * values) @ vectors.conj().T, subsystem_dims)


def random_density_matrix(dim, rng, rank=None):
    """Ginibre-distributed random state of the given rank."""
    rank = rank or dim
    ginibre = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix.from_matrix(matrix / np.trace(matrix).real)


def random_ket(dim, rng):
    amplitudes = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return Ket(amplitudes).unit()


def qubit(index):
    return Ket.basis(2, index)


def bell_state(sign=+1):
    """|Phi+> or |Phi-> = (|00> +/- |11>)/sqrt(2)."""
    return Ket(np.array([1, 0, 0, sign]) * SQRT_HALF, (2, 2))


def delta_state(sign, phi_t):
    """|Delta+/-(phi_t)> = (|00> +/- exp(-/+ i phi_t)|11>)/sqrt(2)."""
    return Ket(np.array([1, 0, 0, sign * np.exp(-1j * sign * phi_t)]) * SQRT_HALF, (2, 2))


def _momentum(n, m):
    return tensor(qubit(n), qubit(m))


def target_state(name, **params):
    """Closed-form target kets.

    ``c3`` uses (polarization-signal, polarization-idler, momentum-signal).
    ``xi4`` takes ``phi_0i`` and ``phi_1s`` and is the output of the
    controlled-phase construction with phi_0s = -phi_0i and
    phi_1i = pi - phi_1s; momentum qubits are ordered (signal, idler).
    ``delta+``/``delta-`` take ``phi_t``.
    """
    if name == 'bell_phi+':
        return bell_state(+1)
    if name == 'bell_phi-':
        return bell_state(-1)
    if name == 'c3':
        amplitudes = (tensor(bell_state(+1), qubit(0)).amplitudes
                      - tensor(bell_state(-1), qubit(1)).amplitudes) * SQRT_HALF
        return Ket(amplitudes, (2, 2, 2))
    if name in ('delta+', 'delta-'):
        if 'phi_t' not in params:
            raise UsageError(f"target {name} needs phi_t")
        return delta_state(+1 if name == 'delta+' else -1, params['phi_t'])
    if name == 'xi4':
        missing = {'phi_0i', 'phi_1s'} - set(params)
        if missing:
            raise UsageError(f"target xi4 needs {sorted(missing)}")
        phi_t = params['phi_0i'] + params['phi_1s']
        branches = (
            tensor(bell_state(+1), _momentum(0, 0)).amplitudes
            - tensor(bell_state(-1), _momentum(1, 1)).amplitudes
            + np.exp(1j * phi_t) * tensor(delta_state(+1, phi_t), _momentum(1, 0)).amplitudes
            - np.exp(-1j * phi_t) * tensor(delta_state(-1, phi_t), _momentum(0, 1)).amplitudes
        )
        return Ket(branches / 2, (2, 2, 2, 2))
    raise UsageError(f"unknown target state '{name}'; expected one of {', '.join(TARGET_NAMES)}")
