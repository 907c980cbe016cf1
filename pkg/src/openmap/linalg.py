"""Dense complex linear algebra on the joint system-environment space.

Joint basis index convention (used everywhere in the package)::

    index(i, alpha) = i * N + alpha

with ``i`` the system label (``0 <= i < n``) and ``alpha`` the environment
label (``0 <= alpha < N``).  Units have hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class HilbertSpec:
    """Dimensions of the system (``n``) and environment (``N``) factors."""

    n: int
    N: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.N) != self.N or self.n < 1 or self.N < 1:
            raise DimensionError(f"invalid Hilbert dimensions n={self.n}, N={self.N}")

    @property
    def dim(self) -> int:
        return self.n * self.N

    def index(self, i: int, alpha: int) -> int:
        return i * self.N + alpha


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    out = np.asarray(a, dtype=complex)
    if out.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {out.shape}")
    return out


def _require_square(a: np.ndarray, name: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")


def hermiticity_error(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and hermiticity_error(a) < tol


def kron(a, b) -> np.ndarray:
    """Kronecker product of two square matrices, ``(A x B)[i*p+k, j*p+l] = A[i,j] B[k,l]``."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    _require_square(a, "A")
    _require_square(b, "B")
    return np.kron(a, b)


def lift_system(op, spec: HilbertSpec) -> np.ndarray:
    """``op (x) I_E``."""
    return kron(op, np.eye(spec.N))


def lift_env(op, spec: HilbertSpec) -> np.ndarray:
    """``I_S (x) op``."""
    return kron(np.eye(spec.n), op)


def _check_joint(rho: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    rho = as_matrix(rho, "rho")
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionError(
            f"joint matrix has shape {rho.shape}, expected {(spec.dim, spec.dim)} "
            f"for n={spec.n}, N={spec.N}"
        )
    return rho


def partial_trace_env(rho, spec: HilbertSpec) -> np.ndarray:
    """Trace out the environment: ``out[i1, i2] = sum_g rho[i1*N+g, i2*N+g]``."""
    rho = _check_joint(rho, spec)
    return np.einsum("igjg->ij", rho.reshape(spec.n, spec.N, spec.n, spec.N))


def partial_trace_sys(rho, spec: HilbertSpec) -> np.ndarray:
    """Trace out the system, leaving the ``N x N`` environment state."""
    rho = _check_joint(rho, spec)
    return np.einsum("iaib->ab", rho.reshape(spec.n, spec.N, spec.n, spec.N))


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"commutator of shapes {a.shape} and {b.shape}")
    _require_square(a, "A")
    return a @ b - b @ a


def commutator_norm(a, b) -> float:
    """Frobenius norm of ``AB - BA``."""
    return float(np.linalg.norm(commutator(a, b)))


def unitary_from_hamiltonian(h, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for Hermitian ``H`` via its eigendecomposition."""
    h = as_matrix(h, "H")
    _require_square(h, "H")
    if hermiticity_error(h) >= HERMITIAN_TOL:
        raise ContractError(
            f"generator is not Hermitian (max deviation {hermiticity_error(h):.3e})"
        )
    if dt == 0:
        return np.eye(h.shape[0], dtype=complex)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


class Propagator:
    """Cached spectral decomposition of a time-independent joint Hamiltonian.

    When ``H`` has no matrix elements between different system basis states
    (pure-dephasing couplings), each ``N x N`` environment block is
    diagonalized separately; this is exact and much cheaper than a full
    ``nN x nN`` decomposition.  Instances are read-only after construction
    and can be shared between threads.
    """

    def __init__(self, h, spec: HilbertSpec):
        h = _check_joint(h, spec)
        if hermiticity_error(h) >= HERMITIAN_TOL:
            raise ContractError("total Hamiltonian is not Hermitian")
        self.spec = spec
        n, N = spec.n, spec.N
        blocks = h.reshape(n, N, n, N).transpose(0, 2, 1, 3)
        offdiag = blocks.copy()
        offdiag[np.arange(n), np.arange(n)] = 0
        self.system_block_diagonal = n > 1 and not np.any(offdiag)
        if self.system_block_diagonal:
            eig = [np.linalg.eigh(blocks[i, i]) for i in range(n)]
            self._w = [w for w, _ in eig]
            self._v = [v for _, v in eig]
        else:
            w, v = np.linalg.eigh(h)
            self._w = [w]
            self._v = [v]

    def _phases(self, w, dt):
        return np.exp(-1j * w * dt)

    def unitary(self, dt: float) -> np.ndarray:
        """Full ``exp(-i H dt)``."""
        dim = self.spec.dim
        if dt == 0:
            return np.eye(dim, dtype=complex)
        if not self.system_block_diagonal:
            v = self._v[0]
            return (v * self._phases(self._w[0], dt)) @ v.conj().T
        N = self.spec.N
        u = np.zeros((dim, dim), dtype=complex)
        for i, (w, v) in enumerate(zip(self._w, self._v)):
            u[i * N:(i + 1) * N, i * N:(i + 1) * N] = (v * self._phases(w, dt)) @ v.conj().T
        return u

    def apply(self, dt: float, x) -> np.ndarray:
        """``exp(-i H dt) @ x`` for a vector or a stack of column vectors."""
        x = np.asarray(x, dtype=complex)
        if dt == 0:
            return x.copy()
        if not self.system_block_diagonal:
            v = self._v[0]
            y = v.conj().T @ x
            ph = self._phases(self._w[0], dt)
            y = (ph[:, None] * y) if y.ndim == 2 else ph * y
            return v @ y
        N = self.spec.N
        out = np.empty_like(x)
        for i, (w, v) in enumerate(zip(self._w, self._v)):
            sl = slice(i * N, (i + 1) * N)
            y = v.conj().T @ x[sl]
            ph = self._phases(w, dt)
            y = (ph[:, None] * y) if y.ndim == 2 else ph * y
            out[sl] = v @ y
        return out

    def evolve(self, rho, dt: float) -> np.ndarray:
        """``U rho U^dagger``."""
        rho = _check_joint(rho, self.spec)
        if dt == 0:
            return rho.copy()
        half = self.apply(dt, rho)
        return self.apply(dt, half.conj().T).conj().T
