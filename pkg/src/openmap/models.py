"""Hamiltonian factories for system + environment + coupling models.

Two concrete models are provided:

* ``dephasing``: spin ``j`` with ``H_S = w0 Jz``, a bath of truncated
  oscillators ``H_E = sum_k w_k a_k^dag a_k`` and the pure-dephasing coupling
  ``H_SE = Jz (x) sum_k (g_k a_k + g_k^* a_k^dag)``.
* ``jsquared``: ``H_S = w Jz``, ``H_E = beta b^dag b`` and
  ``H_SE = eta J^2 (x) (b^dag + b)``, whose coupling is proportional to the
  identity inside the spin multiplet.

Arbitrary triples go through :func:`build_custom_model`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import DimensionError, ParameterError, ValidationError
from .linalg import (
    HilbertSpec,
    Propagator,
    as_matrix,
    hermiticity_error,
    HERMITIAN_TOL,
    lift_env,
    lift_system,
)

DEFAULT_MODES = ((1.0, 0.4), (math.sqrt(2.0), 0.4), (math.sqrt(5.0), 0.4))

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the built-in models.

    ``modes`` holds ``(omega_k, g_k)`` pairs for the dephasing bath; ``omega``
    is the system frequency (``w0`` for dephasing, ``w`` for jsquared).
    """

    variant: str = "dephasing"
    j: float = 0.5
    omega: float = 1.0
    modes: tuple = DEFAULT_MODES
    beta: float = 1.0
    eta: float = 0.3
    n_max: int = 5

    def __post_init__(self):
        if self.variant not in ("dephasing", "jsquared", "custom"):
            raise ParameterError(f"unknown model variant {self.variant!r}")
        _check_spin(self.j)
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max}")
        for name in ("omega", "beta", "eta"):
            if not _is_real(getattr(self, name)):
                raise ParameterError(f"{name} must be real, got {getattr(self, name)!r}")
        for w, _g in self.modes:
            if not _is_real(w):
                raise ParameterError(f"mode frequency must be real, got {w!r}")


def _is_real(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def _check_spin(j) -> Fraction:
    try:
        twice = Fraction(j) * 2
    except (TypeError, ValueError):
        raise ParameterError(f"spin j must be a half-integer, got {j!r}") from None
    if twice.denominator != 1 or twice < 1:
        raise ParameterError(f"spin j must be one of 1/2, 1, 3/2, ..., got {j!r}")
    return twice / 2


@dataclass(frozen=True, eq=False)
class HamiltonianTriple:
    """``H_S``, ``H_E``, ``H_SE`` and the assembled joint Hamiltonian."""

    spec: HilbertSpec
    H_S: np.ndarray
    H_E: np.ndarray
    H_SE: np.ndarray
    H_total: np.ndarray
    label: str = "custom"
    params: ModelParams | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def N(self) -> int:
        return self.spec.N

    @cached_property
    def H_S_lifted(self) -> np.ndarray:
        return lift_system(self.H_S, self.spec)

    @cached_property
    def H_E_lifted(self) -> np.ndarray:
        return lift_env(self.H_E, self.spec)

    @cached_property
    def propagator(self) -> Propagator:
        """Shared spectral decomposition of ``H_total``."""
        return Propagator(self.H_total, self.spec)

    @cached_property
    def free_propagator(self) -> Propagator:
        """Spectral decomposition of the uncoupled part ``H_S + H_E``."""
        return Propagator(self.H_S_lifted + self.H_E_lifted, self.spec)


def _assemble(h_s, h_e, h_se, label, params=None) -> HamiltonianTriple:
    spec = HilbertSpec(h_s.shape[0], h_e.shape[0])
    h_total = lift_system(h_s, spec) + lift_env(h_e, spec) + h_se
    return HamiltonianTriple(spec, h_s, h_e, h_se, h_total, label, params)


def spin_ops(j) -> tuple[np.ndarray, np.ndarray]:
    """``(Jz, J^2)`` in the ``|j m>`` basis ordered ``m = j, j-1, ..., -j``."""
    jf = float(_check_spin(j))
    dim = int(round(2 * jf)) + 1
    jz = np.diag(jf - np.arange(dim)).astype(complex)
    jsq = jf * (jf + 1) * np.eye(dim, dtype=complex)
    return jz, jsq


def boson_ops(n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated ``(a, a^dag, a^dag a)`` on levels ``0..n_max``.

    The cutoff is hard: ``a^dag |n_max>`` is dropped, so ``[a, a^dag]`` has
    ``-n_max`` in its last diagonal entry.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ParameterError(f"n_max must be an integer >= 1, got {n_max!r}")
    n_max = int(n_max)
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)
    a_dag = a.conj().T.copy()
    num = np.diag(np.arange(n_max + 1)).astype(complex)
    return a, a_dag, num


def _mode_operator(op: np.ndarray, k: int, n_modes: int) -> np.ndarray:
    eye = np.eye(op.shape[0], dtype=complex)
    out = np.ones((1, 1), dtype=complex)
    for m in range(n_modes):
        out = np.kron(out, op if m == k else eye)
    return out


def build_dephasing_model(params: ModelParams) -> HamiltonianTriple:
    """Spin ``j`` coupled through ``Jz`` to a bath of truncated oscillators."""
    if len(params.modes) == 0:
        raise ParameterError("dephasing model needs at least one bath mode")
    jz, _ = spin_ops(params.j)
    a, a_dag, num = boson_ops(params.n_max)
    n_modes = len(params.modes)
    h_e = 0
    bath_coupling = 0
    for k, (w_k, g_k) in enumerate(params.modes):
        g_k = complex(g_k)
        h_e = h_e + float(w_k) * _mode_operator(num, k, n_modes)
        bath_coupling = bath_coupling + (
            g_k * _mode_operator(a, k, n_modes) + np.conj(g_k) * _mode_operator(a_dag, k, n_modes)
        )
    h_s = float(params.omega) * jz
    h_se = np.kron(jz, bath_coupling)
    return _assemble(h_s, h_e, h_se, "dephasing", params)


def build_jsquared_model(params: ModelParams) -> HamiltonianTriple:
    """``w Jz + beta b^dag b + eta J^2 (b^dag + b)`` with a single boson mode."""
    jz, jsq = spin_ops(params.j)
    a, a_dag, num = boson_ops(params.n_max)
    h_s = float(params.omega) * jz
    h_e = float(params.beta) * num
    h_se = float(params.eta) * np.kron(jsq, a_dag + a)
    return _assemble(h_s, h_e, h_se, "jsquared", params)


def build_custom_model(h_s, h_e, h_se, label: str = "custom") -> HamiltonianTriple:
    """Validate a user-supplied triple and assemble ``H_total``."""
    parts = {}
    for name, op in (("H_S", h_s), ("H_E", h_e), ("H_SE", h_se)):
        try:
            m = as_matrix(op, name)
        except DimensionError as exc:
            raise ValidationError(str(exc)) from None
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"{name} must be square, got shape {m.shape}")
        err = hermiticity_error(m)
        if err >= HERMITIAN_TOL:
            raise ValidationError(f"{name} is not Hermitian (max deviation {err:.3e})")
        parts[name] = m
    n, N = parts["H_S"].shape[0], parts["H_E"].shape[0]
    if parts["H_SE"].shape != (n * N, n * N):
        raise ValidationError(
            f"H_SE has shape {parts['H_SE'].shape}, expected {(n * N, n * N)} from H_S and H_E"
        )
    return _assemble(parts["H_S"], parts["H_E"], parts["H_SE"], label)


def build_model(params: ModelParams) -> HamiltonianTriple:
    if params.variant == "dephasing":
        return build_dephasing_model(params)
    if params.variant == "jsquared":
        return build_jsquared_model(params)
    raise ParameterError("custom models are built with build_custom_model")


def counterexample_model(coupling: float = 0.4) -> HamiltonianTriple:
    """Two qubits with ``H_S = H_E = sigma_z`` and ``H_SE = g sigma_x (x) sigma_x``."""
    return build_custom_model(SIGMA_Z, SIGMA_Z, coupling * np.kron(SIGMA_X, SIGMA_X), "counterexample")


def rotate_to_env_eigenbasis(model: HamiltonianTriple, d=None):
    """Re-express ``model`` (and optionally env weights ``d``) in the ``H_E`` eigenbasis.

    Returns ``(rotated_model, rotated_d, V)`` with ``H_E = V diag V^dag``.  A
    model whose ``H_E`` is already diagonal is returned unchanged with
    ``V = I``.
    """
    h_e = model.H_E
    if not np.any(h_e - np.diag(np.diag(h_e))):
        v = np.eye(model.N, dtype=complex)
        return model, (None if d is None else np.asarray(d, dtype=complex)), v
    _, v = np.linalg.eigh(h_e)
    big_v = np.kron(np.eye(model.n), v)
    h_e_rot = v.conj().T @ h_e @ v
    h_e_rot = np.diag(np.real(np.diag(h_e_rot))).astype(complex)
    h_se_rot = big_v.conj().T @ model.H_SE @ big_v
    h_se_rot = 0.5 * (h_se_rot + h_se_rot.conj().T)
    rotated = _assemble(model.H_S, h_e_rot, h_se_rot, model.label, model.params)
    d_rot = None if d is None else v.conj().T @ np.asarray(d, dtype=complex) @ v
    return rotated, d_rot, v
