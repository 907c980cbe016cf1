"""Exact joint evolution, reduced states and the super-matrix dynamical map.

The reduced map sends ``rho_S(t0)`` to ``rho_S(t)`` through the rank-4 tensor

    C[i1, i2, j1, j2] = sum_{a1, a2, g} d[a1, a2] U[(j1 g), (i1 a1)] conj(U[(j2 g), (i2 a2)])

so that ``rho_S(t)[j1, j2] = sum_{i1, i2} rho_S(t0)[i1, i2] C[i1, i2, j1, j2]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, ValidationError
from .linalg import HilbertSpec, as_matrix, hermiticity_error, partial_trace_env, partial_trace_sys
from .models import HamiltonianTriple

STATE_TOL = 1e-12


def check_density(d, N: int | None = None, name: str = "environment weights") -> np.ndarray:
    """Validate a density matrix (Hermitian, PSD, unit trace)."""
    d = as_matrix(d, name)
    if d.shape[0] != d.shape[1] or (N is not None and d.shape[0] != N):
        raise ValidationError(f"{name} have shape {d.shape}, expected ({N}, {N})")
    if hermiticity_error(d) >= STATE_TOL:
        raise ValidationError(f"{name} are not Hermitian")
    if abs(np.trace(d) - 1) >= STATE_TOL:
        raise ValidationError(f"{name} have trace {np.trace(d).real:.15g}, expected 1")
    if np.linalg.eigvalsh(d).min() < -STATE_TOL:
        raise ValidationError(f"{name} are not positive semidefinite")
    return d


def check_env_weights(d, N: int | None = None) -> np.ndarray:
    return check_density(d, N)


@dataclass(frozen=True, eq=False)
class InitialState:
    """Product initial state ``(sum c_i1 c_i2^* |i1><i2|) (x) d``.

    ``rho_s`` may be given instead of ``c`` for a mixed system state; it must
    be a valid density matrix.
    """

    c: np.ndarray | None
    d: np.ndarray
    rho_s: np.ndarray | None = None

    def __post_init__(self):
        if self.c is None and self.rho_s is None:
            raise ValidationError("either amplitudes c or a system density rho_s is required")
        if self.c is not None:
            c = np.asarray(self.c, dtype=complex).ravel()
            if abs(np.vdot(c, c).real - 1) >= STATE_TOL:
                raise ValidationError(
                    f"amplitudes not normalized (sum |c|^2 = {np.vdot(c, c).real:.15g})"
                )
            object.__setattr__(self, "c", c)
            object.__setattr__(self, "rho_s", np.outer(c, c.conj()))
        else:
            rho = check_density(self.rho_s, name="system density entries")
            object.__setattr__(self, "rho_s", rho)
        object.__setattr__(self, "d", check_env_weights(self.d))

    @property
    def n(self) -> int:
        return self.rho_s.shape[0]

    @property
    def N(self) -> int:
        return self.d.shape[0]

    def joint(self) -> np.ndarray:
        return np.kron(self.rho_s, self.d)

    def check_against(self, model: HamiltonianTriple) -> None:
        if (self.n, self.N) != (model.n, model.N):
            raise DimensionError(
                f"state dimensions (n={self.n}, N={self.N}) do not match model "
                f"(n={model.n}, N={model.N})"
            )


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    dt: float = 0.02
    steps: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"grid step must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ParameterError(f"grid needs at least one step, got {self.steps}")

    @classmethod
    def span(cls, t0: float, t_end: float, dt: float) -> "TimeGrid":
        steps = int(round((t_end - t0) / dt))
        return cls(t0, dt, steps)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * self.steps


@dataclass(frozen=True, eq=False)
class SuperMap:
    """Reduced dynamical map from ``t0`` to ``t``; ``tensor[i1, i2, j1, j2]``."""

    t0: float
    t: float
    tensor: np.ndarray

    @property
    def n(self) -> int:
        return self.tensor.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """``(n^2, n^2)`` view with row ``(i1, i2)`` and column ``(j1, j2)``."""
        return self.tensor.reshape(self.n ** 2, self.n ** 2)

    @classmethod
    def identity(cls, n: int, t0: float = 0.0) -> "SuperMap":
        eye = np.eye(n, dtype=complex)
        return cls(t0, t0, np.einsum("ij,kl->ikjl", eye, eye))

    def then(self, later: "SuperMap") -> "SuperMap":
        """Compose with a map applied afterwards: ``later o self``."""
        if later.n != self.n:
            raise DimensionError("cannot compose maps of different system dimension")
        tensor = np.einsum("abjk,jkcd->abcd", self.tensor, later.tensor)
        return SuperMap(self.t0, later.t, tensor)


def evolve_joint(model: HamiltonianTriple, rho0, t: float, t0: float = 0.0) -> np.ndarray:
    """``U(t, t0) rho0 U(t, t0)^dagger``."""
    rho0 = as_matrix(rho0, "rho0")
    if rho0.shape != (model.spec.dim, model.spec.dim):
        raise DimensionError(f"rho0 has shape {rho0.shape}, model dimension is {model.spec.dim}")
    return model.propagator.evolve(rho0, t - t0)


def _pure_components(state: InitialState):
    """Decompose ``rho_S (x) d`` into weighted joint vectors ``sum_k p_k |v_k><v_k|``."""
    ps, vs = np.linalg.eigh(state.rho_s)
    pe, ve = np.linalg.eigh(state.d)
    weights, vectors = [], []
    for a in range(len(ps)):
        if ps[a] <= 1e-15:
            continue
        for b in range(len(pe)):
            if pe[b] <= 1e-15:
                continue
            weights.append(ps[a] * pe[b])
            vectors.append(np.kron(vs[:, a], ve[:, b]))
    return np.array(weights), np.array(vectors).T


def reduced_state(model: HamiltonianTriple, state: InitialState, t: float, t0: float = 0.0) -> np.ndarray:
    """``Tr_E[U (rho_S (x) d) U^dagger]`` at time ``t``."""
    return reduced_states(model, state, [t], t0)[0]


def reduced_states(model: HamiltonianTriple, state: InitialState, times, t0: float = 0.0) -> np.ndarray:
    """Reduced states at several times, shape ``(len(times), n, n)``.

    Uses the pure-state decomposition of the initial product so that only
    matrix-vector work with the cached propagator is needed per time.
    """
    state.check_against(model)
    n, N = model.n, model.N
    weights, vectors = _pure_components(state)
    out = np.empty((len(times), n, n), dtype=complex)
    for k, t in enumerate(times):
        w = model.propagator.apply(t - t0, vectors)
        w = w.T.reshape(len(weights), n, N)
        out[k] = np.einsum("p,pig,pjg->ij", weights, w, w.conj())
    return out


def super_matrix(model: HamiltonianTriple, d, t: float, t0: float = 0.0) -> SuperMap:
    """Build the reduced map ``C(t, t0)`` for environment weights ``d``."""
    d = check_env_weights(d, model.N)
    n, N = model.n, model.N
    if t == t0:
        return SuperMap.identity(n, t0)
    u = model.propagator.unitary(t - t0).reshape(n, N, n, N)
    tensor = np.einsum("ab,jgia,kglb->iljk", d, u, u.conj(), optimize=True)
    return SuperMap(t0, t, tensor)


def apply_map(smap: SuperMap, state) -> np.ndarray:
    """Apply ``smap`` to amplitudes ``c`` (1-D) or a system density matrix (2-D)."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        state = np.outer(state, state.conj())
    if state.shape != (smap.n, smap.n):
        raise DimensionError(f"state of shape {state.shape} does not match map dimension {smap.n}")
    return np.einsum("ab,abjk->jk", state, smap.tensor)


def _joint_env_state(model: HamiltonianTriple, state) -> np.ndarray:
    if isinstance(state, InitialState):
        state.check_against(model)
        return state.joint()
    d = check_env_weights(state, model.N)
    return np.kron(np.eye(model.n) / model.n, d)


def interaction_picture_coupling(model: HamiltonianTriple, tau: float) -> np.ndarray:
    """``exp(+i H0 tau) H_SE exp(-i H0 tau)`` with ``H0 = H_S + H_E``."""
    u0 = model.free_propagator.unitary(tau)
    return u0.conj().T @ model.H_SE @ u0


def env_correlation(model: HamiltonianTriple, state, t: float, t_prime: float) -> complex:
    """Coupling correlation ``Tr[rho(t0) H_SE(t) H_SE(t')]`` in the interaction picture.

    ``state`` is an :class:`InitialState`; a bare weight matrix ``d`` is
    paired with the maximally mixed system state.
    """
    rho0 = _joint_env_state(model, state)
    a = interaction_picture_coupling(model, t)
    b = interaction_picture_coupling(model, t_prime)
    return complex(np.trace(rho0 @ a @ b))


def markov_condition_check(model: HamiltonianTriple, state: InitialState, t: float, t0: float = 0.0):
    """Return ``(correlation_ratio, env_drift)`` at time ``t``.

    ``correlation_ratio = |rho_SE - rho_S (x) rho_E| / |rho_SE|`` measures the
    system-environment correlations built up by the coupling and
    ``env_drift = |rho_E(t) - rho_E(t0)|`` how far the environment moved
    (Frobenius norms).
    """
    state.check_against(model)
    rho = evolve_joint(model, state.joint(), t, t0)
    spec: HilbertSpec = model.spec
    rho_s = partial_trace_env(rho, spec)
    rho_e = partial_trace_sys(rho, spec)
    ratio = np.linalg.norm(rho - np.kron(rho_s, rho_e)) / np.linalg.norm(rho)
    drift = np.linalg.norm(rho_e - state.d)
    return float(ratio), float(drift)
