"""Projection-operator (Nakajima-Zwanzig) machinery on the joint space.

The projector keeps a set of environment basis states and acts from the left
only::

    P rho = sum_{k in kept} |g_k><g_k| rho,      Q rho = rho - P rho

so ``P rho`` is in general not Hermitian; norms below are Frobenius norms of
the raw projected matrices.  The environment basis is expected to be the
H_E eigenbasis (see :func:`openmap.models.rotate_to_env_eigenbasis`).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import InitialState, TimeGrid, evolve_joint
from .errors import DimensionError, ParameterError
from .linalg import HilbertSpec
from .models import HamiltonianTriple

log = logging.getLogger(__name__)

MAX_STEP = 0.005
FD_STEP = 1e-5
LOCAL_TOL = 1e-6
DRIFT_WARN = 1e-6


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    spec: HilbertSpec
    kept: tuple
    mask: np.ndarray  # True on joint rows whose environment index is kept

    def P(self, rho: np.ndarray) -> np.ndarray:
        return np.where(self.mask[:, None], rho, 0)

    def Q(self, rho: np.ndarray) -> np.ndarray:
        return np.where(self.mask[:, None], 0, rho)

    @property
    def p_matrix(self) -> np.ndarray:
        """The left-multiplying projector ``I_S (x) sum_k |g_k><g_k|``."""
        return np.diag(self.mask.astype(complex))


def build_projectors(spec: HilbertSpec, kept) -> ProjectorPair:
    kept = tuple(sorted({int(k) for k in kept}))
    if not kept:
        raise ParameterError("at least one environment state must be kept")
    if kept[0] < 0 or kept[-1] >= spec.N:
        raise ParameterError(f"kept environment indices {kept} out of range 0..{spec.N - 1}")
    env_mask = np.zeros(spec.N, dtype=bool)
    env_mask[list(kept)] = True
    return ProjectorPair(spec, kept, np.tile(env_mask, spec.n))


def liouville_rhs(model: HamiltonianTriple, rho) -> np.ndarray:
    """``-i [H, rho]``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != model.H_total.shape:
        raise DimensionError(f"rho has shape {rho.shape}, expected {model.H_total.shape}")
    h = model.H_total
    return -1j * (h @ rho - rho @ h)


def coupling_leak_norm(model: HamiltonianTriple, pair: ProjectorPair) -> float:
    """``|P H_SE Q|`` as a matrix norm; zero when the coupling never leaves the kept sector."""
    p = pair.p_matrix
    q = np.eye(len(p)) - p
    return float(np.linalg.norm(p @ model.H_SE @ q))


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _substeps(dt: float, max_step: float) -> int:
    return max(1, math.ceil(dt / max_step - 1e-9))


@dataclass
class ProjectedTrajectory:
    times: np.ndarray
    p_rho: np.ndarray
    q_rho: np.ndarray
    max_deviation: float
    warning: str | None = None


def propagate_projected(model: HamiltonianTriple, state: InitialState, pair: ProjectorPair,
                        grid: TimeGrid, max_step: float = MAX_STEP) -> ProjectedTrajectory:
    """Integrate the coupled equations for ``P rho`` and ``Q rho`` with fixed-step RK4.

    ``max_deviation`` is the largest Frobenius distance between
    ``P rho + Q rho`` and the exact unitary evolution on the grid.
    """
    state.check_against(model)
    P, Q = pair.P, pair.Q

    def rhs(y):
        p_part, q_part = y
        lp = liouville_rhs(model, p_part)
        lq = liouville_rhs(model, q_part)
        return np.array([P(lp) + P(lq), Q(lq) + Q(lp)])

    rho0 = state.joint()
    y = np.array([P(rho0), Q(rho0)])
    sub = _substeps(grid.dt, max_step)
    h = grid.dt / sub
    times = grid.times
    p_series = np.empty((len(times),) + rho0.shape, dtype=complex)
    q_series = np.empty_like(p_series)
    p_series[0], q_series[0] = y
    deviation = 0.0
    for k in range(1, len(times)):
        for _ in range(sub):
            y = _rk4(rhs, y, h)
        p_series[k], q_series[k] = y
        exact = evolve_joint(model, rho0, times[k], grid.t0)
        deviation = max(deviation, float(np.linalg.norm(y[0] + y[1] - exact)))
    warning = None
    if deviation > DRIFT_WARN:
        warning = f"projected integration drifted {deviation:.2e} from exact evolution; reduce the step"
        log.warning(warning)
    return ProjectedTrajectory(times, p_series, q_series, deviation, warning)


def memory_term_series(model: HamiltonianTriple, pair: ProjectorPair, state: InitialState,
                       grid: TimeGrid, max_step: float = MAX_STEP) -> np.ndarray:
    """Norm of the memory integral ``int_{t0}^{t} exp(QL (t-t')) QL P rho(t') dt'`` on the grid.

    ``P rho(t')`` comes from exact evolution; the propagator ``exp(QL tau)`` is
    applied by RK4 integration of ``dX/dtau = Q L X`` and the integral uses the
    trapezoidal rule on the grid.  Trapezoid sums are carried forward in time,
    so each grid step costs one propagation of two accumulators.
    """
    state.check_against(model)
    rho0 = state.joint()
    times = grid.times
    dt = grid.dt
    sub = _substeps(dt, max_step)
    h = dt / sub

    def ql(x):
        return pair.Q(liouville_rhs(model, x))

    def source(t):
        return ql(pair.P(evolve_joint(model, rho0, t, grid.t0)))

    def step(x):
        for _ in range(sub):
            x = _rk4(ql, x, h)
        return x

    f0 = source(times[0])
    running = dt * f0  # sum_k dt * exp(QL (t - t_k)) f_k, all weights full
    first = f0.copy()  # exp(QL (t - t0)) f_0
    out = np.zeros(len(times))
    for k in range(1, len(times)):
        fk = source(times[k])
        running = step(running) + dt * fk
        first = step(first)
        integral = running - 0.5 * dt * fk - 0.5 * dt * first
        out[k] = np.linalg.norm(integral)
    return out


def _grid_index(grid: TimeGrid, t: float) -> int:
    k = int(round((t - grid.t0) / grid.dt))
    if k < 0 or k > grid.steps or abs(grid.t0 + k * grid.dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ParameterError(f"t = {t} is not a point of the grid")
    return k


def memory_term(model, pair, state, t: float, grid: TimeGrid) -> float:
    """Memory-integral norm at grid time ``t``."""
    k = _grid_index(grid, t)
    sub_grid = TimeGrid(grid.t0, grid.dt, max(k, 1))
    return float(memory_term_series(model, pair, state, sub_grid)[k])


def time_local_check(model: HamiltonianTriple, pair: ProjectorPair, state: InitialState,
                     grid: TimeGrid, tol: float = LOCAL_TOL) -> tuple[bool, float]:
    """Test ``d(P rho)/dt = i P [P rho, H]`` along the exact trajectory.

    Returns ``(holds, max_deviation)``; the derivative is a central difference
    of exact evolution with step ``1e-5``.
    """
    state.check_against(model)
    rho0 = state.joint()
    h = model.H_total
    worst = 0.0
    for t in grid.times:
        rho = evolve_joint(model, rho0, t, grid.t0)
        plus = pair.P(evolve_joint(model, rho0, t + FD_STEP, grid.t0))
        minus = pair.P(evolve_joint(model, rho0, t - FD_STEP, grid.t0))
        deriv = (plus - minus) / (2 * FD_STEP)
        p_rho = pair.P(rho)
        local = pair.P(1j * (p_rho @ h - h @ p_rho))
        worst = max(worst, float(np.linalg.norm(deriv - local)))
    return worst < tol, worst
