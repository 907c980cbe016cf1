"""Divisibility of the reduced map and the commutator diagnostics behind it.

A reduced map is called divisible here when

    C(t, t0) = C(ts, t0) then C(t, ts)

for intermediate ``ts``, with every map built from the same environment
weights ``d`` (the environment is reset for each leg).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    InitialState,
    TimeGrid,
    apply_map,
    check_env_weights,
    reduced_state,
    super_matrix,
)
from .errors import DegenerateEnvironmentError, ParameterError, UnsupportedInputError
from .linalg import commutator_norm, unitary_from_hamiltonian
from .models import HamiltonianTriple, rotate_to_env_eigenbasis

DIVISIBLE_TOL = 1e-9
MARKOV_PHASE_THRESHOLD = 0.1
DIAGONAL_TOL = 1e-12
FD_STEP = 1e-5


@dataclass
class DivisibilityReport:
    split_times: list
    residuals: list
    comm_ES: float
    comm_SS: float
    tolerance: float = DIVISIBLE_TOL
    verdict: str = field(init=False)

    def __post_init__(self):
        if not self.residuals:
            self.verdict = "inconclusive"
        elif max(self.residuals) < self.tolerance:
            self.verdict = "divisible"
        else:
            self.verdict = "non-divisible"

    def to_dict(self) -> dict:
        return {
            "split_times": [list(map(float, s)) for s in self.split_times],
            "residuals": [float(r) for r in self.residuals],
            "max_residual": float(max(self.residuals)) if self.residuals else None,
            "comm_ES": float(self.comm_ES),
            "comm_SS": float(self.comm_SS),
            "tolerance": float(self.tolerance),
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class TimescaleEstimate:
    delta_E: float
    tau_E: float
    coupling_norm: float
    tau_S: float
    phase: float
    markov_flag: bool

    @property
    def tau_ratio(self) -> float:
        """``tau_E / tau_S``, identical to ``phase**2``."""
        return self.tau_E / self.tau_S

    def to_dict(self) -> dict:
        return {
            "delta_E": self.delta_E,
            "tau_E": self.tau_E,
            "coupling_norm": self.coupling_norm,
            "tau_S": self.tau_S,
            "phase": self.phase,
            "tau_ratio": self.tau_ratio,
            "markov_flag": self.markov_flag,
        }


def _check_order(t0, ts, t):
    if not (t0 < ts < t):
        raise ParameterError(f"split times must satisfy t0 < ts < t, got ({t0}, {ts}, {t})")


def composition_residual(model: HamiltonianTriple, d, t0: float, ts: float, t: float) -> float:
    """Max-entry deviation of ``C(t, t0)`` from the composed two-leg map."""
    _check_order(t0, ts, t)
    d = check_env_weights(d, model.N)
    direct = super_matrix(model, d, t, t0)
    composed = super_matrix(model, d, ts, t0).then(super_matrix(model, d, t, ts))
    return float(np.max(np.abs(direct.tensor - composed.tensor)))


def state_divisibility_residual(model: HamiltonianTriple, state: InitialState, t0: float, ts: float, t: float) -> float:
    """Frobenius deviation of ``rho_S(t)`` from the state pushed through both legs."""
    _check_order(t0, ts, t)
    exact = reduced_state(model, state, t, t0)
    mid = apply_map(super_matrix(model, state.d, ts, t0), state.rho_s)
    two_leg = apply_map(super_matrix(model, state.d, t, ts), mid)
    return float(np.linalg.norm(exact - two_leg))


def commutator_diagnostics(model: HamiltonianTriple) -> tuple[float, float]:
    """``(|[H_E, H_SE]|, |[H_S, H_SE]|)`` with both parts lifted, in the H_E eigenbasis."""
    rotated, _, _ = rotate_to_env_eigenbasis(model)
    comm_es = commutator_norm(rotated.H_E_lifted, rotated.H_SE)
    comm_ss = commutator_norm(rotated.H_S_lifted, rotated.H_SE)
    return comm_es, comm_ss


def divisibility_report(model, d, split_triples, tolerance: float = DIVISIBLE_TOL) -> DivisibilityReport:
    residuals = [composition_residual(model, d, *triple) for triple in split_triples]
    comm_es, comm_ss = commutator_diagnostics(model)
    return DivisibilityReport(list(split_triples), residuals, comm_es, comm_ss, tolerance)


def markov_timescales(model: HamiltonianTriple) -> TimescaleEstimate:
    """Environment memory time, system relaxation time and their ratio."""
    w = np.linalg.eigvalsh(model.H_E)
    delta_e = float(w.max() - w.min())
    if delta_e <= 0:
        raise DegenerateEnvironmentError("H_E has zero spectral spread; tau_E is undefined")
    coupling = float(np.linalg.norm(model.H_SE, 2))
    return timescales_from(delta_e, coupling)


def timescales_from(delta_e: float, coupling_norm: float) -> TimescaleEstimate:
    tau_e = 1.0 / delta_e
    tau_s = 1.0 / (coupling_norm ** 2 * tau_e) if coupling_norm > 0 else float("inf")
    phase = coupling_norm * tau_e
    return TimescaleEstimate(delta_e, tau_e, coupling_norm, tau_s, phase, phase < MARKOV_PHASE_THRESHOLD)


def _diagonal_env_frame(model: HamiltonianTriple, state: InitialState):
    rotated, d_rot, _ = rotate_to_env_eigenbasis(model, state.d)
    if np.max(np.abs(d_rot - np.diag(np.diag(d_rot)))) > DIAGONAL_TOL:
        raise UnsupportedInputError(
            "environment weights are not diagonal in the H_E eigenbasis; "
            "block decomposition requires diagonal weights"
        )
    return rotated, InitialState(None, np.diag(np.diag(d_rot)), rho_s=state.rho_s)


def _env_blocks(rho: np.ndarray, n: int, N: int) -> np.ndarray:
    """``out[g] = <g| rho |g>`` as ``n x n`` system matrices."""
    r = rho.reshape(n, N, n, N)
    return np.einsum("igjg->gij", r)


def gamma_block_decompose(model: HamiltonianTriple, state: InitialState, t: float, t0: float = 0.0):
    """Split ``rho_S(t)`` into environment-diagonal blocks ``<g|rho(t)|g>``.

    Returns a list of ``(g, rho_Sg, block_residual)`` where the residual is the
    Frobenius distance between ``rho_Sg(t)`` and ``rho_Sg(t0)`` evolved with
    the ``n x n`` block ``<g|H_total|g>`` alone.  The residuals vanish when
    ``[H_E, H_SE] = 0`` in the H_E eigenbasis.
    """
    rotated, st = _diagonal_env_frame(model, state)
    n, N = rotated.n, rotated.N
    rho_t = rotated.propagator.evolve(st.joint(), t - t0)
    blocks_t = _env_blocks(rho_t, n, N)
    blocks_0 = _env_blocks(st.joint(), n, N)
    h_blocks = _env_blocks(rotated.H_total, n, N)
    out = []
    for g in range(N):
        u = unitary_from_hamiltonian(h_blocks[g], t - t0)
        predicted = u @ blocks_0[g] @ u.conj().T
        out.append((g, blocks_t[g], float(np.linalg.norm(blocks_t[g] - predicted))))
    return out


def nonlocal_decomposition(model: HamiltonianTriple, state: InitialState, grid: TimeGrid) -> np.ndarray:
    """Norms of the environment-off-diagonal remainder in each block equation.

    For every block ``rho_Sg = <g|rho|g>`` the remainder

        R_g = d rho_Sg / dt + i [<g|H_total|g>, rho_Sg]

    is what the E-off-diagonal part of ``H_SE`` contributes.  Derivatives use
    central differences of the exact evolution with step ``1e-5``.  Returns an
    array of shape ``(len(grid.times), N)``.
    """
    rotated, st = _diagonal_env_frame(model, state)
    n, N = rotated.n, rotated.N
    prop = rotated.propagator
    rho0 = st.joint()
    h_blocks = _env_blocks(rotated.H_total, n, N)
    out = np.empty((len(grid.times), N))
    for k, t in enumerate(grid.times):
        tau = t - grid.t0
        plus = _env_blocks(prop.evolve(rho0, tau + FD_STEP), n, N)
        minus = _env_blocks(prop.evolve(rho0, tau - FD_STEP), n, N)
        here = _env_blocks(prop.evolve(rho0, tau), n, N)
        deriv = (plus - minus) / (2 * FD_STEP)
        for g in range(N):
            r = deriv[g] + 1j * (h_blocks[g] @ here[g] - here[g] @ h_blocks[g])
            out[k, g] = np.linalg.norm(r)
    return out
