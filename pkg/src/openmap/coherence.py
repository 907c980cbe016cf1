"""Coherence measures, einselection and dephasing-function extraction."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import InitialState, TimeGrid, reduced_states
from .errors import ParameterError, ValidationError
from .models import HamiltonianTriple

NORM_TOL = 1e-12
GAMMA_FLOOR = 1e-14
DEGENERACY_TOL = 1e-9

# l1 coherence must drop below DECAY_FRACTION of its start and stay below
# STAY_FRACTION for the rest of the window to count as decohered.
DECAY_FRACTION = 0.05
STAY_FRACTION = 0.10
PRESERVED_TOL = 1e-9


class PreconditionWarning(UserWarning):
    pass


def _normalized(v, name):
    v = np.asarray(v, dtype=complex).ravel()
    if abs(np.vdot(v, v).real - 1) >= NORM_TOL:
        raise ValidationError(f"{name} is not normalized (norm^2 = {np.vdot(v, v).real:.15g})")
    return v


def transition_probability(c, b) -> tuple[float, float, float]:
    """``|<c|b>|^2`` split as ``(total, diagonal, cross)`` with ``total = diagonal + cross``.

    ``diagonal = sum_i |c_i^* b_i|^2``; ``cross`` collects the interference
    terms ``i != k``.
    """
    c = _normalized(c, "c")
    b = _normalized(b, "b")
    if c.shape != b.shape:
        raise ValidationError(f"amplitude vectors differ in length ({c.size} vs {b.size})")
    terms = c.conj() * b
    total = float(abs(terms.sum()) ** 2)
    diagonal = float(np.sum(np.abs(terms) ** 2))
    return total, diagonal, total - diagonal


def einselect(c, pointer_overlaps=None) -> np.ndarray:
    """Reduced system state after correlating ``|i>`` with environment states ``|a_i>``.

    ``out[i, j] = c_i c_j^* M[j, i]`` with ``M[i, j] = <a_i|a_j>``.  The
    identity overlap (perfectly distinguishing environment) yields
    ``sum_i |c_i|^2 |i><i|``; an all-ones overlap leaves the pure state.
    """
    c = _normalized(c, "c")
    n = c.size
    m = np.eye(n, dtype=complex) if pointer_overlaps is None else np.asarray(pointer_overlaps, dtype=complex)
    if m.shape != (n, n):
        raise ValidationError(f"overlap matrix has shape {m.shape}, expected {(n, n)}")
    if np.any(np.abs(m) > 1 + NORM_TOL):
        raise ValidationError("overlaps of normalized states cannot exceed 1 in modulus")
    return np.outer(c, c.conj()) * m.T


def coherence_l1(rho) -> float:
    """Sum of moduli of the off-diagonal entries."""
    rho = np.asarray(rho)
    return float(np.abs(rho).sum() - np.abs(np.diag(rho)).sum())


def _eigenspaces(h: np.ndarray):
    w, v = np.linalg.eigh(h)
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[groups[-1][0]] < DEGENERACY_TOL:
            groups[-1].append(k)
        else:
            groups.append([k])
    return w, v, groups


def eigenspace_populations(model: HamiltonianTriple, rhos: np.ndarray):
    """Populations of ``H_S`` eigenspaces, shape ``(len(rhos), n_spaces)``."""
    _, v, groups = _eigenspaces(model.H_S)
    rot = np.einsum("ai,tab,bj->tij", v.conj(), rhos, v)
    diag = np.real(np.einsum("tii->ti", rot))
    return np.stack([diag[:, g].sum(axis=1) for g in groups], axis=1), groups


def population_drift(model: HamiltonianTriple, state: InitialState, grid: TimeGrid) -> float:
    """Largest change of any ``H_S``-eigenbasis population over the grid.

    Degenerate eigenvalues are merged and the population of each eigenspace
    is tracked instead, with a :class:`PreconditionWarning`.
    """
    rhos = reduced_states(model, state, grid.times, grid.t0)
    pops, groups = eigenspace_populations(model, rhos)
    if any(len(g) > 1 for g in groups):
        warnings.warn("H_S is degenerate; populations are aggregated per eigenspace",
                      PreconditionWarning, stacklevel=2)
    return float(np.max(np.abs(pops - pops[0])))


def gamma_from_series(values: np.ndarray) -> np.ndarray:
    """``-ln(|x(t)| / |x(t0)|)`` with ``+inf`` where ``|x(t)| < 1e-14``."""
    mags = np.abs(values)
    if mags[0] <= 0:
        raise ParameterError("initial coherence is zero; dephasing function undefined")
    with np.errstate(divide="ignore"):
        gamma = -np.log(mags / mags[0])
    gamma[mags < GAMMA_FLOOR] = np.inf
    gamma[0] = 0.0
    return gamma


def dephasing_gamma(model: HamiltonianTriple, state: InitialState, grid: TimeGrid, pair=(0, 1)) -> np.ndarray:
    """Dephasing function of the off-diagonal element ``pair`` on the grid."""
    k, l = pair
    rhos = reduced_states(model, state, grid.times, grid.t0)
    if abs(rhos[0, k, l]) <= 0:
        raise ParameterError(f"rho[{k},{l}] vanishes at t0; choose a coherent initial state")
    return gamma_from_series(rhos[:, k, l])


@dataclass
class CoherenceTrace:
    times: np.ndarray
    l1_coherence: np.ndarray
    offdiag: dict  # (k, l) -> complex series
    populations: np.ndarray
    gamma: dict = field(default_factory=dict)

    @property
    def offdiag_abs(self) -> dict:
        return {p: np.abs(v) for p, v in self.offdiag.items()}

    def columns(self) -> dict:
        cols = {"t": self.times, "l1": self.l1_coherence}
        for (k, l), v in self.offdiag.items():
            cols[f"abs_rho_{k}_{l}"] = np.abs(v)
        for i in range(self.populations.shape[1]):
            cols[f"pop_{i}"] = self.populations[:, i]
        for (k, l), g in self.gamma.items():
            cols[f"gamma_{k}_{l}"] = g
        return cols


def coherence_trace(model: HamiltonianTriple, state: InitialState, grid: TimeGrid, pairs=None) -> CoherenceTrace:
    rhos = reduced_states(model, state, grid.times, grid.t0)
    n = model.n
    if pairs is None:
        pairs = [(k, l) for k in range(n) for l in range(k + 1, n)]
    offdiag = {tuple(p): rhos[:, p[0], p[1]].copy() for p in pairs}
    gamma = {p: gamma_from_series(v) for p, v in offdiag.items() if abs(v[0]) > 0}
    l1 = np.array([coherence_l1(r) for r in rhos])
    pops = np.real(np.einsum("tii->ti", rhos))
    return CoherenceTrace(grid.times.copy(), l1, offdiag, pops, gamma)


def classify_coherence(l1: np.ndarray) -> str:
    """``preserved``, ``decohered`` or ``partial`` from an l1-coherence series."""
    start = l1[0]
    if start <= 0:
        return "incoherent"
    if np.max(np.abs(l1 - start)) < PRESERVED_TOL:
        return "preserved"
    below = np.nonzero(l1 < DECAY_FRACTION * start)[0]
    if below.size and np.all(l1[below[0]:] < STAY_FRACTION * start):
        return "decohered"
    return "partial"
