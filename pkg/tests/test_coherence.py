import math
import warnings

import numpy as np
import pytest

from openmap.coherence import (
    PreconditionWarning,
    classify_coherence,
    coherence_l1,
    coherence_trace,
    dephasing_gamma,
    einselect,
    gamma_from_series,
    population_drift,
    transition_probability,
)
from openmap.dynamics import InitialState, TimeGrid, reduced_states
from openmap.errors import ParameterError, ValidationError
from openmap.models import DEFAULT_MODES, SIGMA_X, ModelParams, build_custom_model, build_model

from conftest import rand_amplitudes


def test_transition_probability_examples():
    c = np.array([0.6, 0.8j])
    assert abs(transition_probability(c, c)[0] - 1) < 1e-15
    total, _, _ = transition_probability([1, 0], np.ones(2) / np.sqrt(2))
    assert abs(total - 0.5) < 1e-15
    total, diag, cross = transition_probability(np.ones(2) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2))
    assert abs(total) < 1e-15 and abs(diag - 0.5) < 1e-15 and abs(cross + 0.5) < 1e-15


def test_transition_probability_decomposition(rng):
    c, b = rand_amplitudes(rng, 4), rand_amplitudes(rng, 4)
    total, diag, cross = transition_probability(c, b)
    assert abs(total - abs(np.vdot(c, b)) ** 2) < 1e-14
    assert abs(total - diag - cross) < 1e-15
    with pytest.raises(ValidationError):
        transition_probability([1, 1], [1, 0])


def test_einselect_limits(rng):
    c = rand_amplitudes(rng, 3)
    assert np.abs(einselect(c) - np.diag(np.abs(c) ** 2)).max() < 1e-15
    assert np.abs(einselect(c, np.ones((3, 3))) - np.outer(c, c.conj())).max() < 1e-15
    with pytest.raises(ValidationError):
        einselect(c, 2 * np.ones((3, 3)))


def test_einselect_partial_overlap():
    c = np.ones(2) / np.sqrt(2)
    out = einselect(c, [[1, 0.3], [0.3, 1]])
    assert abs(out[0, 1] - 0.15) < 1e-15 and abs(out[0, 0] - 0.5) < 1e-15


def test_coherence_l1():
    assert coherence_l1(np.ones((4, 4)) / 4) == pytest.approx(3.0, abs=1e-15)
    assert coherence_l1(np.diag([0.2, 0.8])) == 0


def test_gamma_from_series():
    g = gamma_from_series(np.array([0.5, 0.5 * np.exp(-1), 1e-20]))
    assert g[0] == 0 and abs(g[1] - 1) < 1e-14 and g[2] == np.inf
    with pytest.raises(ParameterError):
        gamma_from_series(np.array([0.0, 1.0]))


def test_classify_coherence():
    t = np.linspace(0, 10, 101)
    assert classify_coherence(np.ones(5)) == "preserved"
    assert classify_coherence(np.exp(-t)) == "decohered"
    assert classify_coherence(np.abs(np.cos(t))) == "partial"
    assert classify_coherence(np.zeros(3)) == "incoherent"


def test_dephasing_gamma_matches_displaced_vacuum_formula():
    # vacuum bath, spin 1/2: Gamma(t) = sum_k |g_k|^2 (1 - cos w_k t) / w_k^2
    m = build_model(ModelParams(n_max=5))
    vac = np.zeros((m.N, m.N))
    vac[0, 0] = 1
    grid = TimeGrid.span(0.0, 5.0, 0.05)
    gamma = dephasing_gamma(m, InitialState(np.ones(2) / np.sqrt(2), vac), grid)
    expected = sum(abs(g) ** 2 * (1 - np.cos(w * grid.times)) / w ** 2 for w, g in DEFAULT_MODES)
    assert np.abs(gamma - expected).max() < 2e-6


def test_dephasing_gamma_needs_coherence():
    m = build_model(ModelParams(n_max=2))
    state = InitialState([1, 0], np.eye(m.N) / m.N)
    with pytest.raises(ParameterError):
        dephasing_gamma(m, state, TimeGrid(0.0, 0.1, 3))


def test_population_drift_warns_on_degenerate_system():
    m = build_custom_model(np.zeros((2, 2)), np.diag([0.0, 1.0]), 0.3 * np.kron(SIGMA_X, SIGMA_X))
    state = InitialState([1, 0], np.eye(2) / 2)
    with pytest.warns(PreconditionWarning):
        drift = population_drift(m, state, TimeGrid(0.0, 0.5, 4))
    assert drift < 1e-14  # one eigenspace, total population is conserved


def test_population_drift_dephasing_is_zero():
    m = build_model(ModelParams(n_max=2))
    state = InitialState(np.ones(2) / np.sqrt(2), np.eye(m.N) / m.N)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert population_drift(m, state, TimeGrid(0.0, 0.25, 8)) < 1e-12


def test_coherence_trace_columns():
    m = build_model(ModelParams("jsquared", j=1, n_max=3))
    vac = np.zeros((4, 4))
    vac[0, 0] = 1
    trace = coherence_trace(m, InitialState(np.ones(3) / math.sqrt(3), vac), TimeGrid(0.0, 0.5, 4))
    cols = trace.columns()
    assert list(cols)[:2] == ["t", "l1"]
    assert {"abs_rho_0_1", "abs_rho_0_2", "abs_rho_1_2", "pop_2", "gamma_0_2"} <= set(cols)
    assert np.abs(trace.l1_coherence - 2.0).max() < 1e-12
    assert np.abs(trace.gamma[(0, 1)]).max() < 1e-12


def test_dephasing_truncation_stable():
    # default cutoff: doubling n_max moves rho_S by less than 1e-6 on [0, 5]
    vals = []
    for n_max in (5, 10):
        m = build_model(ModelParams(n_max=n_max))
        vac = np.zeros((m.N, m.N))
        vac[0, 0] = 1
        vals.append(reduced_states(m, InitialState(np.ones(2) / np.sqrt(2), vac), np.linspace(0, 5, 26)))
    assert np.abs(vals[0] - vals[1]).max() < 1e-6
