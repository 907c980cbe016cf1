import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from openmap.dynamics import (
    InitialState,
    SuperMap,
    TimeGrid,
    apply_map,
    env_correlation,
    evolve_joint,
    interaction_picture_coupling,
    markov_condition_check,
    reduced_state,
    reduced_states,
    super_matrix,
)
from openmap.errors import DimensionError, ParameterError, ValidationError
from openmap.models import ModelParams, build_custom_model, build_jsquared_model, counterexample_model

from conftest import rand_amplitudes, rand_density, rand_hermitian


def _random_model(rng, n, N):
    return build_custom_model(rand_hermitian(rng, n), rand_hermitian(rng, N), rand_hermitian(rng, n * N, 0.5))


def _oracle_reduced(model, rho_s, d, t):
    u = expm(-1j * t * model.H_total)
    rho = u @ np.kron(rho_s, d) @ u.conj().T
    n, N = model.n, model.N
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i, j] = sum(rho[i * N + g, j * N + g] for g in range(N))
    return out


def test_initial_state_normalization_error():
    with pytest.raises(ValidationError, match="amplitudes not normalized"):
        InitialState([1, 1], np.eye(2) / 2)


@pytest.mark.parametrize("d", [np.diag([0.6, 0.6]), np.diag([1.5, -0.5]), [[0.5, 0.5], [0, 0.5]]])
def test_initial_state_rejects_bad_weights(d):
    with pytest.raises(ValidationError):
        InitialState([1, 0], d)


def test_initial_state_dimension_check():
    state = InitialState([1, 0], np.eye(3) / 3)
    with pytest.raises(DimensionError):
        state.check_against(counterexample_model())


def test_time_grid():
    g = TimeGrid.span(0.0, 1.0, 0.25)
    assert np.abs(g.times - [0, 0.25, 0.5, 0.75, 1.0]).max() < 1e-15
    assert g.t_end == 1.0
    with pytest.raises(ParameterError):
        TimeGrid(0.0, 0.0, 3)
    with pytest.raises(ParameterError):
        TimeGrid(0.0, 0.1, 0)


def test_reduced_state_matches_expm_oracle(rng):
    m = _random_model(rng, 3, 2)
    rho_s, d = rand_density(rng, 3), rand_density(rng, 2)
    state = InitialState(None, d, rho_s=rho_s)
    for t in (0.0, 0.3, 1.7):
        assert np.abs(reduced_state(m, state, t) - _oracle_reduced(m, rho_s, d, t)).max() < 1e-12


def test_reduced_states_t0_shift(rng):
    m = _random_model(rng, 2, 3)
    state = InitialState(rand_amplitudes(rng, 2), rand_density(rng, 3))
    a = reduced_states(m, state, [1.2, 2.0], t0=0.5)
    b = reduced_states(m, state, [0.7, 1.5])
    assert np.abs(a - b).max() < 1e-13


def test_evolve_joint_dimension_error():
    with pytest.raises(DimensionError):
        evolve_joint(counterexample_model(), np.eye(3), 1.0)


def test_super_matrix_identity_at_t0(rng):
    m = _random_model(rng, 2, 2)
    c = rand_amplitudes(rng, 2)
    smap = super_matrix(m, np.eye(2) / 2, 0.4, 0.4)
    assert np.abs(apply_map(smap, c) - np.outer(c, c.conj())).max() < 1e-15


def test_super_matrix_index_oracle(rng):
    m = _random_model(rng, 2, 2)
    d = rand_density(rng, 2)
    t = 0.9
    u = expm(-1j * t * m.H_total)
    n, N = 2, 2
    smap = super_matrix(m, d, t)
    for i1 in range(n):
        for i2 in range(n):
            for j1 in range(n):
                for j2 in range(n):
                    val = 0
                    for a1 in range(N):
                        for a2 in range(N):
                            for g in range(N):
                                val += d[a1, a2] * u[j1 * N + g, i1 * N + a1] * np.conj(u[j2 * N + g, i2 * N + a2])
                    assert abs(smap.tensor[i1, i2, j1, j2] - val) < 1e-13


def test_super_matrix_is_trace_preserving_and_cp(rng):
    m = _random_model(rng, 3, 2)
    smap = super_matrix(m, rand_density(rng, 2), 1.1)
    trace_part = np.einsum("abjj->ab", smap.tensor)
    assert np.abs(trace_part - np.eye(3)).max() < 1e-12
    # Choi matrix sum_{i1 i2} |i1><i2| (x) Phi(|i1><i2|) must be PSD
    choi = np.einsum("abjk->ajbk", smap.tensor).reshape(9, 9)
    assert np.abs(choi - choi.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(choi).min() > -1e-12


def test_super_map_then_identity(rng):
    m = _random_model(rng, 2, 2)
    smap = super_matrix(m, np.eye(2) / 2, 0.6)
    both = SuperMap.identity(2).then(smap)
    assert np.abs(both.tensor - smap.tensor).max() < 1e-15
    assert both.matrix.shape == (4, 4)
    with pytest.raises(DimensionError):
        smap.then(SuperMap.identity(3))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(0.0, 5.0), st.integers(0, 2**31 - 1))
def test_map_equals_evolution(n, N, t, seed):
    rng = np.random.default_rng(seed)
    m = _random_model(rng, n, N)
    state = InitialState(rand_amplitudes(rng, n), rand_density(rng, N))
    via_map = apply_map(super_matrix(m, state.d, t), state.c)
    assert np.abs(via_map - reduced_state(m, state, t)).max() < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 10.0))
def test_reduced_state_is_density(seed, t):
    rng = np.random.default_rng(seed)
    m = _random_model(rng, 2, 3)
    rho = reduced_state(m, InitialState(rand_amplitudes(rng, 2), rand_density(rng, 3)), t)
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.abs(rho - rho.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_apply_map_dimension_error(rng):
    smap = super_matrix(_random_model(rng, 2, 2), np.eye(2) / 2, 0.5)
    with pytest.raises(DimensionError):
        apply_map(smap, np.ones(3) / np.sqrt(3))


def test_jsquared_keeps_coherence_magnitude():
    m = build_jsquared_model(ModelParams("jsquared", n_max=4))
    vac = np.zeros((5, 5))
    vac[0, 0] = 1
    state = InitialState(np.ones(2) / np.sqrt(2), vac)
    rhos = reduced_states(m, state, np.linspace(0, 10, 11))
    assert np.abs(np.abs(rhos[:, 0, 1]) - 0.5).max() < 1e-12


def test_interaction_picture_coupling_oracle(rng):
    m = _random_model(rng, 2, 2)
    h0 = m.H_S_lifted + m.H_E_lifted
    u = expm(-0.7j * h0)
    assert np.abs(interaction_picture_coupling(m, 0.7) - u.conj().T @ m.H_SE @ u).max() < 1e-12


def test_env_correlation_oracle_and_bare_weights(rng):
    m = _random_model(rng, 2, 3)
    d = rand_density(rng, 3)
    a = interaction_picture_coupling(m, 0.4)
    b = interaction_picture_coupling(m, 1.3)
    rho0 = np.kron(np.eye(2) / 2, d)
    assert abs(env_correlation(m, d, 0.4, 1.3) - np.trace(rho0 @ a @ b)) < 1e-12
    # equal times give a real, non-negative second moment
    val = env_correlation(m, InitialState(rand_amplitudes(rng, 2), d), 0.5, 0.5)
    assert abs(val.imag) < 1e-12 and val.real >= 0


def test_markov_check_at_start_and_uncoupled(rng):
    m = counterexample_model()
    state = InitialState([1, 0], np.eye(2) / 2)
    ratio, drift = markov_condition_check(m, state, 0.0)
    assert ratio < 1e-15 and drift < 1e-15
    ratio, drift = markov_condition_check(m, state, 1.0)
    assert ratio > 1e-3
    free = build_custom_model(rand_hermitian(rng, 2), rand_hermitian(rng, 2), np.zeros((4, 4)))
    ratio, _ = markov_condition_check(free, InitialState(rand_amplitudes(rng, 2), rand_density(rng, 2)), 2.0)
    assert ratio < 1e-12
