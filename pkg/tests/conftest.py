import sys
import time

import numpy as np
import pytest


def rand_hermitian(rng, k, scale=1.0):
    a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return scale * (a + a.conj().T) / 2


def rand_density(rng, k, rank=None):
    rank = k if rank is None else rank
    g = rng.normal(size=(k, rank)) + 1j * rng.normal(size=(k, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def rand_amplitudes(rng, k):
    c = rng.normal(size=k) + 1j * rng.normal(size=k)
    return c / np.linalg.norm(c)


def rand_diagonal_weights(rng, k):
    w = rng.random(k) + 0.05
    return np.diag(w / w.sum()).astype(complex)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


SUITE_BUDGET_S = 180.0
_session = {}


def pytest_sessionstart(session):
    _session["start"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _session.get("start", time.perf_counter())
    mod = sys.modules.get("test_acceptance")
    lines = [] if mod is None else [mod.RESULTS[k] for k in sorted(mod.RESULTS)]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(
        f"criterion 11 (suite wall-clock): {'PASS' if ok else 'FAIL'}  {elapsed:.1f} s (< {SUITE_BUDGET_S:g} s)"
    )


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _session.get("start", time.perf_counter())
    if elapsed >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
