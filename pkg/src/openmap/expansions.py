"""Zassenhaus product expansion and the closed-form bosonic sums of the J^2 model.

Zassenhaus coefficients used by this module::

    c2 = [X, Y]
    c3 = 2 [[X, Y], Y] + [[X, Y], X]
    c4 = c3 + 3 [[[X, Y], Y], Y] + [[[X, Y], X], Y] + [[X, Y], [X, Y]]

with ``exp(X + Y) = e^X e^Y e^{-c2/2!} e^{-c3/3!} e^{-c4/4!} ...``.  The
``c4`` line is used as stated even though it does not agree with standard
Zassenhaus tables; :func:`truncation_error` makes its effect measurable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .dynamics import InitialState, reduced_states
from .errors import DimensionError, ParameterError
from .models import ModelParams, _check_spin, build_jsquared_model

MAX_BOSON_LEVEL = 6


def _comm(a, b):
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class ZassenhausTerms:
    X: np.ndarray
    Y: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray

    def factors(self, order: int) -> list:
        """Exponents of the retained factors; order 1 is ``[X, Y]``."""
        if order not in (1, 2, 3, 4):
            raise ParameterError(f"Zassenhaus order must be 1..4, got {order}")
        exps = [self.X, self.Y, -self.c2 / 2, -self.c3 / 6, -self.c4 / 24]
        return exps[:order + 1]


def zassenhaus_terms(x, y) -> ZassenhausTerms:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError(f"X and Y must be square and of equal shape, got {x.shape} and {y.shape}")
    c2 = _comm(x, y)
    c2y = _comm(c2, y)
    c2x = _comm(c2, x)
    c3 = 2 * c2y + c2x
    c4 = c3 + 3 * _comm(c2y, y) + _comm(c2x, y) + _comm(c2, c2)
    return ZassenhausTerms(x, y, c2, c3, c4)


def generators(model, dt: float):
    """``X = -i dt (H_S + H_E)`` and ``Y = -i dt H_SE`` on the joint space."""
    x = -1j * dt * (model.H_S_lifted + model.H_E_lifted)
    y = -1j * dt * model.H_SE
    return x, y


def zassenhaus_product(x, y, order: int) -> np.ndarray:
    """Product of the exponential factors retained at ``order`` (1..4)."""
    terms = zassenhaus_terms(x, y)
    out = np.eye(terms.X.shape[0], dtype=complex)
    for a in terms.factors(order):
        out = out @ expm(a)
    return out


def truncation_error(x, y, order: int) -> float:
    """``|exp(X + Y) - product|_F``."""
    exact = expm(np.asarray(x, dtype=complex) + np.asarray(y, dtype=complex))
    return float(np.linalg.norm(exact - zassenhaus_product(x, y, order)))


# ---------------------------------------------------------------------------
# bosonic sector of the J^2 model


@dataclass(frozen=True)
class KinematicFactors:
    alpha: float
    zeta: float
    gamma_j: float
    psi1: float


def kinematic_factors(j, beta: float, eta: float, t: float) -> KinematicFactors:
    """``alpha(t)``, ``zeta(t)``, ``gamma(j)`` and ``Psi_1(t)``.

    ``sin(b t)/b`` and ``(1 - cos(g t))/g`` are evaluated through ``np.sinc``
    so that ``beta -> 0`` and ``gamma -> 0`` take their limits smoothly.
    """
    jf = float(_check_spin(j))
    gamma_j = eta * jf * (jf + 1)
    sin_ratio = t * np.sinc(beta * t / np.pi)  # sin(beta t) / beta
    half = np.sinc(gamma_j * t / (2 * np.pi))
    one_minus_cos_ratio = 0.5 * gamma_j * t * t * half * half  # (1 - cos(gamma t)) / gamma
    alpha = gamma_j * sin_ratio
    zeta = beta * one_minus_cos_ratio
    psi1 = -0.5 * (alpha ** 2 + zeta ** 2)
    return KinematicFactors(float(alpha), float(zeta), float(gamma_j), float(psi1))


def _check_levels(n_max: int, *levels):
    if int(n_max) != n_max or n_max < 0:
        raise ParameterError(f"n_max must be a non-negative integer, got {n_max}")
    if n_max > MAX_BOSON_LEVEL:
        raise ParameterError(f"n_max > {MAX_BOSON_LEVEL} is not supported (factorial overflow)")
    for q in levels:
        if int(q) != q or q < 0 or q > n_max:
            raise ParameterError(f"boson quantum number {q} outside 0..{n_max}")


@lru_cache(maxsize=None)
def _coefficient_table(n_max: int, sign: int) -> np.ndarray:
    """Coefficients ``T[n, n', p, q]`` of ``alpha^p zeta^q`` in the nested sums.

    ``sign = -1`` gives the ``E`` family (phase ``(-i)^(n+n3)``), ``+1`` the
    conjugate family (phase ``i^(n''+n3)``).  Ranges: ``n2 <= min(n, n3)``,
    ``n4 <= min(n3, n')`` and ``0 <= n3 <= n_max``.
    """
    f = math.factorial
    size = n_max + 1
    table = np.zeros((size, size, 2 * size, 2 * size), dtype=complex)
    phase = 1j * sign
    for n in range(size):
        for n_p in range(size):
            for n3 in range(size):
                for n2 in range(min(n, n3) + 1):
                    for n4 in range(min(n3, n_p) + 1):
                        coeff = f(n) * f(n_p) * f(n3) ** 2 / (
                            f(n - n2) * f(n3 - n4) * f(n3 - n2) * f(n_p - n4)
                        )
                        table[n, n_p, n + n3 - 2 * n2, n3 + n_p - 2 * n4] += (
                            phase ** (n + n3) * (-1) ** (n_p + n2 - n4) * coeff
                        )
    table.setflags(write=False)
    return table


def _polynomial_matrix(j, beta, eta, t, n_max, sign) -> np.ndarray:
    k = kinematic_factors(j, beta, eta, t)
    powers = np.arange(2 * (n_max + 1))
    pa = k.alpha ** powers
    pz = k.zeta ** powers
    env = np.exp(sign * 1j * beta * t) * np.exp(k.psi1)
    return env * np.einsum("abpq,p,q->ab", _coefficient_table(n_max, sign), pa, pz)


def boson_polynomial(n, n_prime, j, beta, eta, t, n_max) -> complex:
    """``E_{n,n'}(j, t)``."""
    _check_levels(n_max, n, n_prime)
    return complex(_polynomial_matrix(j, beta, eta, t, n_max, -1)[n, n_prime])


def boson_polynomial_conj(n_pp, n, j, beta, eta, t, n_max) -> complex:
    """``E*_{n'',n}(j, t)``; the second envelope is taken equal to the first (j1 = j2)."""
    _check_levels(n_max, n_pp, n)
    return complex(_polynomial_matrix(j, beta, eta, t, n_max, +1)[n_pp, n])


def omega_env(j, beta: float, eta: float, t: float, n_max: int) -> complex:
    """Environment factor ``Omega_E(j, j, t)`` from the closed-form polynomial sums."""
    _check_levels(n_max)
    f = math.factorial
    levels = range(n_max + 1)
    e = _polynomial_matrix(j, beta, eta, t, n_max, -1)
    e_conj = _polynomial_matrix(j, beta, eta, t, n_max, +1)
    inv_sqrt = np.array([1 / math.sqrt(f(q)) for q in levels])
    total = 0j
    for n in levels:
        # sum_{n', n''} E_{n,n'} E*_{n'',n} / sqrt(n'! n''!)
        total += (e[n] @ inv_sqrt) * (e_conj[:, n] @ inv_sqrt) / f(n)
    return complex(total)


def _check_m(j, m):
    jf = float(_check_spin(j))
    if abs(m) > jf + 1e-12 or abs((jf - m) - round(jf - m)) > 1e-12:
        raise ParameterError(f"m = {m} is not a projection of spin j = {jf}")
    return jf


def system_factor(j, m1, m2, omega: float, t: float) -> complex:
    """``exp(-i w (m1 - m2) t) / (2j + 1)``."""
    jf = _check_m(j, m1)
    _check_m(j, m2)
    return complex(np.exp(-1j * omega * (m1 - m2) * t) / (2 * jf + 1))


def analytic_reduced_element(j, m1, m2, omega, beta, eta, t, n_max) -> complex:
    """Closed-form ``rho_S^{j m1, j m2}(t)`` for the J^2 model."""
    return system_factor(j, m1, m2, omega, t) * omega_env(j, beta, eta, t, n_max)


def numeric_reduced_elements(j, m1, m2, omega, beta, eta, times, n_max) -> np.ndarray:
    """Exact-evolution oracle: boson vacuum and a maximally coherent spin state."""
    jf = _check_m(j, m1)
    _check_m(j, m2)
    model = build_jsquared_model(ModelParams("jsquared", j=jf, omega=omega, beta=beta, eta=eta, n_max=max(n_max, 1)))
    dim = model.n
    vacuum = np.zeros((model.N, model.N), dtype=complex)
    vacuum[0, 0] = 1
    state = InitialState(np.ones(dim) / math.sqrt(dim), vacuum)
    rhos = reduced_states(model, state, times)
    a, b = int(round(jf - m1)), int(round(jf - m2))
    return rhos[:, a, b]


@dataclass
class ClosedFormComparison:
    times: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray
    system: np.ndarray
    omega_analytic: np.ndarray
    omega_numeric: np.ndarray

    @property
    def abs_deviation(self) -> np.ndarray:
        return np.abs(self.analytic - self.numeric)

    @property
    def phase_deviation(self) -> np.ndarray:
        """Distance between the numeric element and the pure system factor."""
        return np.abs(self.numeric - self.system)

    def columns(self) -> dict:
        return {
            "t": self.times,
            "analytic": self.analytic,
            "numeric": self.numeric,
            "abs_deviation": self.abs_deviation,
            "abs_omega_analytic": np.abs(self.omega_analytic),
            "abs_omega_numeric": np.abs(self.omega_numeric),
        }

    def summary(self) -> dict:
        return {
            "t0_system_factor_deviation": float(self.phase_deviation[0]),
            "max_phase_deviation": float(self.phase_deviation.max()),
            "max_abs_omega_numeric_deviation": float(np.max(np.abs(np.abs(self.omega_numeric) - 1))),
            "omega_analytic_t0": [float(self.omega_analytic[0].real), float(self.omega_analytic[0].imag)],
            "max_abs_deviation": float(self.abs_deviation.max()),
            "mean_abs_deviation": float(self.abs_deviation.mean()),
        }


def closed_form_comparison(j, m1, m2, omega, beta, eta, times, n_max) -> ClosedFormComparison:
    """Closed-form vs exact reduced element of the J^2 model on ``times``."""
    times = np.asarray(times, dtype=float)
    jf = _check_m(j, m1)
    numeric = numeric_reduced_elements(jf, m1, m2, omega, beta, eta, times, n_max)
    system = np.array([system_factor(jf, m1, m2, omega, t) for t in times])
    omega_an = np.array([omega_env(jf, beta, eta, t, n_max) for t in times])
    return ClosedFormComparison(times, system * omega_an, numeric, system, omega_an, numeric / system)
