"""Scenario documents: sectioned key-value text describing one run.

Example::

    [model]
    variant = jsquared
    j = 0.5
    omega = 1.0
    beta = 1.0
    eta = 0.3
    n_max = 6

    [initial]
    c = maximally-coherent
    d = vacuum

    [grid]
    t0 = 0
    dt = 0.02
    t_max = 20

    [analyses]
    run = divisibility, coherence

Matrices and lists are JSON; a complex entry is written ``[re, im]`` or as a
Python complex literal string such as ``"0.5-0.5j"``.
"""
from __future__ import annotations

import configparser
import json
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .dynamics import InitialState, TimeGrid
from .errors import OpenMapError, ScenarioError
from .models import (
    DEFAULT_MODES,
    SIGMA_X,
    SIGMA_Z,
    HamiltonianTriple,
    ModelParams,
    build_custom_model,
    build_model,
)

ANALYSIS_ORDER = ("markov", "divisibility", "nz", "coherence", "zassenhaus", "appendix-e")
REQUIRED_SECTIONS = ("model", "initial", "grid", "analyses")
ALLOWED_KEYS = {
    "model": {"variant", "j", "omega", "modes", "beta", "eta", "n_max", "h_s", "h_e", "h_se"},
    "initial": {"c", "d"},
    "grid": {"t0", "dt", "t_max", "steps"},
    "analyses": {"run", "tolerance", "kept", "nz_t_max", "nz_dt", "pairs", "m1", "m2"},
    "output": {"dir", "prefix"},
}
SYSTEM_PRESETS = ("maximally-coherent", "maximally-mixed", "ground")
ENV_PRESETS = ("vacuum", "maximally-mixed")


@dataclass(frozen=True)
class AnalysisOptions:
    tolerance: float = 1e-9
    kept: tuple = (0,)
    nz_t_max: float = 2.0
    nz_dt: float = 0.005
    pairs: tuple | None = None
    m1: float | None = None
    m2: float | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    params: ModelParams
    custom: tuple | None
    c: np.ndarray | None
    rho_s: np.ndarray | None
    d: np.ndarray
    grid: TimeGrid
    analyses: tuple
    options: AnalysisOptions = AnalysisOptions()
    out_dir: str = "."
    prefix: str = ""
    labels: dict = field(default_factory=dict)

    @cached_property
    def model(self) -> HamiltonianTriple:
        if self.custom is not None:
            return build_custom_model(*self.custom, label=self.name or "custom")
        return build_model(self.params)

    @cached_property
    def state(self) -> InitialState:
        return InitialState(self.c, self.d, rho_s=None if self.c is not None else self.rho_s)

    def with_overrides(self, *, out_dir=None, tolerance=None, grid_dt=None, grid_tmax=None) -> "Scenario":
        grid = self.grid
        if grid_dt is not None or grid_tmax is not None:
            dt = grid.dt if grid_dt is None else float(grid_dt)
            t_max = grid.t_end if grid_tmax is None else float(grid_tmax)
            grid = _make_grid(grid.t0, dt, t_max, None, "command line")
        options = self.options if tolerance is None else replace(self.options, tolerance=float(tolerance))
        return replace(self, grid=grid, options=options,
                       out_dir=self.out_dir if out_dir is None else str(out_dir))

    def echo(self) -> dict:
        p = self.params
        model = {"variant": p.variant}
        if self.custom is None:
            model.update(j=p.j, omega=p.omega, beta=p.beta, eta=p.eta, n_max=p.n_max)
            if p.variant == "dephasing":
                model["modes"] = [[float(w), [complex(g).real, complex(g).imag]] for w, g in p.modes]
        else:
            model.update(h_s=self.custom[0], h_e=self.custom[1], h_se=self.custom[2])
        return {
            "name": self.name,
            "model": model,
            "initial": dict(self.labels),
            "grid": {"t0": self.grid.t0, "dt": self.grid.dt, "steps": self.grid.steps, "t_max": self.grid.t_end},
            "analyses": list(self.analyses),
            "options": {
                "tolerance": self.options.tolerance,
                "kept": list(self.options.kept),
                "nz_t_max": self.options.nz_t_max,
                "nz_dt": self.options.nz_dt,
                "pairs": None if self.options.pairs is None else [list(q) for q in self.options.pairs],
                "m1": self.options.m1,
                "m2": self.options.m2,
            },
        }


class _Locator:
    """Maps ``(section, key)`` to 1-based line numbers for error messages."""

    def __init__(self, text: str):
        self.lines = {}
        section = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            m = re.match(r"^\[([^\]]+)\]", stripped)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = lineno
                continue
            m = re.match(r"^([A-Za-z0-9_\-]+)\s*[=:]", stripped)
            if m and section is not None:
                self.lines.setdefault((section, m.group(1).lower()), lineno)

    def where(self, section, key=None) -> str:
        lineno = self.lines.get((section, key))
        loc = f"[{section}]" + (f" key '{key}'" if key else "")
        return f"line {lineno}, {loc}" if lineno else loc


def _complex(value, where):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ScenarioError(f"{where}: complex entries are written [re, im]")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            raise ScenarioError(f"{where}: cannot read {value!r} as a complex number") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return complex(value)


def _json(raw, where):
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{where}: invalid JSON value ({exc.msg})") from None


def _vector(raw, where) -> np.ndarray:
    data = _json(raw, where)
    if not isinstance(data, list) or not data:
        raise ScenarioError(f"{where}: expected a non-empty list")
    return np.array([_complex(v, where) for v in data])


def _matrix(raw, where) -> np.ndarray:
    data = _json(raw, where)
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ScenarioError(f"{where}: expected a list of rows")
    width = {len(r) for r in data}
    if len(width) != 1:
        raise ScenarioError(f"{where}: rows have different lengths")
    return np.array([[_complex(v, where) for v in row] for row in data])


def _float(raw, where, *, positive=False, minimum=None) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ScenarioError(f"{where}: expected a real number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ScenarioError(f"{where}: value must be finite")
    if positive and value <= 0:
        raise ScenarioError(f"{where}: value must be positive")
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{where}: value must be >= {minimum}")
    return value


def _int(raw, where, minimum=None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ScenarioError(f"{where}: expected an integer, got {raw!r}") from None
    if minimum is not None and value < minimum:
        raise ScenarioError(f"{where}: value must be >= {minimum}")
    return value


def _spin(raw, where) -> float:
    try:
        value = float(eval_fraction(raw))
    except ValueError:
        raise ScenarioError(f"{where}: expected a half-integer spin, got {raw!r}") from None
    return value


def eval_fraction(raw: str) -> float:
    raw = raw.strip()
    if "/" in raw:
        num, den = raw.split("/", 1)
        return float(num) / float(den)
    return float(raw)


def _make_grid(t0, dt, t_max, steps, where) -> TimeGrid:
    if steps is None:
        if t_max <= t0:
            raise ScenarioError(f"{where}: t_max must exceed t0")
        n = (t_max - t0) / dt
        steps = int(round(n))
        if steps < 1 or abs(n - steps) > 1e-9 * max(1.0, n):
            raise ScenarioError(f"{where}: (t_max - t0) must be a positive multiple of dt")
    return TimeGrid(t0, dt, steps)


def _system_state(raw, n, where):
    value = raw.strip()
    if value == "maximally-coherent":
        return np.ones(n, dtype=complex) / math.sqrt(n), None
    if value == "ground":
        c = np.zeros(n, dtype=complex)
        c[0] = 1
        return c, None
    if value == "maximally-mixed":
        return None, np.eye(n, dtype=complex) / n
    if value and value[0] == "[":
        c = _vector(value, where)
        if c.size != n:
            raise ScenarioError(f"{where}: expected {n} amplitudes, got {c.size}")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1) >= 1e-12:
            raise ScenarioError(f"{where}: amplitudes not normalized (sum |c|^2 = {norm:.12g})")
        return c, None
    raise ScenarioError(f"{where}: unknown system preset {value!r} (choose from {', '.join(SYSTEM_PRESETS)})")


def _env_state(raw, N, where):
    value = raw.strip()
    if value == "vacuum":
        d = np.zeros((N, N), dtype=complex)
        d[0, 0] = 1
        return d
    if value == "maximally-mixed":
        return np.eye(N, dtype=complex) / N
    if value and value[0] == "[":
        data = _json(value, where)
        if data and not isinstance(data[0], list):
            d = np.diag([_complex(v, where) for v in data])
        else:
            d = _matrix(value, where)
        if d.shape != (N, N):
            raise ScenarioError(f"{where}: environment weights must be {N}x{N}, got {d.shape}")
        return d
    raise ScenarioError(f"{where}: unknown environment preset {value!r} (choose from {', '.join(ENV_PRESETS)})")


def _pairs(raw, where):
    data = _json(raw, where)
    try:
        return tuple((int(a), int(b)) for a, b in data)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: pairs are written [[k, l], ...]") from None


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate a scenario document."""
    loc = _Locator(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None
    for section in parser.sections():
        if section not in ALLOWED_KEYS:
            raise ScenarioError(f"{loc.where(section)}: unknown section")
        for key in parser[section]:
            if key not in ALLOWED_KEYS[section]:
                raise ScenarioError(f"{loc.where(section, key)}: unknown key")
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ScenarioError(f"missing section [{section}]")

    def get(section, key):
        return parser[section].get(key) if parser.has_section(section) else None

    # model
    w = lambda key: loc.where("model", key)  # noqa: E731
    variant = (get("model", "variant") or "dephasing").strip()
    if variant not in ("dephasing", "jsquared", "custom"):
        raise ScenarioError(f"{w('variant')}: unknown variant {variant!r}")
    kwargs = {"variant": variant}
    for key in ("omega", "beta", "eta"):
        if get("model", key) is not None:
            kwargs[key] = _float(get("model", key), w(key))
    if get("model", "j") is not None:
        kwargs["j"] = _spin(get("model", "j"), w("j"))
    if get("model", "n_max") is not None:
        kwargs["n_max"] = _int(get("model", "n_max"), w("n_max"), minimum=1)
    elif variant == "jsquared":
        kwargs["n_max"] = 6
    if get("model", "modes") is not None:
        data = _json(get("model", "modes"), w("modes"))
        if not isinstance(data, list) or not data:
            raise ScenarioError(f"{w('modes')}: expected a non-empty list of [omega_k, g_k]")
        modes = []
        for item in data:
            if not isinstance(item, list) or len(item) != 2:
                raise ScenarioError(f"{w('modes')}: each mode is [omega_k, g_k]")
            modes.append((_float(item[0], w("modes")), _complex(item[1], w("modes"))))
        kwargs["modes"] = tuple(modes)
    custom = None
    custom_keys = [k for k in ("h_s", "h_e", "h_se") if get("model", k) is not None]
    if variant == "custom":
        if len(custom_keys) != 3:
            raise ScenarioError(f"{loc.where('model')}: custom variant needs h_s, h_e and h_se")
        custom = tuple(_matrix(get("model", k), w(k)) for k in ("h_s", "h_e", "h_se"))
    elif custom_keys:
        raise ScenarioError(f"{w(custom_keys[0])}: matrices are only allowed with variant = custom")
    try:
        params = ModelParams(**kwargs)
    except OpenMapError as exc:
        raise ScenarioError(f"{loc.where('model')}: {exc}") from None

    # grid
    g = lambda key: loc.where("grid", key)  # noqa: E731
    t0 = _float(get("grid", "t0"), g("t0")) if get("grid", "t0") is not None else 0.0
    dt = _float(get("grid", "dt"), g("dt"), positive=True) if get("grid", "dt") is not None else 0.02
    steps = _int(get("grid", "steps"), g("steps"), minimum=1) if get("grid", "steps") is not None else None
    if steps is not None and get("grid", "t_max") is not None:
        raise ScenarioError(f"{g('steps')}: give either steps or t_max, not both")
    t_max = _float(get("grid", "t_max"), g("t_max")) if get("grid", "t_max") is not None else t0 + 20.0
    grid = _make_grid(t0, dt, t_max, steps, loc.where("grid"))

    # analyses
    a = lambda key: loc.where("analyses", key)  # noqa: E731
    run_raw = get("analyses", "run")
    if not run_raw or not run_raw.strip():
        raise ScenarioError(f"{a('run')}: at least one analysis must be selected")
    requested = [item.strip() for item in run_raw.split(",") if item.strip()]
    for item in requested:
        if item not in ANALYSIS_ORDER:
            raise ScenarioError(f"{a('run')}: unknown analysis {item!r} (choose from {', '.join(ANALYSIS_ORDER)})")
    if len(set(requested)) != len(requested):
        raise ScenarioError(f"{a('run')}: analysis listed twice")
    analyses = tuple(x for x in ANALYSIS_ORDER if x in requested)
    opts = {}
    if get("analyses", "tolerance") is not None:
        opts["tolerance"] = _float(get("analyses", "tolerance"), a("tolerance"), positive=True)
    if get("analyses", "kept") is not None:
        data = _json(get("analyses", "kept"), a("kept"))
        if not isinstance(data, list) or not data or not all(isinstance(k, int) for k in data):
            raise ScenarioError(f"{a('kept')}: expected a non-empty list of environment indices")
        opts["kept"] = tuple(data)
    for key in ("nz_t_max", "nz_dt"):
        if get("analyses", key) is not None:
            opts[key] = _float(get("analyses", key), a(key), positive=True)
    if get("analyses", "pairs") is not None:
        opts["pairs"] = _pairs(get("analyses", "pairs"), a("pairs"))
    for key in ("m1", "m2"):
        if get("analyses", key) is not None:
            opts[key] = _spin(get("analyses", key), a(key))
    options = AnalysisOptions(**opts)

    scenario = Scenario(
        name=name,
        params=params,
        custom=custom,
        c=None,
        rho_s=None,
        d=np.eye(1),
        grid=grid,
        analyses=analyses,
        options=options,
        out_dir=(get("output", "dir") or ".").strip(),
        prefix=(get("output", "prefix") or "").strip(),
    )
    try:
        model = scenario.model
    except OpenMapError as exc:
        raise ScenarioError(f"{loc.where('model')}: {exc}") from None

    # initial state, resolved against the model dimensions
    c_raw = get("initial", "c") or "maximally-coherent"
    d_raw = get("initial", "d") or "vacuum"
    c, rho_s = _system_state(c_raw, model.n, loc.where("initial", "c"))
    d = _env_state(d_raw, model.N, loc.where("initial", "d"))
    labels = {"c": c_raw.strip(), "d": d_raw.strip()}
    scenario = replace(scenario, c=c, rho_s=rho_s, d=d, labels=labels)
    scenario.__dict__["model"] = model
    try:
        scenario.state
    except OpenMapError as exc:
        raise ScenarioError(f"{loc.where('initial')}: {exc}") from None
    for k in options.kept:
        if not 0 <= k < model.N:
            raise ScenarioError(f"{a('kept')}: environment index {k} outside 0..{model.N - 1}")
    if options.pairs is not None:
        for k, l in options.pairs:
            if not (0 <= k < model.n and 0 <= l < model.n) or k == l:
                raise ScenarioError(f"{a('pairs')}: ({k}, {l}) is not an off-diagonal system pair")
    return scenario


def load_scenario(path) -> Scenario:
    from pathlib import Path

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return parse_scenario(text, name=path.stem)


def _matrix_json(m) -> str:
    m = np.asarray(m, dtype=complex)
    return json.dumps([[[float(v.real), float(v.imag)] for v in row] for row in m])


PRESET_TEXT = {
    "dephasing": f"""\
[model]
variant = dephasing
j = 1/2
omega = 1.0
modes = {json.dumps([[w, g] for w, g in DEFAULT_MODES])}
n_max = 5

[initial]
c = maximally-coherent
d = vacuum

[grid]
t0 = 0
dt = 0.02
t_max = 20

[analyses]
run = markov, divisibility, coherence
pairs = [[0, 1]]
""",
    "jsquared": """\
[model]
variant = jsquared
j = 1/2
omega = 1.0
beta = 1.0
eta = 0.3
n_max = 6

[initial]
c = maximally-coherent
d = vacuum

[grid]
t0 = 0
dt = 0.02
t_max = 20

[analyses]
run = markov, divisibility, nz, coherence, zassenhaus, appendix-e
kept = [0]
m1 = 1/2
m2 = -1/2
""",
    "counterexample": f"""\
[model]
variant = custom
h_s = {_matrix_json(SIGMA_Z)}
h_e = {_matrix_json(SIGMA_Z)}
h_se = {_matrix_json(0.4 * np.kron(SIGMA_X, SIGMA_X))}

[initial]
c = maximally-coherent
d = maximally-mixed

[grid]
t0 = 0
dt = 0.02
t_max = 20

[analyses]
run = markov, divisibility, nz, coherence, zassenhaus
kept = [0]
""",
}


def preset_scenario(name: str) -> Scenario:
    if name not in PRESET_TEXT:
        raise ScenarioError(f"unknown preset {name!r} (choose from {', '.join(PRESET_TEXT)})")
    return parse_scenario(PRESET_TEXT[name], name=name)
