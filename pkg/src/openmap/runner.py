"""Execute the analyses selected in a scenario and write CSV/JSON artifacts."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .coherence import classify_coherence, coherence_trace, population_drift
from .divisibility import (
    divisibility_report,
    gamma_block_decompose,
    markov_timescales,
    state_divisibility_residual,
)
from .dynamics import TimeGrid, env_correlation, markov_condition_check
from .errors import OpenMapError, UnsupportedInputError
from .expansions import closed_form_comparison, generators, truncation_error
from .io import emit_timeseries, write_json
from .projection import (
    build_projectors,
    coupling_leak_norm,
    memory_term_series,
    propagate_projected,
    time_local_check,
)
from .scenario import Scenario

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MARKOV_SAMPLES = 41
ZASSENHAUS_DTS = (0.1, 0.05, 0.025, 0.0125)
CLOSED_FORM_NMAX = 6


@dataclass
class RunReport:
    scenario: dict
    results: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any("error" in block for block in self.results.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "versions": {"openmap": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
            "scenario": self.scenario,
            "tolerances": {
                "divisible": self.scenario["options"]["tolerance"],
                "time_local": 1e-6,
                "finite_difference_step": 1e-5,
            },
            "results": self.results,
            "timings_s": self.timings,
            "files": self.files,
            "status": "ok" if self.ok else "error",
        }


def _split_triples(grid: TimeGrid):
    t0, span = grid.t0, grid.t_end - grid.t0
    fr = ((0.0, 0.25, 0.5), (0.0, 0.5, 1.0), (0.25, 0.5, 1.0), (0.0, 0.1, 0.2))
    return [tuple(t0 + f * span for f in triple) for triple in fr]


def _subsample(times: np.ndarray, count: int) -> np.ndarray:
    if len(times) <= count:
        return times
    idx = np.unique(np.round(np.linspace(0, len(times) - 1, count)).astype(int))
    return times[idx]


class _Runner:
    def __init__(self, scenario: Scenario, out_dir: Path):
        self.s = scenario
        self.model = scenario.model
        self.state = scenario.state
        self.out_dir = out_dir
        self.files = []

    def _csv(self, stem: str, columns: dict) -> str:
        name = f"{self.s.prefix}{stem}.csv" if self.s.prefix else f"{stem}.csv"
        emit_timeseries(columns, self.out_dir / name)
        self.files.append(name)
        return name

    def markov(self) -> dict:
        scales = markov_timescales(self.model)
        times = _subsample(self.s.grid.times, MARKOV_SAMPLES)
        ratio, drift, corr = [], [], []
        for t in times:
            r, dr = markov_condition_check(self.model, self.state, t, self.s.grid.t0)
            ratio.append(r)
            drift.append(dr)
            corr.append(env_correlation(self.model, self.state, self.s.grid.t0, t))
        csv_name = self._csv("markov", {
            "t": times, "correlation_ratio": np.array(ratio), "env_drift": np.array(drift),
            "env_correlation": np.array(corr),
        })
        return {
            "timescales": scales.to_dict(),
            "max_correlation_ratio": float(max(ratio)),
            "max_env_drift": float(max(drift)),
            "csv": csv_name,
        }

    def divisibility(self) -> dict:
        triples = _split_triples(self.s.grid)
        report = divisibility_report(self.model, self.state.d, triples, self.s.options.tolerance)
        out = report.to_dict()
        out["state_residuals"] = [state_divisibility_residual(self.model, self.state, *tr) for tr in triples]
        try:
            blocks = gamma_block_decompose(self.model, self.state, self.s.grid.t_end, self.s.grid.t0)
            out["max_block_residual"] = max(b[2] for b in blocks)
        except UnsupportedInputError as exc:
            out["max_block_residual"] = None
            out["block_note"] = str(exc)
        return out

    def nz(self) -> dict:
        opts = self.s.options
        t_max = min(opts.nz_t_max, self.s.grid.t_end - self.s.grid.t0)
        grid = TimeGrid.span(self.s.grid.t0, self.s.grid.t0 + t_max, opts.nz_dt)
        pair = build_projectors(self.model.spec, opts.kept)
        memory = memory_term_series(self.model, pair, self.state, grid)
        local, deviation = time_local_check(self.model, pair, self.state, grid)
        traj = propagate_projected(self.model, self.state, pair, grid)
        csv_name = self._csv("nz", {"t": grid.times, "memory_norm": memory})
        return {
            "kept": list(pair.kept),
            "window": [grid.t0, grid.t_end, grid.dt],
            "coupling_leak_norm": coupling_leak_norm(self.model, pair),
            "max_memory_norm": float(memory.max()),
            "time_local": bool(local),
            "time_local_deviation": deviation,
            "projected_integration_deviation": traj.max_deviation,
            "warning": traj.warning,
            "csv": csv_name,
        }

    def coherence(self) -> dict:
        trace = coherence_trace(self.model, self.state, self.s.grid, self.s.options.pairs)
        drift = population_drift(self.model, self.state, self.s.grid)
        csv_name = self._csv("coherence", trace.columns())
        gammas = {f"{k}_{l}": {"min": float(np.min(g)), "max": float(np.max(g))} for (k, l), g in trace.gamma.items()}
        return {
            "status": classify_coherence(trace.l1_coherence),
            "population_drift": drift,
            "l1_initial": float(trace.l1_coherence[0]),
            "l1_final": float(trace.l1_coherence[-1]),
            "l1_min": float(trace.l1_coherence.min()),
            "gamma": gammas,
            "csv": csv_name,
        }

    def zassenhaus(self) -> dict:
        rows = {"dt": np.array(ZASSENHAUS_DTS)}
        for order in (1, 2, 3, 4):
            rows[f"error_order{order}"] = np.array(
                [truncation_error(*generators(self.model, dt), order) for dt in ZASSENHAUS_DTS]
            )
        csv_name = self._csv("zassenhaus", rows)
        e2 = rows["error_order2"]
        ratios = (e2[:-1] / e2[1:]).tolist() if np.all(e2[1:] > 0) else []
        return {
            "dts": list(ZASSENHAUS_DTS),
            "errors": {k: v.tolist() for k, v in rows.items() if k != "dt"},
            "order2_halving_ratios": ratios,
            "csv": csv_name,
        }

    def closed_form(self) -> dict:
        p = self.s.params
        if self.s.custom is not None or p.variant != "jsquared":
            raise UnsupportedInputError("appendix-e analysis requires the jsquared model")
        m1 = p.j if self.s.options.m1 is None else self.s.options.m1
        m2 = -p.j if self.s.options.m2 is None else self.s.options.m2
        n_max = min(p.n_max, CLOSED_FORM_NMAX)
        cmp = closed_form_comparison(p.j, m1, m2, p.omega, p.beta, p.eta, self.s.grid.times, n_max)
        csv_name = self._csv("closed_form", cmp.columns())
        summary = cmp.summary()
        summary.update(m1=m1, m2=m2, n_max=n_max, csv=csv_name,
                       note="closed-form bosonic sums evaluated as stated; deviation curve reported")
        return summary


def run_scenario(scenario: Scenario, out_dir=None) -> RunReport:
    """Run every selected analysis in the fixed order and write the artifacts.

    Each analysis yields either a result block or an ``error`` block.  The
    JSON report is written to ``<out_dir>/<prefix>report.json``.
    """
    out = Path(out_dir if out_dir is not None else scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = _Runner(scenario, out)
    report = RunReport(scenario.echo())
    handlers = {
        "markov": runner.markov,
        "divisibility": runner.divisibility,
        "nz": runner.nz,
        "coherence": runner.coherence,
        "zassenhaus": runner.zassenhaus,
        "appendix-e": runner.closed_form,
    }
    for name in scenario.analyses:
        start = time.perf_counter()
        try:
            report.results[name] = handlers[name]()
        except OpenMapError as exc:
            log.error("%s failed: %s", name, exc)
            report.results[name] = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        report.timings[name] = round(time.perf_counter() - start, 6)
    report.files = list(runner.files)
    json_name = f"{scenario.prefix}report.json" if scenario.prefix else "report.json"
    write_json(report.to_dict(), out / json_name)
    report.files.append(json_name)
    return report
