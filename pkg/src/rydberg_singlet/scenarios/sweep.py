"""Parameter grids over scenarios.

Grid points that differ only in parameters, couplings or initial state are
integrated together as one batch. Runs are grouped into fixed-size chunks
in grid order, and ``jobs`` only decides how many chunks run at once, so the
output does not depend on the worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from ..control import ControlledGenerator
from ..dynamics import TWO_PI, integrate_many
from .config import ConfigValidationError, Scenario, SweepSpec, default_dt
from .runner import _write_rows, health_issues, run_scenario

__all__ = ["SweepResult", "run_sweep", "write_sweep_csv", "CHUNK_RUNS"]

CHUNK_RUNS = 64


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: list[tuple[float, ...]]
    values: np.ndarray
    issues: list[str] = field(default_factory=list)

    @property
    def healthy(self) -> bool:
        return not self.issues

    @property
    def header(self) -> tuple[str, ...]:
        return tuple(ax.name for ax in self.spec.axes) + (self.spec.observable,)

    def grid(self) -> np.ndarray:
        """Values shaped ``(len(axis1), len(axis2))`` (or 1-d for one axis)."""
        shape = tuple(len(ax.values) for ax in self.spec.axes)
        return self.values.reshape(shape)


def _layout(spec: SweepSpec) -> tuple[list[tuple[tuple[str, float], ...]], list[float] | None]:
    """Distinct runs (non-time coordinates) and the sampled times, if any."""
    names = [ax.name for ax in spec.axes]
    other = [i for i, n in enumerate(names) if n != "time"]
    times = None
    if "time" in names:
        times = [float(v) for v in spec.axes[names.index("time")].values]
    runs: list[tuple[tuple[str, float], ...]] = []
    seen = set()
    for pt in spec.points():
        key = tuple((names[i], pt[i]) for i in other)
        if key not in seen:
            seen.add(key)
            runs.append(key)
    return runs, times


def _time_grid(spec: SweepSpec, times: list[float] | None) -> tuple[float, float, list[float]]:
    """``(t_end_2pi, record_every_2pi, sample times)`` for one run."""
    if times is None:
        at = spec.at_2pi
        return at, (at if at > 0 else 1.0), [at]
    ax = next(a for a in spec.axes if a.name == "time")
    ratio = ax.start / ax.step
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigValidationError("sweep.axis.start", "time axis must start at a multiple of its step")
    return max(times), ax.step, times


def _evaluate_chunk(args) -> tuple[list[list[float]], list[str]]:
    base, spec, runs, times = args
    t_end_2pi, every_2pi, samples = _time_grid(spec, times)
    scenarios = []
    for run in runs:
        s = base
        for key, value in run:
            s = s.with_key(key, value)
        scenarios.append(s.with_(t_end_2pi=t_end_2pi, record_every_2pi=every_2pi, sweep=None, output=None))

    issues: list[str] = []
    if any(s.noise.active for s in scenarios):
        trajs = []
        for run, s in zip(runs, scenarios):
            res = run_scenario(s)
            trajs.append(res.trajectory)
            issues += [f"{dict(run)}: {m}" for m in res.issues]
    else:
        first = scenarios[0]
        params = [s.params for s in scenarios]
        same_params = all(q == params[0] for q in params)
        gen = ControlledGenerator(
            params[0] if same_params else params,
            first.model,
            np.array([s.control.lambda1 for s in scenarios]),
            np.array([s.control.lambda2 for s in scenarios]),
            first.control.mode,
        )
        dt = first.dt if first.dt is not None else min(default_dt(q, first.model) for q in params)
        rho0s = [s.initial.density_matrix(first.model) for s in scenarios]
        trajs = integrate_many(rho0s, gen, t_end_2pi * TWO_PI, dt, every_2pi * TWO_PI)
        for run, tr in zip(runs, trajs):
            issues += [f"{dict(run)}: {m}" for m in health_issues(tr)]

    values = []
    for tr in trajs:
        row = []
        for t in samples:
            i = int(np.argmin(np.abs(tr.t_over_2pi - t)))
            if abs(tr.t_over_2pi[i] - t) > 1e-6 * max(1.0, t):
                raise RuntimeError(f"time {t} is not on the record grid")
            row.append(float(tr[spec.observable][i]))
        values.append(row)
    return values, issues


def run_sweep(s: Scenario, jobs: int | None = None) -> SweepResult:
    """Evaluate ``s.sweep`` over its grid (rows in axis1-major order)."""
    spec = s.sweep
    if spec is None:
        raise ConfigValidationError("sweep", "scenario has no sweep section")
    runs, times = _layout(spec)
    chunks = [runs[i : i + CHUNK_RUNS] for i in range(0, len(runs), CHUNK_RUNS)]
    tasks = [(s.with_(sweep=None), spec, chunk, times) for chunk in chunks]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_evaluate_chunk, tasks))
    else:
        results = [_evaluate_chunk(t) for t in tasks]

    per_run: dict[tuple, list[float]] = {}
    issues: list[str] = []
    for chunk, (vals, iss) in zip(chunks, results):
        per_run.update(zip(chunk, vals))
        issues += iss

    names = [ax.name for ax in spec.axes]
    points = spec.points()
    values = []
    for pt in points:
        key = tuple((n, v) for n, v in zip(names, pt) if n != "time")
        row = per_run[key]
        values.append(row[times.index(pt[names.index("time")])] if times is not None else row[0])
    return SweepResult(spec, points, np.array(values), issues)


def write_sweep_csv(result: SweepResult, target: str | Path | TextIO) -> None:
    rows = [tuple(pt) + (v,) for pt, v in zip(result.points, result.values)]
    _write_rows(target, result.header, rows)
