"""Executing scenarios and writing their trajectories as CSV."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from ..control import ControlConfig, controlled_generator
from ..dynamics import TWO_PI, Trajectory, integrate
from ..noise import (
    ControlReplay,
    EnsembleResult,
    ReplayGenerator,
    build_noise_hamiltonians,
    stochastic_ensemble,
)
from ..qops import hermitian_eigen
from .config import Scenario, default_dt

__all__ = [
    "CSV_HEADER",
    "HEALTH_TOLERANCE",
    "RunResult",
    "NoiseRunResult",
    "health_issues",
    "run_scenario",
    "control_source",
    "run_noise_ensemble",
    "write_trajectory_csv",
    "read_csv_columns",
]

log = logging.getLogger(__name__)

CSV_HEADER = ("t_dimensionless", "t_over_2pi", "P_D", "F", "purity", "f1", "f2", "A1", "A2", "trace_err", "min_eig")
HEALTH_TOLERANCE = 1e-8


def fmt(x: float) -> str:
    """17 significant digits, enough for an exact float round trip."""
    return "%.17g" % x


@dataclass(frozen=True)
class RunResult:
    scenario: Scenario
    trajectory: Trajectory
    issues: list[str] = field(default_factory=list)

    @property
    def healthy(self) -> bool:
        return not self.issues


def health_issues(traj: Trajectory, tol: float = HEALTH_TOLERANCE) -> list[str]:
    """Invariant breaches along a trajectory, as readable messages."""
    issues = []
    if traj.max_trace_error > tol:
        issues.append(f"trace drift {traj.max_trace_error:.3e} exceeds {tol:g}")
    mins = traj["min_eig"]
    if np.isfinite(mins).any() and np.nanmin(mins) < -tol:
        issues.append(f"minimum eigenvalue {np.nanmin(mins):.3e} below -{tol:g}")
    if traj.renormalizations:
        issues.append(f"{traj.renormalizations} trace renormalization events")
    return issues


def control_source(s: Scenario) -> Trajectory:
    """Noiseless closed-loop run whose control fields are replayed under noise."""
    model = s.noise.source_model
    rho0 = s.initial.density_matrix(model)
    dt = default_dt(s.params, model) if s.dt is None or s.resolved_method == "split" else s.dt
    return integrate(rho0, controlled_generator(s.params, s.control, model), s.t_end, dt, s.record_every)


def _replay_for(s: Scenario) -> ControlReplay:
    if s.control.mode == "off" or not any(s.control.active_lambdas):
        times = np.array([0.0, max(s.t_end, 1e-300)])
        return ControlReplay(times, np.zeros(2), np.zeros(2))
    return ControlReplay.from_trajectory(control_source(s))


def run_scenario(s: Scenario, out: str | Path | TextIO | None = None) -> RunResult:
    """Integrate a scenario and optionally write its CSV.

    Noise-free scenarios integrate the closed-loop controlled master equation
    directly. With averaged noise the control fields are recorded first in a
    noiseless run and replayed into the noisy equation.
    """
    rho0 = s.initial.density_matrix(s.model)
    if s.noise.active:
        channels = build_noise_hamiltonians(s.params, s.noise.etas)
        gen = ReplayGenerator(s.params, s.control, _replay_for(s), channels, s.model)
    else:
        gen = controlled_generator(s.params, s.control, s.model)
    traj = integrate(rho0, gen, s.t_end, s.step, s.record_every, method=s.resolved_method)
    target = out if out is not None else s.output
    if target is not None:
        write_trajectory_csv(traj, target)
    result = RunResult(s, traj, health_issues(traj))
    for msg in result.issues:
        log.warning("%s: %s", s.name, msg)
    return result


def write_trajectory_csv(traj: Trajectory, target: str | Path | TextIO) -> None:
    rows = zip(
        traj.times,
        traj.t_over_2pi,
        traj["P_D"],
        traj["F"],
        traj["purity"],
        traj["f1"],
        traj["f2"],
        traj["A1"],
        traj["A2"],
        traj["trace"] - 1.0,
        traj["min_eig"],
    )
    _write_rows(target, CSV_HEADER, rows)


def _write_rows(target, header, rows) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(float(x)) for x in row])

    if isinstance(target, (str, Path)):
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
    else:
        emit(target)


def read_csv_columns(source: str | Path | TextIO) -> dict[str, np.ndarray]:
    """Columns of a CSV written by this package, keyed by header name."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = [[float(x) for x in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


# ------------------------------------------------------------- Monte Carlo


NOISE_HEADER = ("t_dimensionless", "t_over_2pi", "F_mean", "F_stderr", "F_averaged", "trajectories")


@dataclass(frozen=True)
class NoiseRunResult:
    scenario: Scenario
    ensemble: EnsembleResult
    averaged: Trajectory
    issues: list[str] = field(default_factory=list)

    @property
    def healthy(self) -> bool:
        return not self.issues


def run_noise_ensemble(
    s: Scenario,
    trajectories: int | None = None,
    seed: int | None = None,
    out: str | Path | TextIO | None = None,
) -> NoiseRunResult:
    """Monte Carlo noise realizations next to the averaged master equation.

    Exactly one noise amplitude must be nonzero. With ``gamma = 0`` the
    realizations are state vectors; otherwise they are density matrices that
    also undergo spontaneous emission.
    """
    active = [k for k, eta in enumerate(s.noise.etas) if eta]
    if len(active) != 1:
        raise ValueError(f"the Monte Carlo run needs exactly one active noise channel, got {len(active)}")
    n_traj = trajectories if trajectories is not None else s.noise.trajectories
    base_seed = seed if seed is not None else s.noise.seed
    channels = build_noise_hamiltonians(s.params, s.noise.etas)
    replay = _replay_for(s)
    rho0 = s.initial.density_matrix(s.model)
    decay = s.params.gamma > 0
    state = rho0 if decay else _ket_of(rho0.mat)
    dt = s.dt if s.dt is not None else default_dt(s.params, s.model)
    ens = stochastic_ensemble(
        state, channels[active[0]], s.params, n_traj, base_seed, dt, s.t_end, s.model,
        s.control, replay, decay, s.record_every,
    )
    avg_gen = ReplayGenerator(s.params, s.control, replay, [channels[active[0]]], s.model)
    averaged = integrate(rho0, avg_gen, s.t_end, dt, s.record_every)
    if out is None:
        out = s.output
    if out is not None:
        rows = zip(ens.times, ens.times / TWO_PI, ens.mean(), ens.standard_error() if n_traj > 1 else np.zeros(len(ens.times)),
                   averaged["F"], np.full(len(ens.times), n_traj))
        _write_rows(out, NOISE_HEADER, rows)
    return NoiseRunResult(s, ens, averaged, health_issues(averaged))


def _ket_of(rho: np.ndarray) -> np.ndarray:
    eig = hermitian_eigen(rho)
    if abs(eig.eigenvalues[-1] - 1.0) > 1e-10:
        raise ValueError("a state-vector ensemble needs a pure initial state")
    return eig.vector(-1)
