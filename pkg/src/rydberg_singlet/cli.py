"""Command-line interface.

Exit codes: 0 when the run finished with every invariant within tolerance,
1 when it finished but an invariant was breached, 2 for configuration
errors or an aborted integration.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

from .dynamics import IntegrationError
from .scenarios import (
    PRESETS,
    ScenarioError,
    angular_mhz,
    load_scenario,
    preset_summary,
    run_noise_ensemble,
    run_scenario,
    run_sweep,
    to_physical_units,
    write_sweep_csv,
)
from .scenarios.units import CESIUM_RABI_MHZ

log = logging.getLogger("rydberg_singlet")


def _scenario(args) -> "Scenario":
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise ScenarioError(f"unknown preset {args.preset!r}; run 'presets' for the list")
        return PRESETS[args.preset]
    return load_scenario(args.config)


def _report(issues: list[str]) -> int:
    for msg in issues:
        print(f"invariant breach: {msg}", file=sys.stderr)
    return 1 if issues else 0


def cmd_run(args) -> int:
    s = _scenario(args)
    if args.dt is not None:
        s = s.with_(dt=args.dt)
    if args.t_end is not None:
        s = s.with_(t_end_2pi=args.t_end)
    out = args.out or s.output or sys.stdout
    if s.sweep is not None:
        log.info("scenario %s has a sweep section; running the single point", s.name)
    res = run_scenario(s.with_(sweep=None), out)
    tr = res.trajectory
    print(
        f"{s.name}: t_end/2pi = {tr.t_over_2pi[-1]:g}, F = {tr['F'][-1]:.6f}, "
        f"max |tr - 1| = {tr.max_trace_error:.2e}, min eig = {tr.min_eigenvalue:.2e}",
        file=sys.stderr,
    )
    return _report(res.issues)


def cmd_sweep(args) -> int:
    s = load_scenario(args.config)
    if s.sweep is None:
        raise ScenarioError(f"{args.config} has no sweep section")
    res = run_sweep(s, jobs=args.jobs)
    write_sweep_csv(res, args.out)
    print(f"{s.name}: {len(res.points)} grid points written to {args.out}", file=sys.stderr)
    return _report(res.issues)


def cmd_noise(args) -> int:
    s = load_scenario(args.config)
    res = run_noise_ensemble(s, args.trajectories, args.seed, args.out)
    ens = res.ensemble
    print(
        f"{s.name}: {ens.size} trajectories, F_mean = {ens.mean()[-1]:.6f}"
        + (f" +/- {ens.standard_error()[-1]:.2e}" if ens.size > 1 else "")
        + f", averaged equation F = {res.averaged['F'][-1]:.6f}",
        file=sys.stderr,
    )
    return _report(res.issues)


def cmd_presets(args) -> int:
    for name in PRESETS:
        print(preset_summary(name))
    return 0


def cmd_units(args) -> int:
    s = PRESETS["fig3e"]
    p = s.params if args.gamma is None else s.params.with_(gamma=args.gamma)
    conv = to_physical_units(2 * math.pi * args.t_2pi, p, angular_mhz(args.rabi_mhz))
    print(f"Omega_r t/2pi = {args.t_2pi:g}: {conv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydberg-singlet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate one scenario and write its trajectory CSV")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="built-in scenario name")
    src.add_argument("--config", help="scenario file")
    run.add_argument("--out", help="CSV path (default: scenario output, else stdout)")
    run.add_argument("--dt", type=float, help="integration step (dimensionless)")
    run.add_argument("--t-end", type=float, help="horizon in units of Omega_r t / 2 pi")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="evaluate a parameter grid")
    sw.add_argument("--config", required=True, help="scenario file or preset name with a sweep section")
    sw.add_argument("--out", required=True, help="CSV path")
    sw.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    sw.set_defaults(func=cmd_sweep)

    nz = sub.add_parser("noise", help="Monte Carlo noise ensemble next to the averaged equation")
    nz.add_argument("--config", required=True, help="scenario file or preset name")
    nz.add_argument("--trajectories", type=int, required=True)
    nz.add_argument("--seed", type=int, required=True)
    nz.add_argument("--out", required=True, help="CSV path")
    nz.set_defaults(func=cmd_noise)

    pr = sub.add_parser("presets", help="list built-in scenarios")
    pr.set_defaults(func=cmd_presets)

    un = sub.add_parser("units", help="convert a dimensionless time to milliseconds")
    un.add_argument("--t-2pi", type=float, required=True, help="Omega_r t / 2 pi")
    un.add_argument("--rabi-mhz", type=float, default=CESIUM_RABI_MHZ, help="Omega_r / 2 pi in MHz")
    un.add_argument("--gamma", type=float, default=None, help="gamma / Omega_r (default: preset value)")
    un.set_defaults(func=cmd_units)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, IntegrationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
