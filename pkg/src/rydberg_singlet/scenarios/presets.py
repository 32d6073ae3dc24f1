"""Built-in scenarios for the standard protocols.

All share ``Delta_r = 50``, ``U_rr = 100``, ``gamma = 0.002``,
``Omega_m = 0.01`` and ``Delta_m = 0.005`` (units of ``Omega_r``) unless a
sweep axis overrides them. Controlled presets use ``lambda = 0.08``.

The coupling sweeps ``fig5a`` and ``fig5b`` span ``lambda in [0, 0.8]`` so
the grid covers both the default coupling 0.08 and couplings ten times
larger.
"""
from __future__ import annotations

from ..control import ControlConfig
from ..model import SystemParams
from .config import AxisSpec, InitialSpec, NoiseSpec, Scenario, SweepSpec

__all__ = ["PRESETS", "preset_summary"]

_BASE = SystemParams()
_BOTH = ControlConfig(0.08, 0.08, "both")
_H1 = ControlConfig(0.08, 0.0, "only_H1")
_OFF = ControlConfig(mode="off")


def _controlled(name: str, label: str) -> Scenario:
    return Scenario(name=name, initial=InitialSpec("named", label), control=_BOTH, t_end_2pi=3000.0)


PRESETS: dict[str, Scenario] = {
    "fig2a": Scenario(name="fig2a", initial=InitialSpec("uniform"), control=_OFF, t_end_2pi=3000.0),
    "fig2b": Scenario(
        name="fig2b",
        initial=InitialSpec("uniform"),
        control=_OFF,
        sweep=SweepSpec(
            AxisSpec("params.omega_m", 0.0, 0.03, 0.0006),
            AxisSpec("params.gamma", 0.00025, 0.005, 0.00025),
            observable="P_D",
            at_2pi=1500.0,
        ),
    ),
    "fig3a": _controlled("fig3a", "00"),
    "fig3e": _controlled("fig3e", "10"),
    "fig3i": _controlled("fig3i", "11"),
    "fig4a": Scenario(
        name="fig4a",
        initial=InitialSpec("mix_00_10", eta=0.5),
        control=_H1,
        t_end_2pi=3000.0,
        sweep=SweepSpec(AxisSpec("initial.eta", 0.0, 1.0, 0.1), observable="F", at_2pi=600.0),
    ),
    "fig4b": Scenario(
        name="fig4b",
        initial=InitialSpec("mix_10_01", eta=0.5),
        control=_H1,
        t_end_2pi=3000.0,
        sweep=SweepSpec(AxisSpec("initial.eta", 0.0, 1.0, 0.1), observable="F", at_2pi=600.0),
    ),
    "fig5a": Scenario(
        name="fig5a",
        initial=InitialSpec("named", "01"),
        control=_BOTH,
        sweep=SweepSpec(
            AxisSpec("control.lambda1", 0.0, 0.8, 0.04), AxisSpec("control.lambda2", 0.0, 0.8, 0.04), at_2pi=1500.0
        ),
    ),
    "fig5b": Scenario(
        name="fig5b",
        initial=InitialSpec("named", "10"),
        control=_BOTH,
        sweep=SweepSpec(
            AxisSpec("control.lambda1", 0.0, 0.8, 0.04), AxisSpec("control.lambda2", 0.0, 0.8, 0.04), at_2pi=1500.0
        ),
    ),
    "fig5c": Scenario(
        name="fig5c",
        initial=InitialSpec("named", "10"),
        control=_H1,
        sweep=SweepSpec(AxisSpec("params.gamma", 0.001, 0.005, 0.0005), AxisSpec("time", 0.0, 3000.0, 50.0)),
    ),
    "fig6": Scenario(
        name="fig6",
        model="full",
        initial=InitialSpec("named", "10"),
        control=_H1,
        noise=NoiseSpec(etas=(0.05, 0.0, 0.0, 0.0), trajectories=2000, seed=2024),
        t_end_2pi=2500.0,
    ),
}


def preset_summary(name: str) -> str:
    s = PRESETS[name]
    p = s.params
    c = s.control
    parts = [
        f"{name}: model={s.model}",
        f"(Delta_r, gamma, Omega_m, Delta_m, U_rr)=({p.delta_r:g}, {p.gamma:g}, {p.omega_m:g}, {p.delta_m:g}, {p.u_rr:g})",
        f"initial={s.initial.describe()}",
        f"control={c.mode}(lambda1={c.lambda1:g}, lambda2={c.lambda2:g})",
    ]
    if s.noise.active:
        parts.append("noise eta=(" + ", ".join(f"{e:g}" for e in s.noise.etas) + ")")
    if s.sweep is not None:
        axes = " x ".join(f"{a.name}[{a.start:g}:{a.stop:g}:{a.step:g}]" for a in s.sweep.axes)
        at = "" if any(a.name == "time" for a in s.sweep.axes) else f"@{s.sweep.at_2pi:g}"
        parts.append(f"sweep {axes} -> {s.sweep.observable}{at}")
    else:
        parts.append(f"t_end_2pi={s.t_end_2pi:g}")
    return ", ".join(parts)
