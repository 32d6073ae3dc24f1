"""Scenario description and its flat ``key = value`` text format.

One setting per line, ``#`` starts a comment, nested settings use dotted
keys. Times are given as ``Omega_r t / 2 pi`` (the ``_2pi`` suffix).

Example::

    model = effective
    params.gamma = 0.002
    initial = 10
    control.mode = only_H1
    control.lambda1 = 0.08
    time.t_end_2pi = 1500

Keys
----
``model``
    ``effective`` (default), ``effective-branching`` or ``full``.
``params.<field>``
    Any :class:`~rydberg_singlet.model.SystemParams` field except ``eta``
    (``omega_r``, ``delta_r``, ``omega_m``, ``delta_m``, ``u_rr``, ``gamma``).
``initial``
    A named state (``00 01 10 11 B D rr`` and, in the full model, any product
    label such as ``0r``), ``uniform`` for ``(|00>+|01>+|10>+|11>)/2``,
    ``superposition`` with ``initial.amplitudes``, ``mixture`` with
    ``initial.weights``, or the one-parameter families ``mix_00_10``
    (``(1-eta)|00><00| + eta|10><10|``) and ``mix_10_01``
    (``(1-eta)|10><10| + eta|01><01|``) with ``initial.eta``.
``initial.amplitudes`` / ``initial.weights``
    Comma-separated ``label:value`` pairs; amplitudes may be complex
    (``0.5+0.5j``).
``control.mode``, ``control.lambda1``, ``control.lambda2``
    Feedback control; mode is ``both``, ``only_H1``, ``only_H2`` or ``off``.
``noise.eta1`` .. ``noise.eta4``, ``noise.trajectories``, ``noise.seed``
    Averaged noise amplitudes and Monte Carlo settings. With any ``eta``
    nonzero the control fields are first computed from a noiseless run in
    ``noise.source_model`` (default ``effective``) and then replayed.
``time.t_end_2pi``, ``time.dt``, ``time.record_every_2pi``
    Horizon, step (dimensionless) and sampling interval.
``integrator.method``
    ``auto`` (default), ``rk4`` or ``split``.
``output``
    CSV path.
``sweep.axis1.name`` / ``.start`` / ``.stop`` / ``.step`` (and ``sweep.axis2.*``), ``sweep.observable``, ``sweep.at_2pi``
    Parameter grid; see :class:`~rydberg_singlet.scenarios.sweep.SweepSpec`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..control import MODES, ControlConfig
from ..dynamics import TWO_PI, DensityMatrix
from ..model import MODELS, SystemParams, basis_for, named_state

__all__ = [
    "ScenarioError",
    "ConfigParseError",
    "ConfigValidationError",
    "UnknownKeyError",
    "InitialSpec",
    "NoiseSpec",
    "AxisSpec",
    "SweepSpec",
    "Scenario",
    "parse_config",
    "scenario_from_mapping",
    "load_scenario",
    "default_dt",
    "MAX_GRID_POINTS",
]

MAX_GRID_POINTS = 10_000
FAMILIES = ("mix_00_10", "mix_10_01")


class ScenarioError(ValueError):
    """Base class for configuration problems."""


class ConfigParseError(ScenarioError):
    def __init__(self, message: str, line: int, source: str = "<config>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


class ConfigValidationError(ScenarioError):
    def __init__(self, key: str, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"invalid value for {key!r}{where}: {message}")
        self.key = key
        self.line = line


class UnknownKeyError(ScenarioError):
    def __init__(self, key: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown key {key!r}{where}")
        self.key = key
        self.line = line


# ------------------------------------------------------------------ pieces


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "uniform"
    label: str | None = None
    terms: tuple[tuple[str, complex], ...] = ()
    eta: float = 0.0

    def density_matrix(self, model: str) -> DensityMatrix:
        basis = basis_for(model)
        if self.kind == "named":
            return DensityMatrix.pure(self.label, basis)
        if self.kind == "uniform":
            ket = sum(named_state(lab, basis) for lab in ("00", "01", "10", "11")) / 2.0
            return DensityMatrix.from_ket(ket, basis)
        if self.kind == "superposition":
            ket = sum(complex(a) * named_state(lab, basis) for lab, a in self.terms)
            return DensityMatrix.from_ket(ket, basis)
        if self.kind == "mixture":
            return DensityMatrix.mixture([(float(w.real), lab) for lab, w in self.terms], basis)
        if self.kind == "mix_00_10":
            return DensityMatrix.mixture([(1.0 - self.eta, "00"), (self.eta, "10")], basis)
        if self.kind == "mix_10_01":
            return DensityMatrix.mixture([(1.0 - self.eta, "10"), (self.eta, "01")], basis)
        raise ValueError(f"unknown initial state kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "named":
            return f"|{self.label}>"
        if self.kind in FAMILIES:
            return f"{self.kind}(eta={self.eta:g})"
        if self.terms:
            return f"{self.kind}(" + ", ".join(f"{lab}:{v:g}" for lab, v in self.terms) + ")"
        return self.kind


@dataclass(frozen=True)
class NoiseSpec:
    etas: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    trajectories: int = 2000
    seed: int = 0
    source_model: str = "effective"

    @property
    def active(self) -> bool:
        return any(self.etas)


@dataclass(frozen=True)
class AxisSpec:
    name: str
    start: float
    stop: float
    step: float

    @property
    def values(self) -> np.ndarray:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of scenario variations evaluated at one time.

    ``axis2`` is optional. Axis names are scenario keys (``params.omega_m``,
    ``params.gamma``, ``control.lambda1``, ``control.lambda2``,
    ``initial.eta``, ``noise.eta1`` .. ``noise.eta4``) or ``time`` in units of
    ``Omega_r t / 2 pi``, which samples the observable along each run instead
    of at ``at_2pi``. Grids above ``MAX_GRID_POINTS`` points are rejected.
    """

    axis1: AxisSpec
    axis2: AxisSpec | None = None
    observable: str = "F"
    at_2pi: float = 1500.0

    def __post_init__(self) -> None:
        if self.observable not in ("F", "P_D", "purity"):
            raise ConfigValidationError("sweep.observable", f"must be F, P_D or purity, got {self.observable!r}")
        for key, ax in (("sweep.axis1", self.axis1), ("sweep.axis2", self.axis2)):
            if ax is None:
                continue
            if ax.name not in SWEEP_AXES:
                raise ConfigValidationError(f"{key}.name", f"cannot sweep {ax.name!r}; choose from {sorted(SWEEP_AXES)}")
            if not (ax.step > 0 and ax.stop >= ax.start):
                raise ConfigValidationError(f"{key}.step", "need step > 0 and stop >= start")
        if self.axis2 is not None and self.axis1.name == self.axis2.name:
            raise ConfigValidationError("sweep.axis2.name", "both axes sweep the same key")
        if self.size > MAX_GRID_POINTS:
            raise ConfigValidationError("sweep", f"grid has {self.size} points, limit is {MAX_GRID_POINTS}")

    @property
    def axes(self) -> list[AxisSpec]:
        return [self.axis1] if self.axis2 is None else [self.axis1, self.axis2]

    @property
    def size(self) -> int:
        out = 1
        for ax in self.axes:
            out *= len(ax.values)
        return out

    def points(self) -> list[tuple[float, ...]]:
        """Grid points in axis1-major order."""
        if self.axis2 is None:
            return [(float(a),) for a in self.axis1.values]
        return [(float(a), float(b)) for a in self.axis1.values for b in self.axis2.values]


SWEEP_AXES = {
    "time",
    "initial.eta",
    "control.lambda1",
    "control.lambda2",
    "noise.eta1",
    "noise.eta2",
    "noise.eta3",
    "noise.eta4",
} | {f"params.{f.name}" for f in fields(SystemParams) if f.name not in ("eta", "lambda1", "lambda2")}


def default_dt(p: SystemParams, model: str, method: str = "rk4") -> float:
    """Step size tied to the fastest phase: ``0.05 / omega_max``, at most 0.1.

    The full model is dominated by ``max(|Delta_r|, U_rr)``, giving ``5e-4`` at
    the default parameters. The split integrator treats that part exactly and
    only needs to resolve the slow control fields, so it uses ``2 pi / 32``.
    """
    if method == "split":
        return TWO_PI / 32
    if basis_for(model).name == "full":
        fast = max(abs(p.delta_r), abs(p.u_rr), abs(p.omega_r), abs(p.omega_m), abs(p.delta_m))
    else:
        fast = max(p.omega_e if p.delta_r else 0.0, abs(p.omega_m), abs(p.delta_m), p.gamma)
    return min(0.1, 0.05 / fast) if fast > 0 else 0.1


@dataclass(frozen=True)
class Scenario:
    model: str = "effective"
    params: SystemParams = field(default_factory=SystemParams)
    initial: InitialSpec = field(default_factory=InitialSpec)
    control: ControlConfig = field(default_factory=lambda: ControlConfig(mode="off"))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    t_end_2pi: float = 1500.0
    dt: float | None = None
    record_every_2pi: float = 1.0
    method: str = "auto"
    output: str | None = None
    sweep: SweepSpec | None = None
    name: str = "custom"

    @property
    def t_end(self) -> float:
        return self.t_end_2pi * TWO_PI

    @property
    def record_every(self) -> float:
        return self.record_every_2pi * TWO_PI

    @property
    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return "split" if self.noise.active and basis_for(self.model).name == "full" else "rk4"

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else default_dt(self.params, self.model, self.resolved_method)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def with_key(self, key: str, value: float) -> "Scenario":
        """Copy with one sweepable key changed."""
        if key.startswith("params."):
            return replace(self, params=self.params.with_(**{key[7:]: value}))
        if key == "control.lambda1":
            return replace(self, control=replace(self.control, lambda1=value))
        if key == "control.lambda2":
            return replace(self, control=replace(self.control, lambda2=value))
        if key == "initial.eta":
            if self.initial.kind not in FAMILIES:
                raise ConfigValidationError("initial.eta", f"initial state {self.initial.kind!r} has no eta parameter")
            return replace(self, initial=replace(self.initial, eta=value))
        if key.startswith("noise.eta"):
            k = int(key[-1]) - 1
            etas = list(self.noise.etas)
            etas[k] = value
            return replace(self, noise=replace(self.noise, etas=tuple(etas)))
        if key == "time":
            return replace(self, t_end_2pi=value)
        raise UnknownKeyError(key)

    def to_text(self) -> str:
        """Config text that loads back to this scenario."""
        p = self.params
        lines = [f"# scenario {self.name}", f"model = {self.model}"]
        for f in fields(SystemParams):
            if f.name in ("eta", "lambda1", "lambda2"):
                continue
            lines.append(f"params.{f.name} = {getattr(p, f.name)!r}")
        ini = self.initial
        if ini.kind == "named":
            lines.append(f"initial = {ini.label}")
        else:
            lines.append(f"initial = {ini.kind}")
            if ini.kind in FAMILIES:
                lines.append(f"initial.eta = {ini.eta!r}")
            elif ini.kind == "superposition":
                lines.append("initial.amplitudes = " + ", ".join(f"{lab}:{_fmt_complex(a)}" for lab, a in ini.terms))
            elif ini.kind == "mixture":
                lines.append("initial.weights = " + ", ".join(f"{lab}:{w.real!r}" for lab, w in ini.terms))
        c = self.control
        lines += [f"control.mode = {c.mode}", f"control.lambda1 = {c.lambda1!r}", f"control.lambda2 = {c.lambda2!r}"]
        n = self.noise
        lines += [f"noise.eta{k + 1} = {n.etas[k]!r}" for k in range(4)]
        lines += [f"noise.trajectories = {n.trajectories}", f"noise.seed = {n.seed}", f"noise.source_model = {n.source_model}"]
        lines += [f"time.t_end_2pi = {self.t_end_2pi!r}", f"time.record_every_2pi = {self.record_every_2pi!r}"]
        if self.dt is not None:
            lines.append(f"time.dt = {self.dt!r}")
        lines.append(f"integrator.method = {self.method}")
        if self.output:
            lines.append(f"output = {self.output}")
        if self.sweep is not None:
            s = self.sweep
            for i, ax in enumerate(s.axes, start=1):
                lines += [
                    f"sweep.axis{i}.name = {ax.name}",
                    f"sweep.axis{i}.start = {ax.start!r}",
                    f"sweep.axis{i}.stop = {ax.stop!r}",
                    f"sweep.axis{i}.step = {ax.step!r}",
                ]
            lines += [f"sweep.observable = {s.observable}", f"sweep.at_2pi = {s.at_2pi!r}"]
        return "\n".join(lines) + "\n"


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    return repr(z.real) if z.imag == 0 else repr(z).strip("()")


# ----------------------------------------------------------------- parsing


def parse_config(text: str, source: str = "<config>") -> dict[str, tuple[str, int]]:
    """Split config text into ``{key: (raw value, line number)}``."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(ch.isspace() for ch in key):
            raise ConfigParseError(f"malformed key {key!r}", lineno, source)
        if not value:
            raise ConfigParseError(f"missing value for {key!r}", lineno, source)
        if key in out:
            raise ConfigParseError(f"duplicate key {key!r} (first set on line {out[key][1]})", lineno, source)
        out[key] = (value, lineno)
    return out


_PARAM_KEYS = {f"params.{f.name}" for f in fields(SystemParams) if f.name not in ("eta", "lambda1", "lambda2")}
_KNOWN = (
    {"model", "initial", "initial.amplitudes", "initial.weights", "initial.eta", "output", "name"}
    | _PARAM_KEYS
    | {"control.mode", "control.lambda1", "control.lambda2"}
    | {f"noise.eta{k}" for k in range(1, 5)}
    | {"noise.trajectories", "noise.seed", "noise.source_model"}
    | {"time.t_end_2pi", "time.dt", "time.record_every_2pi", "integrator.method"}
    | {f"sweep.axis{i}.{part}" for i in (1, 2) for part in ("name", "start", "stop", "step")}
    | {"sweep.observable", "sweep.at_2pi"}
)


class _Reader:
    def __init__(self, entries: dict[str, tuple[str, int]]):
        self.entries = entries

    def has(self, key: str) -> bool:
        return key in self.entries

    def line(self, key: str) -> int | None:
        return self.entries[key][1] if key in self.entries else None

    def text(self, key: str, default: str | None = None) -> str | None:
        return self.entries[key][0] if key in self.entries else default

    def number(self, key: str, default: float | None = None, minimum: float | None = None) -> float | None:
        if key not in self.entries:
            return default
        raw, line = self.entries[key]
        try:
            val = float(raw)
        except ValueError:
            raise ConfigValidationError(key, f"expected a number, got {raw!r}", line) from None
        if not math.isfinite(val):
            raise ConfigValidationError(key, "must be finite", line)
        if minimum is not None and val < minimum:
            raise ConfigValidationError(key, f"must be >= {minimum}, got {val}", line)
        return val

    def integer(self, key: str, default: int, minimum: int = 0) -> int:
        if key not in self.entries:
            return default
        raw, line = self.entries[key]
        try:
            val = int(raw)
        except ValueError:
            raise ConfigValidationError(key, f"expected an integer, got {raw!r}", line) from None
        if val < minimum:
            raise ConfigValidationError(key, f"must be >= {minimum}, got {val}", line)
        return val

    def pairs(self, key: str) -> tuple[tuple[str, complex], ...]:
        raw, line = self.entries[key]
        out = []
        for item in raw.split(","):
            if ":" not in item:
                raise ConfigValidationError(key, f"expected 'label:value' items, got {item.strip()!r}", line)
            lab, val = (x.strip() for x in item.split(":", 1))
            try:
                out.append((lab, complex(val.replace(" ", ""))))
            except ValueError:
                raise ConfigValidationError(key, f"bad value {val!r} for {lab!r}", line) from None
        return tuple(out)


def scenario_from_mapping(entries: dict[str, tuple[str, int]], base: Scenario | None = None) -> Scenario:
    """Build and validate a scenario from parsed entries, starting from ``base``."""
    for key, (_, line) in entries.items():
        if key not in _KNOWN:
            raise UnknownKeyError(key, line)
    r = _Reader(entries)
    s = base or Scenario()

    model = r.text("model", s.model)
    if model not in MODELS:
        raise ConfigValidationError("model", f"must be one of {sorted(MODELS)}, got {model!r}", r.line("model"))

    params = s.params
    for key in sorted(_PARAM_KEYS):
        if r.has(key):
            try:
                params = params.with_(**{key[7:]: r.number(key)})
            except ValueError as exc:
                raise ConfigValidationError(key, str(exc), r.line(key)) from None

    initial = _read_initial(r, s.initial, model)

    mode = r.text("control.mode", s.control.mode)
    if mode not in MODES:
        raise ConfigValidationError("control.mode", f"must be one of {MODES}, got {mode!r}", r.line("control.mode"))
    control = ControlConfig(
        r.number("control.lambda1", s.control.lambda1, minimum=0.0),
        r.number("control.lambda2", s.control.lambda2, minimum=0.0),
        mode,
    )

    etas = tuple(r.number(f"noise.eta{k + 1}", s.noise.etas[k], minimum=0.0) for k in range(4))
    source_model = r.text("noise.source_model", s.noise.source_model)
    if source_model not in MODELS:
        raise ConfigValidationError("noise.source_model", f"must be one of {sorted(MODELS)}", r.line("noise.source_model"))
    noise = NoiseSpec(
        etas,
        r.integer("noise.trajectories", s.noise.trajectories, minimum=1),
        r.integer("noise.seed", s.noise.seed, minimum=0),
        source_model,
    )

    t_end = r.number("time.t_end_2pi", s.t_end_2pi, minimum=0.0)
    dt = r.number("time.dt", s.dt)
    if dt is not None and dt <= 0:
        raise ConfigValidationError("time.dt", "must be positive", r.line("time.dt"))
    every = r.number("time.record_every_2pi", s.record_every_2pi)
    if every <= 0:
        raise ConfigValidationError("time.record_every_2pi", "must be positive", r.line("time.record_every_2pi"))
    method = r.text("integrator.method", s.method)
    if method not in ("auto", "rk4", "split"):
        raise ConfigValidationError("integrator.method", "must be auto, rk4 or split", r.line("integrator.method"))

    sweep = _read_sweep(r, s.sweep)
    return Scenario(
        model=model,
        params=params,
        initial=initial,
        control=control,
        noise=noise,
        t_end_2pi=t_end,
        dt=dt,
        record_every_2pi=every,
        method=method,
        output=r.text("output", s.output),
        sweep=sweep,
        name=r.text("name", s.name),
    )


def _read_initial(r: _Reader, current: InitialSpec, model: str) -> InitialSpec:
    kind = r.text("initial")
    line = r.line("initial")
    if kind is None:
        spec = current
    elif kind in ("uniform", "superposition", "mixture") or kind in FAMILIES:
        spec = InitialSpec(kind)
    else:
        spec = InitialSpec("named", kind)

    if r.has("initial.eta"):
        if spec.kind not in FAMILIES:
            raise ConfigValidationError("initial.eta", f"only used with {FAMILIES}", r.line("initial.eta"))
        eta = r.number("initial.eta")
        if not 0.0 <= eta <= 1.0:
            raise ConfigValidationError("initial.eta", f"must lie in [0, 1], got {eta}", r.line("initial.eta"))
        spec = replace(spec, eta=eta)
    if r.has("initial.amplitudes"):
        if spec.kind != "superposition":
            raise ConfigValidationError("initial.amplitudes", "only used with initial = superposition", r.line("initial.amplitudes"))
        spec = replace(spec, terms=r.pairs("initial.amplitudes"))
    if r.has("initial.weights"):
        if spec.kind != "mixture":
            raise ConfigValidationError("initial.weights", "only used with initial = mixture", r.line("initial.weights"))
        spec = replace(spec, terms=r.pairs("initial.weights"))

    key = "initial.amplitudes" if spec.kind == "superposition" else "initial.weights"
    if spec.kind in ("superposition", "mixture"):
        if not spec.terms:
            raise ConfigValidationError(key, "missing", line)
        if spec.kind == "superposition":
            norm = sum(abs(a) ** 2 for _, a in spec.terms)
            if abs(norm - 1.0) > 1e-12:
                raise ConfigValidationError(key, f"amplitudes have squared norm {norm!r}, expected 1", r.line(key))
        else:
            ws = [w for _, w in spec.terms]
            if any(w.imag != 0 or w.real < 0 for w in ws):
                raise ConfigValidationError(key, "weights must be real and non-negative", r.line(key))
            total = sum(w.real for w in ws)
            if abs(total - 1.0) > 1e-12:
                raise ConfigValidationError(key, f"weights sum to {total!r}, expected 1", r.line(key))
    try:
        spec.density_matrix(model)
    except ValueError as exc:
        raise ConfigValidationError("initial" if spec.kind == "named" else key, str(exc), line) from None
    return spec


def _read_sweep(r: _Reader, current: SweepSpec | None) -> SweepSpec | None:
    if not any(k.startswith("sweep.") for k in r.entries):
        return current
    axes = []
    for i in (1, 2):
        prefix = f"sweep.axis{i}"
        old = None if current is None else (current.axis1 if i == 1 else current.axis2)
        keys = [f"{prefix}.{part}" for part in ("name", "start", "stop", "step")]
        if not any(r.has(k) for k in keys) and old is None:
            continue
        name = r.text(keys[0], old.name if old else None)
        vals = [r.number(k, getattr(old, k.rsplit(".", 1)[1]) if old else None) for k in keys[1:]]
        if name is None or any(v is None for v in vals):
            missing = [k for k, v in zip(keys, [name] + vals) if v is None]
            raise ConfigValidationError(missing[0], "missing")
        axes.append(AxisSpec(name, *vals))
    if not axes:
        raise ConfigValidationError("sweep.axis1.name", "a sweep needs at least one axis")
    return SweepSpec(
        axes[0],
        axes[1] if len(axes) > 1 else None,
        r.text("sweep.observable", current.observable if current else "F"),
        r.number("sweep.at_2pi", current.at_2pi if current else 1500.0, minimum=0.0),
    )


def load_scenario(path_or_preset: str | Path) -> Scenario:
    """Load a config file, or a built-in preset when given its name."""
    from .presets import PRESETS

    key = str(path_or_preset)
    if key in PRESETS and not Path(key).exists():
        return PRESETS[key]
    path = Path(path_or_preset)
    entries = parse_config(path.read_text(encoding="utf-8"), str(path))
    scenario = scenario_from_mapping(entries)
    return scenario if "name" in entries else scenario.with_(name=path.stem)
