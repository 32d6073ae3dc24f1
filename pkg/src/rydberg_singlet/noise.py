"""Amplitude noise on the drive parameters.

Channel ``k`` adds ``eta_k xi(t) H_sk`` to the Hamiltonian, where ``xi`` is
Gaussian white noise. Averaged over realizations this becomes the
double-commutator dissipator ``-eta_k^2 [H_sk, [H_sk, rho]] / 2``. The
Monte Carlo side integrates individual realizations: over a step of length
``h`` the noise contributes the exact unitary ``exp(-i eta H_s dW)`` with
``dW ~ N(0, h)``, whose average over ``dW`` is exactly ``exp(h D)``.

Random streams: trajectory ``i`` of an ensemble with base seed ``s`` uses
``numpy.random.default_rng(s + i)`` (PCG64) and draws two standard normals
per step, in step order, one for each half-step noise kick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .control import ControlConfig, unit_control_operators
from .dynamics import (
    TWO_PI,
    DensityMatrix,
    Observer,
    Trajectory,
    _record_times,
    _segments,
    superop_hamiltonian,
    superop_lindblad,
)
from .model import (
    FULL,
    SystemParams,
    basis_for,
    build_collapse_ops,
    build_model_hamiltonian,
    named_state,
    project_to_model,
    single_atom,
)
from .qops import commutator, hermitian_eigen, outer

__all__ = [
    "NoiseChannel",
    "build_noise_hamiltonians",
    "channels_for_model",
    "averaged_dissipator",
    "dissipator_superop",
    "ControlReplay",
    "ReplayGenerator",
    "noisy_controlled_generator",
    "EnsembleResult",
    "stochastic_ensemble",
    "stochastic_trajectory",
]


@dataclass(frozen=True)
class NoiseChannel:
    index: int
    eta: float
    h_s: np.ndarray

    def __post_init__(self) -> None:
        if self.index not in (1, 2, 3, 4):
            raise ValueError("noise channel index must be 1..4")
        if not self.eta >= 0:
            raise ValueError("noise amplitude must be non-negative")
        h = np.asarray(self.h_s, dtype=complex)
        if np.abs(h - h.conj().T).max() > 1e-12 * max(1.0, np.abs(h).max()):
            raise ValueError("noise operator must be Hermitian")
        object.__setattr__(self, "h_s", h)

    def with_eta(self, eta: float) -> "NoiseChannel":
        return NoiseChannel(self.index, eta, self.h_s)


def build_noise_hamiltonians(p: SystemParams, etas: Sequence[float] | None = None) -> list[NoiseChannel]:
    """The four noise operators in the full basis.

    ``H_s1 = (Omega_m/2) sum_j |0>_j<1| + h.c.`` (microwave strength),
    ``H_s2 = Delta_m sum_j |0>_j<0|`` (microwave detuning),
    ``H_s3 = (Omega_r/2) sum_j |1>_j<r| + h.c.`` (optical Rabi frequency),
    ``H_s4 = U_rr |rr><rr|`` (interaction). The diagonal operators pick up a
    factor two from their Hermitian conjugate, as in the drift Hamiltonian.
    """
    e = np.eye(3)
    ops3 = [
        0.5 * p.omega_m * (outer(e[0], e[1]) + outer(e[1], e[0])),
        p.delta_m * outer(e[0], e[0]),
        0.5 * p.omega_r * (outer(e[1], e[2]) + outer(e[2], e[1])),
    ]
    ops = [single_atom(o, 1) + single_atom(o, 2) for o in ops3]
    rr = np.zeros((9, 9), dtype=complex)
    rr[FULL.index("rr"), FULL.index("rr")] = p.u_rr
    ops.append(rr)
    etas = p.eta if etas is None else etas
    return [NoiseChannel(k + 1, float(etas[k]), ops[k]) for k in range(4)]


def channels_for_model(channels: Sequence[NoiseChannel], model: str) -> list[NoiseChannel]:
    """Restrict full-basis noise operators to a model's state space."""
    return [NoiseChannel(c.index, c.eta, project_to_model(c.h_s, model)) for c in channels]


def averaged_dissipator(rho, channels: Sequence[NoiseChannel]) -> np.ndarray:
    """``sum_k -(eta_k^2 / 2) [H_sk, [H_sk, rho]]``."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    for c in channels:
        if c.eta == 0:
            continue
        if c.h_s.shape != rho.shape[-2:]:
            raise ValueError(f"noise operator {c.h_s.shape} does not match state {rho.shape}")
        out = out - 0.5 * c.eta**2 * commutator(c.h_s, commutator(c.h_s, rho))
    return out


def dissipator_superop(channels: Sequence[NoiseChannel], dim: int) -> np.ndarray:
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for c in channels:
        if c.eta:
            comm = superop_hamiltonian(c.h_s)  # -i[H, .]
            sup = sup + 0.5 * c.eta**2 * (comm @ comm)
    return sup


# ------------------------------------------------------------------ replay


@dataclass(frozen=True)
class ControlReplay:
    """Recorded control amplitudes ``f_1(t), f_2(t)`` for open-loop reuse."""

    times: np.ndarray
    f1: np.ndarray
    f2: np.ndarray

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "ControlReplay":
        return cls(np.asarray(traj.times), np.asarray(traj["f1"]), np.asarray(traj["f2"]))

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float) -> tuple[float, float]:
        if t > self.t_max * (1 + 1e-12) + 1e-12 or t < self.times[0] - 1e-12:
            raise ValueError(f"control replay covers [{self.times[0]}, {self.t_max}], asked for t = {t}")
        return float(np.interp(t, self.times, self.f1)), float(np.interp(t, self.times, self.f2))


class _Kicker:
    """Exact propagators ``exp(-i theta X)`` for a fixed Hermitian ``X``."""

    def __init__(self, x: np.ndarray):
        eig = hermitian_eigen(x)
        self.vals = eig.eigenvalues
        self.vecs = eig.eigenvectors

    def unitary(self, theta: float) -> np.ndarray:
        return (self.vecs * np.exp(-1j * theta * self.vals)) @ self.vecs.conj().T


class ReplayGenerator:
    """Master equation with replayed control fields and optional averaged noise.

    ``channels`` may be a list of channel lists, one per state in a batch, in
    which case the static part of the generator is stacked along the batch.
    """

    linear = True
    time_dependent = True

    def __init__(
        self,
        p: SystemParams,
        cfg: ControlConfig,
        replay: ControlReplay,
        channels: Sequence[NoiseChannel] | Sequence[Sequence[NoiseChannel]] = (),
        model: str = "full",
    ):
        basis = basis_for(model)
        n = basis.dim
        self.dim = n
        self.model = model
        self.replay = replay
        self.t_max = replay.t_max
        lams = cfg.active_lambdas
        self.lambdas = lams
        self.units = unit_control_operators(model)
        base = superop_lindblad(build_model_hamiltonian(p, model), build_collapse_ops(p, model))
        batched = len(channels) > 0 and not isinstance(channels[0], NoiseChannel)
        if batched:
            self.static = np.stack([base + dissipator_superop(channels_for_model(ch, model), n) for ch in channels])
        else:
            self.static = base + dissipator_superop(channels_for_model(list(channels), model), n)
        self.comm = [superop_hamiltonian(x) for x in self.units]
        self._kickers = [_Kicker(x) for x in self.units]
        x1, x2 = self.units
        self._commuting = np.abs(x1 @ x2 - x2 @ x1).max() < 1e-14

    def static_superoperator(self) -> np.ndarray:
        return self.static

    def fields(self, t: float) -> tuple[float, float]:
        f1, f2 = self.replay(t)
        return self.lambdas[0] * f1, self.lambdas[1] * f2

    def controls(self, t: float, rho: np.ndarray):
        f1, f2 = self.replay(min(t, self.t_max))
        batch = rho.shape[:-2]
        g1, g2 = (1.0 if lam else 0.0 for lam in self.lambdas)
        return np.full(batch, g1 * f1), np.full(batch, g2 * f2)

    def rhs_flat(self, t: float, flat: np.ndarray) -> np.ndarray:
        if self.static.ndim == 2:
            out = flat @ self.static.T
        else:
            out = np.matmul(self.static, flat[..., None])[..., 0]
        for a, c in zip(self.fields(t), self.comm):
            if a:
                out = out + a * (flat @ c.T)
        return out

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        n2 = self.dim**2
        return self.rhs_flat(t, rho.reshape(rho.shape[:-2] + (n2,))).reshape(rho.shape)

    def kick(self, t: float, h: float) -> np.ndarray:
        """Propagator of the control Hamiltonian over a step ``h``, fields frozen at ``t``."""
        a1, a2 = self.fields(t)
        u1 = self._kickers[0].unitary(h * a1)
        if self._commuting:
            return u1 @ self._kickers[1].unitary(h * a2)
        half = self._kickers[0].unitary(0.5 * h * a1)
        return half @ self._kickers[1].unitary(h * a2) @ half


def noisy_controlled_generator(
    p: SystemParams,
    cfg: ControlConfig,
    replay: ControlReplay,
    channels: Sequence[NoiseChannel] | None = None,
    model: str = "full",
) -> ReplayGenerator:
    """Controlled master equation driven by recorded ``f_j(t)`` plus the averaged noise dissipator."""
    if channels is None:
        channels = build_noise_hamiltonians(p)
    return ReplayGenerator(p, cfg, replay, channels, model)


# ------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class EnsembleResult:
    """Per-trajectory fidelities ``F[i, r]`` on the record grid ``times``."""

    times: np.ndarray
    fidelity: np.ndarray
    seeds: np.ndarray
    states: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.fidelity.shape[0]

    def mean(self, n: int | None = None) -> np.ndarray:
        return self.fidelity[:n].mean(axis=0)

    def standard_error(self, n: int | None = None) -> np.ndarray:
        sub = self.fidelity[:n]
        return sub.std(axis=0, ddof=1) / math.sqrt(sub.shape[0])


def _deterministic_ket_step(psi, h0, fields, units, t, h):
    def rhs(tt, y):
        a1, a2 = fields(tt)
        hh = h0 + a1 * units[0] + a2 * units[1]
        return -1j * (y @ hh.T)

    k1 = rhs(t, psi)
    k2 = rhs(t + h / 2, psi + (h / 2) * k1)
    k3 = rhs(t + h / 2, psi + (h / 2) * k2)
    k4 = rhs(t + h, psi + h * k3)
    return psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def stochastic_ensemble(
    state: np.ndarray | DensityMatrix,
    channel: NoiseChannel,
    p: SystemParams,
    n_trajectories: int,
    base_seed: int,
    dt: float,
    t_end: float,
    model: str = "effective",
    cfg: ControlConfig | None = None,
    replay: ControlReplay | None = None,
    decay: bool = False,
    record_every: float = TWO_PI,
    block: int = 4096,
    keep_states: bool = False,
) -> EnsembleResult:
    """Seeded Monte Carlo realizations of the noisy dynamics.

    ``channel`` is given in the full basis (as built by
    :func:`build_noise_hamiltonians`) and restricted to ``model`` here.
    ``state`` is a ket or a :class:`DensityMatrix` in the model basis. Kets
    evolve under the drift Hamiltonian only (``decay`` must be off). Density
    matrices additionally feel spontaneous emission when ``decay`` is set.
    Each step is split symmetrically: noise kick over ``h/2``, deterministic
    RK4 step over ``h``, noise kick over ``h/2``.
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    basis = basis_for(model)
    n = basis.dim
    channel = channels_for_model([channel], model)[0]
    if replay is not None and t_end > replay.t_max * (1 + 1e-12):
        raise ValueError(f"control replay ends at t = {replay.t_max}, requested {t_end}")
    is_ket = not isinstance(state, DensityMatrix)
    if is_ket and decay:
        raise ValueError("spontaneous emission needs a density-matrix initial state")
    cfg = cfg or ControlConfig(mode="off")
    units = [lam * x for lam, x in zip(cfg.active_lambdas, unit_control_operators(model))]

    def fields(t: float) -> tuple[float, float]:
        if replay is None:
            return 0.0, 0.0
        return replay(t)

    h0 = build_model_hamiltonian(p, model)
    if not is_ket:
        collapse = build_collapse_ops(p, model) if decay else []
        lind = superop_lindblad(h0, collapse)
        comm = [superop_hamiltonian(u) for u in units]

    kick = _Kicker(channel.eta * channel.h_s)
    vals, vecs = kick.vals, kick.vecs
    observer = Observer(basis)
    dark = observer.dark
    segs = _segments(t_end, record_every, dt)
    times = np.array([0.0] + _record_times(segs, record_every, t_end))
    seeds = base_seed + np.arange(n_trajectories)
    fid = np.empty((n_trajectories, len(times)))
    kept = np.empty((n_trajectories, len(times)) + ((n,) if is_ket else (n, n)), dtype=complex) if keep_states else None

    for start in range(0, n_trajectories, block):
        idx = range(start, min(start + block, n_trajectories))
        rngs = [np.random.default_rng(int(seeds[i])) for i in idx]
        b = len(rngs)
        if is_ket:
            y = np.tile(np.asarray(state, dtype=complex), (b, 1))
            fid[start : start + b, 0] = np.abs(y @ dark.conj()) ** 2
        else:
            y = np.tile(state.mat.reshape(-1), (b, 1))
            fid[start : start + b, 0] = observer.fidelity(y.reshape(b, n, n))
        if keep_states:
            kept[start : start + b, 0] = y.reshape((b,) + kept.shape[2:])
        t = 0.0
        for r, (steps, h) in enumerate(segs, start=1):
            dw = np.stack([g.standard_normal(2 * steps) for g in rngs]) * math.sqrt(h / 2)
            for s in range(steps):
                y = _noise_kick(y, vals, vecs, dw[:, 2 * s], is_ket, n)
                if is_ket:
                    y = _deterministic_ket_step(y, h0, fields, units, t, h)
                else:
                    y = _deterministic_rho_step(y, lind, comm, fields, t, h)
                y = _noise_kick(y, vals, vecs, dw[:, 2 * s + 1], is_ket, n)
                t += h
            t = times[r]
            if is_ket:
                fid[start : start + b, r] = np.abs(y @ dark.conj()) ** 2
            else:
                fid[start : start + b, r] = observer.fidelity(y.reshape(b, n, n))
            if keep_states:
                kept[start : start + b, r] = y.reshape((b,) + kept.shape[2:])
    return EnsembleResult(times, fid, seeds, kept)


def _noise_kick(y, vals, vecs, dw, is_ket, n):
    phase = np.exp(-1j * dw[:, None] * vals[None, :])
    if is_ket:
        return ((y @ vecs.conj()) * phase) @ vecs.T
    rho = y.reshape(-1, n, n)
    r = vecs.conj().T @ rho @ vecs
    r = r * phase[:, :, None] * phase.conj()[:, None, :]
    return (vecs @ r @ vecs.conj().T).reshape(y.shape)


def _deterministic_rho_step(v, lind, comm, fields, t, h):
    def rhs(tt, x):
        out = x @ lind.T
        for a, c in zip(fields(tt), comm):
            if a:
                out = out + a * (x @ c.T)
        return out

    k1 = rhs(t, v)
    k2 = rhs(t + h / 2, v + (h / 2) * k1)
    k3 = rhs(t + h / 2, v + (h / 2) * k2)
    k4 = rhs(t + h, v + h * k3)
    return v + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def stochastic_trajectory(
    state: np.ndarray | DensityMatrix,
    channel: NoiseChannel,
    p: SystemParams,
    seed: int,
    dt: float,
    t_end: float,
    model: str = "effective",
    cfg: ControlConfig | None = None,
    replay: ControlReplay | None = None,
    decay: bool = False,
    record_every: float = TWO_PI,
) -> Trajectory:
    """A single noise realization with the full set of observables.

    The control columns hold the replayed fields (zero without a replay).
    """
    res = stochastic_ensemble(
        state, channel, p, 1, seed, dt, t_end, model, cfg, replay, decay, record_every, keep_states=True
    )
    basis = basis_for(model)
    states = res.states[0]
    if states.ndim == 2:
        states = np.einsum("ra,rb->rab", states, states.conj())
    records = Observer(basis).record(states)
    cfg = cfg or ControlConfig(mode="off")
    g1, g2 = (1.0 if lam else 0.0 for lam in cfg.active_lambdas)
    f = np.array([replay(t) if replay is not None else (0.0, 0.0) for t in res.times])
    records["f1"], records["f2"] = g1 * f[:, 0], g2 * f[:, 1]
    records["min_eig"] = np.array([hermitian_eigen(0.5 * (r + r.conj().T)).eigenvalues[0] for r in states])
    return Trajectory(res.times, records, basis, states[-1].copy(), 0)
