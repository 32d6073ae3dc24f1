"""Lyapunov feedback toward the singlet ``|D>``.

Each atom gets a control Hamiltonian ``H_j = lambda_j (|0>_j<1| + |1>_j<0|)``
with amplitude ``f_j(rho) = -i <D|[H_j, rho]|D>``. With this choice the
control contributes ``-(f_1^2 + f_2^2)`` to ``dS/dt`` for the distance
``S = 1 - <D|rho|D>``, so the fidelity never decreases.

The amplitudes are recomputed from the instantaneous state at every
evaluation of the generator, which makes the master equation nonlinear.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import apply_superop, superop_hamiltonian, superop_lindblad
from .model import (
    SystemParams,
    basis_for,
    build_collapse_ops,
    build_model_hamiltonian,
    named_state,
    project_to_model,
    single_atom,
)
from .qops import commutator, outer

__all__ = [
    "MODES",
    "ControlConfig",
    "unit_control_operators",
    "control_hamiltonians",
    "control_law",
    "ControlledGenerator",
    "controlled_generator",
    "lyapunov_diagnostics",
]

MODES = ("both", "only_H1", "only_H2", "off")
_GATES = {"both": (1.0, 1.0), "only_H1": (1.0, 0.0), "only_H2": (0.0, 1.0), "off": (0.0, 0.0)}


@dataclass(frozen=True)
class ControlConfig:
    lambda1: float = 0.0
    lambda2: float = 0.0
    mode: str = "both"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"control mode must be one of {MODES}, got {self.mode!r}")
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise ValueError("control couplings must be non-negative")

    @property
    def gates(self) -> tuple[float, float]:
        return _GATES[self.mode]

    @property
    def active_lambdas(self) -> tuple[float, float]:
        g1, g2 = self.gates
        return g1 * self.lambda1, g2 * self.lambda2


def unit_control_operators(model: str = "effective") -> tuple[np.ndarray, np.ndarray]:
    """``|0>_j<1| + h.c.`` for ``j = 1, 2`` in the model's state space."""
    flip = outer(np.eye(3)[0], np.eye(3)[1])
    flip = flip + flip.T
    return tuple(project_to_model(single_atom(flip, j), model) for j in (1, 2))


def control_hamiltonians(cfg: ControlConfig, model: str = "effective") -> tuple[np.ndarray, np.ndarray]:
    """``(H_1, H_2)`` scaled by ``lambda_1, lambda_2`` (mode gating is not applied here)."""
    x1, x2 = unit_control_operators(model)
    return cfg.lambda1 * x1, cfg.lambda2 * x2


def control_law(rho, cfg: ControlConfig, model: str = "effective") -> tuple[float, float]:
    """``f_j = -i <D|[H_j, rho]|D>``, zero for channels switched off by ``cfg.mode``."""
    rho = np.asarray(rho, dtype=complex)
    dark = named_state("D", basis_for(model))
    out = []
    for h, gate in zip(control_hamiltonians(cfg, model), cfg.gates):
        val = -1j * np.vdot(dark, commutator(h, rho) @ dark)
        out.append(gate * float(val.real))
    return out[0], out[1]


class ControlledGenerator:
    """Right-hand side of the feedback-controlled master equation.

    ``lambda1`` and ``lambda2`` may be arrays with one entry per state in a
    batch, and ``p`` may be a sequence of parameter sets (one per state), so
    a whole sweep is integrated together.
    """

    time_dependent = False

    def __init__(self, p, model: str = "effective", lambda1=0.0, lambda2=0.0, mode: str = "both"):
        if mode not in MODES:
            raise ValueError(f"control mode must be one of {MODES}, got {mode!r}")
        g1, g2 = _GATES[mode]
        self.model = model
        self.params = p
        self.lambdas = (g1 * np.asarray(lambda1, dtype=float), g2 * np.asarray(lambda2, dtype=float))
        if any((lam < 0).any() for lam in self.lambdas):
            raise ValueError("control couplings must be non-negative")
        if isinstance(p, SystemParams):
            self.base = _uncontrolled_superop(p, model)
        else:
            self.base = np.stack([_uncontrolled_superop(q, model) for q in p])
        n = basis_for(model).dim
        dark = named_state("D", basis_for(model))
        self.units = unit_control_operators(model)
        self.comm = [superop_hamiltonian(x) for x in self.units]
        # f_j / lambda_j = 2 Im <D| X_j rho |D> = 2 Im (w_j . vec(rho)), w_j = conj(X_j D) kron D
        self.probes = [np.kron((x @ dark).conj(), dark) for x in self.units]
        self.dim = n
        # channels with a nonzero coupling somewhere in the batch, fused into one product
        self._active = [j for j in (0, 1) if self.lambdas[j].any()]
        blocks = [self.comm[j].T for j in self._active]
        if self.base.ndim == 2:
            blocks.insert(0, self.base.T)
        self._fused = np.ascontiguousarray(np.concatenate(blocks, axis=1)) if blocks else None
        self._probe_mat = np.stack([self.probes[j] for j in self._active], axis=1) if self._active else None
        # with every channel off the equation is linear and can use the step-matrix path
        self.linear = not self._active

    def superoperator(self) -> np.ndarray:
        if not self.linear:
            raise TypeError("the controlled generator is nonlinear in rho")
        return self.base

    def controls(self, t: float, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        flat = rho.reshape(rho.shape[:-2] + (self.dim**2,))
        return tuple(lam * 2.0 * (flat @ w).imag for lam, w in zip(self.lambdas, self.probes))

    def rhs_flat(self, t: float, flat: np.ndarray) -> np.ndarray:
        """Generator acting on row-major vectorized states ``(..., n^2)``."""
        n2 = self.dim**2
        if self.base.ndim == 2:
            y = flat @ self._fused
            out, first = y[..., :n2], 1
        else:
            out = np.matmul(self.base, flat[..., None])[..., 0]
            y, first = (flat @ self._fused if self._fused is not None else None), 0
        if self._active:
            raw = 2.0 * (flat @ self._probe_mat).imag
            for k, j in enumerate(self._active):
                lam = self.lambdas[j]
                blk = y[..., (k + first) * n2 : (k + first + 1) * n2]
                out = out + (lam * lam * raw[..., k])[..., None] * blk
        return out

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        n2 = self.dim**2
        return self.rhs_flat(t, rho.reshape(rho.shape[:-2] + (n2,))).reshape(rho.shape)


def _uncontrolled_superop(p: SystemParams, model: str) -> np.ndarray:
    return superop_lindblad(build_model_hamiltonian(p, model), build_collapse_ops(p, model))


def controlled_generator(p: SystemParams, cfg: ControlConfig, model: str = "effective") -> ControlledGenerator:
    return ControlledGenerator(p, model, cfg.lambda1, cfg.lambda2, cfg.mode)


def lyapunov_diagnostics(rho, p: SystemParams, cfg: ControlConfig, model: str = "effective") -> tuple[float, float, float]:
    """``(V, V_a, V_b)`` with ``V = -<D|drho/dt|D>``.

    ``V_a`` is the control term ``-sum_j f_j (-i <D|[H_j, rho]|D>)`` and ``V_b``
    the decay term ``-sum <D|L rho L^dag|D>``. In the effective models
    ``|D>`` is annihilated by the drift Hamiltonian and every jump operator,
    so ``V = V_a + V_b``.
    """
    rho = np.asarray(rho, dtype=complex)
    dark = named_state("D", basis_for(model))
    gen = controlled_generator(p, cfg, model)
    v = -float(np.vdot(dark, gen(0.0, rho) @ dark).real)
    f = control_law(rho, cfg, model)
    v_a = 0.0
    for fj, h, gate in zip(f, control_hamiltonians(cfg, model), cfg.gates):
        v_a -= fj * gate * float((-1j * np.vdot(dark, commutator(h, rho) @ dark)).real)
    v_b = -sum(float(np.vdot(dark, op @ rho @ op.conj().T @ dark).real) for op in build_collapse_ops(p, model))
    return v, v_a, v_b
