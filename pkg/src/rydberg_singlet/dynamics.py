"""Master-equation integration and observables.

Density matrices are integrated with fixed-step classical RK4. Generators are
callables ``gen(t, rho) -> drho/dt`` acting on arrays of shape ``(n, n)`` or
a batch ``(B, n, n)``. A generator that is linear and time independent may
expose ``superoperator()``; RK4 then reduces to repeated application of the
fixed step matrix ``sum_k (dt L)^k / k!`` (k <= 4), which ``integrate`` raises to
the power of the steps in one record interval. The result is the same
RK4 recursion, just evaluated in fewer operations.

Superoperators act on row-major vectorized matrices, ``vec(A X B) = (A kron B^T) vec(X)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import Basis, basis_for, named_state
from .qops import DimensionError, dag, hermitian_eigen

__all__ = [
    "TWO_PI",
    "IntegrationError",
    "DensityMatrix",
    "Trajectory",
    "Observer",
    "lindblad_rhs",
    "superop_hamiltonian",
    "superop_lindblad",
    "LindbladGenerator",
    "rk4_step_matrix",
    "observables",
    "integrate",
    "integrate_many",
    "propagate",
]

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

TRACE_ABORT = 1e-6
MIN_EIG_ABORT = -1e-6
RENORMALIZE_ABOVE = 1e-10

Generator = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    """The integrated state left the set of physical density matrices."""


# ------------------------------------------------------------------ states


@dataclass(frozen=True)
class DensityMatrix:
    mat: np.ndarray
    basis: Basis

    def __post_init__(self) -> None:
        m = np.asarray(self.mat, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise DimensionError(f"density matrix shape {m.shape} does not match {self.basis.name} basis")
        object.__setattr__(self, "mat", m)

    @classmethod
    def from_ket(cls, ket, basis: Basis) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        return cls(np.outer(ket, ket.conj()), basis)

    @classmethod
    def pure(cls, label: str, basis: Basis) -> "DensityMatrix":
        return cls.from_ket(named_state(label, basis), basis)

    @classmethod
    def mixture(cls, terms: Sequence[tuple[float, str]], basis: Basis) -> "DensityMatrix":
        weights = np.array([w for w, _ in terms], dtype=float)
        if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        mat = sum(w * cls.pure(label, basis).mat for w, label in terms)
        return cls(mat, basis)

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def check(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10, eig_tol: float = 1e-8) -> None:
        if abs(np.trace(self.mat) - 1.0) > trace_tol:
            raise ValueError(f"trace {np.trace(self.mat)} differs from 1")
        if np.linalg.norm(self.mat - self.mat.conj().T) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        lo = hermitian_eigen(self.mat).eigenvalues[0]
        if lo < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lo}")


# ------------------------------------------------------------- observables


class Observer:
    """Precomputed projections for one basis."""

    def __init__(self, basis: Basis):
        self.basis = basis
        self.dark = named_state("D", basis)
        self.e00 = named_state("00", basis)
        self.e11 = named_state("11", basis)

    def fidelity(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("a,...ab,b->...", self.dark.conj(), rho, self.dark).real

    def record(self, rho: np.ndarray) -> dict[str, np.ndarray]:
        """Vectorized observables for ``rho`` of shape ``(..., n, n)``."""
        d = self.dark
        fid = self.fidelity(rho)
        a1 = np.einsum("a,...ab,b->...", self.e11.conj(), rho, d).imag
        a2 = np.einsum("a,...ab,b->...", d.conj(), rho, self.e00).imag
        purity = np.einsum("...ab,...ba->...", rho, rho).real
        trace = np.einsum("...aa->...", rho).real
        return {"P_D": fid, "F": fid, "purity": purity, "A1": a1, "A2": a2, "trace": trace}


def observables(rho: DensityMatrix, controls: tuple[float, float] = (0.0, 0.0)) -> dict[str, float]:
    """Scalar observables of one state: ``P_D``, ``F``, purity, ``A1``, ``A2``, trace, min eigenvalue."""
    rec = {k: float(v) for k, v in Observer(rho.basis).record(rho.mat).items()}
    rec["f1"], rec["f2"] = (float(x) for x in controls)
    rec["min_eig"] = float(hermitian_eigen(rho.mat).eigenvalues[0])
    return rec


FIELDS = ("P_D", "F", "purity", "f1", "f2", "A1", "A2", "trace", "min_eig")


@dataclass(frozen=True)
class Trajectory:
    """Observables sampled on an ascending time grid (``times`` in units of ``1/Omega_r``)."""

    times: np.ndarray
    records: dict[str, np.ndarray]
    basis: Basis
    final: np.ndarray = field(repr=False)
    renormalizations: int = 0
    states: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        if name == "t_over_2pi":
            return self.times / TWO_PI
        return self.records[name]

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_over_2pi(self) -> np.ndarray:
        # rounded so that multiples of 2 pi read back as whole periods
        return np.round(self.times / TWO_PI, 12)

    def value_at(self, name: str, t_over_2pi: float) -> float:
        """Sample nearest to ``Omega_r t / 2 pi`` (records lie on the sampling grid)."""
        i = int(np.argmin(np.abs(self.t_over_2pi - t_over_2pi)))
        return float(self.records[name][i])

    def first_crossing(self, name: str, level: float) -> float | None:
        """Earliest recorded ``Omega_r t / 2 pi`` with ``name >= level``, or ``None``."""
        hit = np.nonzero(self.records[name] >= level)[0]
        return float(self.t_over_2pi[hit[0]]) if hit.size else None

    @property
    def max_trace_error(self) -> float:
        return float(np.max(np.abs(self.records["trace"] - 1.0)))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(self.records["min_eig"]))


# -------------------------------------------------------------- generators


def lindblad_rhs(rho, h, collapse: Sequence[np.ndarray] = ()) -> np.ndarray:
    """``-i[H, rho] + sum_L (L rho L^dag - {L^dag L, rho}/2)``."""
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape[-2:] != h.shape:
        raise DimensionError(f"rho {rho.shape} and H {h.shape} differ in dimension")
    out = -1j * (h @ rho - rho @ h)
    for op in collapse:
        op = np.asarray(op, dtype=complex)
        if op.shape != h.shape:
            raise DimensionError(f"collapse operator {op.shape} does not match H {h.shape}")
        k = dag(op) @ op
        out = out + op @ rho @ dag(op) - 0.5 * (k @ rho + rho @ k)
    return out


def superop_hamiltonian(h) -> np.ndarray:
    """Superoperator of ``rho -> -i[H, rho]``."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def superop_lindblad(h, collapse: Sequence[np.ndarray] = ()) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    sup = superop_hamiltonian(h)
    for op in collapse:
        op = np.asarray(op, dtype=complex)
        k = op.conj().T @ op
        sup = sup + np.kron(op, op.conj()) - 0.5 * (np.kron(k, eye) + np.kron(eye, k.T))
    return sup


def apply_superop(sup: np.ndarray, rho: np.ndarray) -> np.ndarray:
    n = rho.shape[-1]
    flat = rho.reshape(rho.shape[:-2] + (n * n,))
    if sup.ndim == 2:
        out = flat @ sup.T
    else:
        out = np.matmul(sup, flat[..., None])[..., 0]
    return out.reshape(rho.shape)


class LindbladGenerator:
    """Time-independent Lindblad generator ``L[rho]``.

    ``superop`` may also be a stack ``(B, n^2, n^2)`` so a batch of states is
    propagated under different generators in one call.
    """

    linear = True
    time_dependent = False

    def __init__(self, h=None, collapse: Sequence[np.ndarray] = (), superop: np.ndarray | None = None):
        if superop is None:
            if h is None:
                raise ValueError("give either a Hamiltonian or a superoperator")
            self.h = np.asarray(h, dtype=complex)
            self.collapse = [np.asarray(c, dtype=complex) for c in collapse]
            superop = superop_lindblad(self.h, self.collapse)
        self._sup = np.asarray(superop, dtype=complex)
        self.dim = int(round(math.sqrt(self._sup.shape[-1])))

    def superoperator(self) -> np.ndarray:
        return self._sup

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        return apply_superop(self._sup, rho)


def rk4_step_matrix(sup: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of ``dv/dt = L v`` written as a matrix."""
    eye = np.eye(sup.shape[-1], dtype=complex)
    a = dt * sup
    return eye + a @ (eye + a @ (eye / 2 + a @ (eye / 6 + a / 24)))


# ------------------------------------------------------------- integration


def _segments(t_end: float, record_every: float, dt: float) -> list[tuple[int, float]]:
    """Split ``[0, t_end]`` into record intervals as ``(steps, step)`` pairs.

    Every interval is covered by an integer number of equal steps no longer
    than ``dt``, so recorded times land exactly on the sampling grid.
    """
    if t_end < 0 or dt <= 0 or record_every <= 0:
        raise ValueError("t_end must be >= 0 and dt, record_every > 0")
    n_full = int(math.floor(t_end / record_every + 1e-9))
    rem = t_end - n_full * record_every
    steps = max(1, math.ceil(record_every / dt - 1e-9))
    segs = [(steps, record_every / steps)] * n_full
    if rem > 1e-9 * max(record_every, 1.0):
        k = max(1, math.ceil(rem / dt - 1e-9))
        segs.append((k, rem / k))
    return segs


def _record_times(segs: list[tuple[int, float]], record_every: float, t_end: float) -> list[float]:
    """Exact end time of each segment: multiples of ``record_every``, then ``t_end``."""
    return [(i + 1) * record_every if (i + 1) * record_every <= t_end else t_end for i in range(len(segs))]


def _control_values(generator, rho: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    fn = getattr(generator, "controls", None)
    if fn is None:
        zeros = np.zeros(rho.shape[:-2])
        return zeros, zeros
    return fn(t, rho)


def integrate_many(
    rho0s: Sequence[DensityMatrix],
    generator: Generator,
    t_end: float,
    dt: float,
    record_every: float = TWO_PI,
    check_positivity: bool = True,
    method: str = "rk4",
    inner_dt: float = 5e-4,
    keep_states: bool = False,
) -> list[Trajectory]:
    """Integrate a batch of initial states under one (possibly batched) generator.

    ``t_end``, ``dt`` and ``record_every`` are dimensionless times ``Omega_r t``.
    The step is shortened when needed so that each record interval holds a
    whole number of steps.

    ``method="rk4"`` is classical RK4 with the generator re-evaluated at every
    stage. ``method="split"`` is for generators of the form ``L0 + f(t) C``
    where ``C`` is a Hamiltonian commutator: they must provide
    ``static_superoperator()`` and ``kick(t, h)``. Each step applies
    ``exp(h L0 / 2)``, the exact unitary kick with the fields at the step
    midpoint, then ``exp(h L0 / 2)`` again; ``exp(h L0 / 2)`` is itself
    evaluated as RK4 with sub-steps no longer than ``inner_dt``. This stays
    cheap for stiff full-model generators whose fast phases would otherwise
    force a tiny step.

    Raises
    ------
    IntegrationError
        If the trace drifts by more than 1e-6, the minimum eigenvalue falls
        below -1e-6 or the state becomes non-finite.
    """
    if not rho0s:
        return []
    basis = rho0s[0].basis
    if any(r.basis is not basis for r in rho0s):
        raise ValueError("all initial states must share a basis")
    t_max = getattr(generator, "t_max", None)
    if t_max is not None and t_end > t_max * (1 + 1e-12):
        raise ValueError(f"generator is only defined up to t = {t_max}, requested {t_end}")

    rho = np.stack([r.mat for r in rho0s])
    batch = rho.shape[0]
    observer = Observer(basis)
    if method not in ("rk4", "split"):
        raise ValueError(f"unknown integration method {method!r}")
    sup = generator.superoperator() if method == "rk4" and getattr(generator, "linear", False) and not getattr(
        generator, "time_dependent", True
    ) else None

    times = [0.0]
    states = [rho.copy()] if keep_states else None
    recs: list[dict[str, np.ndarray]] = []
    guesses: list[np.ndarray | None] = [None] * batch
    renorm = 0

    def snapshot(t: float, state: np.ndarray) -> None:
        rec = observer.record(state)
        rec["f1"], rec["f2"] = (np.broadcast_to(np.asarray(x, dtype=float), (batch,)) for x in _control_values(generator, state, t))
        mins = np.full(batch, np.nan)
        if check_positivity:
            for b in range(batch):
                eig = hermitian_eigen(0.5 * (state[b] + state[b].conj().T), tol=1e-12, guess=guesses[b])
                guesses[b] = eig.eigenvectors
                mins[b] = eig.eigenvalues[0]
        rec["min_eig"] = mins
        recs.append(rec)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"non-finite density matrix at t = {t}")
        drift = np.abs(rec["trace"] - 1.0)
        if drift.max() > TRACE_ABORT:
            raise IntegrationError(f"trace drift {drift.max():.3e} at t = {t} exceeds {TRACE_ABORT}")
        if check_positivity and mins.min() < MIN_EIG_ABORT:
            raise IntegrationError(f"minimum eigenvalue {mins.min():.3e} at t = {t} below {MIN_EIG_ABORT}")

    snapshot(0.0, rho)
    t = 0.0
    n = basis.dim
    rhs = flat_rhs(generator, n)
    trace_vec = np.eye(n).reshape(-1)
    power_cache: dict[tuple[int, float], np.ndarray] = {}
    segs = _segments(t_end, record_every, dt)
    for (steps, h), t_rec in zip(segs, _record_times(segs, record_every, t_end)):
        if sup is not None:
            key = (steps, h)
            if key not in power_cache:
                power_cache[key] = np.linalg.matrix_power(rk4_step_matrix(sup, h), steps)
            rho = apply_superop(power_cache[key], rho)
            t = t + steps * h
            per_step = np.abs(np.einsum("...aa->...", rho).real - 1.0) / steps
            if per_step.max() > RENORMALIZE_ABOVE:
                rho, renorm = _renormalize(rho, t, renorm)
        elif method == "split":
            key = ("split", h)
            if key not in power_cache:
                m = max(1, math.ceil(h / 2 / inner_dt - 1e-9))
                half = np.linalg.matrix_power(rk4_step_matrix(generator.static_superoperator(), h / 2 / m), m)
                power_cache[key] = (half, half @ half)
            half, full = power_cache[key]
            rho = apply_superop(half, rho)
            for s in range(steps):
                u = generator.kick(t + h / 2, h)
                rho = u @ rho @ u.conj().T
                rho = apply_superop(half if s == steps - 1 else full, rho)
                t = t + h
            per_step = np.abs(np.einsum("...aa->...", rho).real - 1.0) / steps
            if per_step.max() > RENORMALIZE_ABOVE:
                rho, renorm = _renormalize(rho, t, renorm)
        else:
            n2 = n * n
            v = rho.reshape(batch, n2)
            for _ in range(steps):
                k1 = rhs(t, v)
                k2 = rhs(t + h / 2, v + (h / 2) * k1)
                k3 = rhs(t + h / 2, v + (h / 2) * k2)
                k4 = rhs(t + h, v + h * k3)
                step = (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
                v = v + step
                t = t + h
                if np.abs((step @ trace_vec).real).max() > RENORMALIZE_ABOVE:
                    rho, renorm = _renormalize(v.reshape(batch, n, n), t, renorm)
                    v = rho.reshape(batch, n2)
            rho = v.reshape(batch, n, n)
        t = t_rec
        times.append(t)
        snapshot(t, rho)
        if keep_states:
            states.append(rho.copy())

    out = []
    tarr = np.array(times)
    for b in range(batch):
        records = {name: np.array([r[name][b] for r in recs]) for name in FIELDS}
        kept = np.stack([st[b] for st in states]) if keep_states else None
        out.append(Trajectory(tarr, records, basis, rho[b].copy(), renorm, kept))
    return out


def _renormalize(rho: np.ndarray, t: float, count: int) -> tuple[np.ndarray, int]:
    tr = np.einsum("...aa->...", rho).real
    drift = float(np.abs(tr - 1.0).max())
    if drift > TRACE_ABORT:
        raise IntegrationError(f"trace drift {drift:.3e} at t = {t} exceeds {TRACE_ABORT}")
    log.warning("trace drift beyond %.0e per step at t = %.6g; renormalizing", RENORMALIZE_ABOVE, t)
    return rho / tr[..., None, None], count + 1


def flat_rhs(generator, n: int) -> Callable[[float, np.ndarray], np.ndarray]:
    """The generator as a map on vectorized states ``(..., n^2)``."""
    fn = getattr(generator, "rhs_flat", None)
    if fn is not None:
        return fn
    sup = generator.superoperator() if getattr(generator, "linear", False) and not getattr(
        generator, "time_dependent", True
    ) else None
    if sup is not None:
        if sup.ndim == 2:
            st = np.ascontiguousarray(sup.T)
            return lambda t, v: v @ st
        return lambda t, v: np.matmul(sup, v[..., None])[..., 0]

    def wrapped(t: float, v: np.ndarray) -> np.ndarray:
        return generator(t, v.reshape(v.shape[:-1] + (n, n))).reshape(v.shape)

    return wrapped


def integrate(
    rho0: DensityMatrix,
    generator: Generator,
    t_end: float,
    dt: float,
    record_every: float = TWO_PI,
    check_positivity: bool = True,
    method: str = "rk4",
    inner_dt: float = 5e-4,
    keep_states: bool = False,
) -> Trajectory:
    """Integrate one initial state; see :func:`integrate_many`."""
    return integrate_many([rho0], generator, t_end, dt, record_every, check_positivity, method, inner_dt, keep_states)[0]


def propagate(rho0: np.ndarray, generator: Generator, t_end: float, dt: float) -> np.ndarray:
    """Final state(s) only, with no bookkeeping. ``rho0`` may carry a batch axis."""
    rho = np.asarray(rho0, dtype=complex)
    segs = _segments(t_end, t_end if t_end > 0 else 1.0, dt) if t_end > 0 else []
    linear = getattr(generator, "linear", False) and not getattr(generator, "time_dependent", True)
    t = 0.0
    for steps, h in segs:
        if linear:
            rho = apply_superop(np.linalg.matrix_power(rk4_step_matrix(generator.superoperator(), h), steps), rho)
            continue
        for _ in range(steps):
            k1 = generator(t, rho)
            k2 = generator(t + h / 2, rho + (h / 2) * k1)
            k3 = generator(t + h / 2, rho + (h / 2) * k2)
            k4 = generator(t + h, rho + h * k3)
            rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
    return rho


def initial_for(model: str, label: str) -> DensityMatrix:
    return DensityMatrix.pure(label, basis_for(model))
