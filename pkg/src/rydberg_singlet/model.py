"""Hamiltonians, collapse operators and named states of the two-atom system.

Each atom has levels ``|0>, |1>, |r>`` (indices 0, 1, 2). Three bases are used:

``full``
    The 9-dim product basis, index ``3 * atom1 + atom2``.
``collective``
    The 5-dim basis ``(|00>, |B>, |D>, |11>, |rr>)`` spanned by the
    resonant effective model, with ``|B> = (|01> + |10>)/sqrt 2`` and
    ``|D> = (|10> - |01>)/sqrt 2``.
``transit``
    ``collective`` followed by the four single-excitation states
    ``(|0r>, |1r>, |r0>, |r1>)``. The effective Hamiltonian never couples to
    them; they only carry population while ``|rr>`` decays atom by atom.

All frequencies are in units of the optical Rabi frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .qops import EigenDecomposition, basis_ket, outer, tensor

__all__ = [
    "SystemParams",
    "Basis",
    "FULL",
    "COLLECTIVE",
    "TRANSIT",
    "MODELS",
    "basis_for",
    "named_state",
    "to_transit",
    "single_atom",
    "build_full_hamiltonian",
    "build_effective_hamiltonian",
    "build_time_averaged_hamiltonian",
    "build_model_hamiltonian",
    "build_collapse_ops",
    "project_to_model",
    "eigen_energies",
    "analytic_eigensystem",
    "coherent_evolve_analytic",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and detunings, dimensionless in units of the optical Rabi frequency.

    Defaults are the single-run parameters used throughout: ``Delta_r = 50``,
    antiblockade ``U_rr = 2 Delta_r``, ``gamma = 0.002``, ``Omega_m = 0.01`` and
    the Stark-cancelling microwave detuning ``Delta_m = Omega_r^2 / 4 Delta_r``.
    """

    omega_r: float = 1.0
    delta_r: float = 50.0
    omega_m: float = 0.01
    delta_m: float = 0.005
    u_rr: float = 100.0
    gamma: float = 0.002
    lambda1: float = 0.0
    lambda2: float = 0.0
    eta: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))
        if len(self.eta) != 4:
            raise ValueError("eta must hold four noise amplitudes")
        for name in ("omega_r", "omega_m", "u_rr", "gamma", "lambda1", "lambda2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        for name in ("delta_r", "delta_m"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if any(x < 0 or not math.isfinite(x) for x in self.eta):
            raise ValueError(f"noise amplitudes must be >= 0, got {self.eta}")

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @property
    def antiblockade(self) -> bool:
        """Whether ``U_rr = 2 Delta_r`` holds to relative 1e-12."""
        target = 2.0 * self.delta_r
        return abs(self.u_rr - target) <= 1e-12 * max(abs(target), abs(self.u_rr), 1e-300)

    @property
    def omega_e(self) -> float:
        """Effective two-photon Rabi frequency ``Omega_r^2 / Delta_r``."""
        if self.delta_r == 0:
            raise ValueError("the effective model needs a nonzero optical detuning")
        return self.omega_r**2 / self.delta_r

    @property
    def stark_shift(self) -> float:
        """Uniform frame shift ``Omega_r^2 / 2 Delta_r``."""
        return 0.5 * self.omega_e

    @property
    def stark_cancelling_delta_m(self) -> float:
        return self.omega_r**2 / (4.0 * self.delta_r)

    @property
    def a(self) -> float:
        return math.sqrt(self.omega_m**2 + (self.omega_e / 2) ** 2)

    @property
    def b_squared(self) -> float:
        return math.sqrt(self.omega_m**4 + (self.omega_e / 2) ** 4)

    @property
    def c(self) -> float:
        return math.sqrt(self.omega_m**2 + self.omega_e**2 / 2)


# --------------------------------------------------------------------- bases


@dataclass(frozen=True)
class Basis:
    name: str
    labels: tuple[str, ...]
    # columns: basis vectors written in the full product basis
    vectors: np.ndarray = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


_LEVELS = "01r"
_FULL_LABELS = tuple(a + b for a in _LEVELS for b in _LEVELS)


def _product_ket(label: str) -> np.ndarray:
    return basis_ket(9, _FULL_LABELS.index(label))


def _collective_vectors(labels: tuple[str, ...]) -> np.ndarray:
    cols = []
    for label in labels:
        if label == "B":
            cols.append((_product_ket("01") + _product_ket("10")) / SQRT2)
        elif label == "D":
            cols.append((_product_ket("10") - _product_ket("01")) / SQRT2)
        else:
            cols.append(_product_ket(label))
    return np.column_stack(cols)


_COLLECTIVE_LABELS = ("00", "B", "D", "11", "rr")
_TRANSIT_LABELS = _COLLECTIVE_LABELS + ("0r", "1r", "r0", "r1")

FULL = Basis("full", _FULL_LABELS, np.eye(9, dtype=complex))
COLLECTIVE = Basis("collective", _COLLECTIVE_LABELS, _collective_vectors(_COLLECTIVE_LABELS))
TRANSIT = Basis("transit", _TRANSIT_LABELS, _collective_vectors(_TRANSIT_LABELS))

# model name -> state space of its master equation
MODELS = {
    "full": FULL,
    "effective": TRANSIT,
    "effective-branching": COLLECTIVE,
}


def basis_for(model: str) -> Basis:
    try:
        return MODELS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(MODELS)}") from None


NAMED_STATES = ("00", "01", "10", "11", "B", "D", "rr")


def named_state(label: str, basis: Basis = FULL) -> np.ndarray:
    """Ket of a named two-atom state expressed in ``basis``.

    Any product label (``"0r"``, ``"11"``...) or ``"B"``/``"D"`` is accepted as
    long as it lies in the span of ``basis``.
    """
    if label in ("B", "D"):
        full = _collective_vectors((label,))[:, 0]
    elif label in _FULL_LABELS:
        full = _product_ket(label)
    else:
        raise ValueError(f"unknown state label {label!r}")
    ket = basis.vectors.conj().T @ full
    if abs(np.vdot(ket, ket) - 1.0) > 1e-12:
        raise ValueError(f"state {label!r} is not contained in the {basis.name} basis")
    return ket


def to_transit(op_full: np.ndarray) -> np.ndarray:
    """Rewrite a full-basis operator in the ``transit`` basis."""
    w = TRANSIT.vectors
    return w.conj().T @ op_full @ w


def project_to_model(op_full: np.ndarray, model: str) -> np.ndarray:
    """Express a full-basis operator in a model's state space.

    For the effective models only the collective block ``{|00>, |B>, |D>,
    |11>, |rr>}`` is kept: couplings to single-excitation states are not
    part of the effective dynamics.
    """
    basis = basis_for(model)
    if basis is FULL:
        return np.asarray(op_full, dtype=complex)
    sub = COLLECTIVE.vectors.conj().T @ op_full @ COLLECTIVE.vectors
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    out[:5, :5] = sub
    return out


# ------------------------------------------------------------- Hamiltonians


def _ket3(i: int) -> np.ndarray:
    return basis_ket(3, i)


def single_atom(op3: np.ndarray, atom: int) -> np.ndarray:
    """Embed a 3x3 single-atom operator for atom 1 or 2 into the product space."""
    eye = np.eye(3, dtype=complex)
    if atom == 1:
        return tensor(op3, eye)
    if atom == 2:
        return tensor(eye, op3)
    raise ValueError("atom must be 1 or 2")


def _flip(i: int, j: int) -> np.ndarray:
    """``|i><j| + |j><i|`` on one atom."""
    op = outer(_ket3(i), _ket3(j))
    return op + op.conj().T


def build_full_hamiltonian(p: SystemParams) -> np.ndarray:
    """Full 9x9 interaction-picture Hamiltonian (laser + microwave).

    The Hermitian conjugate completes each parenthesized single-atom sum, so the
    diagonal projectors appear with doubled weight: ``Delta_m |0><0|`` and
    ``-Delta_r |r><r|`` per atom.
    """
    h = np.zeros((9, 9), dtype=complex)
    proj_r = outer(_ket3(2), _ket3(2))
    proj_0 = outer(_ket3(0), _ket3(0))
    for atom in (1, 2):
        h_laser = -p.delta_r * proj_r + 0.5 * p.omega_r * _flip(1, 2)
        h_micro = p.delta_m * proj_0 + 0.5 * p.omega_m * _flip(0, 1)
        h += single_atom(h_laser + h_micro, atom)
    rr = _product_ket("rr")
    h += p.u_rr * outer(rr, rr)
    return h


def build_effective_hamiltonian(p: SystemParams) -> np.ndarray:
    """Resonant five-level Hamiltonian in the ``collective`` basis.

    Valid when ``Delta_r >> Omega_r``, ``U_rr = 2 Delta_r`` and
    ``Delta_m = Omega_r^2 / 4 Delta_r``; checking those is the caller's job.
    """
    omega_e = p.omega_e
    h = np.zeros((5, 5), dtype=complex)
    i00, ib, _, i11, irr = range(5)
    h[i00, ib] = h[i11, ib] = p.omega_m / SQRT2
    h[i11, irr] = omega_e / 2
    return h + h.conj().T


def build_time_averaged_hamiltonian(p: SystemParams) -> np.ndarray:
    """Adiabatically eliminated Hamiltonian for arbitrary microwave detuning.

    Written in the ``collective`` basis and in the frame rotating at the
    uniform shift ``Omega_r^2 / 2 Delta_r``; it coincides with
    :func:`build_effective_hamiltonian` when ``Delta_m`` cancels the Stark
    shift. The frame shift is a multiple of the identity and leaves every
    density-matrix trajectory unchanged.
    """
    shift = p.stark_shift
    h = build_effective_hamiltonian(p)
    quarter = p.omega_r**2 / (4.0 * p.delta_r)
    h[0, 0] += 2.0 * p.delta_m - shift
    h[1, 1] += p.delta_m + quarter - shift
    h[2, 2] += p.delta_m + quarter - shift
    return h


def build_model_hamiltonian(p: SystemParams, model: str) -> np.ndarray:
    """Drift Hamiltonian of the master equation for ``model``."""
    basis = basis_for(model)
    if basis is FULL:
        return build_full_hamiltonian(p)
    h5 = build_time_averaged_hamiltonian(p)
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    out[:5, :5] = h5
    return out


@lru_cache(maxsize=None)
def _unit_jumps_full() -> tuple[np.ndarray, ...]:
    ops = []
    for atom in (1, 2):
        for k in (0, 1):
            ops.append(single_atom(outer(_ket3(k), _ket3(2)), atom))
    return tuple(ops)


def build_collapse_ops(p: SystemParams, model: str = "full") -> list[np.ndarray]:
    """Spontaneous-emission operators ``sqrt(gamma/2) |k>_j <r|``, ``j = 1, 2``, ``k = 0, 1``.

    ``full`` and ``effective`` use the single-atom operators themselves (the
    latter rewritten in the ``transit`` basis, so ``|rr>`` decays through
    ``|kr>``/``|rk>`` to the ground states). ``effective-branching`` lumps
    the cascade into four direct jumps ``|rr> -> {|00>, |B>, |D>, |11>}``,
    each at rate ``gamma / 2``.
    """
    amp = math.sqrt(p.gamma / 2.0)
    basis = basis_for(model)
    if basis is FULL:
        return [amp * op for op in _unit_jumps_full()]
    if basis is TRANSIT:
        return [amp * to_transit(op) for op in _unit_jumps_full()]
    irr = COLLECTIVE.index("rr")
    return [amp * outer(basis_ket(5, k), basis_ket(5, irr)) for k in range(4)]


# --------------------------------------------------------- analytic spectrum


def eigen_energies(p: SystemParams) -> tuple[float, float, float, float, float]:
    """``(E1, ..., E5) = (0, E2, E3, -E2, -E3)`` of the resonant effective Hamiltonian, unsorted."""
    a2 = p.a**2
    b2 = p.b_squared
    e2 = math.sqrt((a2 + b2) / 2.0)
    e3 = math.sqrt(max(a2 - b2, 0.0) / 2.0)
    return (0.0, e2, e3, -e2, -e3)


def _analytic_vectors(p: SystemParams) -> list[np.ndarray]:
    om, oe = p.omega_m, p.omega_e
    a2, b2, c2 = p.a**2, p.b_squared, p.c**2
    dark = np.zeros(5, dtype=complex)
    dark[2] = 1.0
    vecs = [dark]
    for sign_root, sign_odd in ((+1, +1), (-1, +1), (+1, -1), (-1, -1)):
        s = a2 + sign_root * b2
        root = math.sqrt(s)
        v = np.zeros(5, dtype=complex)
        v[0] = sign_odd * (-2.0 * c2 * root + 2.0 * s**1.5)
        v[1] = 2.0 * om * s - om * oe**2
        v[3] = sign_odd * 2.0 * root * om**2
        v[4] = SQRT2 * om**2 * oe
        vecs.append(v / np.linalg.norm(v))
    return vecs


def analytic_eigensystem(p: SystemParams) -> EigenDecomposition:
    """Closed-form eigensystem of :func:`build_effective_hamiltonian`.

    Eigenvalues come back ascending, ``(E4, E5, E1, E3, E2)``; the zero mode is
    exactly ``|D>``. Raises ``ValueError`` in the degenerate case
    ``a^2 = b^2``, which happens when ``Omega_m`` or ``Omega_e`` vanishes.
    """
    if p.omega_m <= 0 or p.omega_e <= 0:
        raise ValueError("analytic eigensystem needs Omega_m > 0 and Omega_e > 0")
    a2, b2 = p.a**2, p.b_squared
    if a2 - b2 <= 1e-14 * a2:
        raise ValueError("degenerate spectrum: a^2 == b^2")
    energies = np.array(eigen_energies(p))
    vectors = np.column_stack(_analytic_vectors(p))
    order = np.argsort(energies, kind="stable")
    return EigenDecomposition(eigenvalues=energies[order], eigenvectors=vectors[:, order])


def coherent_evolve_analytic(psi0, p: SystemParams, t: float) -> np.ndarray:
    """Propagate a collective-basis ket under the resonant effective Hamiltonian.

    Uses the eigen-expansion ``psi(t) = sum_k C_k exp(-i E_k t) |phi_k>`` with
    ``C_k = <phi_k|psi(0)>``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (5,):
        raise ValueError("psi0 must be a 5-component collective-basis ket")
    eig = analytic_eigensystem(p)
    coeffs = eig.eigenvectors.conj().T @ psi0
    return eig.eigenvectors @ (coeffs * np.exp(-1j * eig.eigenvalues * t))
