"""Dense complex linear algebra for small quantum operators.

Operators, Hamiltonians and density matrices are plain ``numpy`` arrays of
dtype ``complex128``. Everything here is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DimensionError",
    "NotHermitianError",
    "EigenDecomposition",
    "as_matrix",
    "basis_ket",
    "outer",
    "dag",
    "tensor",
    "commutator",
    "anticommutator",
    "is_hermitian",
    "hermitian_eigen",
    "min_eigenvalue",
]


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(ValueError):
    """An operation that requires a Hermitian matrix was given something else."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def basis_ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``|a><b|``."""
    return np.outer(a, np.conj(b))


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def tensor(a, b) -> np.ndarray:
    """Kronecker product with the first factor as the major index."""
    return np.kron(as_matrix(a), as_matrix(b))


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-2:] != b.shape[-2:]:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_same(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_same(a, b)
    return a @ b + b @ a


def is_hermitian(h, rtol: float = 1e-10) -> bool:
    h = as_matrix(h)
    scale = max(np.linalg.norm(h), 1.0)
    return bool(np.linalg.norm(h - h.conj().T) <= rtol * scale)


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectrum of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; ``eigenvectors[:, k]`` belongs to
    ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _off_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


@lru_cache(maxsize=None)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Disjoint pivot pairs, ``n - 1`` (or ``n``) rounds covering every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(x, y), max(x, y)) for x, y in pairs if x < n and y < n]
        rounds.append((np.array([x for x, _ in pairs]), np.array([y for _, y in pairs])))
        players = [players[0], players[-1], *players[1:-1]]
    return tuple(rounds)


def hermitian_eigen(
    h,
    tol: float = 1e-13,
    max_sweeps: int = 100,
    guess: np.ndarray | None = None,
) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation removes the phase of its pivot ``a[p, q]`` and then applies
    the classic real Jacobi rotation, annihilating the pivot. Pivots are
    visited in round-robin order so that the rotations of one round act on
    disjoint index pairs and can be applied together as a single unitary.
    Sweeps stop when the off-diagonal Frobenius norm drops below
    ``tol * ||h||``.

    Parameters
    ----------
    guess
        Optional unitary whose columns approximate the eigenvectors (e.g. the
        basis of a nearby matrix). Iteration then starts from
        ``guess^dagger h guess`` and typically needs one or two sweeps.

    Raises
    ------
    NotHermitianError
        If ``||h - h^dagger|| > 1e-10 ||h||``.
    """
    h = as_matrix(h)
    n = h.shape[0]
    scale = float(np.linalg.norm(h))
    if np.linalg.norm(h - h.conj().T) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise NotHermitianError("hermitian_eigen requires a Hermitian matrix")
    if guess is None:
        v = np.eye(n, dtype=complex)
        a = 0.5 * (h + h.conj().T)
    else:
        v = np.array(guess, dtype=complex)
        a = v.conj().T @ h @ v
        a = 0.5 * (a + a.conj().T)
    threshold = tol * scale
    skip = threshold / (4.0 * n)

    if scale > 0.0 and n > 1:
        for _ in range(max_sweeps):
            if _off_norm(a) <= threshold:
                break
            for ps, qs in _round_robin(n):
                apq = a[ps, qs]
                mag = np.abs(apq)
                active = mag > skip
                if not active.any():
                    continue
                p, q, apq, mag = ps[active], qs[active], apq[active], mag[active]
                ph = np.conj(apq) / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t[theta == 0.0] = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # G = diag(1, ph) @ [[c, s], [-s, c]] on each (p, q) plane
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -s * ph
                g[q, q] = c * ph
                a = g.conj().T @ a @ g
                v = v @ g
                a[p, q] = 0.0
                a[q, p] = 0.0
        else:
            if _off_norm(a) > threshold:
                raise RuntimeError("Jacobi iteration did not converge")

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(eigenvalues=w[order], eigenvectors=v[:, order])


def min_eigenvalue(rho, guess: np.ndarray | None = None) -> float:
    return float(hermitian_eigen(rho, tol=1e-12, guess=guess).eigenvalues[0])
