import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import kron_loop, random_hermitian
from rydberg_singlet.qops import (
    DimensionError,
    NotHermitianError,
    basis_ket,
    commutator,
    hermitian_eigen,
    min_eigenvalue,
    outer,
    tensor,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_tensor_of_identities():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_ordering_first_atom_major():
    flip = outer(basis_ket(3, 0), basis_ket(3, 1))
    op = tensor(flip, np.eye(3))
    ket_1r = np.kron(basis_ket(3, 1), basis_ket(3, 2))
    ket_0r = np.kron(basis_ket(3, 0), basis_ket(3, 2))
    assert np.array_equal(op @ ket_1r, ket_0r)


def test_tensor_matches_loop_oracle():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    t = tensor(a, b)
    assert t[2, 5] == pytest.approx(a[0, 1] * b[2, 2], rel=1e-15)
    assert np.allclose(t, kron_loop(a, b), rtol=1e-15, atol=0)


def test_tensor_rejects_non_square():
    with pytest.raises(DimensionError):
        tensor(np.ones((2, 3)), np.eye(2))


def test_commutator_identities():
    a = random_hermitian(np.random.default_rng(2), 4)
    assert np.array_equal(commutator(a, a), np.zeros((4, 4)))
    assert np.allclose(commutator(SX, SY), 2j * SZ, atol=0)


def test_commutator_of_hermitians_is_antihermitian():
    rng = np.random.default_rng(3)
    x = commutator(random_hermitian(rng, 5), random_hermitian(rng, 5))
    assert np.abs(x.conj().T + x).max() < 1e-14


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(3))


def test_eigen_of_diagonal():
    dec = hermitian_eigen(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [1, 2, 3], atol=0)


def test_eigen_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eigen(np.array([[0, 1], [0, 0]], dtype=complex))


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3, 4, 5, 9]))
def test_eigen_invariants(seed, n):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n)
    dec = hermitian_eigen(h)
    norm = np.linalg.norm(h)
    v = dec.eigenvectors
    assert np.all(np.diff(dec.eigenvalues) >= 0)
    resid = np.linalg.norm(h @ v - v * dec.eigenvalues, axis=0)
    assert resid.max() <= 1e-10 * norm
    assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-10
    assert np.linalg.norm(dec.reconstruct() - h) <= 1e-9
    # oracle: LAPACK
    assert np.allclose(dec.eigenvalues, np.linalg.eigvalsh(h), atol=1e-12 * max(norm, 1))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_eigenvalues_invariant_under_unitary_conjugation(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 9)
    u = hermitian_eigen(random_hermitian(rng, 9)).eigenvectors
    a = hermitian_eigen(h).eigenvalues
    b = hermitian_eigen(u.conj().T @ h @ u).eigenvalues
    assert np.abs(a - b).max() <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_commutator_is_traceless(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert abs(np.trace(commutator(a, b))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_tensor_associative_and_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(k, k)) for k in (2, 3, 2))
    left = tensor(tensor(a, b), c)
    assert left.shape == (12, 12)
    assert np.allclose(left, tensor(a, tensor(b, c)), rtol=1e-15, atol=1e-15)


def test_warm_start_gives_same_answer():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 9)
    cold = hermitian_eigen(h)
    warm = hermitian_eigen(h + 1e-6 * random_hermitian(rng, 9), guess=cold.eigenvectors)
    assert np.allclose(warm.eigenvalues, cold.eigenvalues, atol=1e-5)
    assert min_eigenvalue(np.diag([0.5, 0.25, 0.25])) == pytest.approx(0.25, abs=1e-15)
