import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabicav.core import (
    Basis, DensityMatrix, ValidationError, hermitian_eigen, partial_transpose,
)
from conftest import random_hermitian


def test_eigen_identity():
    w, v = hermitian_eigen(np.eye(3))
    assert np.allclose(w, [1.0, 1.0, 1.0])
    assert np.allclose(v @ v.conj().T, np.eye(3))


def test_eigen_diagonal_sorted_descending():
    w, _ = hermitian_eigen(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [3.0, 2.0, 1.0])


def test_eigen_pauli_x():
    w, v = hermitian_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(w, [1.0, -1.0])
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    for i in range(2):
        assert np.allclose(m @ v[:, i], w[i] * v[:, i])


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        hermitian_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigen_rejects_odd_dimension():
    with pytest.raises(ValidationError):
        hermitian_eigen(np.eye(5))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([2, 3, 4, 9]))
def test_eigen_reconstruction(seed, dim):
    m = random_hermitian(np.random.default_rng(seed), dim)
    w, v = hermitian_eigen(m)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - m)) <= 1e-10 * max(1.0, np.max(np.abs(m)))
    assert np.all(np.diff(w) <= 1e-12)


def _sparse_state():
    # |e,0>/|g,1> block plus |g,0> population, the embedded pattern
    m = np.zeros((4, 4), dtype=complex)
    m[1, 1] = 0.35
    m[2, 2] = 0.35
    m[1, 2] = 0.1 + 0.3j
    m[2, 1] = 0.1 - 0.3j
    m[3, 3] = 0.3
    return DensityMatrix(m, Basis.BARE4)


def test_partial_transpose_moves_coherences_to_corners():
    rho = _sparse_state()
    r = partial_transpose(rho)
    assert r[0, 3] == rho.matrix[2, 1]
    assert r[3, 0] == rho.matrix[1, 2]
    assert r[1, 2] == 0.0 and r[2, 1] == 0.0
    for i in range(4):
        assert r[i, i] == rho.matrix[i, i]
    assert np.max(np.abs(r - r.conj().T)) == 0.0


def test_partial_transpose_diagonal_invariant():
    rho = DensityMatrix(np.eye(4, dtype=complex) / 4.0, Basis.BARE4)
    assert np.array_equal(partial_transpose(rho), rho.matrix)


def test_partial_transpose_bell_block():
    # projector on (|e,0> + |g,1>)/sqrt(2): maximally entangled in the block
    psi = np.array([0.0, 1.0, 1.0, 0.0]) / np.sqrt(2.0)
    rho = DensityMatrix(np.outer(psi, psi).astype(complex), Basis.BARE4)
    w, _ = hermitian_eigen(partial_transpose(rho))
    assert w[-1] == pytest.approx(-0.5, abs=1e-12)


def test_partial_transpose_involution_exact():
    rho = _sparse_state()
    assert np.array_equal(partial_transpose(partial_transpose(rho)), rho.matrix)


def test_partial_transpose_rejects_three_level():
    rho3 = DensityMatrix(np.diag([1.0, 0.0, 0.0]).astype(complex), Basis.BARE)
    with pytest.raises(ValidationError):
        partial_transpose(rho3)


def test_density_matrix_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.7, 0.7, 0.0]).astype(complex), Basis.BARE)  # trace 1.4
    bad = np.diag([1.0, 0.0, 0.0]).astype(complex)
    bad[0, 1] = 0.1  # non-Hermitian
    with pytest.raises(ValidationError):
        DensityMatrix(bad, Basis.BARE)
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.1, -0.1, 0.0]).astype(complex), Basis.BARE)  # negative


def test_density_matrix_basis_dimension_mismatch():
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(4, dtype=complex) / 4.0, Basis.BARE)
