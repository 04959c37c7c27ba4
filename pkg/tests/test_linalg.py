import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maslovbox.errors import ConfigError, NumericalError
from maslovbox.linalg import (LagrangianFrame, fix_phase, hermitian_eigen,
                              is_lagrangian_frame, lagrangian_defect,
                              lagrangian_from_unitary, orthonormalize,
                              projection_distance, random_lagrangian,
                              random_unitary, symplectic_defect, symplectic_j)
from maslovbox.maslov import unitarity_defect, w_tilde

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 4)


def test_j_structure():
    for n in (1, 2, 3):
        j = symplectic_j(n)
        assert np.allclose(j @ j, -np.eye(2 * n))
        assert np.allclose(j.conj().T, -j)
    with pytest.raises(ConfigError):
        symplectic_j(0)


@given(seeds, dims)
def test_random_frames_are_lagrangian(seed, n):
    rng = np.random.default_rng(seed)
    f = random_lagrangian(n, rng)
    assert lagrangian_defect(f) < 1e-12
    assert is_lagrangian_frame(f)


@given(seeds, dims)
def test_w_tilde_unitary(seed, n):
    rng = np.random.default_rng(seed)
    w = w_tilde(random_lagrangian(n, rng), random_lagrangian(n, rng))
    assert unitarity_defect(w) <= 1e-10


@given(seeds, dims)
def test_w_tilde_ignores_right_factors(seed, n):
    rng = np.random.default_rng(seed)
    f1, f2 = random_lagrangian(n, rng), random_lagrangian(n, rng)
    g1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    g2 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    d = np.abs(w_tilde(f1 @ g1, f2 @ g2) - w_tilde(f1, f2)).max()
    assert d <= 1e-9


@given(seeds, dims)
def test_same_plane_gives_minus_identity(seed, n):
    # W~(F, F G) = -I for any invertible G.
    rng = np.random.default_rng(seed)
    f = random_lagrangian(n, rng)
    g = rng.normal(size=(n, n)) + 3 * np.eye(n)
    assert np.allclose(w_tilde(f, f @ g), -np.eye(n), atol=1e-10)


@given(seeds, dims)
def test_unitary_roundtrip(seed, n):
    # W~(frame(U), Dirichlet) = U.
    rng = np.random.default_rng(seed)
    u = random_unitary(n, rng)
    f = lagrangian_from_unitary(u)
    assert lagrangian_defect(f) < 1e-12
    d = np.vstack([np.zeros((n, n)), np.eye(n)])
    assert np.allclose(w_tilde(f, d), u, atol=1e-10)
    assert projection_distance(f, f @ np.diag(np.arange(1, n + 1))) < 1e-12


def test_dirichlet_neumann_w():
    # X - iY for Dirichlet (0; 1) is -i, for Neumann (1; 0) it is 1.
    d = np.array([[0.0], [1.0]])
    nm = np.array([[1.0], [0.0]])
    assert np.allclose(w_tilde(d, nm), [[1.0]])
    assert np.allclose(w_tilde(d, d), [[-1.0]])


def test_singular_denominator_rejected():
    with pytest.raises(NumericalError):
        w_tilde(np.array([[1.0], [-1j]]), np.array([[0.0], [1.0]]))


def test_hermitian_eigen_sorted_and_phased():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = a + a.conj().T
    vals, vecs = hermitian_eigen(h)
    assert np.all(np.diff(vals) >= 0)
    assert np.allclose(h @ vecs, vecs * vals)
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(4)]
    assert np.allclose(lead.imag, 0) and np.all(lead.real > 0)


def test_hermitian_eigen_rejects_asymmetric():
    with pytest.raises(ConfigError):
        hermitian_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_fix_phase_vector():
    v = fix_phase(np.array([1j, 0.5]))
    assert np.isclose(v[0], 1.0)


def test_orthonormalize_spans_same_plane():
    rng = np.random.default_rng(5)
    f = random_lagrangian(2, rng)
    q = orthonormalize(f)
    assert np.allclose(q.conj().T @ q, np.eye(2))
    assert projection_distance(f, q) < 1e-12


def test_symplectic_defect_of_flow():
    from scipy.linalg import expm
    rng = np.random.default_rng(7)
    n = 2
    h = rng.normal(size=(2 * n, 2 * n))
    h = h + h.T
    phi = expm(-symplectic_j(n) @ h * 0.3)
    assert symplectic_defect(phi) < 1e-12
    assert symplectic_defect(2 * phi) > 1.0


def test_frame_constructor():
    f = LagrangianFrame.from_matrix(np.array([[1.0], [2.0]]), 0.5, -1.0)
    assert f.n == 1 and f.x_position == 0.5
    assert np.allclose(f.matrix, [[1.0], [2.0]])
    with pytest.raises(NumericalError):
        LagrangianFrame.from_matrix(np.array([[1.0], [1j]]))
