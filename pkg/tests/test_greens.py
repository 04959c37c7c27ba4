import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import TIGHT, dirichlet, manufactured, unit_pencil
from maslovbox.errors import ConfigError, NumericalError
from maslovbox.greens import (assemble, choose_gamma, greens_kernel,
                              kernel_jump, shooting_solve,
                              solve_inhomogeneous)
from maslovbox.linalg import symplectic_j
from maslovbox.model import REGULAR, build_linear_pencil

DIRICHLET_RIGHT = np.array([[0.0], [1.0]])


def string(domain=(-10.0, 10.0)):
    """-psi'' = lam psi as J y' = diag(lam, 1) y."""
    return build_linear_pencil(lambda x: np.diag([0.0, 1.0]),
                               lambda x: np.diag([1.0, 0.0]), (0.0, 5.0),
                               domain, REGULAR, REGULAR)


def sinh_kernel(k, c, b, x, xi):
    lo, hi = min(x, xi), max(x, xi)
    return np.sinh(k * (lo - c)) * np.sinh(k * (b - hi)) / (
        k * np.sinh(k * (b - c)))


def test_kernel_matches_closed_form():
    # -psi'' + k^2 psi = f with psi(c) = psi(b) = 0.
    k, c, b = 2.0, 0.2, 2.5
    asm = assemble(string(), -k * k, c, b, DIRICHLET_RIGHT,
                   gamma=dirichlet(1), config=TIGHT)
    for x, xi in [(0.5, 1.7), (2.2, 0.4), (1.0, 1.01), (2.4, 2.3)]:
        g = greens_kernel(asm, x, xi)
        assert g[0, 0].real == pytest.approx(sinh_kernel(k, c, b, x, xi),
                                             rel=1e-8, abs=1e-12)


def test_kernel_jump_is_minus_j():
    asm = assemble(string(), -1.5, 0.3, 4.0, DIRICHLET_RIGHT, config=TIGHT)
    for xi in (0.5, 2.0, 3.9):
        assert np.allclose(kernel_jump(asm, xi), -symplectic_j(1),
                           atol=1e-9)
    with pytest.raises(ConfigError):
        greens_kernel(asm, 1.0, 1.0)


@given(st.integers(0, 2**31), st.integers(1, 2), st.floats(-3.0, 3.0))
@settings(max_examples=10)
def test_m_is_anti_hermitian(seed, n, lam):
    rng = np.random.default_rng(seed)
    sys = unit_pencil(rng, n, interval=(-1.0, 2.0))
    rb = np.vstack([np.zeros((n, n)), np.eye(n)])
    try:
        asm = assemble(sys, lam, 0.0, 1.0, rb, config=TIGHT)
    except NumericalError:
        return
    assert asm.anti_hermitian_defect() <= 1e-10


@pytest.mark.parametrize("seed,n", [(1, 1), (2, 1), (3, 2), (4, 2)])
def test_manufactured_solution(seed, n):
    # y* vanishes at both ends, so every boundary condition holds; with
    # B_lam = I the forcing is f = J y*' - B y*.
    rng = np.random.default_rng(seed)
    sys = unit_pencil(rng, n, interval=(-1.0, 2.0))
    y_star, dy_star = manufactured(rng, n)
    lam = 0.37
    j = symplectic_j(n)
    f = lambda x: j @ dy_star(x) - sys.B(x, np.array([lam]))[0] @ y_star(x)
    rb = np.vstack([np.eye(n), np.zeros((n, n))])
    asm = assemble(sys, lam, 0.0, 1.0, rb, config=TIGHT)
    xs = np.linspace(0.0, 1.0, 201)
    rep = solve_inhomogeneous(asm, f, xs)
    exact = np.stack([y_star(x) for x in xs])
    assert np.abs(rep.y - exact).max() <= 1e-6
    assert rep.ok(1e-6), (rep.residual, rep.left_residual,
                          rep.right_residual)


def test_shooting_agrees_with_kernel():
    rng = np.random.default_rng(11)
    sys = unit_pencil(rng, 2, interval=(-1.0, 2.0))
    rb = np.vstack([np.zeros((2, 2)), np.eye(2)])
    asm = assemble(sys, -0.8, 0.0, 1.0, rb, config=TIGHT)
    f = lambda x: np.array([1.0, x, np.cos(3 * x), -2.0])
    xs = np.linspace(0.0, 1.0, 101)
    rep = solve_inhomogeneous(asm, f, xs)
    shot = shooting_solve(asm, f, xs, TIGHT)
    assert np.abs(rep.y - shot).max() <= 1e-7 * max(1.0, np.abs(shot).max())


def test_eigenvalue_makes_e_singular():
    # Dirichlet string of length pi has eigenvalue 1.
    with pytest.raises(NumericalError):
        assemble(string(), 1.0, 0.5, 0.5 + np.pi, DIRICHLET_RIGHT,
                 gamma=dirichlet(1), config=TIGHT)


def test_bad_inputs():
    with pytest.raises(ConfigError):
        choose_gamma(np.eye(2))
    with pytest.raises(ConfigError):
        choose_gamma(np.array([[1.0], [1j]]))
    with pytest.raises(ConfigError):
        assemble(string(), -1.0, 0.0, 1.0, DIRICHLET_RIGHT)
    with pytest.raises(ConfigError):
        assemble(string(), -1.0, 0.5, 1.0, np.array([[1.0], [1j]]))
    with pytest.raises(ConfigError):
        assemble(string(), -1.0, 0.5, 1.0, DIRICHLET_RIGHT,
                 gamma=np.array([[1.0, 1j]]))
    asm = assemble(string(), -1.0, 0.5, 1.0, DIRICHLET_RIGHT)
    with pytest.raises(ConfigError):
        solve_inhomogeneous(asm, lambda x: np.ones(2), [0.6, 1.0])
