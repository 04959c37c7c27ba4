"""Shared builders for the test suite."""

import dataclasses

import numpy as np

from maslovbox.endpoints import LEFT, RIGHT, RegularFrames
from maslovbox.model import (REGULAR, build_degenerate_sturm_liouville,
                             build_linear_pencil, build_quadratic_schrodinger)
from maslovbox.problems import VARY_LEFT, ProblemSetup
from maslovbox.propagator import IntegratorConfig

TIGHT = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)


def dirichlet(n):
    return np.hstack([np.eye(n), np.zeros((n, n))])


def regular_setup(sys, x_step=1e-3, lambda_step=1e-2, config=TIGHT):
    """Dirichlet data at both ends of a finite regular interval."""
    n = sys.n
    sys = dataclasses.replace(sys, alpha_eval=lambda lam: dirichlet(n))
    return ProblemSetup(
        sys=sys, left=RegularFrames(sys, LEFT, config=config),
        right=RegularFrames(sys, RIGHT, config=config),
        window=sys.interval, x_step=x_step, lambda_step=lambda_step,
        config=config, layout=VARY_LEFT)


def laplacian_setup(length=np.pi, lambda_domain=(0.5, 30.0), **kw):
    """-psi'' = lam psi on [0, length] with psi = 0 at both ends."""
    sys = build_linear_pencil(
        lambda x: np.diag([0.0, 1.0]), lambda x: np.diag([1.0, 0.0]),
        (0.0, length), lambda_domain, REGULAR, REGULAR, name="laplacian")
    return regular_setup(sys, **kw)


def _sym(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def random_schrodinger(rng, n, lambda_domain=(-20.0, 60.0)):
    """-psi'' + V(x) psi = lam W psi on [0, 1], real V(x) = V0 + x V1.

    W is symmetric positive definite, so B_lam = diag(W, 0) >= 0.
    """
    v0, v1 = 3 * _sym(rng, n), 3 * _sym(rng, n)
    g = rng.normal(size=(n, n))
    w = np.eye(n) + 0.2 * g @ g.T
    eye, zero = np.eye(n), np.zeros((n, n))
    base = np.block([[-v0, zero], [zero, eye]])
    slope = np.block([[-v1, zero], [zero, zero]])
    weight = np.block([[w, zero], [zero, zero]])

    def B0(x):
        return base + x * slope

    def B1(x):
        return weight

    return build_linear_pencil(B0, B1, (0.0, 1.0), lambda_domain, REGULAR,
                               REGULAR, name=f"random-n{n}")


def random_systems(count=20, seed=20240607):
    rng = np.random.default_rng(seed)
    return [random_schrodinger(rng, 1 + (k % 2)) for k in range(count)]


def unit_pencil(rng, n, interval=(0.0, 1.0)):
    """B = B0(x) + lam I with a real symmetric B0 (B1 = I)."""
    s0, s1 = _sym(rng, 2 * n), _sym(rng, 2 * n)
    return build_linear_pencil(lambda x: s0 + x * s1,
                               lambda x: np.eye(2 * n), interval,
                               (-5.0, 5.0), REGULAR, REGULAR)


def manufactured(rng, n, interval=(0.0, 1.0)):
    """A smooth y* vanishing at both ends, with its derivative."""
    a, b = interval
    c = rng.normal(size=(3, 2 * n))

    def shape(x):
        t = (x - a) / (b - a)
        return c[0] + c[1] * t + c[2] * t * t

    def dshape(x):
        t = (x - a) / (b - a)
        return (c[1] + 2 * c[2] * t) / (b - a)

    def y(x):
        t = (x - a) / (b - a)
        return np.sin(np.pi * t) * shape(x)

    def dy(x):
        t = (x - a) / (b - a)
        return (np.pi / (b - a) * np.cos(np.pi * t) * shape(x)
                + np.sin(np.pi * t) * dshape(x))

    return y, dy


def linear_example():
    return build_linear_pencil(
        lambda x: np.diag([-1.0 / (1 + x * x), 1.0]),
        lambda x: np.diag([1.0 + 0.5 * np.sin(x), 0.0]),
        (0.0, 5.0), (-2.0, 2.0), REGULAR, REGULAR)


def quadratic_example():
    return build_quadratic_schrodinger(
        V_eval=lambda x: np.array([[2.0 * np.exp(-x)]]),
        Q1_eval=lambda x: np.array([[1.0]]),
        Q2_eval=lambda x: np.array([[0.25]]),
        interval=(0.0, 4.0), lambda_domain=(0.0, 2.0),
        left_kind=REGULAR, right_kind=REGULAR)


def degenerate_example(v22=5.0):
    return build_degenerate_sturm_liouville(
        P11_eval=lambda x: np.array([[1.0 + 0.1 * x]]),
        V11_eval=lambda x: np.array([[np.cos(x)]]),
        V12_eval=lambda x: np.array([[0.3]]),
        V22_eval=lambda x: np.array([[v22]]),
        m=1, n_total=2, interval=(0.0, 3.0), lambda_domain=(-1.0, 2.0),
        left_kind=REGULAR, right_kind=REGULAR)
