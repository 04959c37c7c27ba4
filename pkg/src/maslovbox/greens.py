"""Green's function of a truncated problem and inhomogeneous solves.

On [c, b'] the operator carries the boundary conditions gamma y(c) = 0 and
Rb'* J y(b') = 0.  With U_c = Phi J gamma* and U_b = Phi R (R = U_b(c)) the
kernel is

    G(x, xi) = -U_b(x) M21 U_c(xi)*   for xi < x
    G(x, xi) =  U_c(x) M12 U_b(xi)*   for x < xi

where M = E^{-1} J (E*)^{-1}, E = (J gamma*, R).  The two solution families
are integrated in their stable directions (U_c forward, U_b backward), so
no growing fundamental matrix multiplies a decaying one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, NumericalError
from .linalg import lagrangian_defect, symplectic_j
from .propagator import DEFAULT_CONFIG, IntegratorConfig


def choose_gamma(Rb: np.ndarray) -> np.ndarray:
    """gamma = Rb*, so gamma J gamma* = 0 and gamma Rb = Rb* Rb > 0."""
    Rb = np.asarray(Rb, dtype=complex)
    if Rb.ndim != 2 or Rb.shape[0] != 2 * Rb.shape[1]:
        raise ConfigError(f"Rb must be 2n x n, got shape {Rb.shape}")
    if lagrangian_defect(Rb) > 1e-9 * max(1.0, np.linalg.norm(Rb) ** 2):
        raise ConfigError("Rb must frame a Lagrangian subspace")
    return np.conj(Rb).T


def _integrate(sys, lam, y0, x0, x1, config):
    m = y0.shape[0]
    k = y0.shape[1]
    j = symplectic_j(sys.n)
    lam_arr = np.array([lam])

    def rhs(x, y):
        return (-j @ sys.B(x, lam_arr)[0] @ y.reshape(m, k)).ravel()

    sol = solve_ivp(rhs, (x0, x1), y0.ravel(), method=config.method,
                    rtol=config.rel_tol, atol=config.abs_tol,
                    dense_output=True)
    if sol.status != 0:
        raise NumericalError(f"integration failed: {sol.message}")
    return lambda x: np.moveaxis(
        sol.sol(np.atleast_1d(x)).reshape(m, k, -1), -1, 0)


@dataclass
class GreensAssembly:
    sys: object
    lam: float
    c: float
    b: float
    gamma: np.ndarray
    Rb_end: np.ndarray
    R: np.ndarray
    E: np.ndarray
    M: np.ndarray
    Uc: Callable
    Ub: Callable
    cond_E: float

    @property
    def n(self) -> int:
        return self.sys.n

    def anti_hermitian_defect(self) -> float:
        m = self.M
        return float(np.linalg.norm(m + np.conj(m).T) /
                     max(np.linalg.norm(m), 1e-300))


def assemble(sys, lam: float, c: float, b: float, Rb_end,
             gamma: Optional[np.ndarray] = None,
             config: IntegratorConfig = DEFAULT_CONFIG) -> GreensAssembly:
    """Build E, M and the two solution families on [c, b].

    ``Rb_end`` frames the right condition at x = b.  Without ``gamma`` the
    left condition is gamma = R*, R being the right family at c.
    """
    a0, b0 = sys.interval
    if not (a0 < c < b < b0):
        raise ConfigError("the truncation must lie strictly inside (a, b)")
    n = sys.n
    Rb_end = np.asarray(Rb_end, dtype=complex).reshape(2 * n, n)
    if lagrangian_defect(Rb_end) > 1e-9 * max(1.0, np.linalg.norm(Rb_end) ** 2):
        raise ConfigError("the right boundary frame is not Lagrangian")
    ub_raw = _integrate(sys, lam, Rb_end, b, c, config)
    scale = float(np.linalg.norm(ub_raw(c)[0]))

    def Ub(x):
        return ub_raw(x) / scale
    R = Ub(c)[0]
    if gamma is None:
        gamma = choose_gamma(R)
    gamma = np.atleast_2d(np.asarray(gamma, dtype=complex))
    j = symplectic_j(n)
    if np.linalg.matrix_rank(gamma) != n or np.linalg.norm(
            gamma @ j @ np.conj(gamma).T) > 1e-9 * np.linalg.norm(gamma) ** 2:
        raise ConfigError("gamma must have rank n with gamma J gamma* = 0")
    jg = j @ np.conj(gamma).T
    Uc = _integrate(sys, lam, jg, c, b, config)
    E = np.hstack([jg, R])
    scaled = E / np.linalg.norm(E, axis=0)
    cond = float(np.linalg.cond(scaled))
    # R carries the integrator's relative error, so E is singular once
    # cond * rel_tol approaches one.
    if not np.isfinite(cond) or cond > min(1e12, 0.1 / config.rel_tol):
        raise NumericalError(
            "E is singular: 0 is an eigenvalue of the truncated operator",
            detail={"cond": cond})
    Einv = np.linalg.inv(E)
    M = Einv @ j @ np.conj(Einv).T
    return GreensAssembly(sys, float(lam), float(c), float(b), gamma, Rb_end,
                          R, E, M, Uc, Ub, cond)


def greens_kernel(asm: GreensAssembly, x: float, xi: float) -> np.ndarray:
    """The 2n x 2n kernel G(x, xi) for x != xi."""
    n = asm.n
    if x == xi:
        raise ConfigError("the kernel is discontinuous at x = xi")
    if not (asm.c <= x <= asm.b and asm.c <= xi <= asm.b):
        raise ConfigError("points must lie in the truncation")
    if xi < x:
        return -asm.Ub(x)[0] @ asm.M[n:, :n] @ np.conj(asm.Uc(xi)[0]).T
    return asm.Uc(x)[0] @ asm.M[:n, n:] @ np.conj(asm.Ub(xi)[0]).T


def kernel_jump(asm: GreensAssembly, xi: float) -> np.ndarray:
    """G(xi+, xi) - G(xi-, xi); equals -J when the kernel is right."""
    n = asm.n
    uc, ub = asm.Uc(xi)[0], asm.Ub(xi)[0]
    return (-ub @ asm.M[n:, :n] @ np.conj(uc).T
            - uc @ asm.M[:n, n:] @ np.conj(ub).T)


@dataclass
class SolveReport:
    x: np.ndarray
    y: np.ndarray
    residual: float
    left_residual: float
    right_residual: float
    quadrature_error: float
    panels: int

    def ok(self, tol: float = 1e-6) -> bool:
        return max(self.residual, self.left_residual,
                   self.right_residual) <= tol


def _gauss(order):
    t, w = np.polynomial.legendre.leggauss(order)
    return t, w


def _panel_integrals(asm, f, edges, order):
    """Per-panel integrals of U_c* Blam f and U_b* Blam f."""
    t, w = _gauss(order)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
    flat = nodes.ravel()
    lam = np.array([asm.lam])
    bf = np.stack([asm.sys.Blam(x, lam)[0] @ np.asarray(f(x), complex)
                   for x in flat])
    uc = asm.Uc(flat)
    ub = asm.Ub(flat)
    gc = np.einsum("kmn,km->kn", np.conj(uc), bf).reshape(
        len(lo), len(t), -1)
    gb = np.einsum("kmn,km->kn", np.conj(ub), bf).reshape(
        len(lo), len(t), -1)
    wt = (half[:, None] * w[None, :])[..., None]
    return (gc * wt).sum(1), (gb * wt).sum(1)


def solve_inhomogeneous(asm: GreensAssembly, f: Callable, xs=None,
                        order: int = 10, quad_tol: float = 1e-10,
                        max_split: int = 8) -> SolveReport:
    """y(x) = int G(x, xi) Blam(xi) f(xi) d xi on the sample grid.

    Panels are the gaps of ``xs``; each is split until orders ``order``
    and ``order // 2`` agree to ``quad_tol``.
    """
    n = asm.n
    xs = np.linspace(asm.c, asm.b, 401) if xs is None else np.asarray(xs)
    if xs[0] != asm.c or xs[-1] != asm.b or np.any(np.diff(xs) <= 0):
        raise ConfigError("sample grid must increase from c to b")
    split = 1
    while True:
        edges = np.concatenate([
            np.linspace(xs[i], xs[i + 1], split + 1)[:-1]
            for i in range(len(xs) - 1)] + [xs[-1:]])
        hc, hb = _panel_integrals(asm, f, edges, order)
        lc, lb = _panel_integrals(asm, f, edges, order // 2)
        scale = max(np.abs(hc).sum(), np.abs(hb).sum(), 1e-300)
        err = max(np.abs(hc - lc).sum(), np.abs(hb - lb).sum()) / scale
        if err <= quad_tol or split >= 2 ** max_split:
            break
        split *= 2
    if err > quad_tol:
        raise NumericalError("quadrature did not converge; refine the grid",
                             detail={"error": err})
    cum_c = np.vstack([np.zeros((1, n)), np.cumsum(hc, axis=0)])[::split]
    tail_b = np.vstack([np.cumsum(hb[::-1], axis=0)[::-1],
                        np.zeros((1, n))])[::split]
    uc, ub = asm.Uc(xs), asm.Ub(xs)
    y = (-np.einsum("kmn,kn->km", ub, cum_c @ asm.M[n:, :n].T)
         + np.einsum("kmn,kn->km", uc, tail_b @ asm.M[:n, n:].T))
    rep = SolveReport(xs, y, np.nan, np.nan, np.nan, float(err), len(edges) - 1)
    _residuals(asm, f, rep)
    return rep


def _residuals(asm: GreensAssembly, f, rep: SolveReport):
    """Weighted ODE residual from 4th-order differences plus both BCs."""
    xs, y = rep.x, rep.y
    j = symplectic_j(asm.n)
    lam = np.array([asm.lam])
    dy = np.full_like(y, np.nan)
    h = np.diff(xs)
    if np.allclose(h, h[0], rtol=1e-9, atol=0):
        h0 = h[0]
        dy[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h0)
    else:
        dy = np.gradient(y, xs, axis=0, edge_order=2)
    worst = 0.0
    for i in range(2, len(xs) - 2):
        x = xs[i]
        by = asm.sys.B(x, lam)[0] @ y[i]
        bf = asm.sys.Blam(x, lam)[0] @ np.asarray(f(x), complex)
        r = j @ dy[i] - by - bf
        w = 1.0 + np.linalg.norm(by) + np.linalg.norm(bf)
        worst = max(worst, float(np.linalg.norm(r) / w))
    ymax = max(np.abs(y).max(), 1e-300)
    rep.residual = worst
    rep.left_residual = float(np.linalg.norm(asm.gamma @ y[0]) /
                              (np.linalg.norm(asm.gamma) * max(ymax, 1.0)))
    rb = asm.Rb_end
    rep.right_residual = float(np.linalg.norm(np.conj(rb).T @ j @ y[-1]) /
                               (np.linalg.norm(rb) * max(ymax, 1.0)))


def shooting_solve(asm: GreensAssembly, f: Callable, xs,
                   config: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Independent two-point solve: particular solution plus Phi K."""
    sys, n = asm.sys, asm.n
    m = 2 * n
    j = symplectic_j(n)
    lam = np.array([asm.lam])

    def rhs(x, s):
        state = s.reshape(m, m + 1)
        b = sys.B(x, lam)[0]
        out = -j @ b @ state
        out[:, -1] += -j @ sys.Blam(x, lam)[0] @ np.asarray(f(x), complex)
        return out.ravel()

    s0 = np.hstack([np.eye(m), np.zeros((m, 1))]).astype(complex)
    sol = solve_ivp(rhs, (asm.c, asm.b), s0.ravel(), method=config.method,
                    rtol=config.rel_tol, atol=config.abs_tol, t_eval=xs)
    if sol.status != 0:
        raise NumericalError(f"shooting integration failed: {sol.message}")
    states = sol.y.T.reshape(-1, m, m + 1)
    phi_b, yp_b = states[-1, :, :m], states[-1, :, m]
    rb = asm.Rb_end
    lhs = np.vstack([asm.gamma, np.conj(rb).T @ j @ phi_b])
    rhs_v = np.concatenate([np.zeros(n), -np.conj(rb).T @ j @ yp_b])
    K = np.linalg.solve(lhs, rhs_v)
    return np.einsum("kmn,n->km", states[:, :, :m], K) + states[:, :, m]
