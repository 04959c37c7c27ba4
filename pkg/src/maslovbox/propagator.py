"""Integration of J Y' = (B + mu B_lam) Y for fundamental matrices and frames.

All routines integrate a whole batch of spectral parameters in one
``solve_ivp`` call; the state is the flattened stack of 2n x p matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError
from .linalg import symplectic_j


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    sympl_tol: float = 1e-8
    renorm_high: float = 1e6
    renorm_low: float = 1e-6
    cond_limit: float = 1e6
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integration tolerances must be positive")

    def with_tolerances(self, rel_tol=None, abs_tol=None) -> "IntegratorConfig":
        return replace(self, rel_tol=rel_tol or self.rel_tol,
                       abs_tol=abs_tol or self.abs_tol)


DEFAULT_CONFIG = IntegratorConfig()


def _generator(sys, lams, mu):
    """Return x -> -J (B + mu B_lam) for the batch of lambdas."""
    j = symplectic_j(sys.n)

    if mu == 0:
        def gen(x):
            return -j @ sys.B(x, lams)
    else:
        def gen(x):
            return -j @ (sys.B(x, lams) + mu * sys.Blam(x, lams))
    return gen


def _solve(rhs, x0, x1, y0, config, t_eval=None, events=None, dense=True):
    sol = solve_ivp(rhs, (x0, x1), y0, method=config.method,
                    rtol=config.rel_tol, atol=config.abs_tol,
                    max_step=config.max_step, t_eval=t_eval, events=events,
                    dense_output=dense)
    if sol.status == -1:
        last = float(sol.t[-1]) if sol.t.size else x0
        raise NumericalError(
            f"integration failed near x={last:.6g}: {sol.message}",
            detail={"last_good_x": last})
    return sol


# ----------------------------------------------------- fundamental matrices

@dataclass
class FundamentalMatrixPath:
    """Phi(x; mu, lam) with Phi(c) = I, sampled at ``xs``.

    ``phi`` has shape (len(xs), k, 2n, 2n) for k spectral parameters.
    """

    c: float
    mu: complex
    lams: np.ndarray
    xs: np.ndarray
    phi: np.ndarray
    _pieces: list

    def __call__(self, x) -> np.ndarray:
        """Dense interpolation at points on either side of ``c``."""
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        k, m = len(self.lams), self.phi.shape[-1]
        out = np.empty((xq.size, k, m, m), dtype=complex)
        for i, xv in enumerate(xq):
            if xv == self.c:
                out[i] = np.eye(m)
                continue
            for lo, hi, sol in self._pieces:
                if lo <= xv <= hi:
                    out[i] = sol(xv).reshape(k, m, m)
                    break
            else:
                raise NumericalError(f"x={xv} outside the integrated range")
        return out

    def symplectic_defect(self) -> float:
        """Relative defect of Phi* J Phi = J (real mu only)."""
        j = symplectic_j(self.phi.shape[-1] // 2)
        p = self.phi
        d = np.conj(np.swapaxes(p, -1, -2)) @ j @ p - j
        scale = np.maximum(1.0, np.linalg.norm(p, 2, axis=(-2, -1)) ** 2)
        return float(np.max(np.linalg.norm(d, 2, axis=(-2, -1)) / scale))


def fundamental_matrix(sys, mu, lam, c, targets,
                       config: IntegratorConfig = DEFAULT_CONFIG,
                       check_symplectic: bool = True) -> FundamentalMatrixPath:
    """Integrate J Phi' = (B + mu B_lam) Phi from Phi(c) = I to ``targets``.

    ``lam`` may be a scalar or a 1-D array (batched).  Targets may lie on
    both sides of ``c``.
    """
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    targets = np.sort(np.atleast_1d(np.asarray(targets, dtype=float)))
    a, b = sys.interval
    if not (a < c < b) or np.any(targets <= a) or np.any(targets >= b):
        raise NumericalError("base point and targets must lie inside (a, b)")
    k, m = len(lams), 2 * sys.n
    gen = _generator(sys, lams, complex(mu))

    def rhs(x, y):
        return (gen(x) @ y.reshape(k, m, m)).ravel()

    y0 = np.broadcast_to(np.eye(m, dtype=complex), (k, m, m)).ravel()
    phi = np.empty((targets.size, k, m, m), dtype=complex)
    pieces = []
    for side in (targets[targets < c][::-1], targets[targets >= c]):
        if side.size == 0:
            continue
        end = float(side[-1])
        if end == c:
            phi[targets == c] = np.eye(m)
            continue
        sol = _solve(rhs, c, end, y0, config, t_eval=side)
        vals = sol.y.T.reshape(-1, k, m, m)
        for xv, pv in zip(sol.t, vals):
            phi[targets == xv] = pv
        pieces.append((min(c, end), max(c, end), sol.sol))
    path = FundamentalMatrixPath(float(c), complex(mu), lams, targets, phi,
                                 pieces)
    if check_symplectic and complex(mu).imag == 0:
        defect = path.symplectic_defect()
        if defect > config.sympl_tol:
            raise NumericalError(
                f"symplectic defect {defect:.3e} exceeds {config.sympl_tol}; "
                f"tighten the integration tolerances", detail={"defect": defect})
    return path


def gram_integral(sys, lams, x0, x1, config: IntegratorConfig = DEFAULT_CONFIG):
    """Integral over [x0, x1] of Phi* B_lam Phi with Phi(x0) = I."""
    out = b_matrix(sys, lams, x0, [x1], config)
    return out[1][:, 0]


def b_matrix(sys, lams, c, probes, config: IntegratorConfig = DEFAULT_CONFIG,
             overflow: float = 1e150):
    """Quadrature B(x; lam) = int_c^x Phi* B_lam Phi at the probe points.

    Phi and the quadrature are integrated together.  Probes must lie on one
    side of ``c`` and are visited in order of distance from ``c``.  The run
    stops early when |Phi| exceeds ``overflow``; returns (xs, B, Phi) for
    the probes actually reached, with B of shape (k, len(xs), 2n, 2n).
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    probes = np.asarray(probes, dtype=float)
    order = np.argsort(np.abs(probes - c))
    probes = probes[order]
    k, m = len(lams), 2 * sys.n
    j = symplectic_j(sys.n)
    half = k * m * m

    def rhs(x, y):
        phi = y[:half].reshape(k, m, m)
        dphi = -j @ sys.B(x, lams) @ phi
        dq = np.conj(np.swapaxes(phi, -1, -2)) @ sys.Blam(x, lams) @ phi
        return np.concatenate([dphi.ravel(), dq.ravel()])

    def blowup(x, y):
        return np.log(overflow) - np.log(np.abs(y[:half]).max() + 1e-300)
    blowup.terminal = True

    y0 = np.concatenate([
        np.broadcast_to(np.eye(m, dtype=complex), (k, m, m)).ravel(),
        np.zeros(half, dtype=complex)])
    sol = _solve(rhs, c, float(probes[-1]), y0, config, t_eval=probes,
                 events=blowup, dense=False)
    reached = sol.y.shape[1]
    vals = sol.y.T[:reached]
    phi = vals[:, :half].reshape(reached, k, m, m).swapaxes(0, 1)
    quad = vals[:, half:].reshape(reached, k, m, m).swapaxes(0, 1)
    quad = 0.5 * (quad + np.conj(np.swapaxes(quad, -1, -2)))
    return sol.t, quad, phi


# ------------------------------------------------------------------ frames

class FramePath:
    """Frames X(x; lam) for a batch of lambdas, piecewise renormalized.

    Calling the path at points x returns an array of shape
    (len(x), k, 2n, n).  Segments share spans at their junctions.
    """

    def __init__(self, lams, x0, x1, segments, n):
        self.lams = lams
        self.x0, self.x1 = float(x0), float(x1)
        self.segments = segments
        self.n = n
        self.lo, self.hi = min(x0, x1), max(x0, x1)

    @property
    def renormalizations(self) -> int:
        return len(self.segments) - 1

    def __call__(self, x) -> np.ndarray:
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        tol = 1e-12 * max(1.0, abs(self.hi))
        if np.any(xq < self.lo - tol) or np.any(xq > self.hi + tol):
            raise NumericalError(
                f"frame requested outside [{self.lo:.6g}, {self.hi:.6g}]")
        xq = np.clip(xq, self.lo, self.hi)
        k, m, n = len(self.lams), 2 * self.n, self.n
        out = np.empty((xq.size, k, m, n), dtype=complex)
        done = np.zeros(xq.size, dtype=bool)
        for s0, s1, sol in self.segments:
            lo, hi = min(s0, s1), max(s0, s1)
            sel = (~done) & (xq >= lo) & (xq <= hi)
            if np.any(sel):
                vals = sol(xq[sel])
                out[sel] = vals.T.reshape(-1, k, m, n)
                done |= sel
        if not np.all(done):
            raise NumericalError("frame evaluation left gaps")
        return out

    def at(self, x: float) -> np.ndarray:
        """Frames at a single point, shape (k, 2n, n)."""
        return self(np.array([x]))[0]


def evolve_frames(sys, lams, frame0, x0, x1,
                  config: IntegratorConfig = DEFAULT_CONFIG) -> FramePath:
    """Evolve J X' = B(x; lam) X from X(x0) = frame0 towards x1.

    ``frame0`` is (2n, n) shared by all lambdas or (k, 2n, n).  Whenever a
    column norm leaves [renorm_low, renorm_high] or a frame becomes
    ill-conditioned, the integration stops, every frame is replaced by the
    Q factor of its QR decomposition and integration resumes.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    k, m, n = len(lams), 2 * sys.n, sys.n
    f0 = np.asarray(frame0, dtype=complex)
    f0 = np.broadcast_to(f0, (k, m, n)) if f0.ndim == 2 else f0
    gen = _generator(sys, lams, 0)

    def rhs(x, y):
        return (gen(x) @ y.reshape(k, m, n)).ravel()

    hi_log, lo_log = np.log(config.renorm_high), np.log(config.renorm_low)
    cond_log = np.log(config.cond_limit)

    def leave(x, y):
        cols = np.linalg.norm(y.reshape(k, m, n), axis=1)
        lg = np.log(cols + 1e-300)
        return min(hi_log - lg.max(), lg.min() - lo_log)
    leave.terminal = True
    leave.direction = -1
    events = [leave]
    if n > 1:
        def conditioning(x, y):
            s = np.linalg.svd(y.reshape(k, m, n), compute_uv=False)
            return cond_log - np.log(s[:, 0] / (s[:, -1] + 1e-300)).max()
        conditioning.terminal = True
        conditioning.direction = -1
        events.append(conditioning)

    segments = []
    start, state = float(x0), np.linalg.qr(f0)[0]
    direction = np.sign(x1 - x0)
    guard = 0
    while True:
        sol = _solve(rhs, start, float(x1), state.ravel(), config,
                     events=events)
        end = float(sol.t[-1])
        segments.append((start, end, sol.sol))
        if sol.status != 1 or (end - x1) * direction >= 0:
            break
        guard += 1
        if guard > 100000:
            raise NumericalError("frame renormalization did not terminate")
        state = np.linalg.qr(sol.y[:, -1].reshape(k, m, n))[0]
        start = end
    return FramePath(lams, x0, x1, segments, n)
