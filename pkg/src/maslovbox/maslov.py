"""Maslov index as spectral flow of the unitary W~ through -1.

For frames F1 = (X1; Y1) and F2 = (X2; Y2),
    W~ = -(X1 + iY1)(X1 - iY1)^{-1} (X2 - iY2)(X2 + iY2)^{-1},
and dim(l1 & l2) equals the multiplicity of -1 as an eigenvalue of W~.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericalError
from .linalg import orthonormalize, symplectic_j

TWO_PI = 2 * np.pi


def _right_divide(a, b):
    """a b^{-1} for stacks."""
    return np.swapaxes(np.linalg.solve(np.swapaxes(b, -1, -2),
                                       np.swapaxes(a, -1, -2)), -1, -2)


def w_tilde(f1, f2, cond_limit: float = 1e12) -> np.ndarray:
    """The unitary W~ for (stacks of) frame pairs."""
    f1 = np.asarray(f1, dtype=complex)
    f2 = np.asarray(f2, dtype=complex)
    n = f1.shape[-1]
    x1, y1 = f1[..., :n, :], f1[..., n:, :]
    x2, y2 = f2[..., :n, :], f2[..., n:, :]
    d1, d2 = x1 - 1j * y1, x2 + 1j * y2
    if n == 1:
        scale = np.linalg.norm(f1, axis=(-2, -1)), np.linalg.norm(
            f2, axis=(-2, -1))
        for d, s in zip((d1, d2), scale):
            if np.any(~(np.abs(d[..., 0, 0]) > s / cond_limit)):
                raise NumericalError(
                    "X - iY is numerically singular; input is not Lagrangian")
        return -(x1 + 1j * y1) / d1 * (x2 - 1j * y2) / d2
    for d in (d1, d2):
        c = np.linalg.cond(d)
        if np.any(~np.isfinite(c)) or np.any(c > cond_limit):
            raise NumericalError(
                "X - iY is numerically singular; input is not Lagrangian")
    left = _right_divide(x1 + 1j * y1, d1)
    right = _right_divide(x2 - 1j * y2, d2)
    return -left @ right


def unitarity_defect(w) -> float:
    w = np.asarray(w, dtype=complex)
    eye = np.eye(w.shape[-1])
    return float(np.max(np.abs(w @ np.conj(np.swapaxes(w, -1, -2)) - eye)))


def intersection_dim(f1, f2, angle_tol: float = 1e-6) -> int:
    """dim(l1 & l2) from W~, cross-checked against rank of F1* J F2."""
    w = w_tilde(f1, f2)
    phases = np.abs(np.angle(-np.linalg.eigvals(w)))
    by_w = int(np.sum(phases <= angle_tol))
    q1, q2 = orthonormalize(f1), orthonormalize(f2)
    s = np.linalg.svd(np.conj(q1).T @ symplectic_j(q1.shape[1]) @ q2,
                      compute_uv=False)
    by_rank = int(np.sum(s <= angle_tol))
    if by_w != by_rank:
        raise NumericalError(
            f"tolerance conflict: W~ gives {by_w}, rank test gives {by_rank}",
            detail={"phases": phases, "singular_values": s})
    return by_w


@dataclass
class Crossing:
    t: float
    multiplicity: int
    direction: object
    contribution: int

    def as_dict(self) -> dict:
        return {"t": self.t, "multiplicity": self.multiplicity,
                "direction": self.direction}


@dataclass
class MaslovPathResult:
    crossings: list
    index: int
    conventions: dict
    path_id: str = ""
    parameter: str = "t"
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phases: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def as_dict(self) -> dict:
        return {"path_id": self.path_id, "parameter": self.parameter,
                "crossings": [c.as_dict() for c in self.crossings],
                "index": self.index}


CONVENTIONS = {
    "interior": "+1 per counterclockwise passage through -1, -1 per "
                "clockwise passage",
    "start": "an eigenvalue leaving -1 counts -1 only when it leaves "
             "clockwise",
    "end": "an eigenvalue arriving at -1 counts +1 only when it arrives "
           "counterclockwise",
}


def _eig_sorted(w):
    vals, vecs = np.linalg.eig(w)
    return vals, vecs


def _track(ws):
    """Matched eigenvalues along samples plus per-step worst phase jump."""
    m, n = ws.shape[0], ws.shape[-1]
    vals = np.empty((m, n), dtype=complex)
    v0, e0 = _eig_sorted(ws[0])
    vals[0] = v0
    jumps = np.zeros(m - 1)
    for i in range(1, m):
        v1, e1 = _eig_sorted(ws[i])
        if n > 1:
            ov = np.abs(np.conj(e0).T @ e1)
            ang = np.abs(np.angle(v1[None, :] / vals[i - 1][:, None]))
            cost = ang - 1e-3 * ov
            rows, cols = linear_sum_assignment(cost)
            v1, e1 = v1[cols], e1[:, cols]
        vals[i] = v1
        jumps[i - 1] = np.abs(np.angle(v1 / vals[i - 1])).max()
        e0 = e1
    return vals, jumps


def _level(theta, angle_tol):
    """floor((theta - pi) / 2 pi) with theta snapped onto pi + 2 pi j."""
    k = np.round((theta - np.pi) / TWO_PI)
    snap = np.abs(theta - (np.pi + TWO_PI * k)) <= angle_tol
    th = np.where(snap, np.pi + TWO_PI * k, theta)
    return np.floor((th - np.pi) / TWO_PI + 1e-15).astype(int), snap


def maslov_index_path(w_of_t: Callable[[np.ndarray], np.ndarray], t_grid,
                      angle_tol: float = 1e-6, max_jump: float = np.pi / 2,
                      max_refine: int = 40, locate_tol: float = 1e-10,
                      path_id: str = "", parameter: str = "t",
                      locate: bool = True) -> MaslovPathResult:
    """Spectral flow of W~(t) through -1 along t_grid (increasing or not).

    ``w_of_t`` maps an array of parameters to a stack of n x n unitaries.
    Intervals whose matched eigenphases jump by more than ``max_jump`` are
    bisected.  Interior passages are located by bisection to
    ``locate_tol`` relative to the path length.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.size < 2:
        raise NumericalError("a path needs at least two samples")
    ws = np.asarray(w_of_t(ts), dtype=complex)
    depth = 0
    while True:
        vals, jumps = _track(ws)
        bad = np.nonzero(jumps > max_jump)[0]
        if bad.size == 0:
            break
        depth += 1
        span = np.abs(ts[bad + 1] - ts[bad])
        if depth > max_refine or np.any(
                span <= 1e-14 * max(1.0, np.abs(ts).max())):
            raise NumericalError(
                f"unresolvable path: phase step {jumps.max():.3f} rad near "
                f"t={ts[bad[0]]:.10g}", detail={"t": ts[bad]})
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        wm = np.asarray(w_of_t(mids), dtype=complex)
        ts = np.insert(ts, bad + 1, mids)
        ws = np.insert(ws, bad + 1, wm, axis=0)
    steps = np.angle(vals[1:] / vals[:-1])
    theta = np.angle(vals[0])[None, :] + np.vstack(
        [np.zeros((1, vals.shape[1])), np.cumsum(steps, axis=0)])
    level, snap = _level(theta, angle_tol)
    n = vals.shape[1]
    index = int(np.sum(level[-1] - level[0]))

    events = []
    for k in range(n):
        if snap[0, k] and level[1, k] < level[0, k]:
            events.append((float(ts[0]), "boundary-departure", -1, k))
        if snap[-1, k] and level[-1, k] > level[-2, k]:
            events.append((float(ts[-1]), "boundary-arrival", +1, k))
        lv = level[:, k].copy()
        if snap[-1, k]:
            lv[-1] = lv[-2]
        if snap[0, k]:
            lv[0] = lv[1]
        for i in np.nonzero(np.diff(lv))[0]:
            step = int(lv[i + 1] - lv[i])
            sign = 1 if step > 0 else -1
            for _ in range(abs(step)):
                t_star = float(ts[i])
                if locate:
                    t_star = _locate(w_of_t, ts[i], ts[i + 1], theta[i, k],
                                     vals[i + 1, k], sign,
                                     locate_tol * abs(ts[-1] - ts[0]))
                events.append((t_star, sign, sign, k))
    crossings = _merge(events, abs(ts[-1] - ts[0]) * 1e-9)
    total = sum(c.contribution for c in crossings)
    if total != index:
        raise NumericalError(
            f"crossing bookkeeping ({total}) disagrees with the net phase "
            f"level change ({index})")
    return MaslovPathResult(crossings, index, dict(CONVENTIONS), path_id,
                            parameter, ts, theta)


def _locate(w_of_t, t0, t1, theta0, target_val, sign, tol):
    """Bisect for the passage of one tracked eigenphase through pi mod 2 pi."""
    level0 = np.floor((theta0 - np.pi) / TWO_PI)
    goal = np.pi + TWO_PI * (level0 + (1 if sign > 0 else 0))
    th_lo = theta0
    lo, hi = float(t0), float(t1)
    for _ in range(200):
        if abs(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        ev = np.linalg.eigvals(np.asarray(w_of_t(np.array([mid])))[0])
        cand = th_lo + np.angle(ev / np.exp(1j * th_lo))
        ph = cand[np.argmin(np.abs(cand - th_lo))]
        if (ph - goal) * sign < 0:
            lo, th_lo = mid, ph
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _merge(events, tol):
    events.sort(key=lambda e: (e[0], str(e[1])))
    out = []
    for t, direction, contrib, _ in events:
        if out and abs(out[-1].t - t) <= tol and out[-1].direction == direction:
            out[-1].multiplicity += 1
            out[-1].contribution += contrib
            continue
        out.append(Crossing(float(t), 1, direction, int(contrib)))
    return out


def crossing_direction(f1, df1, f2, df2, w=None, dw=None,
                       tol: float = 1e-9) -> Optional[int]:
    """Direction of a crossing from the crossing form on the intersection.

    ``df1``/``df2`` are parameter derivatives of the frames at the crossing.
    The form  -u1* X1* J X1' u1 + u2* X2* J X2' u2  is evaluated on pairs
    with F1 u1 = F2 u2 (the intersection).  If it is sign-definite its sign
    is returned; otherwise the phase slope of the W~ eigenvalue nearest -1
    (given ``w`` and its derivative ``dw``) decides; ``None`` means
    undetermined.
    """
    f1, f2 = np.asarray(f1, complex), np.asarray(f2, complex)
    n = f1.shape[1]
    j = symplectic_j(n)
    m1 = -np.conj(f1).T @ j @ np.asarray(df1, complex)
    m2 = np.conj(f2).T @ j @ np.asarray(df2, complex)
    m1 = 0.5 * (m1 + np.conj(m1).T)
    m2 = 0.5 * (m2 + np.conj(m2).T)
    stacked = np.hstack([f1, -f2])
    _, s, vh = np.linalg.svd(stacked)
    dim = int(np.sum(s <= 1e-6 * s[0]))
    if dim > 0:
        basis = np.conj(vh[-dim:]).T
        u1, u2 = basis[:n], basis[n:]
        form = np.conj(u1).T @ m1 @ u1 + np.conj(u2).T @ m2 @ u2
        form = 0.5 * (form + np.conj(form).T)
        ev = np.linalg.eigvalsh(form)
        scale = max(np.abs(ev).max(), 1e-300)
        if np.all(ev > tol * scale):
            return 1
        if np.all(ev < -tol * scale):
            return -1
    if w is not None and dw is not None:
        vals, vecs = np.linalg.eig(np.asarray(w, complex))
        k = int(np.argmin(np.abs(vals + 1)))
        left = np.linalg.inv(vecs)[k]
        dval = left @ np.asarray(dw, complex) @ vecs[:, k]
        slope = (dval / vals[k]).imag
        if abs(slope) > tol:
            return 1 if slope > 0 else -1
    return None


def path_additivity_check(w_of_t, t_grid, split_index: int,
                          **kw) -> tuple:
    """Indices over [t0, ts], [ts, t1] and [t0, t1] for a split sample."""
    ts = np.asarray(t_grid, dtype=float)
    whole = maslov_index_path(w_of_t, ts, **kw)
    first = maslov_index_path(w_of_t, ts[: split_index + 1], **kw)
    second = maslov_index_path(w_of_t, ts[split_index:], **kw)
    return first.index, second.index, whole.index
