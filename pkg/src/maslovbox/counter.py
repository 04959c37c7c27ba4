"""Eigenvalue counting with the Maslov box.

Inside the box [lam1, lam2] x [c1, c2] one frame carries the spectral
parameter.  With ``vary-left`` the family is W~(L(x; lam), R(x; lam2)); with
``vary-right`` it is W~(L(x; lam1), R(x; lam)).  Either way the shelves are

    principal P : x-path of (L(.; lam1), R(.; lam2))
    zero      Z : x-path at the other lambda (empty unless that lambda is an
                  eigenvalue)
    count     C : lambda-path at the window edge where eigenvalues appear
    correction K: lambda-path at the opposite edge

and homotopy invariance gives N = -C = P - K - Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .endpoints import LEFT, LimitPointFrames
from .errors import ConfigError, NumericalError
from .linalg import orthonormalize, symplectic_j
from .model import SINGULAR
from .propagator import evolve_frames
from .maslov import (MaslovPathResult, crossing_direction, maslov_index_path,
                     w_tilde)
from .problems import VARY_LEFT, VARY_RIGHT, ProblemSetup


@dataclass
class CountRequest:
    setup: ProblemSetup
    lam1: float
    lam2: float
    window: Optional[tuple] = None
    x_step: Optional[float] = None
    lambda_step: Optional[float] = None
    stabilize: bool = True
    max_growths: int = 6

    def __post_init__(self):
        l1, l2 = self.setup.sys.lambda_domain
        slack = 1e-12 * max(1.0, abs(l1), abs(l2))
        if not self.lam1 < self.lam2:
            raise ConfigError(f"need lam1 < lam2, got {self.lam1}, {self.lam2}")
        if self.lam1 < l1 - slack or self.lam2 > l2 + slack:
            raise ConfigError(
                f"[{self.lam1}, {self.lam2}] is outside the validated lambda "
                f"domain [{l1}, {l2}]")
        self.window = tuple(self.window or self.setup.window)
        self.x_step = float(self.x_step or self.setup.x_step)
        self.lambda_step = float(self.lambda_step or self.setup.lambda_step)
        if not (self.x_step > 0 and self.lambda_step > 0):
            raise ConfigError("grid steps must be positive")
        c1, c2 = self.window
        if not c1 < c2:
            raise ConfigError(f"empty window {self.window}")


def x_grid(c1, c2, step) -> np.ndarray:
    """Uniform grid with extra log-spaced points next to a tiny left edge."""
    n = max(2, int(math.ceil((c2 - c1) / step)) + 1)
    xs = np.linspace(c1, c2, n)
    if c1 > 0 and c1 < xs[1] * 1e-2:
        extra = np.geomspace(c1, xs[1], 12)[1:-1]
        xs = np.concatenate([xs[:1], extra, xs[1:]])
    return xs


def lambda_grid(l1, l2, step) -> np.ndarray:
    n = max(2, int(math.ceil((l2 - l1) / step - 1e-9)) + 1)
    return np.linspace(l1, l2, n)


# ----------------------------------------------------------------- shelves

def x_shelf(setup: ProblemSetup, lam_left, lam_right, window, step,
            path_id="x-shelf") -> MaslovPathResult:
    """Maslov index of x -> (L(x; lam_left), R(x; lam_right))."""
    c1, c2 = window
    lp = setup.left.path([lam_left], c1, c2)
    rp = setup.right.path([lam_right], c1, c2)

    def w_of_x(xs):
        return w_tilde(lp(xs)[:, 0], rp(xs)[:, 0])

    res = maslov_index_path(w_of_x, x_grid(c1, c2, step), path_id=path_id,
                            parameter="x", locate_tol=1e-12)
    res.frames = (lp, rp)
    return res


def family_frames(family, lams, x, window) -> np.ndarray:
    """Frames of ``family`` at x, built from the window edge on its side."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    c1, c2 = window
    if family.side == LEFT:
        return family.path(lams, c1, x).at(x)
    return family.path(lams, x, c2).at(x)


def shelf_pair(setup: ProblemSetup, x, vary, fixed_lam, lams, window,
               match_x=None, fixed=None):
    """Frame pair (left, right) of a lambda shelf, each (k, 2n, n).

    With ``match_x`` both frames are carried by the flow at lam from x to
    that point.  The pair's intersections and index are unchanged, but
    crossings that are exponentially narrow in lam at x (eigenfunctions
    tiny there) become resolvable.
    """
    ls = np.atleast_1d(np.asarray(lams, dtype=float))
    fam_v = setup.left if vary == "left" else setup.right
    fam_f = setup.right if vary == "left" else setup.left
    if fixed is None:
        fixed = family_frames(fam_f, [fixed_lam], x, window)[0]
    if match_x is None or match_x == x:
        v = family_frames(fam_v, ls, x, window)
        f = np.broadcast_to(fixed, v.shape)
    else:
        v = family_frames(fam_v, ls, match_x, window)
        f = evolve_frames(setup.sys, ls, fixed, x, match_x,
                          setup.config).at(match_x)
    return (v, f) if vary == "left" else (f, v)


def lambda_shelf(setup: ProblemSetup, x, vary, fixed_lam, lam_grid, window,
                 match_x=None, path_id="lambda-shelf",
                 locate_abs: float = 1e-5) -> MaslovPathResult:
    """Maslov index of lam -> pair at fixed x with one side varying.

    ``vary`` is ``"left"`` for (L(x; lam), R(x; fixed)) and ``"right"`` for
    (L(x; fixed), R(x; lam)).
    """
    fam_f = setup.right if vary == "left" else setup.left
    fixed = family_frames(fam_f, [fixed_lam], x, window)[0]

    def w_of_l(ls):
        return w_tilde(*shelf_pair(setup, x, vary, fixed_lam, ls, window,
                                   match_x, fixed))

    span = abs(lam_grid[-1] - lam_grid[0])
    res = maslov_index_path(w_of_l, lam_grid, path_id=path_id,
                            parameter="lambda",
                            locate_tol=locate_abs / max(span, 1e-300))
    res.shelf = dict(x=float(x), vary=vary, fixed_lam=float(fixed_lam),
                     window=tuple(window), match_x=match_x, fixed=fixed)
    return res


def _layout_pairs(req: CountRequest):
    s = req.setup
    c1, c2 = req.window
    if s.layout == VARY_LEFT:
        return dict(vary="left", fixed=req.lam2, count_x=c2, corr_x=c1,
                    zero_lams=(req.lam2, req.lam2))
    if s.layout == VARY_RIGHT:
        return dict(vary="right", fixed=req.lam1, count_x=c1, corr_x=c2,
                    zero_lams=(req.lam1, req.lam1))
    raise ConfigError(f"unknown layout {s.layout!r}")


def match_x(req: CountRequest) -> float:
    """Interior point where lambda shelves are evaluated."""
    c1, c2 = req.window
    x = req.setup.notes.get("match_x")
    if x is None or not c1 < x < c2:
        x = 0.5 * (c1 + c2)
    return float(x)


def correction_shelf(req: CountRequest, lam_grid=None) -> MaslovPathResult:
    lay = _layout_pairs(req)
    lg = lambda_grid(req.lam1, req.lam2, req.lambda_step) \
        if lam_grid is None else lam_grid
    return lambda_shelf(req.setup, lay["corr_x"], lay["vary"], lay["fixed"],
                        lg, req.window, match_x(req), path_id="correction")


# ------------------------------------------------------------------ counts

@dataclass
class CountResult:
    N: int
    principal: MaslovPathResult
    correction: MaslovPathResult
    window: tuple
    history: list
    equality: dict
    caveats: list = field(default_factory=list)
    layout: str = VARY_LEFT
    nullity_sum: Optional[int] = None

    def as_dict(self) -> dict:
        return {"N": self.N, "layout": self.layout,
                "window": list(self.window),
                "principal": self.principal.as_dict(),
                "correction": self.correction.as_dict(),
                "stabilization": [{"window": list(w), "index": i}
                                  for w, i in self.history],
                "equality": self.equality, "caveats": list(self.caveats),
                "nullity_sum": self.nullity_sum}


def _grow(setup: ProblemSetup, window):
    """Move window edges with limit-point frames toward their endpoints."""
    a, b = setup.sys.interval
    c1, c2 = window
    if isinstance(setup.left, LimitPointFrames):
        c1 = a + (c1 - a) / 10 if np.isfinite(a) else 2 * min(c1, -1.0)
    if isinstance(setup.right, LimitPointFrames):
        c2 = b - (b - c2) / 10 if np.isfinite(b) else 2 * c2
    return (c1, c2)


def _growable(setup):
    return isinstance(setup.left, LimitPointFrames) or isinstance(
        setup.right, LimitPointFrames)


def count_eigenvalues(req: CountRequest, nullity: bool = False,
                      margin_tol: float = 1e-8) -> CountResult:
    """N = Mas(principal) - correction, with window stabilization."""
    setup = req.setup
    window = req.window
    history = []
    grow = req.stabilize and _growable(setup)
    while True:
        principal = x_shelf(setup, req.lam1, req.lam2, window, req.x_step,
                            path_id="principal")
        history.append((tuple(float(v) for v in window), principal.index))
        if not grow:
            break
        if len(history) >= 4 and len({i for _, i in history[-4:]}) == 1:
            break
        if len(history) > req.max_growths:
            raise NumericalError(
                "principal index did not stabilize as the window grew",
                detail={"history": history})
        window = _grow(setup, window)
    sub = CountRequest(setup, req.lam1, req.lam2, window, req.x_step,
                       req.lambda_step, stabilize=False)
    corr = correction_shelf(sub)
    n_count = principal.index - corr.index
    caveats = []
    edges = {_layout_pairs(sub)["corr_x"]}
    if setup.sys.left_kind == SINGULAR:
        edges.add(window[0])
    if setup.sys.right_kind == SINGULAR:
        edges.add(window[1])
    checks = [endpoint_nonintersection_check(sub, c=c, margin_tol=margin_tol)
              for c in sorted(edges)]
    eq = {"ok": all(c["ok"] for c in checks), "checks": checks}
    if not eq["ok"]:
        caveats.append("endpoint non-intersection not certified; the count "
                       "is a lower bound")
    res = CountResult(n_count, principal, corr, window, history, eq,
                      caveats, setup.layout)
    if nullity:
        res.nullity_sum = count_via_nullity_sum(sub, principal)
        if res.nullity_sum != principal.index:
            res.caveats.append("nullity sum disagrees with the spectral flow")
    if n_count < 0:
        raise NumericalError(f"negative eigenvalue count {n_count}")
    return res


def count_via_nullity_sum(req: CountRequest, principal=None,
                          tol: float = 1e-7) -> int:
    """Sum of dim ker X_L* J X_R over detected conjugate points.

    The scaled smallest singular value of Q_L* J Q_R (orthonormal frames)
    is scanned on the x grid; every local minimum is polished with a
    bounded Brent search and counted when it drops below ``tol``.  This
    never consults W~.
    """
    setup = req.setup
    c1, c2 = req.window
    if principal is not None and hasattr(principal, "frames"):
        lp, rp = principal.frames
    else:
        lp = setup.left.path([req.lam1], c1, c2)
        rp = setup.right.path([req.lam2], c1, c2)
    n = setup.sys.n
    j = symplectic_j(n)

    def sig(xs):
        q1 = orthonormalize(lp(xs)[:, 0])
        q2 = orthonormalize(rp(xs)[:, 0])
        return np.linalg.svd(np.conj(np.swapaxes(q1, -1, -2)) @ j @ q2,
                             compute_uv=False)

    xs = x_grid(c1, c2, req.x_step)
    s = sig(xs)
    smin = s[:, -1]
    total = 0
    for i in range(len(xs)):
        lo = smin[i - 1] if i > 0 else np.inf
        hi = smin[i + 1] if i + 1 < len(xs) else np.inf
        if not (smin[i] <= lo and smin[i] < hi):
            continue
        # Brent's stopping rule scales with |x|; search in offsets from
        # the grid point so the tolerance is absolute.
        x0 = xs[i]
        a = xs[max(i - 1, 0)] - x0
        b = xs[min(i + 1, len(xs) - 1)] - x0
        opt = minimize_scalar(lambda d: sig(np.array([x0 + d]))[0, -1],
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(x0))})
        if opt.fun <= tol:
            vals = sig(np.array([x0 + opt.x]))[0]
            total += int(np.sum(vals <= max(1e3 * opt.fun, tol)))
    return total


def principal_directions(res: MaslovPathResult, setup: ProblemSetup,
                         lam_left, lam_right) -> list:
    """Crossing-form signs at each interior crossing of an x-path."""
    lp, rp = res.frames
    sys = setup.sys
    out = []
    for c in res.crossings:
        if not isinstance(c.direction, int):
            continue
        f1, f2 = lp.at(c.t)[0], rp.at(c.t)[0]
        d1 = -sys.J @ sys.B(c.t, lam_left) @ f1
        d2 = -sys.J @ sys.B(c.t, lam_right) @ f2
        out.append(crossing_direction(f1, d1, f2, d2))
    return out


def lambda_directions(res: MaslovPathResult, setup: ProblemSetup,
                      h: float = 1e-6) -> list:
    """Crossing-form signs for the crossings of a lambda shelf."""
    out = []
    sh = res.shelf
    for c in res.crossings:
        if not isinstance(c.direction, int):
            continue
        f1, f2 = shelf_pair(setup, sh["x"], sh["vary"], sh["fixed_lam"],
                            [c.t - h, c.t, c.t + h], sh["window"],
                            sh["match_x"], sh["fixed"])
        w = w_tilde(f1, f2)
        out.append(crossing_direction(f1[1], (f1[2] - f1[0]) / (2 * h),
                                      f2[1], (f2[2] - f2[0]) / (2 * h),
                                      w[1], (w[2] - w[0]) / (2 * h)))
    return out


# -------------------------------------------------------------------- box

@dataclass
class BoxResult:
    bottom: MaslovPathResult
    right: MaslovPathResult
    top: MaslovPathResult
    left: MaslovPathResult
    closure: int
    layout: str
    count: int

    def as_dict(self) -> dict:
        return {"layout": self.layout,
                "shelves": {k: getattr(self, k).as_dict()
                            for k in ("bottom", "right", "top", "left")},
                "closure": self.closure, "count": self.count}


def maslov_box(req: CountRequest) -> BoxResult:
    """All four shelves with the oriented sum bottom + right - top - left."""
    setup = req.setup
    c1, c2 = req.window
    lay = _layout_pairs(req)
    lg = lambda_grid(req.lam1, req.lam2, req.lambda_step)
    P = x_shelf(setup, req.lam1, req.lam2, req.window, req.x_step,
                path_id="principal")
    Z = x_shelf(setup, *lay["zero_lams"], req.window, req.x_step,
                path_id="zero")
    xm = match_x(req)
    C = lambda_shelf(setup, lay["count_x"], lay["vary"], lay["fixed"], lg,
                     req.window, xm, path_id="count")
    K = lambda_shelf(setup, lay["corr_x"], lay["vary"], lay["fixed"], lg,
                     req.window, xm, path_id="correction")
    if setup.layout == VARY_LEFT:
        left, right, top, bottom = P, Z, C, K
    else:
        left, right, top, bottom = Z, P, K, C
    for shelf, name in ((left, "left"), (right, "right"), (top, "top"),
                        (bottom, "bottom")):
        shelf.path_id = name + ":" + shelf.path_id
    closure = bottom.index + right.index - top.index - left.index
    if closure != 0:
        raise NumericalError(
            f"Maslov box does not close (sum {closure}); refine the grids",
            detail={"bottom": bottom.index, "right": right.index,
                    "top": top.index, "left": left.index})
    return BoxResult(bottom, right, top, left, closure, setup.layout,
                     -C.index)


# ------------------------------------------------------- non-intersection

def endpoint_nonintersection_check(req: CountRequest, c=None, lams=None,
                                   margin_tol: float = 1e-8) -> dict:
    """Smallest scaled singular value of X_L* J X_R at the correction edge.

    With ``vary-left`` the pair is (L(c; lam), R(c; lam2)); with
    ``vary-right`` it is (L(c; lam1), R(c; lam)).
    """
    lay = _layout_pairs(req)
    c = lay["corr_x"] if c is None else c
    lg = lambda_grid(req.lam1, req.lam2, req.lambda_step) \
        if lams is None else np.atleast_1d(np.asarray(lams, dtype=float))
    setup = req.setup
    if lay["vary"] == "left":
        f1 = family_frames(setup.left, lg, c, req.window)
        f2 = np.broadcast_to(family_frames(setup.right, [lay["fixed"]], c,
                                           req.window),
                             f1.shape)
    else:
        f2 = family_frames(setup.right, lg, c, req.window)
        f1 = np.broadcast_to(family_frames(setup.left, [lay["fixed"]], c,
                                           req.window),
                             f2.shape)
    q1, q2 = orthonormalize(f1), orthonormalize(f2)
    j = symplectic_j(setup.sys.n)
    s = np.linalg.svd(np.conj(np.swapaxes(q1, -1, -2)) @ j @ q2,
                      compute_uv=False)[:, -1]
    k = int(np.argmin(s))
    return {"ok": bool(s[k] > margin_tol), "margin": float(s[k]),
            "c": float(c), "lambda_at_min": float(lg[k]),
            "margin_tol": margin_tol}


def triangle_decomposition_check(setup: ProblemSetup, c, lam1, lam2,
                                 lambda_step=None, match_x=None) -> dict:
    """Diagonal index against the two legs at fixed c.

    Frames are built at c; with ``match_x`` every pair is carried by the
    flow at the path's lambda to that point before W~ is formed.
    """
    step = lambda_step or setup.lambda_step
    lg = lambda_grid(lam1, lam2, step)
    cache = {}

    def at_c(ls):
        missing = [l for l in ls if l not in cache]
        if missing:
            Lm = setup.left.frames_at(missing, c)
            Rm = setup.right.frames_at(missing, c)
            for i, l in enumerate(missing):
                cache[l] = (Lm[i], Rm[i])
        return (np.stack([cache[l][0] for l in ls]),
                np.stack([cache[l][1] for l in ls]))

    def carry(frames, ls):
        if match_x is None or match_x == c:
            return frames
        return evolve_frames(setup.sys, ls, frames, c, match_x,
                             setup.config).at(match_x)

    def make(which):
        def w_of_l(ls):
            ls = [float(l) for l in np.atleast_1d(ls)]
            L, R = at_c(ls)
            if which == "right-leg":
                L = np.broadcast_to(at_c([float(lam1)])[0][0], L.shape)
            elif which == "left-leg":
                R = np.broadcast_to(at_c([float(lam2)])[1][0], R.shape)
            arr = np.asarray(ls)
            return w_tilde(carry(L, arr), carry(R, arr))
        return w_of_l

    kw = dict(locate=False, parameter="lambda")
    d = maslov_index_path(make("diagonal"), lg, path_id="diagonal", **kw)
    r = maslov_index_path(make("right-leg"), lg, path_id="right-leg", **kw)
    l = maslov_index_path(make("left-leg"), lg, path_id="left-leg", **kw)
    return {"diagonal": d.index, "vary_right_leg": r.index,
            "vary_left_leg": l.index, "holds": d.index == r.index + l.index}


# ------------------------------------------------------- spectral curves

@dataclass
class SpectralCurveSet:
    points: list
    curves: list
    intercepts: list
    fragmented: list
    count_shelf: Optional[MaslovPathResult] = None

    def as_dict(self) -> dict:
        return {"curves": [{"curve_id": i, "points": len(c)}
                           for i, c in enumerate(self.curves)],
                "intercepts": self.intercepts,
                "fragmented": self.fragmented,
                "count_shelf": (self.count_shelf.as_dict()
                                if self.count_shelf else None)}

    def curve_points(self, cid) -> np.ndarray:
        return np.array([self.points[i][:2] for i in self.curves[cid]])

    def csv_rows(self):
        for cid, idx in enumerate(self.curves):
            for i in idx:
                lam, x, mult = self.points[i]
                yield cid, lam, x, mult


def _row_passages(theta, xs):
    """Indices i and signs where floor((theta - pi)/2pi) changes on [i, i+1]."""
    lev = np.floor((theta - np.pi) / (2 * np.pi))
    d = np.diff(lev)
    idx = np.nonzero(d)[0]
    return [(int(i), int(d[i])) for i in idx]


def trace_spectral_curves(req: CountRequest, lam_grid=None, xs=None,
                          chunk: int = 256, refine_frac: float = 1e-3
                          ) -> SpectralCurveSet:
    """Conjugate points on the (lam, x) grid grouped into curves."""
    setup = req.setup
    if setup.sys.n != 1:
        raise ConfigError("spectral curves are implemented for n = 1")
    c1, c2 = req.window
    lay = _layout_pairs(req)
    lg = lambda_grid(req.lam1, req.lam2, req.lambda_step) \
        if lam_grid is None else np.asarray(lam_grid, dtype=float)
    xg = x_grid(c1, c2, req.x_step) if xs is None else np.asarray(xs)
    if lay["vary"] == "left":
        vp = setup.left.path(lg, c1, c2)
        fp = setup.right.path([lay["fixed"]], c1, c2)
    else:
        vp = setup.right.path(lg, c1, c2)
        fp = setup.left.path([lay["fixed"]], c1, c2)

    def w_all(x):
        v = vp(x)
        f = np.broadcast_to(fp(x), v.shape)
        return w_tilde(v, f) if lay["vary"] == "left" else w_tilde(f, v)

    phase = np.empty((len(xg), len(lg)))
    for s in range(0, len(xg), chunk):
        phase[s:s + chunk] = np.angle(w_all(xg[s:s + chunk])[..., 0, 0])
    steps = np.angle(np.exp(1j * np.diff(phase, axis=0)))
    theta = phase[0][None, :] + np.vstack([np.zeros((1, len(lg))),
                                          np.cumsum(steps, axis=0)])
    points = []
    rows = []
    tol = refine_frac * req.x_step
    for k, lam in enumerate(lg):
        row = []
        big = np.nonzero(np.abs(steps[:, k]) > np.pi / 2)[0]
        if big.size:
            res = maslov_index_path(lambda x: w_all(x)[:, k], xg,
                                    locate_tol=tol / (c2 - c1))
            hits = [(c.t, c.multiplicity) for c in res.crossings]
        else:
            hits = []
            for i, sgn in _row_passages(theta[:, k], xg):
                hits.append((_bisect_row(w_all, k, xg[i], xg[i + 1],
                                         theta[i, k], sgn, tol), 1))
        for x, mult in hits:
            row.append(len(points))
            points.append((float(lam), float(x), int(mult)))
        rows.append(row)
    curves, fragmented = _assemble(points, rows,
                                   from_top=lay["count_x"] == c1,
                                   scale=max(c2 - c1, 1e-300))
    count = lambda_shelf(setup, lay["count_x"], lay["vary"], lay["fixed"],
                         lg, req.window, match_x(req), path_id="count",
                         locate_abs=1e-5)
    intercepts = []
    for cr in count.crossings:
        ends = []
        for idx in curves:
            lams = [points[i][0] for i in idx]
            edge = max(lams) if lay["vary"] == "left" else min(lams)
            ends.append(abs(edge - cr.t))
        best = int(np.argmin(ends)) if ends else None
        intercepts.append({"lambda": cr.t, "curve_id": best,
                           "multiplicity": cr.multiplicity,
                           "direction": cr.direction})
    return SpectralCurveSet(points, curves, intercepts, fragmented, count)


def _bisect_row(w_all, k, lo, hi, theta_lo, sign, tol):
    level = np.floor((theta_lo - np.pi) / (2 * np.pi))
    goal = np.pi + 2 * np.pi * (level + (1 if sign > 0 else 0))
    th = theta_lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ph = np.angle(w_all(np.array([mid]))[0, k, 0, 0])
        ph = th + np.angle(np.exp(1j * (ph - th)))
        if (ph - goal) * sign < 0:
            lo, th = mid, ph
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _assemble(points, rows, from_top: bool, scale, jump_frac=0.25):
    """Continue curves row to row by x-order.

    Curves never cross (n = 1), so points sorted by x keep their order and
    only the end nearest the count edge can appear or vanish.  Rows are
    therefore aligned on the far side (``from_top`` aligns the largest x).
    Consecutive points further apart than ``jump_frac`` of the window are
    flagged as possible fragmentation.
    """
    curves = []
    prev = []
    flagged = set()
    for row in rows:
        row = sorted(row, key=lambda p: points[p][1])
        cur = []
        a, b = (prev[::-1], row[::-1]) if from_top else (prev, row)
        for i, p in enumerate(b):
            if i < len(a):
                cid = a[i][0]
                if abs(points[p][1] - points[curves[cid][-1]][1]) > \
                        jump_frac * scale:
                    flagged.add(cid)
                curves[cid].append(p)
            else:
                cid = len(curves)
                curves.append([p])
            cur.append((cid, p))
        prev = sorted(cur, key=lambda e: points[e[1]][1])
    return curves, sorted(flagged)


def curves_cross(curve_set: SpectralCurveSet, a: int, b: int) -> bool:
    """True if the x-order of two curves flips on their common lambdas."""
    pa = {round(p[0], 12): p[1] for p in curve_set.curve_points(a)}
    pb = {round(p[0], 12): p[1] for p in curve_set.curve_points(b)}
    common = sorted(set(pa) & set(pb))
    signs = {np.sign(pa[l] - pb[l]) for l in common}
    return len(signs - {0}) > 1 or 0 in signs
