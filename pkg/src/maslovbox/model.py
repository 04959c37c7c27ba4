"""Hamiltonian systems J y' = B(x; lam) y and sampled structural checks.

Coefficient evaluators take a scalar ``x`` and an array ``lam`` and return
an array of shape ``lam.shape + (2n, 2n)``.  Batching over ``lam`` lets the
propagator integrate many spectral parameters in a single ODE solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionError, ConfigError
from .linalg import symplectic_j

Evaluator = Callable[[float, np.ndarray], np.ndarray]

REGULAR = "regular"
SINGULAR = "singular"


@dataclass(frozen=True)
class HamiltonianSystem:
    """Coefficient data for J y' = B(x; lam) y on (a, b).

    ``E_eval(x, lam, lam_star)`` is the class-specific factor with
    B(x; lam) - B(x; lam_star) = B_lam(x; lam_star) E; it is ``None`` for
    systems of unknown structure.
    """

    n: int
    interval: tuple
    B_eval: Evaluator
    Blam_eval: Evaluator
    lambda_domain: tuple
    left_kind: str = SINGULAR
    right_kind: str = SINGULAR
    alpha_eval: Optional[Callable[[float], np.ndarray]] = None
    alpha_lam_eval: Optional[Callable[[float], np.ndarray]] = None
    E_eval: Optional[Callable] = None
    kind: str = "generic"
    params: dict = field(default_factory=dict)
    name: str = "system"

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ConfigError(f"empty interval {self.interval}")
        l1, l2 = self.lambda_domain
        if not l1 < l2:
            raise ConfigError(f"empty lambda domain {self.lambda_domain}")
        for kind in (self.left_kind, self.right_kind):
            if kind not in (REGULAR, SINGULAR):
                raise ConfigError(f"unknown endpoint kind {kind!r}")
        for end, kind in ((a, self.left_kind), (b, self.right_kind)):
            if kind == REGULAR and not np.isfinite(end):
                raise ConfigError("an infinite endpoint cannot be regular")

    def B(self, x: float, lam) -> np.ndarray:
        return np.asarray(self.B_eval(float(x), np.asarray(lam, dtype=float)),
                          dtype=complex)

    def Blam(self, x: float, lam) -> np.ndarray:
        return np.asarray(
            self.Blam_eval(float(x), np.asarray(lam, dtype=float)),
            dtype=complex)

    def alpha(self, lam: float) -> np.ndarray:
        if self.alpha_eval is None:
            raise ConfigError("system carries no boundary matrix alpha")
        return np.atleast_2d(np.asarray(self.alpha_eval(lam), dtype=complex))

    @property
    def J(self) -> np.ndarray:
        return symplectic_j(self.n)


def _diag_blocks(top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    """Block-diagonal stack diag(top, bottom) over leading batch axes."""
    shape = np.broadcast_shapes(top.shape[:-2], bottom.shape[:-2])
    p, q = top.shape[-1], bottom.shape[-1]
    out = np.zeros(shape + (p + q, p + q), dtype=complex)
    out[..., :p, :p] = top
    out[..., p:, p:] = bottom
    return out


def _as_matrix(value, lam_shape=None) -> np.ndarray:
    """Promote scalar or k x k coefficient values to an array of matrices."""
    v = np.asarray(value, dtype=complex)
    if lam_shape is not None and v.shape == lam_shape:
        return v[..., None, None]
    if v.ndim == 0:
        return v.reshape(1, 1)
    return v


def _sample_points(interval, count=200, left_kind=SINGULAR,
                   right_kind=SINGULAR, horizon=50.0) -> np.ndarray:
    """Default x samples: log-spaced toward singular ends, never on them."""
    a, b = interval
    if np.isfinite(a) and np.isfinite(b):
        s_left = np.logspace(-10, -1, count // 4) if left_kind == SINGULAR \
            else np.linspace(1e-9, 0.1, count // 4)
        s_right = 1 - (np.logspace(-10, -1, count // 4)
                       if right_kind == SINGULAR
                       else np.linspace(1e-9, 0.1, count // 4))
        mid = np.linspace(0.1, 0.9, count - 2 * (count // 4))
        s = np.unique(np.concatenate([s_left, mid, s_right]))
        return a + (b - a) * s
    if np.isfinite(a):
        return a + np.logspace(-10, np.log10(horizon), count)
    if np.isfinite(b):
        return b - np.logspace(-10, np.log10(horizon), count)[::-1]
    return np.linspace(-horizon, horizon, count)


def default_x_grid(sys: HamiltonianSystem, count: int = 200) -> np.ndarray:
    return _sample_points(sys.interval, count, sys.left_kind, sys.right_kind)


def default_lambda_grid(sys: HamiltonianSystem, count: int = 50) -> np.ndarray:
    return np.linspace(sys.lambda_domain[0], sys.lambda_domain[1], count)


def _min_eig_over(points, lam_grid, evaluator):
    """Smallest eigenvalue of a Hermitian evaluator over the sample grid."""
    worst, where = np.inf, None
    for x in points:
        vals = np.linalg.eigvalsh(evaluator(x, lam_grid))
        k = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[k] < worst:
            worst, where = float(vals[k]), (float(x), float(lam_grid[k[0]]))
    return worst, where


# ---------------------------------------------------------------- builders

def build_linear_pencil(B0_eval, B1_eval, interval, lambda_domain=(-1.0, 1.0),
                        left_kind=SINGULAR, right_kind=SINGULAR,
                        x_samples=None, name="linear-pencil",
                        tol: float = 1e-12) -> HamiltonianSystem:
    """System with B(x; lam) = B0(x) + lam B1(x), B1 >= 0."""
    b0_0 = _as_matrix(B0_eval(_probe_x(interval)))
    n2 = b0_0.shape[-1]
    if n2 % 2:
        raise ConfigError("coefficient matrices must be 2n x 2n")
    xs = _sample_points(interval, 50, left_kind, right_kind) \
        if x_samples is None else np.asarray(x_samples, dtype=float)
    for x in xs:
        b1 = _as_matrix(B1_eval(x))
        low = float(np.linalg.eigvalsh(0.5 * (b1 + b1.conj().T))[0])
        if low < -tol * max(1.0, float(np.abs(b1).max())):
            raise AssumptionError(
                f"B1 is not non-negative at x={x:.6g} "
                f"(smallest eigenvalue {low:.3e})", witness=float(x))

    def B_eval(x, lam):
        return (_as_matrix(B0_eval(x))
                + lam[..., None, None] * _as_matrix(B1_eval(x)))

    def Blam_eval(x, lam):
        return np.broadcast_to(_as_matrix(B1_eval(x)),
                               lam.shape + (n2, n2)).astype(complex)

    def E_eval(x, lam, lam_star):
        return (lam - lam_star) * np.eye(n2, dtype=complex)

    return HamiltonianSystem(
        n=n2 // 2, interval=tuple(interval), B_eval=B_eval,
        Blam_eval=Blam_eval, lambda_domain=tuple(lambda_domain),
        left_kind=left_kind, right_kind=right_kind, E_eval=E_eval,
        kind="linear", name=name)


def _probe_x(interval) -> float:
    a, b = interval
    if np.isfinite(a) and np.isfinite(b):
        return 0.5 * (a + b)
    if np.isfinite(a):
        return a + 1.0
    if np.isfinite(b):
        return b - 1.0
    return 0.0


def build_quadratic_schrodinger(V_eval, Q1_eval, Q2_eval, interval,
                                lambda_domain, left_kind=SINGULAR,
                                right_kind=SINGULAR, x_samples=None,
                                lambda_samples=None, name="quadratic",
                                params=None) -> HamiltonianSystem:
    """B = diag(lam Q1 + lam^2 Q2 - V, I), B_lam = diag(Q1 + 2 lam Q2, 0).

    Rejects the input unless Q1 + 2 lam Q2 is uniformly positive definite on
    the sampled (x, lam) grid.
    """
    m = _as_matrix(V_eval(_probe_x(interval))).shape[-1]
    xs = _sample_points(interval, 200, left_kind, right_kind) \
        if x_samples is None else np.asarray(x_samples, dtype=float)
    lams = np.linspace(*lambda_domain, 50) if lambda_samples is None \
        else np.asarray(lambda_samples, dtype=float)

    def weight(x, lam):
        return (_as_matrix(Q1_eval(x))
                + 2 * lam[..., None, None] * _as_matrix(Q2_eval(x)))

    theta, where = _min_eig_over(xs, lams, weight)
    if not theta > 0:
        raise AssumptionError(
            f"Q1 + 2 lam Q2 is not positive definite: smallest eigenvalue "
            f"{theta:.3e} at (x, lam) = {where}", witness=where)
    eye = np.eye(m, dtype=complex)

    def B_eval(x, lam):
        l = lam[..., None, None]
        top = l * _as_matrix(Q1_eval(x)) + l**2 * _as_matrix(Q2_eval(x)) \
            - _as_matrix(V_eval(x))
        return _diag_blocks(top, np.broadcast_to(eye, lam.shape + (m, m)))

    def Blam_eval(x, lam):
        return _diag_blocks(weight(x, lam),
                            np.zeros(lam.shape + (m, m), dtype=complex))

    def E_eval(x, lam, lam_star):
        q1, q2 = _as_matrix(Q1_eval(x)), _as_matrix(Q2_eval(x))
        e11 = (lam - lam_star) * np.linalg.solve(
            q1 + 2 * lam_star * q2, q1 + (lam + lam_star) * q2)
        return _diag_blocks(e11, np.zeros((m, m), dtype=complex))

    return HamiltonianSystem(
        n=m, interval=tuple(interval), B_eval=B_eval, Blam_eval=Blam_eval,
        lambda_domain=tuple(lambda_domain), left_kind=left_kind,
        right_kind=right_kind, E_eval=E_eval, kind="quadratic",
        params=dict(params or {}, theta=theta), name=name)


def build_degenerate_sturm_liouville(P11_eval, V11_eval, V12_eval, V22_eval,
                                     m, n_total, interval, lambda_domain,
                                     left_kind=SINGULAR, right_kind=SINGULAR,
                                     x_samples=None,
                                     name="degenerate-sl") -> HamiltonianSystem:
    """Reduced 2m-dimensional system after eliminating the algebraic block.

    B = diag(lam I - V(x; lam), P11^{-1}) with
    V(x; lam) = V11 + V12 (lam I - V22)^{-1} V12*.  The eigenvalues of V22
    must keep a positive distance from the lambda domain.
    """
    if not 0 < m < n_total:
        raise ConfigError(f"need 0 < m < n_total, got m={m}, n={n_total}")
    l1, l2 = lambda_domain
    xs = _sample_points(interval, 200, left_kind, right_kind) \
        if x_samples is None else np.asarray(x_samples, dtype=float)
    theta, gap = np.inf, np.inf
    for x in xs:
        p = _as_matrix(P11_eval(x))
        theta = min(theta, float(np.linalg.eigvalsh(p)[0]))
        for nu in np.linalg.eigvalsh(_as_matrix(V22_eval(x))):
            if l1 < nu < l2:
                raise AssumptionError(
                    f"V22 eigenvalue {nu:.6g} at x={x:.6g} lies inside the "
                    f"lambda domain [{l1}, {l2}]", witness=(float(x), float(nu)))
            gap = min(gap, l1 - nu if nu <= l1 else nu - l2)
    if not gap > 0:
        raise AssumptionError(
            f"V22 eigenvalues touch the lambda domain (gap {gap:.3e})",
            witness=gap)
    if not theta > 0:
        raise AssumptionError(f"P11 not uniformly positive (theta={theta:.3e})",
                              witness=theta)
    eye = np.eye(m, dtype=complex)
    eye2 = np.eye(n_total - m, dtype=complex)

    def resolvent(x, lam):
        return np.linalg.inv(lam[..., None, None] * eye2
                             - _as_matrix(V22_eval(x)))

    def bold_v(x, lam):
        v12 = _as_matrix(V12_eval(x)).reshape(m, n_total - m)
        return (_as_matrix(V11_eval(x))
                + v12 @ resolvent(x, lam) @ v12.conj().T)

    def bold_v_lam(x, lam):
        v12 = _as_matrix(V12_eval(x)).reshape(m, n_total - m)
        r = resolvent(x, lam)
        return -v12 @ r @ r @ v12.conj().T

    def B_eval(x, lam):
        top = lam[..., None, None] * eye - bold_v(x, lam)
        bottom = np.broadcast_to(np.linalg.inv(_as_matrix(P11_eval(x))),
                                 lam.shape + (m, m))
        return _diag_blocks(top, bottom)

    def Blam_eval(x, lam):
        return _diag_blocks(eye - bold_v_lam(x, lam),
                            np.zeros(lam.shape + (m, m), dtype=complex))

    def E_eval(x, lam, lam_star):
        la, ls = np.asarray(lam, float), np.asarray(lam_star, float)
        rhs = (lam - lam_star) * eye - (bold_v(x, la) - bold_v(x, ls))
        e11 = np.linalg.solve(eye - bold_v_lam(x, ls), rhs)
        return _diag_blocks(e11, np.zeros((m, m), dtype=complex))

    return HamiltonianSystem(
        n=m, interval=tuple(interval), B_eval=B_eval, Blam_eval=Blam_eval,
        lambda_domain=tuple(lambda_domain), left_kind=left_kind,
        right_kind=right_kind, E_eval=E_eval, kind="degenerate-sl",
        params={"gap": gap, "theta": theta}, name=name)


# ------------------------------------------------------------ assumptions

def residual_map_E(sys: HamiltonianSystem, x: float, lam: float,
                   lam_star: float) -> np.ndarray:
    """Class-specific factor E with B(lam) - B(lam*) = B_lam(lam*) E."""
    if sys.E_eval is None:
        raise ConfigError(f"no residual map known for class {sys.kind!r}")
    return np.asarray(sys.E_eval(float(x), float(lam), float(lam_star)),
                      dtype=complex)


def residual_map_defect(sys, x, lam, lam_star) -> float:
    e = residual_map_E(sys, x, lam, lam_star)
    b1, b2 = sys.B(x, lam), sys.B(x, lam_star)
    err = b1 - b2 - sys.Blam(x, lam_star) @ e
    # Roundoff in B itself sets the floor, not the size of the difference.
    scale = max(1.0, float(np.abs(b1).max()), float(np.abs(b2).max()))
    return float(np.abs(err).max()) / scale


PASS, FAIL, NOT_CHECKABLE = "pass", "fail", "not-checkable"


@dataclass
class AssumptionEntry:
    status: str
    worst_defect: float = float("nan")
    location: object = None
    grid: str = ""
    note: str = ""


@dataclass
class AssumptionReport:
    entries: dict

    @property
    def all_checkable_pass(self) -> bool:
        return all(e.status != FAIL for e in self.entries.values())

    def failures(self):
        return {k: e for k, e in self.entries.items() if e.status == FAIL}

    def as_dict(self) -> dict:
        return {k: {"status": e.status, "worst_defect": e.worst_defect,
                    "location": e.location, "grid": e.grid, "note": e.note}
                for k, e in sorted(self.entries.items())}


BUILTIN_CLASSES = ("linear", "quadratic", "degenerate-sl", "mhd",
                   "saint-venant")


def check_assumptions(sys: HamiltonianSystem, x_grid=None, lambda_grid=None,
                      tol: float = 1e-10, atkinson_intervals: int = 12
                      ) -> AssumptionReport:
    """Sampled evidence for the structural assumptions.

    Every check runs on the supplied grids only; a pass is evidence, not a
    proof.  Entries that cannot be decided by sampling are marked
    ``not-checkable`` unless the system belongs to a class for which they
    are known to hold.
    """
    xs = default_x_grid(sys) if x_grid is None else np.asarray(x_grid, float)
    lams = default_lambda_grid(sys) if lambda_grid is None \
        else np.asarray(lambda_grid, float)
    a, b = sys.interval
    if np.any(xs <= a) or np.any(xs >= b):
        raise ConfigError("x grid must lie strictly inside the interval")
    l1, l2 = sys.lambda_domain
    if np.any(lams < l1) or np.any(lams > l2):
        raise ConfigError("lambda grid must lie inside the lambda domain")
    grid_txt = (f"{len(xs)} x in [{xs.min():.3g}, {xs.max():.3g}], "
                f"{len(lams)} lam in [{lams.min():.6g}, {lams.max():.6g}]")
    entries = {}

    # (A) Hermitian coefficients and non-negative B_lam.
    worst_h, where_h = 0.0, None
    worst_p, where_p = np.inf, None
    for x in xs:
        bm = sys.B(x, lams)
        bl = sys.Blam(x, lams)
        scale = max(1.0, float(np.abs(bm).max()))
        herm = max(float(np.abs(bm - np.conj(np.swapaxes(bm, -1, -2))).max()),
                   float(np.abs(bl - np.conj(np.swapaxes(bl, -1, -2))).max()))
        herm /= scale
        if herm > worst_h:
            worst_h, where_h = herm, float(x)
        vals = np.linalg.eigvalsh(bl)
        k = np.unravel_index(np.argmin(vals), vals.shape)
        rel = float(vals[k]) / max(1.0, float(np.abs(bl).max()))
        if rel < worst_p:
            worst_p, where_p = rel, (float(x), float(lams[k[0]]))
    ok_a = worst_h <= tol and worst_p >= -tol
    entries["A"] = AssumptionEntry(
        PASS if ok_a else FAIL,
        worst_defect=max(worst_h, -min(worst_p, 0.0)),
        location=where_h if worst_h > tol else where_p, grid=grid_txt,
        note=f"hermitian defect {worst_h:.2e}; min eig B_lam {worst_p:.3e}")

    # (A') integrability at a regular left endpoint.
    if sys.left_kind == REGULAR:
        near = a + np.logspace(-12, -6, 7) * max(1.0, abs(a))
        vals = [float(np.abs(sys.B(x, lams)).max()) for x in near]
        finite = bool(np.all(np.isfinite(vals)))
        bounded = finite and max(vals) <= 10 * max(1.0, min(vals))
        entries["A'"] = AssumptionEntry(
            PASS if bounded else FAIL, worst_defect=max(vals),
            location=float(near[int(np.argmax(vals))]),
            grid="7 log-spaced points approaching a",
            note="coefficients bounded approaching the regular endpoint")
    else:
        entries["A'"] = AssumptionEntry(
            NOT_CHECKABLE, grid=grid_txt,
            note="left endpoint is singular; the regular-endpoint variant "
                 "is not claimed")

    # (B) Atkinson positivity: the Gram integral of every solution basis
    # over a subinterval must be positive definite.
    entries["B"] = _check_atkinson(sys, xs, lams, atkinson_intervals,
                                   grid_txt)

    builtin = sys.kind in BUILTIN_CLASSES
    for label, what in (("C", "lambda-independence of the maximal domain"),
                        ("D", "constancy of the deficiency counts")):
        entries[label] = AssumptionEntry(
            PASS if builtin else NOT_CHECKABLE, grid=grid_txt,
            note=(f"{what} holds for the {sys.kind} class"
                  if builtin else f"{what} has no finite-sample test"))

    # (E) factorization through B_lam with a residual map of size O(|dlam|).
    if sys.E_eval is None:
        entries["E"] = AssumptionEntry(NOT_CHECKABLE, grid=grid_txt,
                                       note="no residual map for this class")
    else:
        worst, where, ratio = 0.0, None, 0.0
        stars = lams[:: max(1, len(lams) // 5)]
        for x in xs[:: max(1, len(xs) // 40)]:
            for ls in stars:
                for lv in lams[:: max(1, len(lams) // 10)]:
                    d = residual_map_defect(sys, x, lv, ls)
                    if d > worst:
                        worst, where = d, (float(x), float(lv), float(ls))
                    if lv != ls:
                        e = residual_map_E(sys, x, lv, ls)
                        ratio = max(ratio, float(np.abs(e).max()) / abs(lv - ls))
        entries["E"] = AssumptionEntry(
            PASS if worst <= 1e-10 else FAIL, worst_defect=worst,
            location=where, grid=grid_txt,
            note=f"|E| <= {ratio:.3g} |lam - lam*| on samples")

    # (F) B(lam2) - B(lam1) >= 0 for the domain ends.
    worst_f, where_f = np.inf, None
    for x in xs:
        diff = sys.B(x, l2) - sys.B(x, l1)
        val = float(np.linalg.eigvalsh(diff)[0]) / max(
            1.0, float(np.abs(diff).max()))
        if val < worst_f:
            worst_f, where_f = val, float(x)
    entries["F"] = AssumptionEntry(
        PASS if worst_f >= -tol else FAIL, worst_defect=-min(worst_f, 0.0),
        location=where_f, grid=grid_txt,
        note=f"min eig of B(lam2) - B(lam1): {worst_f:.3e} (relative)")
    return AssumptionReport(entries)


def _check_atkinson(sys, xs, lams, count, grid_txt) -> AssumptionEntry:
    from .propagator import gram_integral

    picks = np.unique(np.linspace(0, len(xs) - 1, count + 1).astype(int))
    worst, where = np.inf, None
    lam_sub = lams[:: max(1, len(lams) // 10)]
    for i0, i1 in zip(picks[:-1], picks[1:]):
        x0, x1 = float(xs[i0]), float(xs[i1])
        # Long windows make the Gram matrix of a growing basis numerically
        # singular; one unit of x is enough to see positivity.
        if x1 - x0 > 1.0:
            x0 = x1 - 1.0
        gram = gram_integral(sys, lam_sub, x0, x1)
        vals = np.linalg.eigvalsh(gram)
        rel = vals[:, 0] / np.maximum(vals[:, -1], 1e-300)
        k = int(np.argmin(rel))
        if rel[k] < worst:
            worst, where = float(rel[k]), (x0, x1, float(lam_sub[k]))
    return AssumptionEntry(
        PASS if worst > 0 else FAIL, worst_defect=worst, location=where,
        grid=grid_txt + f"; {len(picks) - 1} subintervals",
        note="relative smallest eigenvalue of the solution Gram integral")
