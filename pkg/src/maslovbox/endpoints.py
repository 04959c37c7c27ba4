"""Endpoint analysis: eigenvalue-limit classification and lying frames.

For complex mu the Hermitian matrix
    A(x; mu, lam) = Phi* (J / i) Phi / (2 Im mu)
has eigenvalues that either converge or diverge as x approaches a singular
endpoint; the number of convergent ones is the dimension of the space of
solutions that are square integrable near that end.  For real lam the
quadrature B(x; lam) = int_c^x Phi* B_lam Phi plays the same role.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, NumericalError
from .linalg import fix_phase, hermitian_eigen, null_space, symplectic_j
from .propagator import (DEFAULT_CONFIG, FramePath, IntegratorConfig,
                         b_matrix, evolve_frames, fundamental_matrix)

LEFT, RIGHT = "left", "right"
LIMIT_POINT, LIMIT_CIRCLE, LIMIT_M = "limit-point", "limit-circle", "limit-m"


def _check_side(endpoint):
    if endpoint not in (LEFT, RIGHT):
        raise ConfigError(f"endpoint must be 'left' or 'right', got {endpoint!r}")


def default_probes(sys, c, endpoint, count=5, start=None) -> np.ndarray:
    """Probe points approaching an endpoint.

    Finite endpoints are approached geometrically (distance shrinking by
    factors of 10, ending at 1e-10 relative); infinite ones additively
    in equal steps out to distance 40 beyond ``start``.
    """
    _check_side(endpoint)
    a, b = sys.interval
    end = a if endpoint == LEFT else b
    sign = -1.0 if endpoint == LEFT else 1.0
    if np.isfinite(end):
        scale = max(abs(end), 1.0) if end != 0 else 1.0
        dist = scale * np.logspace(-10 + count - 1, -10, count)
        return end - sign * dist
    base = c if start is None else start
    return base + sign * np.linspace(10.0, 40.0, count) * 1.0


def a_matrix_values(sys, mu, lam, c, probes,
                    config: IntegratorConfig = DEFAULT_CONFIG):
    """A(x; mu, lam) and Phi(x; mu, lam) at each probe."""
    mu = complex(mu)
    if mu.imag == 0:
        raise ConfigError("the A-matrix needs Im mu != 0")
    path = fundamental_matrix(sys, mu, lam, c, probes, config,
                              check_symplectic=False)
    phi = path(probes)[:, 0]
    j = symplectic_j(sys.n)
    a = np.conj(np.swapaxes(phi, -1, -2)) @ (j / 1j) @ phi / (2 * mu.imag)
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    return a, phi


def pair_value(nu, mu):
    """Partner -1 / ((2 Im mu)^2 nu) of an A-eigenvalue."""
    return -1.0 / ((2 * complex(mu).imag) ** 2 * nu)


def _refine_paired(vals, mu, floor: float = 1e-12):
    """Recompute eigenvalues lost below roundoff from their partners.

    A-eigenvalues come in pairs (nu_j, nu_{n+j}) with
    nu_j nu_{n+j} = -1 / (2 Im mu)^2 when the system has real coefficients.
    When |A| is huge the smaller member is pure roundoff; it is replaced by
    the partner value, but only where the raw values already agree with the
    pairing to within that roundoff.
    """
    out = np.array(vals, dtype=float, copy=True)
    two_n = out.shape[-1]
    n = two_n // 2
    for row in out.reshape(-1, two_n):
        top = np.abs(row).max()
        noise = 1e3 * np.finfo(float).eps * top
        for j in range(n):
            lo, hi = (j, n + j) if abs(row[j]) < abs(row[n + j]) else (n + j, j)
            if abs(row[lo]) > floor * top and abs(row[lo]) > noise:
                continue
            partner = pair_value(row[hi], mu)
            if abs(row[lo] - partner) <= noise + 1e-6 * abs(partner):
                row[lo] = partner
    return out


@dataclass
class NiessenProbe:
    """Eigenvalue paths of A or B along probes approaching an endpoint.

    ``values`` is (len(probes), 2n) sorted ascending at every probe and
    ``vectors`` holds matching eigenvectors.  ``overlaps`` records the
    smallest eigenvector overlap between consecutive probes; a value below
    0.5 flags an ambiguous match.
    """

    endpoint: str
    kind: str
    mu: complex
    lam: float
    c: float
    probes: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    phi: np.ndarray
    overlaps: np.ndarray
    flagged: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.values.shape[1] // 2


def niessen_eigen_probe(sys, mu, lam, c, probe_points=None, endpoint=LEFT,
                        config: IntegratorConfig = DEFAULT_CONFIG
                        ) -> NiessenProbe:
    """Evaluate A (complex mu) or B (mu = 0) along probes toward an endpoint."""
    _check_side(endpoint)
    probes = default_probes(sys, c, endpoint) if probe_points is None \
        else np.asarray(probe_points, dtype=float)
    side = np.sign(probes - c)
    want = -1 if endpoint == LEFT else 1
    if np.any(side != want):
        raise ConfigError("probe points must lie between c and the endpoint")
    probes = probes[np.argsort(np.abs(probes - c))]
    mu = complex(mu)
    if mu == 0:
        xs, mats, phi = b_matrix(sys, [lam], c, probes, config)
        mats, phi = mats[0], phi[0]
        probes = np.asarray(xs)
        kind = "B"
    else:
        mats, phi = a_matrix_values(sys, mu, lam, c, probes, config)
        kind = "A"
    vals, vecs = hermitian_eigen(mats, tol=1e-6)
    if kind == "A":
        vals = _refine_paired(vals, mu)
    overlaps = np.ones(len(probes))
    flagged = []
    for k in range(1, len(probes)):
        ov = np.abs(np.conj(vecs[k - 1]).T @ vecs[k])
        rows, cols = linear_sum_assignment(-ov)
        overlaps[k] = float(ov[rows, cols].min())
        if overlaps[k] < 0.5:
            flagged.append(k)
    return NiessenProbe(endpoint, kind, mu, float(lam), float(c), probes,
                        vals, vecs, phi, overlaps, flagged)


@dataclass
class EndpointClassification:
    endpoint: str
    m: int
    case: str
    finite: list
    divergent: list
    growth: dict
    confidence: str
    limits: np.ndarray
    vectors: np.ndarray

    @property
    def r(self) -> int:
        return self.m - len(self.limits) // 2

    def as_dict(self) -> dict:
        return {"endpoint": self.endpoint, "m": self.m, "case": self.case,
                "finite_indices": [int(i) + 1 for i in self.finite],
                "divergent_indices": [int(i) + 1 for i in self.divergent],
                "growth": {str(int(k) + 1): float(v)
                           for k, v in sorted(self.growth.items())},
                "confidence": self.confidence}


def classify_endpoint(probe: NiessenProbe, decision_tol: float = 1e-3
                      ) -> EndpointClassification:
    """Count convergent eigenvalue paths with a Cauchy test on the last probes."""
    if len(probe.probes) < 4:
        raise NumericalError(
            f"need at least 4 probe points, have {len(probe.probes)}")
    vals = probe.values
    finite, divergent, growth, low = [], [], {}, False
    for j in range(vals.shape[1]):
        tail = vals[-3:, j]
        steps = np.abs(np.diff(tail))
        if np.all(steps <= decision_tol * (1 + np.abs(tail[1:]))):
            finite.append(j)
            continue
        ratio = abs(tail[-1]) / max(abs(tail[-2]), 1e-300)
        growth[j] = float(ratio)
        divergent.append(j)
        if ratio < 1.5:
            low = True
    n = vals.shape[1] // 2
    m = len(finite)
    if m < n:
        low = True
    case = LIMIT_POINT if m == n else LIMIT_CIRCLE if m == 2 * n else LIMIT_M
    return EndpointClassification(
        probe.endpoint, m, case, finite, divergent, growth,
        "low" if low or probe.flagged else "high", vals[-1].copy(),
        probe.vectors[-1].copy())


# ------------------------------------------------------- Niessen elements

@dataclass
class NiessenElementSet:
    """Elements u_j(x) = Phi(x; mu0, lam0) r_j selecting a boundary condition.

    ``R`` collects the coordinate vectors r_j as columns; ``complements``
    holds the partner vectors for pairs with two convergent paths.
    """

    endpoint: str
    mu0: complex
    lam0: float
    c: float
    R: np.ndarray
    betas: dict
    complements: dict
    gammas: dict

    def elements_at(self, phi: np.ndarray) -> np.ndarray:
        """Element values Phi(x) R for a stack of fundamental matrices."""
        return phi @ self.R


def _pairs(classification):
    n = len(classification.limits) // 2
    fin = set(classification.finite)
    for j in range(n):
        yield j, j in fin, (n + j) in fin


def niessen_elements(probe: NiessenProbe,
                     classification: Optional[EndpointClassification] = None,
                     beta_phase: Optional[dict] = None,
                     betas: Optional[dict] = None,
                     ratio_tol: float = 1e-12) -> NiessenElementSet:
    """Build r_j from the limiting eigenvectors.

    Pairs (v_j, v_{n+j}) with both paths convergent combine as
    v_j + beta_j v_{n+j} with |beta_j|^2 = -nu_j / nu_{n+j}; otherwise the
    single convergent eigenvector is used.  ``betas`` overrides the
    coefficient (e.g. a physically selected value); ``beta_phase`` sets the
    phase on the admissible circle (default 0).  Complements use gamma =
    -beta.
    """
    if probe.kind != "A":
        raise ConfigError("Niessen elements need a complex-mu probe")
    cl = classification or classify_endpoint(probe)
    nu, v = cl.limits, cl.vectors
    n = len(nu) // 2
    cols, out_betas, comps, gammas = [], {}, {}, {}
    for j, fin_y, fin_z in _pairs(cl):
        y, z = v[:, j], v[:, n + j]
        if fin_y and fin_z:
            denom = nu[n + j]
            if abs(denom) <= ratio_tol * max(1.0, abs(nu[j])):
                raise NumericalError(
                    f"degenerate ratio: nu_{n + j + 1} = {denom:.3e}")
            ratio = -nu[j] / denom
            if ratio < 0:
                raise NumericalError(
                    f"eigenvalue pair ({nu[j]:.4g}, {denom:.4g}) has the same "
                    f"sign; no admissible beta")
            if betas and j in betas:
                beta = complex(betas[j])
            else:
                phase = (beta_phase or {}).get(j, 0.0)
                beta = np.sqrt(ratio) * np.exp(1j * phase)
            out_betas[j] = beta
            gammas[j] = -beta
            comps[j] = y - beta * z
            cols.append(y + beta * z)
        elif probe.endpoint == LEFT and fin_z:
            cols.append(z)
        elif probe.endpoint == RIGHT and fin_y:
            cols.append(y)
        elif fin_y or fin_z:
            cols.append(y if fin_y else z)
        else:
            raise NumericalError(
                f"pair {j + 1} has no convergent path; cannot build element")
    return NiessenElementSet(probe.endpoint, probe.mu, probe.lam, probe.c,
                             np.column_stack(cols), out_betas, comps, gammas)


def boundary_form(U, y, probes=None):
    """Limit of U(x)* J y(x) along probes approaching an endpoint.

    ``U`` is (len, 2n, p) and ``y`` is (len, 2n).  The limit is
    Aitken-extrapolated from the last three values when they move; returns
    (limit, error_estimate).
    """
    U = np.asarray(U, dtype=complex)
    y = np.asarray(y, dtype=complex)
    j = symplectic_j(U.shape[1] // 2)
    seq = np.einsum("kip,ij,kj->kp", np.conj(U), j, y)
    if seq.shape[0] < 3:
        return seq[-1], float("inf")
    s0, s1, s2 = seq[-3], seq[-2], seq[-1]
    d1, d2 = s1 - s0, s2 - s1
    scale = max(1.0, float(np.abs(seq).max()))
    if np.all(np.abs(d2) <= 1e-13 * scale):
        return s2, float(np.abs(d2).max())
    if np.any(np.abs(d2) > 2 * np.abs(d1) + 1e-13 * scale):
        raise NumericalError("boundary form does not converge along probes",
                             detail={"sequence": seq})
    denom = d2 - d1
    safe = np.abs(denom) > 1e-14 * scale
    lim = np.where(safe, s2 - d2 * d2 / np.where(safe, denom, 1), s2)
    return lim, float(np.abs(lim - s2).max() + np.abs(d2).max())


@dataclass
class PhysicalBeta:
    beta: complex
    circle_radius: float
    circle_ratio: float
    residual: float
    warning: Optional[str]


def physical_beta(probe: NiessenProbe, target, lam_ref: float = float("nan"),
                  classification=None) -> PhysicalBeta:
    """Select beta so the element satisfies a prescribed boundary behavior.

    ``target`` is the value w of the expected solution at the innermost
    probe eps (e.g. (0, 1) for a solution vanishing at the end).  Solves
    U(eps)* J w = 0 for beta.  ``lam_ref`` is recorded for reporting only:
    the target is specified directly at eps.
    """
    cl = classification or classify_endpoint(probe)
    if cl.case == LIMIT_POINT:
        raise ConfigError("physical beta needs a limit-circle endpoint")
    n = probe.n
    if n != 1:
        raise ConfigError("physical beta is implemented for n = 1")
    w = np.asarray(target, dtype=complex)
    phi = probe.phi[-1]
    v1, v2 = cl.vectors[:, 0], cl.vectors[:, 1]
    j = symplectic_j(1)
    rhs = np.conj(phi).T @ j @ w
    num = np.conj(v1) @ rhs
    den = np.conj(v2) @ rhs
    u1, u2 = phi @ v1, phi @ v2
    par = [abs(np.linalg.det(np.column_stack([u / np.linalg.norm(u),
                                              w / np.linalg.norm(w)])))
           for u in (u1, u2)]
    if np.linalg.norm(rhs) <= 1e-14 * np.linalg.norm(w) or min(par) < 1e-10:
        raise ConfigError("target coincides with an element; beta is "
                          "undetermined")
    if abs(den) <= 1e-14 * abs(num):
        raise NumericalError("target forces an infinite beta")
    beta = complex(np.conj(-num / den))
    radius = float(np.sqrt(-cl.limits[0] / cl.limits[1]))
    ratio = abs(beta) / radius
    u = phi @ (v1 + beta * v2)
    residual = float(abs(np.conj(u) @ j @ w) /
                     (np.linalg.norm(u) * np.linalg.norm(w)))
    warning = None
    if abs(ratio - 1) > 0.05:
        warning = (f"|beta| = {abs(beta):.4g} is off the admissible circle "
                   f"of radius {radius:.4g}")
    return PhysicalBeta(beta, radius, ratio, residual, warning)


# --------------------------------------------------------- lying frames

class FrameFamily:
    """Lagrangian frames of solutions lying at one endpoint.

    ``path(lams, x_lo, x_hi)`` returns a :class:`FramePath` valid on the
    window [x_lo, x_hi]; ``frames_at(lams, x)`` returns (k, 2n, n).
    """

    side: str = LEFT

    def __init__(self, sys, config: IntegratorConfig = DEFAULT_CONFIG):
        self.sys = sys
        self.config = config

    def initial(self, lams, x_lo, x_hi):
        """Return (x_start, frames) to integrate from."""
        raise NotImplementedError

    def path(self, lams, x_lo, x_hi) -> FramePath:
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        x0, f0 = self.initial(lams, x_lo, x_hi)
        x1 = x_hi if self.side == LEFT else x_lo
        if x0 == x1:
            return _ConstantPath(lams, x0, f0, self.sys.n)
        return evolve_frames(self.sys, lams, f0, x0, x1, self.config)

    def frames_at(self, lams, x) -> np.ndarray:
        return self.path(lams, x, x).at(x)


class _ConstantPath(FramePath):
    def __init__(self, lams, x0, frames, n):
        super().__init__(lams, x0, x0, [], n)
        self._frames = np.asarray(frames, dtype=complex)

    def __call__(self, x):
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(np.abs(xq - self.x0) > 1e-12 * max(1.0, abs(self.x0))):
            raise NumericalError("constant frame path queried off its point")
        return np.broadcast_to(self._frames, (xq.size,) + self._frames.shape)


class RegularFrames(FrameFamily):
    """Frames J alpha(lam)* at a regular endpoint, evolved inward."""

    def __init__(self, sys, side, alpha_eval=None, position=None,
                 config: IntegratorConfig = DEFAULT_CONFIG):
        super().__init__(sys, config)
        _check_side(side)
        self.side = side
        self.alpha_eval = alpha_eval or sys.alpha
        a, b = sys.interval
        self.position = float(position if position is not None
                              else (a if side == LEFT else b))

    def boundary_frame(self, lam) -> np.ndarray:
        alpha = np.atleast_2d(np.asarray(self.alpha_eval(lam), dtype=complex))
        if alpha.shape != (self.sys.n, 2 * self.sys.n):
            raise ConfigError(f"alpha must be n x 2n, got {alpha.shape}")
        return self.sys.J @ np.conj(alpha).T

    def initial(self, lams, x_lo, x_hi):
        frames = np.stack([self.boundary_frame(l) for l in lams])
        return self.position, frames


class LimitPointFrames(FrameFamily):
    """Frames at a limit-point end from the B-matrix eigenvector limits.

    The base point is the window edge on the endpoint's side.  The n
    eigenvectors of B(x; lam) that stay bounded as x approaches the end are
    the initial frame at the base.
    """

    def __init__(self, sys, side, probe_offsets=None, tol: float = 1e-10,
                 config: IntegratorConfig = DEFAULT_CONFIG):
        super().__init__(sys, config)
        _check_side(side)
        self.side = side
        self.probe_offsets = probe_offsets
        self.tol = tol
        self.last_report = {}

    def probes_from(self, base) -> np.ndarray:
        a, b = self.sys.interval
        end = a if self.side == LEFT else b
        if self.probe_offsets is not None:
            sign = -1 if self.side == LEFT else 1
            return base + sign * np.asarray(self.probe_offsets, dtype=float)
        if np.isfinite(end):
            dist = abs(base - end)
            return end + (base - end) * np.logspace(-1, -6, 6) * (
                1 if dist > 0 else 0)
        sign = -1 if self.side == LEFT else 1
        return base + sign * np.array([1.0, 2, 4, 8, 16, 32, 64, 128, 256])

    def limit_vectors(self, lams, base):
        """Return the n bounded eigenvectors at ``base`` per lambda."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        n = self.sys.n
        xs, quad, _ = b_matrix(self.sys, lams, base, self.probes_from(base),
                               self.config, overflow=1e100)
        if len(xs) < 2:
            raise NumericalError("B-matrix probe overflowed immediately")
        vals, vecs = hermitian_eigen(quad, tol=1e-6)
        pick = slice(0, n) if self.side == RIGHT else slice(n, 2 * n)
        sub = vecs[..., pick]
        drift = np.array([
            np.linalg.norm(sub[i, -1] @ np.conj(sub[i, -1]).T
                           - sub[i, -2] @ np.conj(sub[i, -2]).T, 2)
            for i in range(len(lams))])
        with np.errstate(over="ignore"):
            ratio = np.abs(vals[:, -1, n if self.side == RIGHT else n - 1]) \
                / np.maximum(np.abs(vals[:, -1, n - 1 if self.side == RIGHT
                                         else n]), 1e-300)
        self.last_report = {"probes": xs, "drift": drift, "gap_ratio": ratio,
                            "limits": vals[:, -1]}
        bad = (drift > 1e-6) & (ratio < 1e12)
        if np.any(bad):
            i = int(np.argmax(drift))
            raise NumericalError(
                f"bounded B-eigenvectors did not settle at lam={lams[i]:.6g} "
                f"(drift {drift[i]:.2e})")
        return sub[:, -1]

    def initial(self, lams, x_lo, x_hi):
        base = x_lo if self.side == LEFT else x_hi
        return base, self.limit_vectors(lams, base)


class NiessenBoundaryFrames(FrameFamily):
    """Frames satisfying lim U* J y = 0 at a limit-circle (or limit-m) end.

    U(x) = Phi(x; mu0, lam0) R is fixed once; the frame at the probe
    point eps spans the solutions lying at the end with U(eps)* J y(eps) = 0.
    """

    def __init__(self, sys, side, elements: NiessenElementSet, eps: float,
                 lying_dim: Optional[int] = None,
                 config: IntegratorConfig = DEFAULT_CONFIG):
        super().__init__(sys, config)
        _check_side(side)
        self.side = side
        self.elements = elements
        self.eps = float(eps)
        self.lying_dim = 2 * sys.n if lying_dim is None else lying_dim
        path = fundamental_matrix(sys, elements.mu0, elements.lam0,
                                  elements.c, [self.eps], config,
                                  check_symplectic=False)
        self.U_eps = path.phi[0, 0] @ elements.R

    def initial(self, lams, x_lo, x_hi):
        n = self.sys.n
        cond = np.conj(self.U_eps).T @ self.sys.J
        if self.lying_dim == 2 * n:
            frame = null_space(cond, n)
            return self.eps, np.broadcast_to(frame, (len(lams), 2 * n, n))
        frames = []
        lp = LimitPointFrames(self.sys, self.side, config=self.config)
        xs, quad, _ = b_matrix(self.sys, lams, self.eps,
                               lp.probes_from(self.eps), self.config,
                               overflow=1e100)
        _, vecs = hermitian_eigen(quad[:, -1], tol=1e-6)
        m = self.lying_dim
        for i in range(len(lams)):
            s = vecs[i][:, 2 * n - m:] if self.side == LEFT else vecs[i][:, :m]
            coef = null_space(cond @ s, n)
            frames.append(s @ coef)
        return self.eps, np.stack(frames)


def lying_frame(sys, lam, family: FrameFamily, x_lo, x_hi) -> FramePath:
    """Frame path of solutions lying at ``family``'s endpoint, one lambda."""
    return family.path([lam], x_lo, x_hi)


def stable_direction(matrix: np.ndarray, n: int, side: str) -> np.ndarray:
    """Decaying eigenvectors of a constant generator -J B (oracle helper).

    For a right end the frame is spanned by eigenvectors with negative real
    part; for a left end by those with positive real part.
    """
    vals, vecs = np.linalg.eig(matrix)
    order = np.argsort(vals.real)
    pick = order[:n] if side == RIGHT else order[-n:]
    return fix_phase(vecs[:, pick])
