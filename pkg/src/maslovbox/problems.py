"""Concrete systems: a quadratic hydrogen family, a Hain-Lust MHD model and
a Saint-Venant type system with a lambda-dependent boundary condition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .endpoints import (LEFT, RIGHT, FrameFamily, LimitPointFrames,
                        NiessenBoundaryFrames, RegularFrames,
                        classify_endpoint, default_probes,
                        niessen_eigen_probe, niessen_elements, physical_beta)
from .errors import AssumptionError, ConfigError, NumericalError
from .model import (REGULAR, SINGULAR, HamiltonianSystem, _diag_blocks,
                    build_quadratic_schrodinger)
from .propagator import IntegratorConfig

VARY_LEFT, VARY_RIGHT = "vary-left", "vary-right"


@dataclass
class ProblemSetup:
    """A system together with its default frames, window and grids.

    ``layout`` says which frame carries the spectral parameter inside the
    box: ``vary-left`` uses W~(L(x; lam), R(x; lam2)) and ``vary-right``
    uses W~(L(x; lam1), R(x; lam)).
    """

    sys: HamiltonianSystem
    left: FrameFamily
    right: FrameFamily
    window: tuple
    x_step: float
    lambda_step: float
    config: IntegratorConfig
    layout: str
    classify_defaults: dict = field(default_factory=dict)
    left_correction: Optional[FrameFamily] = None
    notes: dict = field(default_factory=dict)


# ---------------------------------------------------------------- hydrogen

HYDROGEN_CONFIG = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)


def hydrogen_q1(x, delta):
    e = np.exp(-0.5 * np.asarray(x, dtype=float))
    return 0.5 * delta * e / (1 - 0.5 * e)


def hydrogen_system(gamma: float = 4.0, delta: float = 0.0,
                    lambda_domain=(-3.0, -7.0 / 12.0)) -> HamiltonianSystem:
    """psi'' = (lam^2 - gamma/x - lam Q1(x; delta)) psi on (0, inf).

    B = diag(lam Q1 - lam^2 + gamma/x, 1) and B_lam = diag(Q1 - 2 lam, 0).
    """
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    if delta < 0:
        raise ConfigError(f"delta must be non-negative, got {delta}")
    if not lambda_domain[1] < 0:
        raise AssumptionError(
            "the lambda domain must stay left of 0 for B_lam to be positive",
            witness=float(lambda_domain[1]))
    return build_quadratic_schrodinger(
        V_eval=lambda x: -gamma / x,
        Q1_eval=lambda x: hydrogen_q1(x, delta),
        Q2_eval=lambda x: -1.0,
        interval=(0.0, np.inf), lambda_domain=tuple(lambda_domain),
        name=f"hydrogen(gamma={gamma:g}, delta={delta:g})",
        params={"gamma": gamma, "delta": delta})


def hydrogen_exact_eigenvalues(gamma: float = 4.0, count: int = 4):
    """Values -gamma / (2 k), k = 1..count, for delta = 0."""
    if not gamma > 0:
        raise ConfigError("gamma must be positive")
    return [-gamma / (2 * k) for k in range(1, count + 1)]


def hydrogen_setup(gamma=4.0, delta=0.0, lambda_domain=(-3.0, -7.0 / 12.0),
                   mu0=1j, lam0=-1.0, c=1.0, eps=1e-10, horizon=10.0,
                   beta=None, config: IntegratorConfig = HYDROGEN_CONFIG
                   ) -> ProblemSetup:
    """Hydrogen family with the boundary condition psi -> 0 at x = 0.

    The left condition comes from a Niessen element at (mu0, lam0) whose
    beta is chosen so that the element pairs trivially with (0, 1) at eps.
    The right frame is the decaying solution at infinity.
    """
    sys = hydrogen_system(gamma, delta, lambda_domain)
    probes = default_probes(sys, c, LEFT, count=5)
    probes[-1] = eps
    probe = niessen_eigen_probe(sys, mu0, lam0, c, probes, LEFT, config)
    cl = classify_endpoint(probe)
    if beta is None:
        beta = physical_beta(probe, (0.0, 1.0), lam_ref=lambda_domain[0],
                             classification=cl).beta
    elements = niessen_elements(probe, cl, betas={0: beta})
    left = NiessenBoundaryFrames(sys, LEFT, elements, eps, lying_dim=cl.m,
                                 config=config)
    right = LimitPointFrames(sys, RIGHT, config=config)
    return ProblemSetup(
        sys=sys, left=left, right=right, window=(eps, horizon),
        x_step=1e-3, lambda_step=5e-3, config=config, layout=VARY_LEFT,
        classify_defaults={"mu0": mu0, "lam0": lam0, "c": c, "eps": eps,
                           "xmax": horizon},
        notes={"beta": beta, "left_limits": cl.limits.tolist(),
               "match_x": 1.0})


# --------------------------------------------------------------------- MHD

MHD_DEFAULTS = {"b": 0.01, "m": -1, "k": 1, "B0": 10.0, "kappa": 0.9,
                "rho0": 1.0, "mu0": 1.0}
MHD_CONFIG = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-16)


def _mhd_fields(p, x):
    m, k, b0, kap = p["m"], p["k"], p["B0"], p["kappa"]
    d = 1 + kap**2 * x**2
    dd = 2 * kap**2 * x
    bt = b0 * kap * x / d
    btp = b0 * kap * (1 - kap**2 * x**2) / d**2
    bz = b0 / d
    bzp = -b0 * dd / d**2
    f = m * bt / x + k * bz
    g = m * bz / x - k * bt
    gp = m * (bzp / x - bz / x**2) - k * btp
    h = m * m + k * k * x * x
    t1p = -2 * b0**2 * kap**2 * dd / d**3
    t2p = 2 * k * ((btp * g + bt * gp) * h - bt * g * 2 * k * k * x) / h**2
    return {"Bt": bt, "Bz": bz, "F": f, "G": g, "h": h, "t1p": t1p,
            "t2p": t2p}


def mhd_F(params, x):
    p = dict(MHD_DEFAULTS, **(params or {}))
    x = np.asarray(x, dtype=float)
    d = 1 + p["kappa"] ** 2 * x**2
    return p["B0"] * (p["m"] * p["kappa"] + p["k"]) / d


def mhd_coefficients(params, x, lam, tol: float = 1e-12):
    """Return P, V and their lambda derivatives at (x, lam).

    P = (mu rho lam + F^2) x / (m^2 + k^2 x^2) and V includes the
    derivative terms (B_theta^2 / x^2)' and (2 k B_theta G / h)' in closed
    form.
    """
    p = dict(MHD_DEFAULTS, **(params or {}))
    lam = np.asarray(lam, dtype=float)
    x = float(x)
    fld = _mhd_fields(p, x)
    mr = p["mu0"] * p["rho0"]
    a = mr * lam + fld["F"] ** 2
    if np.any(np.abs(a) <= tol):
        raise NumericalError(
            f"mu0 rho0 lam + F(x)^2 vanishes at x={x:.6g}: essential "
            f"spectrum collision")
    k2bf = 4 * p["k"] ** 2 * fld["Bt"] ** 2 * fld["F"] ** 2
    P = a * x / fld["h"]
    V = a / x + fld["t1p"] - k2bf / (x * fld["h"] * a) + fld["t2p"]
    V_lam = mr / x + k2bf * mr / (x * fld["h"] * a**2)
    Q_lam = mr * fld["h"] / (x * a**2)
    return P, V, V_lam, Q_lam


def mhd_system(params=None, lambda_domain=(-1.1, -1.005)) -> HamiltonianSystem:
    """Hain-Lust equation as J y' = diag(V, -1/P) y on (0, b]."""
    p = dict(MHD_DEFAULTS, **(params or {}))
    if p["m"] == 0:
        raise ConfigError("m = 0 modes are not supported")
    if not p["b"] > 0:
        raise ConfigError("the radius b must be positive")
    xs = np.linspace(0.0, p["b"], 2001)
    f2 = mhd_F(p, xs) ** 2 / (p["mu0"] * p["rho0"])
    band = (-float(f2.max()), -float(f2.min()))
    l1, l2 = lambda_domain
    if not (l2 < band[0] or l1 > band[1]):
        raise AssumptionError(
            f"lambda domain [{l1}, {l2}] meets the essential-spectrum band "
            f"[{band[0]:.6g}, {band[1]:.6g}]", witness=band)
    mr = p["mu0"] * p["rho0"]

    def B_eval(x, lam):
        P, V, _, _ = mhd_coefficients(p, x, lam)
        out = np.zeros(np.shape(lam) + (2, 2), dtype=complex)
        out[..., 0, 0] = V
        out[..., 1, 1] = -1.0 / P
        return out

    def Blam_eval(x, lam):
        _, _, vl, ql = mhd_coefficients(p, x, lam)
        out = np.zeros(np.shape(lam) + (2, 2), dtype=complex)
        out[..., 0, 0] = vl
        out[..., 1, 1] = ql
        return out

    def E_eval(x, lam, lam_star):
        fld = _mhd_fields(p, x)
        a, a_s = mr * lam + fld["F"] ** 2, mr * lam_star + fld["F"] ** 2
        s = 4 * p["k"] ** 2 * fld["Bt"] ** 2 * fld["F"] ** 2 / fld["h"]
        e11 = (lam - lam_star) * (1 + s / (a * a_s)) / (1 + s / a_s**2)
        e22 = (lam - lam_star) * a_s / a
        return np.diag([e11, e22]).astype(complex)

    return HamiltonianSystem(
        n=1, interval=(0.0, p["b"]), B_eval=B_eval, Blam_eval=Blam_eval,
        lambda_domain=tuple(lambda_domain), left_kind=SINGULAR,
        right_kind=REGULAR, alpha_eval=lambda lam: np.array([[1.0, 0.0]]),
        E_eval=E_eval, kind="mhd", params=dict(p, band=band),
        name="hain-lust")


def mhd_frobenius_exponent(params, lam, mu=0.0):
    """Leading exponent r(mu; lam) of the regular solution near x = 0."""
    p = dict(MHD_DEFAULTS, **(params or {}))
    mr = p["mu0"] * p["rho0"]
    f0 = p["B0"] * (p["m"] * p["kappa"] + p["k"])
    mu = complex(mu)
    if abs(mu) * mr >= abs(mr * lam + f0**2):
        raise ConfigError("|mu| too large for an unambiguous branch")
    a = mr * lam + f0**2
    num = (mr * (lam + mu) + f0**2) * (mr * (lam - mu) + f0**2)
    # Branch continuous in mu with r(0; lam) = |m|.
    r = np.sqrt(num / a**2 + 0j) * abs(p["m"])
    return r.real if abs(r.imag) < 1e-15 else r


def mhd_setup(params=None, lambda_domain=(-1.1, -1.005), c1=1e-8,
              config: IntegratorConfig = MHD_CONFIG) -> ProblemSetup:
    """MHD with Dirichlet data at x = b and the limit-point end at 0."""
    sys = mhd_system(params, lambda_domain)
    left = LimitPointFrames(sys, LEFT, config=config)
    right = RegularFrames(sys, RIGHT, config=config)
    return ProblemSetup(
        sys=sys, left=left, right=right, window=(c1, sys.params["b"]),
        x_step=1e-6, lambda_step=1e-4, config=config, layout=VARY_RIGHT,
        classify_defaults={"mu0": 0.01j, "lam0": -1.1, "c": 0.005,
                           "eps": 1e-10, "xmax": sys.params["b"]},
        notes={"match_x": sys.params["b"] / 2})


# ----------------------------------------------------------- Saint-Venant

def saint_venant_system(v_eval, q1_eval, q2_eval, c1: float, c2: float,
                        lambda_domain, x_samples=None, delta_tol=0.0
                        ) -> HamiltonianSystem:
    """Reflected system on [0, inf) with alpha(lam) = (c1 + c2 lam, -1).

    B = diag(-v(-x) - q1(-x) lam - q2(-x) lam^2, -1); the coefficient
    evaluators are supplied by the caller on (-inf, 0].
    """
    if not c2 < 0:
        raise ConfigError(f"c2 must be negative, got {c2}")
    l1, l2 = lambda_domain
    if l1 < 0:
        raise ConfigError("the lambda domain must lie in [0, inf)")
    xs = np.logspace(-8, 2, 200) if x_samples is None else np.asarray(x_samples)
    worst = min(min(-float(q1_eval(-x)), -float(q2_eval(-x))) for x in xs)
    if not worst > delta_tol:
        raise AssumptionError(
            f"q1, q2 must stay below a negative constant (margin {worst:.3e})",
            witness=worst)

    def B_eval(x, lam):
        top = (-v_eval(-x) - q1_eval(-x) * lam - q2_eval(-x) * lam**2)
        out = np.zeros(np.shape(lam) + (2, 2), dtype=complex)
        out[..., 0, 0] = top
        out[..., 1, 1] = -1.0
        return out

    def Blam_eval(x, lam):
        out = np.zeros(np.shape(lam) + (2, 2), dtype=complex)
        out[..., 0, 0] = -q1_eval(-x) - 2 * q2_eval(-x) * lam
        return out

    def E_eval(x, lam, lam_star):
        q1, q2 = q1_eval(-x), q2_eval(-x)
        e11 = (lam - lam_star) * (q1 + (lam + lam_star) * q2) / (
            q1 + 2 * lam_star * q2)
        return np.diag([e11, 0.0]).astype(complex)

    return HamiltonianSystem(
        n=1, interval=(0.0, np.inf), B_eval=B_eval, Blam_eval=Blam_eval,
        lambda_domain=tuple(lambda_domain), left_kind=REGULAR,
        right_kind=SINGULAR,
        alpha_eval=lambda lam: np.array([[c1 + c2 * lam, -1.0]]),
        alpha_lam_eval=lambda lam: np.array([[c2, 0.0]]),
        E_eval=E_eval, kind="saint-venant",
        params={"c1": c1, "c2": c2, "margin": worst}, name="saint-venant")


def synthetic_saint_venant(lambda_domain=(0.1, 2.0), c1: float = 0.0
                           ) -> HamiltonianSystem:
    """Non-physical constant coefficients for exercising the machinery.

    psi'' = (lam + lam^2) psi with psi'(0) = -(c1 - lam) psi(0); for c1 > 0
    the single eigenvalue is c1^2 / (2 c1 + 1).
    """
    return saint_venant_system(lambda x: 0.0, lambda x: -1.0,
                               lambda x: -1.0, c1, -1.0, lambda_domain)


def saint_venant_setup(sys: HamiltonianSystem, horizon: float = 20.0,
                       config: IntegratorConfig = IntegratorConfig()
                       ) -> ProblemSetup:
    left = RegularFrames(sys, LEFT, config=config)
    right = LimitPointFrames(sys, RIGHT, config=config)
    return ProblemSetup(
        sys=sys, left=left, right=right, window=(0.0, horizon),
        x_step=1e-2, lambda_step=1e-2, config=config, layout=VARY_LEFT,
        left_correction=left, notes={"match_x": 1.0})


def alpha_boundary_monotonicity(sys: HamiltonianSystem, lam: float) -> float:
    """Value of alpha J d(alpha)/d(lam)* (scalar for n = 1)."""
    if sys.alpha_lam_eval is None:
        raise ConfigError("system has no lambda-dependent alpha")
    a = sys.alpha(lam)
    da = np.atleast_2d(np.asarray(sys.alpha_lam_eval(lam), dtype=complex))
    val = a @ sys.J @ np.conj(da).T
    return float(val.real.squeeze()) if val.size == 1 else val


# -------------------------------------------------------------- registry

def build_setup(name: str, **params) -> ProblemSetup:
    """Setup for a built-in problem name with parameter overrides."""
    if name == "hydrogen":
        keys = {"gamma", "delta", "lambda_domain", "mu0", "lam0", "c", "eps",
                "horizon", "beta"}
        bad = set(params) - keys
        if bad:
            raise ConfigError(f"unknown hydrogen parameters {sorted(bad)}")
        return hydrogen_setup(**params)
    if name == "mhd":
        ld = params.pop("lambda_domain", (-1.1, -1.005))
        c1 = params.pop("c1", 1e-8)
        bad = set(params) - set(MHD_DEFAULTS)
        if bad:
            raise ConfigError(f"unknown MHD parameters {sorted(bad)}")
        return mhd_setup(params, ld, c1)
    if name == "saint-venant":
        ld = params.pop("lambda_domain", (0.1, 2.0))
        if params:
            raise ConfigError("Saint-Venant coefficients must be supplied "
                              "from code; only the synthetic set is built in")
        return saint_venant_setup(synthetic_saint_venant(ld))
    raise ConfigError(f"unknown problem {name!r}")


def system_from_config(cfg: dict) -> ProblemSetup:
    """Build a setup from a JSON-style mapping (keys: class, n, interval,
    lambda_domain and class parameters)."""
    cls = cfg.get("class")
    dom = cfg.get("lambda_domain")
    interval = cfg.get("interval")
    if interval is not None:
        interval = tuple(float(v) for v in interval)
    if cfg.get("n", 1) != 1:
        raise ConfigError("built-in classes have n = 1")
    if cls in ("hydrogen", "quadratic-hydrogen"):
        kw = {k: cfg[k] for k in ("gamma", "delta") if k in cfg}
        if dom is not None:
            kw["lambda_domain"] = tuple(float(v) for v in dom)
        if interval is not None and (interval[0] != 0 or
                                     np.isfinite(interval[1])):
            raise ConfigError("hydrogen lives on (0, inf)")
        return hydrogen_setup(**kw)
    if cls == "mhd":
        p = {k: cfg[k] for k in MHD_DEFAULTS if k in cfg}
        if interval is not None:
            if interval[0] != 0:
                raise ConfigError("MHD interval must start at 0")
            p["b"] = interval[1]
        ld = tuple(float(v) for v in dom) if dom is not None \
            else (-1.1, -1.005)
        return mhd_setup(p, ld)
    raise ConfigError(f"unsupported class {cls!r}")
