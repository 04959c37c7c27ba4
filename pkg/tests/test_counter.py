import numpy as np
import pytest

from helpers import laplacian_setup
from maslovbox.counter import (CountRequest, count_eigenvalues,
                               count_via_nullity_sum, curves_cross,
                               endpoint_nonintersection_check, lambda_grid,
                               lambda_directions, maslov_box,
                               principal_directions, trace_spectral_curves,
                               triangle_decomposition_check, x_grid)
from maslovbox.errors import ConfigError
from maslovbox.problems import (hydrogen_setup, saint_venant_setup,
                                synthetic_saint_venant)

# Zeros of sqrt(l1) cos(sqrt(l1) x) sin(sqrt(l2)(pi - x))
#        + sqrt(l2) sin(sqrt(l1) x) cos(sqrt(l2)(pi - x))
# for l1 = 1/2, l2 = 30, from mpmath at 30 digits.
LAPLACE_ROOTS = [0.498943276940018, 1.11064145641835, 1.69853061631558,
                 2.28224609712469, 2.86635161904359]


@pytest.fixture(scope="module")
def laplace():
    s = laplacian_setup()
    req = CountRequest(s, 0.5, 30.0)
    return s, req, count_eigenvalues(req, nullity=True), maslov_box(req)


def test_laplacian_count(laplace):
    s, req, res, _ = laplace
    assert res.N == 5 == res.nullity_sum
    assert res.equality["ok"]
    got = [c.t for c in res.principal.crossings]
    assert np.allclose(got, LAPLACE_ROOTS, atol=1e-8)


def test_laplacian_directions(laplace):
    s, req, res, box = laplace
    assert principal_directions(res.principal, s, 0.5, 30.0) == [1] * 5
    assert lambda_directions(box.top, s) == [-1] * 5


def test_laplacian_box(laplace):
    _, _, _, box = laplace
    idx = {k: getattr(box, k).index for k in ("bottom", "right", "top",
                                              "left")}
    assert idx == {"bottom": 0, "right": 0, "top": -5, "left": 5}
    assert box.closure == 0 and box.count == 5
    # Eigenvalues k^2 appear on the count shelf.
    lams = [c.t for c in box.top.crossings]
    assert np.allclose(lams, [1, 4, 9, 16, 25], atol=1e-4)


def test_laplacian_triangle():
    s = laplacian_setup()
    tri = triangle_decomposition_check(s, 1.3, 0.5, 30.0)
    assert tri["holds"]
    assert tri["diagonal"] == tri["vary_right_leg"] + tri["vary_left_leg"]


def test_laplacian_curves():
    s = laplacian_setup(lambda_domain=(0.5, 12.0))
    cs = trace_spectral_curves(CountRequest(s, 0.5, 12.0, lambda_step=0.05,
                                            x_step=5e-3))
    assert len(cs.curves) == 3 and not cs.fragmented
    assert np.allclose(sorted(i["lambda"] for i in cs.intercepts), [1, 4, 9],
                       atol=1e-3)
    assert not curves_cross(cs, 0, 1)
    rows = list(cs.csv_rows())
    assert {r[0] for r in rows} == {0, 1, 2}


def test_gap_interval_counts_zero():
    # -gamma / (2 k) has no value in [-0.9, -0.7] for gamma = 4.
    s = hydrogen_setup(lambda_domain=(-0.9, -0.7))
    res = count_eigenvalues(CountRequest(s, -0.9, -0.7, stabilize=False),
                            nullity=True)
    assert res.N == 0 and res.nullity_sum == 0


# Eigenvalues for gamma = 4, delta = 1 from an independent shooting code
# (DOP853 at rtol 1e-12 from x = 1e-8, decay condition at x = 25).
HYDROGEN_DELTA1 = [-1.744516, -0.924483, -0.644306]


def test_hydrogen_delta1_intercepts_converge():
    s = hydrogen_setup(delta=1.0, horizon=20.0)
    cs = trace_spectral_curves(CountRequest(s, -3.0, -7 / 12,
                                            lambda_step=0.01, x_step=2e-3))
    got = sorted(i["lambda"] for i in cs.intercepts)
    assert np.allclose(got, HYDROGEN_DELTA1, atol=2e-5)


def test_hydrogen_nonintersection_margin():
    s = hydrogen_setup()
    chk = endpoint_nonintersection_check(
        CountRequest(s, -3.0, -7 / 12, stabilize=False), c=1e-10,
        lams=np.linspace(-3.0, -7 / 12, 40))
    assert chk["ok"] and chk["margin"] > 1e-3


def test_saint_venant_boundary_eigenvalue():
    # psi'' = (lam + lam^2) psi, psi'(0) = -(3 - lam) psi(0): lam = 9/7.
    s = saint_venant_setup(synthetic_saint_venant(c1=3.0))
    req = CountRequest(s, 0.1, 2.0, stabilize=False)
    res = count_eigenvalues(req)
    box = maslov_box(req)
    assert res.N == 1 and box.count == 1
    assert box.bottom.index == -1 and box.top.index == -1
    assert box.top.crossings[0].t == pytest.approx(9 / 7, abs=1e-4)
    # The correction shelf pairs L(0; lam) with R(0; 2) = (1, sqrt(6)).
    assert box.bottom.crossings[0].t == pytest.approx(3 - np.sqrt(6),
                                                      abs=1e-4)


def test_request_validation():
    s = laplacian_setup()
    with pytest.raises(ConfigError):
        CountRequest(s, 2.0, 1.0)
    with pytest.raises(ConfigError):
        CountRequest(s, 0.1, 2.0)
    with pytest.raises(ConfigError):
        CountRequest(s, 1.0, 2.0, x_step=-1.0)
    with pytest.raises(ConfigError):
        CountRequest(s, 1.0, 2.0, window=(1.0, 1.0))


def test_grids():
    g = x_grid(0.0, 1.0, 0.1)
    assert g[0] == 0.0 and g[-1] == 1.0 and np.all(np.diff(g) > 0)
    tiny = x_grid(1e-10, 1.0, 0.1)
    assert tiny.min() == 1e-10 and np.sum(tiny < 1e-3) >= 3
    lg = lambda_grid(-1.0, 1.0, 0.3)
    assert lg[0] == -1.0 and lg[-1] == 1.0


def test_nullity_route_is_independent(laplace):
    s, req, res, _ = laplace
    assert count_via_nullity_sum(req) == 5
