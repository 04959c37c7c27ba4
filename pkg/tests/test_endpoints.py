import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maslovbox.endpoints import (LEFT, LIMIT_CIRCLE, LIMIT_POINT, RIGHT,
                                 LimitPointFrames, a_matrix_values,
                                 boundary_form, classify_endpoint,
                                 default_probes, niessen_eigen_probe,
                                 niessen_elements, pair_value, physical_beta,
                                 stable_direction)
from maslovbox.errors import ConfigError, NumericalError
from maslovbox.linalg import projection_distance, symplectic_j
from maslovbox.problems import (HYDROGEN_CONFIG, MHD_CONFIG, hydrogen_setup,
                                hydrogen_system, mhd_frobenius_exponent,
                                mhd_system, synthetic_saint_venant)


@pytest.fixture(scope="module")
def hydrogen_left_probe():
    sys = hydrogen_system()
    probes = default_probes(sys, 1.0, LEFT, count=6)
    probes[-1] = 1e-10
    return niessen_eigen_probe(sys, 1j, -1.0, 1.0, probes, LEFT,
                               HYDROGEN_CONFIG)


def test_hydrogen_left_is_limit_circle(hydrogen_left_probe):
    cl = classify_endpoint(hydrogen_left_probe)
    assert cl.m == 2 and cl.case == LIMIT_CIRCLE and cl.r == 1
    assert cl.confidence == "high"


def test_hydrogen_right_is_limit_point():
    sys = hydrogen_system()
    pr = niessen_eigen_probe(sys, 1j, -1.0, 1.0, np.linspace(2.5, 10, 6),
                             RIGHT, HYDROGEN_CONFIG)
    cl = classify_endpoint(pr)
    assert cl.m == 1 and cl.case == LIMIT_POINT
    assert cl.divergent == [1]


def test_mhd_left_is_limit_point():
    sys = mhd_system()
    pr = niessen_eigen_probe(sys, 0.01j, -1.1, 0.005,
                             default_probes(sys, 0.005, LEFT, 6), LEFT,
                             MHD_CONFIG)
    assert classify_endpoint(pr).case == LIMIT_POINT


@given(st.floats(0.3, 3.0), st.floats(0.2, 2.0), st.floats(-2.9, -0.7))
def test_a_eigenvalue_pairing(x, im_mu, lam):
    # Real coefficients: nu_1 nu_2 = -1 / (2 Im mu)^2 for n = 1.  The small
    # eigenvalue carries an absolute roundoff of order eps |A|.
    sys = hydrogen_system()
    a, _ = a_matrix_values(sys, 1j * im_mu, lam, 1.0, [x], HYDROGEN_CONFIG)
    nu = np.linalg.eigvalsh(a[0])
    floor = 100 * np.finfo(float).eps * np.abs(nu).max()
    assert abs(pair_value(nu[1], 1j * im_mu) - nu[0]) <= \
        1e-8 * abs(nu[0]) + floor


def test_real_mu_rejected():
    with pytest.raises(ConfigError):
        a_matrix_values(hydrogen_system(), 0.5, -1.0, 1.0, [2.0])


def test_probe_side_checked():
    with pytest.raises(ConfigError):
        niessen_eigen_probe(hydrogen_system(), 1j, -1.0, 1.0, [2.0, 3.0],
                            LEFT)
    with pytest.raises(ConfigError):
        default_probes(hydrogen_system(), 1.0, "middle")


def test_too_few_probes(hydrogen_left_probe):
    short = niessen_eigen_probe(hydrogen_system(), 1j, -1.0, 1.0,
                                [0.5, 0.1, 0.01], LEFT, HYDROGEN_CONFIG)
    with pytest.raises(NumericalError):
        classify_endpoint(short)


def test_elements_satisfy_boundary_form(hydrogen_left_probe):
    # Elements built from one beta on the admissible circle have vanishing
    # mutual boundary form at the end (they are Lagrangian together).
    cl = classify_endpoint(hydrogen_left_probe)
    els = niessen_elements(hydrogen_left_probe, cl, beta_phase={0: 0.7})
    beta = els.betas[0]
    assert abs(abs(beta) - np.sqrt(-cl.limits[0] / cl.limits[1])) < 1e-12
    u = els.elements_at(hydrogen_left_probe.phi)
    lim, err = boundary_form(u, u[:, :, 0])
    assert abs(lim[0]) < 1e-6


def test_physical_beta_targets_dirichlet(hydrogen_left_probe):
    cl = classify_endpoint(hydrogen_left_probe)
    pb = physical_beta(hydrogen_left_probe, (0.0, 1.0), classification=cl)
    assert pb.residual < 1e-10
    assert pb.warning is None


def test_hydrogen_frames_match_ground_state():
    # psi = x exp(-2x) solves the delta = 0 problem at lam = -2, so both the
    # left boundary frame and the decaying frame span (psi, psi') there.
    s = hydrogen_setup()
    x = 3.0
    exact = np.array([[x], [1 - 2 * x]])
    left = s.left.path([-2.0], 1e-10, x).at(x)[0]
    right = s.right.path([-2.0], x, 10.0).at(x)[0]
    assert projection_distance(left, exact) < 1e-6
    assert projection_distance(right, exact) < 1e-6


def test_limit_point_frame_constant_coefficients():
    # psi'' = (lam + lam^2) psi decays as exp(-kappa x); y = (psi, kappa psi).
    sys = synthetic_saint_venant()
    lam = 0.7
    kappa = np.sqrt(lam + lam * lam)
    lp = LimitPointFrames(sys, RIGHT)
    v = lp.limit_vectors([lam], 5.0)[0]
    exact = np.array([[1.0], [kappa]])
    assert projection_distance(v, exact) < 1e-8
    gen = -symplectic_j(1) @ sys.B(0.0, lam)
    assert projection_distance(stable_direction(gen, 1, RIGHT), exact) < 1e-12


def test_frobenius_exponent():
    assert mhd_frobenius_exponent(None, -1.05) == pytest.approx(1.0)
    r = mhd_frobenius_exponent(None, -1.05, 0.01j)
    rc = mhd_frobenius_exponent(None, -1.05, -0.01j)
    assert np.isclose(r, np.conj(rc))
    with pytest.raises(ConfigError):
        mhd_frobenius_exponent(None, -1.05, 1e6)
