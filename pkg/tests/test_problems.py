import numpy as np
import pytest

from maslovbox.errors import AssumptionError, ConfigError
from maslovbox.model import check_assumptions
from maslovbox.problems import (VARY_LEFT, VARY_RIGHT,
                                alpha_boundary_monotonicity, build_setup,
                                hydrogen_exact_eigenvalues, hydrogen_q1,
                                hydrogen_system, mhd_F, mhd_coefficients,
                                mhd_system, saint_venant_system,
                                synthetic_saint_venant, system_from_config)


def test_hydrogen_exact_values():
    assert hydrogen_exact_eigenvalues(4.0, 3) == [-2.0, -1.0, -2.0 / 3.0]
    with pytest.raises(ConfigError):
        hydrogen_exact_eigenvalues(0.0)


def test_hydrogen_q1_closed_form():
    x = np.array([0.0, 1.0, 5.0])
    e = np.exp(-x / 2)
    assert np.allclose(hydrogen_q1(x, 2.0), e / (1 - e / 2))
    assert np.all(hydrogen_q1(x, 0.0) == 0)


def test_hydrogen_blocks():
    sys = hydrogen_system(delta=1.0)
    x, lam = 2.0, -1.5
    b = sys.B(x, np.array([lam]))[0]
    q = hydrogen_q1(x, 1.0)
    assert b[0, 0].real == pytest.approx(lam * q - lam**2 + 4.0 / x)
    assert b[1, 1] == 1.0
    bl = sys.Blam(x, np.array([lam]))[0]
    assert bl[0, 0].real == pytest.approx(q - 2 * lam)


def test_hydrogen_parameter_checks():
    with pytest.raises(ConfigError):
        hydrogen_system(gamma=-1.0)
    with pytest.raises(ConfigError):
        hydrogen_system(delta=-0.5)


def test_mhd_band_rejected():
    sys = mhd_system()
    lo, hi = sys.params["band"]
    assert -1.005 < lo < hi
    with pytest.raises(AssumptionError):
        mhd_system(lambda_domain=(-1.1, 0.5 * (lo + hi)))


def test_mhd_coefficients_lambda_derivatives():
    h = 1e-6
    for x in (1e-4, 0.003, 0.009):
        P, V, V_lam, Q_lam = mhd_coefficients(None, x, -1.07)
        Pp, Vp, _, _ = mhd_coefficients(None, x, -1.07 + h)
        Pm, Vm, _, _ = mhd_coefficients(None, x, -1.07 - h)
        assert V_lam == pytest.approx((Vp - Vm) / (2 * h), rel=1e-6)
        dinvp = -(1 / Pp - 1 / Pm) / (2 * h)
        assert Q_lam == pytest.approx(dinvp, rel=1e-6)


def test_mhd_F_at_origin():
    assert mhd_F(None, 0.0) == pytest.approx(10.0 * (-0.9 + 1))


def test_mhd_rejects_m_zero():
    with pytest.raises(ConfigError):
        mhd_system({"m": 0})


def test_saint_venant_boundary_monotone():
    # alpha J alpha_lam* = -c2 > 0.
    sys = synthetic_saint_venant()
    assert alpha_boundary_monotonicity(sys, 0.7) == pytest.approx(1.0)


def test_saint_venant_checks():
    with pytest.raises(ConfigError):
        saint_venant_system(lambda x: 0.0, lambda x: -1.0, lambda x: -1.0,
                            0.0, 1.0, (0.1, 1.0))
    with pytest.raises(AssumptionError):
        saint_venant_system(lambda x: 0.0, lambda x: 0.5, lambda x: -1.0,
                            0.0, -1.0, (0.1, 1.0))
    rep = check_assumptions(synthetic_saint_venant())
    assert rep.all_checkable_pass, rep.failures()


def test_registry():
    assert build_setup("mhd").layout == VARY_RIGHT
    assert build_setup("saint-venant").layout == VARY_LEFT
    with pytest.raises(ConfigError):
        build_setup("mhd", spin=1)
    with pytest.raises(ConfigError):
        build_setup("nope")
    s = system_from_config({"class": "mhd", "interval": [0, 0.01],
                            "lambda_domain": [-1.1, -1.03]})
    assert s.sys.lambda_domain == (-1.1, -1.03)
    with pytest.raises(ConfigError):
        system_from_config({"class": "mhd", "n": 2})
    with pytest.raises(ConfigError):
        system_from_config({"class": "hydrogen", "interval": [0, 5]})
