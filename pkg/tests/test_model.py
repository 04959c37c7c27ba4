import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import degenerate_example, linear_example, quadratic_example
from maslovbox.errors import AssumptionError, ConfigError
from maslovbox.model import (REGULAR, SINGULAR, HamiltonianSystem,
                             build_linear_pencil, build_quadratic_schrodinger,
                             check_assumptions, residual_map_defect)
from maslovbox.problems import hydrogen_system, mhd_system


@pytest.mark.parametrize("build", [linear_example, quadratic_example,
                                   degenerate_example])
def test_class_builders_pass_checkable_assumptions(build):
    rep = check_assumptions(build())
    assert rep.all_checkable_pass, rep.failures()
    assert rep.entries["C"].status == "pass"


def test_indefinite_weight_rejected_with_witness():
    with pytest.raises(AssumptionError) as err:
        build_linear_pencil(lambda x: np.eye(2),
                            lambda x: np.diag([x - 1.0, 0.0]), (0.0, 2.0),
                            (-1.0, 1.0), REGULAR, REGULAR)
    assert err.value.witness is not None and err.value.witness < 1.0


def test_quadratic_weight_must_be_positive():
    with pytest.raises(AssumptionError) as err:
        build_quadratic_schrodinger(
            lambda x: np.array([[0.0]]), lambda x: np.array([[1.0]]),
            lambda x: np.array([[-1.0]]), (0.0, 1.0), (0.0, 1.0),
            REGULAR, REGULAR)
    assert err.value.witness is not None


def test_v22_inside_domain_rejected():
    with pytest.raises(AssumptionError) as err:
        degenerate_example(v22=0.5)
    x, nu = err.value.witness
    assert nu == pytest.approx(0.5)


def test_domain_touching_zero_rejected():
    with pytest.raises(AssumptionError) as err:
        hydrogen_system(lambda_domain=(-3.0, 0.0))
    assert err.value.witness == 0.0


def test_system_validation():
    ok = lambda x, lam: np.zeros(np.shape(lam) + (2, 2))
    with pytest.raises(ConfigError):
        HamiltonianSystem(1, (1.0, 0.0), ok, ok, (0.0, 1.0))
    with pytest.raises(ConfigError):
        HamiltonianSystem(1, (0.0, np.inf), ok, ok, (0.0, 1.0),
                          right_kind=REGULAR)
    with pytest.raises(ConfigError):
        HamiltonianSystem(1, (0.0, 1.0), ok, ok, (1.0, 1.0))
    sys = HamiltonianSystem(1, (0.0, 1.0), ok, ok, (0.0, 1.0))
    with pytest.raises(ConfigError):
        sys.alpha(0.0)
    assert sys.left_kind == SINGULAR


@given(st.floats(-1.0, 2.0), st.floats(-1.0, 2.0), st.floats(0.05, 2.9))
def test_degenerate_residual_map(lam, lam_star, x):
    assert residual_map_defect(degenerate_example(), x, lam, lam_star) < 1e-12


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.01, 3.9))
def test_quadratic_residual_map(lam, lam_star, x):
    assert residual_map_defect(quadratic_example(), x, lam, lam_star) < 1e-12


@given(st.floats(-1.1, -1.03), st.floats(-1.1, -1.03),
       st.floats(1e-6, 0.00999))
def test_mhd_residual_map(lam, lam_star, x):
    assert residual_map_defect(mhd_system(), x, lam, lam_star) < 1e-12


def test_report_shape():
    rep = check_assumptions(linear_example())
    d = rep.as_dict()
    assert set(d) == {"A", "A'", "B", "C", "D", "E", "F"}
    assert d["A'"]["status"] == "pass"


def test_grid_outside_interval_rejected():
    with pytest.raises(ConfigError):
        check_assumptions(linear_example(), x_grid=[0.0, 1.0])


def test_unknown_class_marks_c_not_checkable():
    import dataclasses
    sys = dataclasses.replace(linear_example(), kind="generic")
    rep = check_assumptions(sys)
    assert rep.entries["C"].status == "not-checkable"
