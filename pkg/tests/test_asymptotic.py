import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noncoercive.asymptotic import (
    ALL_FINITE,
    EXACT,
    FOUND_INFINITE,
    UPPER_BOUND,
    LiminfSchedule,
    SublevelClassifier,
    boundedness_diagnostic,
    classic_asymptotic,
    default_lambda_grid,
    inf_identity_check,
    sigma_g_sequential,
    sigma_g_sublevel,
)
from noncoercive.core import FunctionModel, QUASI_CONVEX, LSC, unit_directions
from noncoercive.errors import InvalidParameterError, MissingAnnotationError
from noncoercive.models import (
    arctan_norm,
    constant,
    euclidean_norm,
    identity_suite,
    lattice_indicator,
    linear,
    max_affine,
    radial_profile,
)


def test_constant_function_values():
    f = constant(2, 0.7)
    u = [0.6, 0.8]
    assert float(sigma_g_sequential(f, u).value) == 0.7
    assert abs(float(sigma_g_sublevel(f, u).value) - 0.7) <= 0.01
    assert float(classic_asymptotic(f, u).value) == 0.0


def test_norm_diverges_but_grows_linearly():
    f = euclidean_norm(2)
    e = sigma_g_sequential(f, [1.0, 0.0])
    assert e.value.is_pos_inf and e.trend == "diverging_up"
    assert abs(float(classic_asymptotic(f, [0.0, 1.0]).value) - 1.0) <= 1e-6


def test_arctan_norm_limit():
    f = arctan_norm(2)
    for u in unit_directions(2, 8):
        assert abs(float(sigma_g_sequential(f, u).value) - math.pi / 2) <= 1e-2
        assert float(classic_asymptotic(f, u).value) <= 1e-6


def test_linear_function_signs():
    f = linear([1.0, -2.0])
    assert sigma_g_sequential(f, [1.0, 0.0]).value.is_pos_inf
    assert sigma_g_sequential(f, [0.0, 1.0]).value.is_neg_inf
    assert abs(float(classic_asymptotic(f, [1.0, 0.0]).value) - 1.0) <= 1e-6


def test_sublevel_route_needs_flags():
    with pytest.raises(MissingAnnotationError) as exc:
        sigma_g_sublevel(lattice_indicator(1), [1.0])
    assert exc.value.code == "E022"
    with pytest.raises(MissingAnnotationError):
        boundedness_diagnostic(lattice_indicator(1), [[1.0]])


def test_sublevel_confidence_depends_on_description():
    exact = max_affine([[1.0, 0.0]], [0.0], -1.0)
    assert sigma_g_sublevel(exact, [1.0, 0.0]).confidence == EXACT
    rays = FunctionModel(2, lambda X: np.arctan(np.linalg.norm(X, axis=1)),
                         flags={QUASI_CONVEX, LSC})
    est = sigma_g_sublevel(rays, [1.0, 0.0])
    assert est.confidence == UPPER_BOUND
    assert abs(float(est.value) - math.pi / 2) <= 0.02


def test_schedule_validation():
    with pytest.raises(InvalidParameterError):
        LiminfSchedule(t_sequence=(1.0, 2.0))
    with pytest.raises(InvalidParameterError):
        LiminfSchedule(t_sequence=(1.0, 2.0, 4.0), perturbations=(0.1, 0.2, 0.3))
    with pytest.raises(InvalidParameterError):
        LiminfSchedule(burn_in=20)
    s = LiminfSchedule()
    assert s.burn_in == len(s.t_sequence) // 2
    P = s.probe_points(np.array([1.0, 0.0]))
    assert P.shape == (s.probes_per_step + 1, len(s.t_sequence), 2)
    # every probe stays within distance 1 of the ray
    ts = np.asarray(s.t_sequence)[None, :]
    assert np.all(np.linalg.norm(P - ts[..., None] * np.array([1.0, 0.0]), axis=-1) <= 1.0 + 1e-12)


def test_lambda_grid_contains_sampled_minimum():
    f = radial_profile(2, "arctan", 1.3, 0.7, -0.123)
    assert -0.123 in default_lambda_grid(f)


SUITE = identity_suite(12, seed=5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, len(SUITE) - 1), st.floats(0.0, 2 * np.pi), st.floats(1e-3, 1e3))
def test_sublevel_route_is_degree_zero_homogeneous(i, theta, s):
    f = SUITE[i]
    u = np.array([np.cos(theta), np.sin(theta)])
    clf = SublevelClassifier(f)
    a = float(sigma_g_sublevel(f, u, classifier=clf).value)
    b = float(sigma_g_sublevel(f, s * u, classifier=clf).value)
    assert a == b


@settings(max_examples=20, deadline=None)
@given(st.integers(0, len(SUITE) - 1))
def test_inf_identity_on_suite(i):
    rep = inf_identity_check(SUITE[i])
    assert abs(rep.grid_inf - rep.sigma_g_at_zero) <= 1e-6
    assert rep.min_over_directions <= rep.sigma_g_at_zero


@settings(max_examples=20, deadline=None)
@given(st.integers(0, len(SUITE) - 1), st.floats(0.0, 2 * np.pi))
def test_sequential_value_never_below_infimum(i, theta):
    f = SUITE[i]
    u = np.array([np.cos(theta), np.sin(theta)])
    floor = float(f(np.zeros(2)))
    assert float(sigma_g_sequential(f, u).value) >= floor - 1e-12


def test_boundedness_diagnostic():
    assert boundedness_diagnostic(arctan_norm(2), unit_directions(2, 8)).status == ALL_FINITE
    rep = boundedness_diagnostic(euclidean_norm(2), unit_directions(2, 8))
    assert rep.status == FOUND_INFINITE and rep.witness is not None
