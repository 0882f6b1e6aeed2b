import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from noncoercive.cones import (
    EXCLUDED,
    IN_CONE,
    ConeProbe,
    asymptotic_membership_sampled,
    cone_intersection_check,
    default_shells,
    exact_recession,
    recession_member,
    recession_membership_convex,
)
from noncoercive.core import Ball, Box, Polyhedron, Union, whole_space
from noncoercive.errors import (
    BaseNotInSetError,
    EmptyScheduleError,
    InvalidParameterError,
    NotConvexError,
)
from noncoercive.models import parabola_region
from noncoercive.oracles import oracle_ray_recession

ORTHANT = Polyhedron(-np.eye(2), np.zeros(2))


def test_exact_recession_basic_shapes():
    assert exact_recession(ORTHANT, [1.0, 2.0])
    assert not exact_recession(ORTHANT, [-1.0, 0.5])
    assert not exact_recession(Ball([0, 0], 3.0), [1.0, 0.0])
    assert exact_recession(whole_space(2), [-3.0, 7.0])
    assert exact_recession(Box([0, 0], [1, 1]), [0.0, 0.0])
    strip = Union((Box([0, -1], [1, 1]), ORTHANT))
    assert exact_recession(strip, [1.0, 0.0])


angle = st.floats(0.0, 2 * np.pi, allow_nan=False)


@given(angle, st.floats(1e-3, 1e3))
def test_exact_recession_ignores_positive_scaling(theta, s):
    u = np.array([np.cos(theta), np.sin(theta)])
    P = Polyhedron([[1.0, 2.0], [-1.0, 0.5]], [1.0, 1.0])
    assert exact_recession(P, u) == exact_recession(P, s * u)


@given(angle)
def test_polyhedral_membership_matches_ray_oracle(theta):
    u = np.array([np.cos(theta), np.sin(theta)])
    A = np.array([[1.0, 2.0], [-1.0, 0.5], [0.3, -1.0]])
    assume(np.min(np.abs(A @ u)) > 1e-6)
    P = Polyhedron(A, [1.0, 1.0, 2.0])
    rep = recession_member(P, u, base=[0.0, 0.0])
    assert rep.exact
    assert rep.member == all(oracle_ray_recession(P.contains, u, [0.0, 0.0]))


def test_excluded_verdict_carries_verified_exit():
    rep = recession_membership_convex(ORTHANT, [-1.0, 1.0], [2.0, 0.0])
    assert rep.verdict == EXCLUDED and rep.exact
    assert not ORTHANT.contains(np.array([2.0, 0.0]) + rep.witness_t * np.array([-1.0, 1.0]))


def test_convex_membership_guards():
    with pytest.raises(BaseNotInSetError):
        recession_membership_convex(ORTHANT, [1.0, 0.0], [-1.0, 0.0])
    nonconvex = Union((Box([0], [1]), Box([2], [3])))
    with pytest.raises(NotConvexError):
        recession_membership_convex(nonconvex, [1.0], [0.5])
    with pytest.raises(InvalidParameterError):
        ConeProbe(t_grid=(2.0, 1.0))


def test_parabola_region_cone_by_ray_probes():
    R = parabola_region()
    cases = {(1.0, 0.0): True, (0.0, -1.0): True, (1.0, -1.0): True,
             (1.0, 1.0): False, (-1.0, 0.0): False}
    for u, inside in cases.items():
        rep = recession_member(R, u, base=[1.0, 0.0])
        assert rep.member == inside, u
        assert rep.method == "ray_probe"


def test_sampled_shells():
    lattice_line = Union(tuple(Box([k, 0.0], [k, 0.0]) for k in range(0, 40)))
    assert asymptotic_membership_sampled(lattice_line, [1.0, 0.0],
                                         default_shells()).verdict == IN_CONE
    rep = asymptotic_membership_sampled(lattice_line, [0.0, 1.0], default_shells())
    # the first shell (t = 1, radius 1) still reaches the origin
    assert rep.verdict == EXCLUDED and rep.witness_t == 2.0
    with pytest.raises(EmptyScheduleError):
        asymptotic_membership_sampled(lattice_line, [1.0, 0.0], [])


@given(angle)
def test_intersection_of_closed_convex_sets_has_intersected_cone(theta):
    u = np.array([np.cos(theta), np.sin(theta)])
    H = Polyhedron([[1.0, -1.0]], [0.0])
    assume(min(abs(u[0]), abs(u[1]), abs(u[0] - u[1])) > 1e-6)
    rep = cone_intersection_check([ORTHANT, H], u, base=[0.0, 0.0])
    assert rep.equality_expected and rep.inclusion_holds and rep.equality_holds


def test_intersection_check_needs_base_for_convex_sets():
    with pytest.raises(BaseNotInSetError):
        cone_intersection_check([ORTHANT], [1.0, 0.0])
