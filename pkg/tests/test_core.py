import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noncoercive.core import (
    NEG_INF,
    POS_INF,
    Ball,
    BifunctionModel,
    Box,
    ExtendedReal,
    FunctionModel,
    Intersection,
    Polyhedron,
    Union,
    as_batch,
    as_point,
    empty_set,
    evaluate,
    lattice,
    stage_grid,
    truncate,
    unit_directions,
    whole_space,
)
from noncoercive.errors import (
    DimensionMismatchError,
    EvaluationError,
    ExtendedRealFault,
    ImproperFunctionError,
    InvalidParameterError,
)
from noncoercive.oracles import oracle_box_grid, oracle_stage_grid

extended = st.one_of(st.floats(allow_nan=False), st.sampled_from([math.inf, -math.inf]))


@given(extended, extended, extended)
def test_extended_real_order_is_total_and_transitive(a, b, c):
    x, y, z = ExtendedReal(a), ExtendedReal(b), ExtendedReal(c)
    assert (x < y) + (x == y) + (x > y) == 1
    if x <= y and y <= z:
        assert x <= z
    assert NEG_INF <= x <= POS_INF


@given(st.lists(extended, max_size=8))
def test_inf_and_sup_match_builtin(vals):
    assert float(ExtendedReal.inf_of(vals)) == min(vals, default=math.inf)
    assert float(ExtendedReal.sup_of(vals)) == max(vals, default=-math.inf)


def test_extended_real_undefined_combinations():
    with pytest.raises(ExtendedRealFault):
        POS_INF + NEG_INF
    with pytest.raises(ExtendedRealFault):
        POS_INF * 0
    with pytest.raises(ExtendedRealFault):
        ExtendedReal(math.nan)
    assert str(POS_INF) == "+inf" and str(-POS_INF) == "-inf"
    assert POS_INF + 3 == POS_INF and 2 - ExtendedReal(5) == -3


def test_point_validation():
    with pytest.raises(DimensionMismatchError):
        as_point([1.0, 2.0], dim=3)
    with pytest.raises(InvalidParameterError):
        as_point([1.0, math.inf])
    assert as_batch([1.0, 2.0], 2).shape == (1, 2)
    with pytest.raises(DimensionMismatchError):
        as_batch(np.zeros((3, 2)), 3)


def test_basic_sets():
    B = Box([0, 0], [1, 2])
    assert B.contains([1, 2]) and not B.contains([1.1, 0])
    assert B.bounded
    assert whole_space(3).contains(np.full(3, 1e300))
    assert not empty_set(2).contains([0.0, 0.0])
    ball = Ball([0, 0], 1.0)
    assert ball.contains([0.6, 0.8]) and not ball.contains([1.0, 0.1])
    with pytest.raises(InvalidParameterError):
        Box([1, 0], [0, 0])
    with pytest.raises(InvalidParameterError):
        Polyhedron([[0.0, 0.0]], [1.0])
    U = Union((Box([0], [1]), Box([2], [3])))
    assert not U.convex and U.contains([2.5]) and not U.contains([1.5])
    with pytest.raises(DimensionMismatchError):
        Intersection((Box([0], [1]), ball))


coords = st.floats(-5, 5, allow_nan=False)


@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=20))
def test_box_halfspaces_reproduce_membership(points):
    B = Box([-1.0, -2.0], [3.0, 0.5])
    A, b = B.halfspaces()
    P = Polyhedron(A, b)
    X = np.array(points)
    assert np.array_equal(B.contains(X), P.contains(X))


@given(st.floats(0.3, 3.0), st.sampled_from([0.25, 0.5, 1.0]))
def test_lattice_matches_itertools_grid(radius, h):
    got = [tuple(r) for r in lattice(radius, h, 2).tolist()]
    assert got == oracle_box_grid([-radius] * 2, [radius] * 2, h)


@settings(max_examples=30)
@given(st.floats(0.5, 4.0), st.sampled_from([0.25, 0.5]), st.sampled_from([1.0, 2.0, math.inf]))
def test_stage_grid_matches_oracle(n, h, p):
    K = Polyhedron([[1.0, -1.0], [-1.0, -2.0]], [1.0, 0.5])
    got = [tuple(r) for r in stage_grid(K, n, h, p).tolist()]
    assert got == oracle_stage_grid(K.contains, 2, n, h, p)


def test_truncate_requires_positive_radius():
    with pytest.raises(InvalidParameterError):
        truncate(whole_space(2), 0.0)


def test_function_model_guards():
    with pytest.raises(InvalidParameterError):
        FunctionModel(1, lambda X: X[:, 0], flags={"smooth"})
    with pytest.raises(ImproperFunctionError):
        FunctionModel(1, lambda X: np.full(X.shape[0], np.inf))
    f = FunctionModel(1, lambda X: np.sqrt(X[:, 0]), check_proper=False)
    with pytest.raises(EvaluationError):
        f([-1.0])
    g = FunctionModel(2, lambda X: X.sum(axis=1), domain=Box([0, 0], [1, 1]))
    assert g([2.0, 0.0]) == math.inf
    assert evaluate(g, [0.5, 0.5]) == 1.0


def test_bifunction_model_sections_and_transpose():
    K = whole_space(1)
    psi = BifunctionModel(1, lambda X, Y: Y[..., 0] - 2 * X[..., 0], K)
    X = np.array([[1.0], [2.0]])
    Y = np.array([[3.0], [-1.0]])
    assert np.array_equal(psi.transpose()(X, Y), psi(Y, X))
    sec = psi.negated_section([3.0])
    assert np.allclose(sec(X), -(3.0 - 2 * X[:, 0]))
    bad = BifunctionModel(1, lambda X, Y: np.log(X[..., 0]), K)
    with pytest.raises(EvaluationError):
        bad(np.array([[-1.0]]), np.array([[0.0]]))


@given(st.integers(2, 5), st.integers(1, 40))
def test_unit_directions_are_unit(dim, count):
    U = unit_directions(dim, count, seed=3)
    assert np.allclose(np.linalg.norm(U, axis=1), 1.0)
