import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noncoercive.core import Box
from noncoercive.errors import ParseError
from noncoercive.expr import (
    Binary,
    Call,
    Context,
    Name,
    Num,
    Unary,
    affine_form,
    compile_bifunction,
    compile_function,
    compile_predicate,
    difference_form,
    max_affine_sublevel,
    parse_expression,
    to_source,
)
from noncoercive.models import piecewise_arctan_1d_values

leaves = st.one_of(
    st.builds(Num, st.floats(0, 1e6, allow_nan=False, allow_infinity=False)),
    st.builds(Name, st.sampled_from(["x1", "x2", "pi", "x"])),
)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["-", "+", "not"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "^", "<", ">=", "and", "or"]),
                  children, children),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["abs", "sqrt", "norm"]), children),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
def test_source_round_trip(node):
    assert parse_expression(to_source(node)) == node


def compile1(text, dim=2, **kw):
    return compile_function(parse_expression(text), Context(dim, **kw))


def test_precedence_and_associativity():
    f = compile1("1 + 2 * 3 ^ 2 - 8 / 4 / 2")
    assert f(np.zeros((1, 2)))[0] == 1 + 2 * 9 - 1
    assert compile1("-2 ^ 2")(np.zeros((1, 2)))[0] == -4.0
    assert compile1("2 ^ -1")(np.zeros((1, 2)))[0] == 0.5


def test_piecewise_matches_reference_values():
    src = ("piecewise(x1 <= 0, -arctan(x1), x1 <= sqrt(3)/6, x1, "
           "x1 < sqrt(3)/3, -x1 + sqrt(3)/3, arctan(x1))")
    f = compile1(src, dim=1)
    X = np.linspace(-3, 3, 2001)[:, None]
    assert np.array_equal(f(X), piecewise_arctan_1d_values(X[:, 0]))


def test_vectors_norms_and_members():
    C = Box([0.0, 0.0], [1.0, 2.0])
    f = compile1("norm(x - [1, 1], 1) + dot(x, [2, 0]) + sum(x)")
    assert f(np.array([[2.0, 3.0]]))[0] == 3.0 + 4.0 + 5.0
    p = compile_predicate(parse_expression("member(x, C) and not x2 > 1.5"),
                          Context(2, sets={"C": C}))
    assert p(np.array([[0.5, 1.0], [0.5, 1.8], [3.0, 0.0]])).tolist() == [True, False, False]
    g = compile1("max(x1, x2, 0) + min(x1, -1)")
    assert g(np.array([[2.0, -5.0]]))[0] == 2.0 - 1.0


def test_bifunction_and_difference_detection():
    node = parse_expression("g(y) - g(x)")
    assert difference_form(node) == "g"
    assert difference_form(parse_expression("g(x) - g(y)")) is None
    psi = compile_bifunction(parse_expression("y1 - 2 * x1"), Context(1, ("x", "y")))
    assert psi(np.array([[1.0]]), np.array([[5.0]]))[0] == 3.0


def test_affine_and_max_affine_detection():
    c, c0 = affine_form(parse_expression("2*x1 - x2/4 + 3"), 2)
    assert c.tolist() == [2.0, -0.25] and c0 == 3.0
    assert affine_form(parse_expression("x1 * x2"), 2) is None
    sub = max_affine_sublevel(parse_expression("max(x1 - 1, -x1, x2)"), 2)
    S = sub(0.5)
    assert S.contains([1.0, 0.0]) and not S.contains([2.0, 0.0])


@pytest.mark.parametrize("text,dim,code,col", [
    ("norm(x", 2, "E100", 5),
    ("1 +", 2, "E100", 4),
    ("1 $ 2", 2, "E100", 3),
    ("foo(x1)", 2, "E101", 1),
    ("z + 1", 2, "E101", 1),
    ("norm(x, 2, 3)", 2, "E102", 1),
    ("x3", 2, "E103", 1),
    ("x + [1, 2, 3]", 2, "E103", 3),
    ("piecewise(x1 > 0, 1)", 1, "E104", 1),
    # type errors point at the offending operand
    ("(x1 < 0) + 1", 1, "E107", 5),
    ("x1 and 1", 1, "E107", 1),
])
def test_diagnostics(text, dim, code, col):
    with pytest.raises(ParseError) as exc:
        compile1(text, dim=dim)
    assert exc.value.code == code
    assert exc.value.column == col


def test_parse_error_contract():
    with pytest.raises(ValueError):
        ParseError("E999", "bogus")
    e = ParseError("E100", "boom", 3, 7, (")",))
    d = e.to_dict()
    assert d["code"] == "E100" and d["line"] == 3 and d["column"] == 7
    assert d["expected"] == [")"] and str(e).startswith("E100 at 3:7")


def test_out_of_domain_values_do_not_warn(recwarn):
    f = compile1("sqrt(x1)", dim=1)
    out = f(np.array([[-1.0], [4.0]]))
    assert math.isnan(out[0]) and out[1] == 2.0
    assert not [w for w in recwarn if issubclass(w.category, RuntimeWarning)]
