from pathlib import Path

import numpy as np
import pytest

import noncoercive
from noncoercive.core import Ball, Polyhedron
from noncoercive.errors import ParseError
from noncoercive.problem import parse_problem, serialize_problem

CORPUS = Path(noncoercive.__file__).parent / "corpus"
CORPUS_FILES = sorted(CORPUS.glob("*.ncp"))
MALFORMED = sorted((CORPUS / "malformed").glob("*.ncp"))


@pytest.mark.parametrize("path", CORPUS_FILES, ids=[p.stem for p in CORPUS_FILES])
def test_corpus_round_trip(path):
    p = parse_problem(path.read_text())
    text = serialize_problem(p)
    q = parse_problem(text)
    assert q == p
    assert serialize_problem(q) == text


@pytest.mark.parametrize("path", MALFORMED, ids=[p.stem for p in MALFORMED])
def test_malformed_diagnostics_are_stable(path):
    codes = set()
    for _ in range(3):
        with pytest.raises(ParseError) as exc:
            parse_problem(path.read_text())
        codes.add((exc.value.code, exc.value.line, exc.value.column))
    assert len(codes) == 1


HEAD = "noncoercive-problem v1\n[space]\ndim = 2\n"


def test_sets_and_attributes():
    p = parse_problem(HEAD + """
[sets]
B = ball(center=[0, 0], radius=2)
Q = orthant()
H = halfspaces(A=[[1, -1]], b=[0])
P = predicate(x2 <= sqrt(x1) and x1 >= 0, convex=true)
U = union(B, Q)
I = intersection(Q, H)

[functions]
f = max(x1 - 1, x2)
f.flags = quasi_convex, lsc
f.domain = Q

[task]
kind = cone
set = P
""")
    assert isinstance(p.set("B"), Ball) and isinstance(p.set("H"), Polyhedron)
    assert p.set("P").convex and not p.set("U").convex
    assert p.set("I").contains([1.0, 2.0]) and not p.set("I").contains([2.0, 1.0])
    f = p.function("f")
    assert f.sublevel is not None
    assert f([-1.0, 0.0]) == np.inf  # outside the declared domain


def test_declared_functions_can_be_called():
    p = parse_problem(HEAD + """
[functions]
g = norm(x)^2
h = g(x) + 1

[bifunctions]
psi = g(y) - g(x)

[task]
kind = check
bifunction = psi
classes = cyclic
""")
    assert p.function("h")([1.0, 1.0]) == pytest.approx(3.0)
    assert p.bifunction("psi").difference_of is not None


def test_constant_bifunction_is_recognized():
    p = parse_problem(HEAD + "[bifunctions]\npsi = 2\n[task]\nkind = check\nbifunction = psi\n"
                      "classes = cyclic\n")
    assert p.bifunction("psi").constant == 2.0


@pytest.mark.parametrize("body,code,line", [
    ("[space]\ndim = 2\n", "E106", 1),
    (HEAD + "[task]\nkind = fly\n", "E109", 5),
    (HEAD + "[task]\nkind = analyze\nwidth = 3\n", "E105", 6),
    (HEAD + "[task]\nkind = analyze\nfunction = f\n", "E101", 6),
    (HEAD + "[sets]\nK = cube()\n", "E101", 5),
    (HEAD + "[functions]\nf = x1\nf.flags = smooth\n", "E109", 6),
    (HEAD + "[functions]\nf = x1\nf.colour = red\n", "E105", 6),
    (HEAD + "[task]\nkind = minimize\nfunction = f\nstages = [2, 1]\n", "E109", 7),
    (HEAD + "[task]\nkind = analyze\nkind = cone\n", "E108", 6),
    ("noncoercive-problem v1\n[task]\nkind = analyze\n", "E105", 1),
])
def test_structural_diagnostics(body, code, line):
    with pytest.raises(ParseError) as exc:
        parse_problem(body)
    assert (exc.value.code, exc.value.line) == (code, line)


def test_serialized_floats_are_exact():
    p = parse_problem(HEAD + "[task]\nkind = cone\nset = K\nresolution = 0.1\n"
                      "[sets]\nK = whole()\n")
    assert "resolution = 0.1" in serialize_problem(p)
    assert parse_problem(serialize_problem(p)).task_value("resolution") == 0.1
