import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noncoercive.core import Box, stage_grid, whole_space
from noncoercive.equilibrium import (
    CERTIFIED,
    VIOLATED,
    CertificateFailed,
    EPInstance,
    Inconclusive,
    Solution,
    check_RE_direct,
    check_RE_sufficient_classic,
    existence_pipeline,
    min_over_y,
    recession_directions,
    solution_set_recession,
    solve_truncated,
    thin,
)
from noncoercive.errors import (
    EmptyGridError,
    EmptySampleError,
    EmptyStageError,
    InvalidParameterError,
)
from noncoercive.models import (
    box_indicator_ep,
    constant_bifunction,
    difference_bifunction,
    euclidean_norm,
    linear_in_y_ep,
    negative_square_plus_y,
    random_desk_ep,
)
from noncoercive.oracles import oracle_box_grid, oracle_ep_solutions, oracle_stage_grid


def test_box_indicator_truncated_solutions_are_the_box():
    inst = EPInstance(box_indicator_ep(), whole_space(2))
    for n in (3.0, 4.0):
        got = sorted(map(tuple, solve_truncated(inst, n).points.tolist()))
        assert got == oracle_box_grid([0, 0], [1, 2], 0.25)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_truncated_solutions_match_oracle(seed):
    rng = np.random.default_rng(seed)
    psi = random_desk_ep(rng)
    inst = EPInstance(psi, psi.feasible, 1e-9, 0.5)
    got = sorted(map(tuple, solve_truncated(inst, 3.0).points.tolist()))
    grid = oracle_stage_grid(psi.feasible.contains, psi.dim, 3.0, 0.5)
    assert got == sorted(oracle_ep_solutions(psi, grid, 1e-9))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_difference_fast_path_matches_pairwise_minimum(seed):
    rng = np.random.default_rng(seed)
    psi = random_desk_ep(rng, kind="difference")
    G = stage_grid(psi.feasible, 2.0, 0.25)
    plain = psi.evaluator(G[:, None, :], G[None, :, :]).min(axis=1)
    assert np.array_equal(min_over_y(psi, G, G), plain)


def test_empty_grid_is_an_error():
    inst = EPInstance(constant_bifunction(Box([5.0], [6.0]), 0.0), Box([5.0], [6.0]))
    with pytest.raises(EmptyGridError):
        solve_truncated(inst, 1.0)


def test_direct_certifies_where_classic_cannot():
    inst = EPInstance(box_indicator_ep(), whole_space(2))
    U = recession_directions(inst.K, 8)
    Y = [[5.0, 5.0], [-3.0, 0.0]]
    direct = check_RE_direct(inst, U, Y)
    classic = check_RE_sufficient_classic(inst, U, Y)
    assert direct.verdict == CERTIFIED
    assert all(abs(r.clearing_value - 1.0) <= 1e-6 for r in direct.records)
    assert classic.verdict == VIOLATED and classic.witness is not None


def test_linear_in_y_clearing_values():
    inst = EPInstance(linear_in_y_ep(), whole_space(1))
    for y in (-2.0, -0.5):
        rec = check_RE_direct(inst, [[1.0], [-1.0]], [[y]]).records
        assert all(abs(r.clearing_value + y) <= 1e-6 for r in rec)
    assert check_RE_sufficient_classic(inst, [[1.0]], [[-2.0]]).verdict == VIOLATED


def test_certificate_input_validation():
    inst = EPInstance(linear_in_y_ep(), whole_space(1))
    with pytest.raises(EmptySampleError):
        check_RE_direct(inst, [], [[1.0]])
    with pytest.raises(InvalidParameterError):
        check_RE_direct(inst, [[0.0]], [[1.0]])


def test_pipeline_finds_box_solution():
    res = existence_pipeline(EPInstance(box_indicator_ep(), whole_space(2)))
    assert isinstance(res.verdict, Solution)
    assert res.verdict.point == (0.0, 0.0)
    assert not res.verdict.recession.nontrivial
    assert res.final_sample.points.shape[0] == 45


def test_pipeline_zero_bifunction_escapes_and_fails_certificate():
    res = existence_pipeline(EPInstance(constant_bifunction(whole_space(2), 0.0), whole_space(2)))
    assert isinstance(res.verdict, CertificateFailed)
    assert res.trace.escape and res.certificate.verdict == VIOLATED


def test_pipeline_difference_form():
    psi = difference_bifunction(euclidean_norm(1))
    res = existence_pipeline(EPInstance(psi, whole_space(1)))
    assert isinstance(res.verdict, Solution) and res.verdict.point == (0.0,)


def test_pipeline_budget_and_empty_stage():
    res = existence_pipeline(EPInstance(box_indicator_ep(), whole_space(2)), max_stages=1)
    assert isinstance(res.verdict, Inconclusive) and res.verdict.stages_run == 1
    with pytest.raises(EmptyStageError):
        existence_pipeline(EPInstance(linear_in_y_ep(), whole_space(1)))
    with pytest.raises(InvalidParameterError):
        existence_pipeline(EPInstance(box_indicator_ep(), whole_space(2)), stages=(2.0, 1.0))


def test_negative_square_has_no_truncated_solution():
    inst = EPInstance(negative_square_plus_y(1), whole_space(1))
    assert solve_truncated(inst, 2.0).empty


def test_solution_set_recession():
    inner = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert not solution_set_recession(inner, 10.0).nontrivial
    far = np.array([[0.0, 0.0], [9.5, 0.0]])
    rep = solution_set_recession(far, 10.0)
    assert rep.nontrivial and (1.0, 0.0) in rep.flagged_directions
    with pytest.raises(EmptySampleError):
        solution_set_recession(np.zeros((0, 2)))


def test_thin_keeps_endpoints():
    P = np.arange(100.0)[:, None]
    T = thin(P, 10)
    assert T.shape[0] == 10 and T[0, 0] == 0.0 and T[-1, 0] == 99.0
    assert thin(P[:5], 10).shape[0] == 5
