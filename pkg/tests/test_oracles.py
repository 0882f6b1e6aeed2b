"""The oracles themselves, checked on hand-computed cases."""

import math

import numpy as np
import pytest

from noncoercive.models import box_indicator_ep, parabola_region, piecewise_arctan_1d
from noncoercive.oracles import (
    OracleConfig,
    oracle_box_grid,
    oracle_ep_solutions,
    oracle_grid_argmin,
    oracle_negative_cycle,
    oracle_norm,
    oracle_ray_recession,
    oracle_stage_grid,
)


def test_box_grid_counts_and_order():
    g = oracle_box_grid([0, 0], [1, 2], 0.25)
    assert len(g) == 5 * 9
    assert g[0] == (0.0, 0.0) and g[1] == (0.0, 0.25) and g[-1] == (1.0, 2.0)


def test_norms():
    assert oracle_norm([3.0, 4.0]) == 5.0
    assert oracle_norm([3.0, -4.0], 1.0) == 7.0
    assert oracle_norm([3.0, -4.0], math.inf) == 4.0


def test_stage_grid_of_a_disc():
    g = oracle_stage_grid(lambda x: True, 2, 1.0, 0.5)
    # 25 points of the square minus 12 with norm > 1
    assert len(g) == 13 and (0.5, 0.5) in g and (1.0, 0.5) not in g


def test_grid_argmin_piecewise():
    pts, best = oracle_grid_argmin(piecewise_arctan_1d(), [-2.0], [2.0], 0.001)
    assert pts == [(0.0,)] and best == 0.0


def test_ray_bits():
    R = parabola_region()
    assert all(oracle_ray_recession(R.contains, [1.0, 0.0], [1.0, 0.0]))
    assert not all(oracle_ray_recession(R.contains, [0.0, 1.0], [1.0, 0.0]))


def test_ep_solutions_box_indicator():
    grid = oracle_stage_grid(lambda x: True, 2, 4.0, 0.25)
    sols = oracle_ep_solutions(box_indicator_ep(), grid)
    assert sorted(sols) == oracle_box_grid([0, 0], [1, 2], 0.25)
    assert oracle_ep_solutions(box_indicator_ep(), []) == []


def test_negative_cycle_enumeration():
    def psi(X, Y):
        return np.full(np.broadcast_shapes(X.shape[:-1], Y.shape[:-1]), -1.0)
    cycle = oracle_negative_cycle(psi, [[0.0], [1.0]], 3)
    assert cycle == [(0.0,), (0.0,)]


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(resolution=0.0)
    with pytest.raises(ValueError):
        OracleConfig(lower=1.0, upper=0.0)
