import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from begflow.dissipation import (
    bulk_distance_sum,
    dissipation_bulk,
    dissipation_bulk_integral,
    dissipation_surfactant,
    functional_total,
    step_functional,
)
from begflow.energy import ModelParams, ParameterError, total_energy
from begflow.lattice import LatticeOctagon, SpinGrid, outer_boundary
from conftest import random_staircase

EPS = 1 / 8
P = ModelParams(0.5, 3, 0.5, EPS)


def block(w, h, x0=0, y0=0):
    return frozenset((x, y) for x in range(x0, x0 + w) for y in range(y0, y0 + h))


def test_bulk_examples():
    sq = block(2, 2)
    assert dissipation_bulk(sq, sq, EPS) == 0
    assert dissipation_bulk(sq - {(0, 0)}, sq, EPS) == EPS ** 3


def test_bulk_ring_removal():
    # every cell of the removed ring touches the complement of the old 4x4 square
    old, new = block(4, 4), block(2, 2, 1, 1)
    assert bulk_distance_sum(new, old) == 12
    # measured from the 2x2 square the corners of the ring are two steps away
    assert bulk_distance_sum(old, new) == 8 + 4 * 2


def test_surfactant_examples():
    assert dissipation_surfactant(block(5, 1), block(3, 1)) == 2
    assert dissipation_surfactant(block(2, 1), block(1, 2)) == 0
    assert dissipation_surfactant(frozenset(), block(7, 1)) == 7


def test_step_functional_identity():
    o = LatticeOctagon(0, 5, 0, 5, 1, 9, -4, 4).cells()
    u = SpinGrid.from_sets(o, outer_boundary(o), EPS)
    v = step_functional(u, u, P)
    assert v.d1 == 0 and v.d0 == 0 and v.total == total_energy(u, P)


def test_step_functional_hand_sum():
    o = LatticeOctagon(0, 5, 0, 5, 1, 9, -4, 4).cells()
    Z = outer_boundary(o)
    u_old = SpinGrid.from_sets(o, Z, EPS)
    removed_cell = (0, 2)
    removed_z = sorted(Z)[0]
    u_new = SpinGrid.from_sets(o - {removed_cell}, Z - {removed_z}, EPS)
    v = step_functional(u_new, u_old, P)
    E = total_energy(u_new, P)
    d1 = EPS ** 2 * EPS  # the removed cell sits on the inner boundary
    assert v.energy == E and v.d1 == d1 and v.d0 == 1
    assert v.total == E + (d1 + EPS ** 3 * 1) / P.tau


def test_surfactant_term_vanishes_with_gamma():
    for gamma in (3, 6, 12, 24):
        p = ModelParams(0.5, gamma, 0.5, EPS)
        assert functional_total(1.0, 0.0, 5, p) - 1.0 == pytest.approx(5 * EPS ** gamma / p.tau)
    a = [functional_total(0.0, 0.0, 5, ModelParams(0.5, g, 0.5, EPS)) for g in (3, 6, 12, 24)]
    assert a == sorted(a, reverse=True)


def test_epsilon_mismatch():
    u = SpinGrid.from_sets(block(1, 1), frozenset(), 0.25)
    with pytest.raises(ParameterError):
        step_functional(u, u, P)


def test_asymmetry():
    I, J = block(4, 4), block(2, 2, 1, 1)
    assert dissipation_bulk(I, J, EPS) != dissipation_bulk(J, I, EPS)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_bulk_sum_equals_integral_form(seed):
    rng = np.random.default_rng(seed)
    I, J = random_staircase(rng, 7, 7), random_staircase(rng, 7, 7)
    assert dissipation_bulk(I, J, EPS) == pytest.approx(dissipation_bulk_integral(I, J, EPS), abs=1e-15)
    assert (dissipation_bulk(I, J, EPS) == 0) == (I == J)
