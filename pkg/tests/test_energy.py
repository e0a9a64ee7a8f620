import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from begflow.energy import (
    ModelParams,
    ParameterError,
    bond_counts,
    local_energy,
    limit_surface_tension,
    pair_cost,
    surfactant_energy_closed_form,
    surfactant_energy_direct,
    total_energy,
    wetted_component_energy,
)
from begflow.lattice import RectSpec, SpinGrid, discretize_octagon, outer_boundary, slices
from begflow.minimize import place_surfactant
from begflow.octagon import OctagonSpec
from conftest import random_grid

P = ModelParams(0.5, 3, 1.0, 1 / 16)
EPS = P.epsilon


def grid(I=(), Z=()):
    return SpinGrid.from_sets(frozenset(I), frozenset(Z), EPS)


def test_params_validation():
    with pytest.raises(ParameterError, match=r"\(1/3, 1\)"):
        ModelParams(0.2, 3, 1, 0.1)
    with pytest.raises(ParameterError):
        ModelParams(0.5, 3, 0, 0.1)
    assert ModelParams(0.5, 3, 0.5, 0.25).tau == 0.125


def test_pair_cost_table():
    e, k = EPS, P.k
    assert pair_cost(1, -1, P) == 2 * e
    assert pair_cost(0, 1, P) == pair_cost(0, -1, P) == pair_cost(0, 0, P) == e * (1 - k)
    assert pair_cost(1, 1, P) == pair_cost(-1, -1, P) == 0
    assert 0 < e * (1 - k) < 2 * e * (1 - k) < 2 * e


def test_interposed_zero_lowers_cost():
    # three cells in a row: + - + versus + 0 +
    a = SpinGrid(RectSpec(0, 2, 0, 0), np.array([[1, -1, 1]]), EPS)
    b = SpinGrid(RectSpec(0, 2, 0, 0), np.array([[1, 0, 1]]), EPS)
    assert total_energy(b, P) < total_energy(a, P)


def test_total_energy_examples():
    assert total_energy(grid(), P) == 0
    assert total_energy(grid(Z={(0, 0)}), P) == 4 * EPS * (1 - P.k)
    assert total_energy(grid(I={(0, 0)}), P) == 8 * EPS


def test_local_energy_examples():
    u = grid(Z={(0, 0)})
    full = u.window.dilate(1).cells()
    assert local_energy(u, full, full, P) == total_energy(u, P)
    assert local_energy(u, {(0, 0)}, {(5, 5)}, P) == 0
    ring = {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert local_energy(u, {(0, 0)}, ring, P) == 4 * EPS * (1 - P.k)
    assert local_energy(u, ring, {(0, 0)}, P) == 4 * EPS * (1 - P.k)


def test_surfactant_closed_form_examples():
    assert surfactant_energy_closed_form(grid(Z={(0, 0)}), P) == 4 * EPS * (1 - P.k)
    assert surfactant_energy_closed_form(grid(), P) == 0
    bar = grid(Z={(0, 0), (1, 0), (2, 0)})
    assert surfactant_energy_closed_form(bar, P) == 10 * EPS * (1 - P.k) == surfactant_energy_direct(bar, P)


def test_wetted_component_examples():
    plus = grid(I={(0, 0)}, Z={(1, 0), (-1, 0), (0, 1), (0, -1)})
    G = plus.I | plus.Z
    assert wetted_component_energy(plus, G, P) == 16 * EPS * (1 - P.k)
    assert wetted_component_energy(plus, G, P) == local_energy(plus, G, None, P)
    bar = grid(Z={(0, 0), (1, 0)})
    assert wetted_component_energy(bar, bar.Z, P) == surfactant_energy_closed_form(bar, P)
    with pytest.raises(ValueError):
        wetted_component_energy(grid(I={(0, 0)}, Z={(1, 0)}), {(0, 0), (1, 0)}, P)


def test_wetted_octagon_matches_ring_formula():
    I = discretize_octagon(OctagonSpec.from_sides(0.5, 0.3), EPS)
    Z = outer_boundary(I)
    u = grid(I, Z)
    s = slices(I)
    c = len([q for q in Z if sum(n in I for n in ((q[0] + 1, q[1]), (q[0] - 1, q[1]), (q[0], q[1] + 1), (q[0], q[1] - 1))) == 2])
    expected = EPS * (1 - P.k) * (6 * (s.n_h + s.n_v) - 2 * c + 4)
    assert wetted_component_energy(u, I | Z, P) == total_energy(u, P) == expected


def test_place_surfactant_energy_matches_filled_box_formula():
    # Z inside R_{I u d+I} minus I: energy 2eps(1-k)C + 2eps(1-k)(n_h+n_v+2)
    I = frozenset((x, y) for x in range(5) for y in range(3))
    for C in (len(outer_boundary(I)), len(outer_boundary(I)) + 2, 20):
        Z = place_surfactant(I, C)
        u = grid(I, Z)
        s = slices(I)
        assert total_energy(u, P) == 2 * EPS * (1 - P.k) * (C + s.n_h + s.n_v + 2)


def test_limit_surface_tension():
    assert limit_surface_tension((1, 0), 0.5) == 1.5
    r = math.sqrt(2) / 2
    assert limit_surface_tension((r, r), 0.5) == pytest.approx(math.sqrt(2), abs=1e-15)
    nu = (0.6, 0.8)
    v = limit_surface_tension(nu, 0.7)
    assert v == limit_surface_tension((-0.6, -0.8), 0.7) == limit_surface_tension((0.8, 0.6), 0.7)
    with pytest.raises(ValueError):
        limit_surface_tension((1, 1), 0.5)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_energy_nonnegative_and_zero_iff_no_mixed_bonds(seed):
    u = random_grid(np.random.default_rng(seed), 8)
    E = total_energy(u, P)
    assert E >= 0
    assert (E == 0) == (bond_counts(u) == (0, 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_total_energy_is_sum_over_bond_classes(seed):
    # every bond touches Z, or touches I without Z, or joins two -1 cells
    u = random_grid(np.random.default_rng(seed), 8)
    Z, I = u.Z, u.I
    e_z = local_energy(u, Z, None, P)
    e_i = local_energy(u, I, None, P) - local_energy(u, I, Z, P)
    assert math.isclose(e_z + e_i, total_energy(u, P), rel_tol=0, abs_tol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_translation_invariance(seed):
    u = random_grid(np.random.default_rng(seed), 8)
    assert total_energy(u.translate(3, -2), P) == total_energy(u, P)
