"""Acceptance criteria AC1-AC9, one pass/fail line each."""
import functools
import math
import time

import numpy as np
import pytest

from begflow.continuum import compare_discrete_continuum, integrate_flow
from begflow.energy import (
    ModelParams,
    local_energy,
    surfactant_energy_closed_form,
    wetted_component_energy,
)
from begflow.fixtures import default_fixtures, run_oracle
from begflow.flow import (
    InitialCondition,
    bookkeeping_violations,
    diagonal_lines,
    run_flow,
    step_violations,
)
from begflow.lattice import (
    LatticeOctagon,
    RectSpec,
    SpinGrid,
    classify_shape,
    connected_components,
    discretize_octagon,
    is_staircase,
    outer_boundary,
    outer_boundary_count,
    perimeter,
)
from begflow.minimize import stage_threshold
from begflow.octagon import OctagonSpec
from conftest import criterion, random_staircase

SQ2 = math.sqrt(2)
GAMMA_HIGH_OCT = OctagonSpec.from_sides(0.375, 0.6)


# ---------------------------------------------------------------- shared runs


@functools.lru_cache(maxsize=None)
def run_ac3():
    p = ModelParams(0.5, 1, 0.5, 1 / 64)
    return run_flow(InitialCondition(OctagonSpec.rectangle(2.25, 0.375)), p, 60)


@functools.lru_cache(maxsize=None)
def run_ac4(eps):
    return run_flow(InitialCondition(GAMMA_HIGH_OCT), ModelParams(0.5, 3, 0.5, eps), 200)


@functools.lru_cache(maxsize=None)
def run_ac5():
    return run_flow(InitialCondition(OctagonSpec.rectangle(0.3, 0.3)), ModelParams(0.5, 3, 1.0, 1 / 64), 50)


@functools.lru_cache(maxsize=None)
def run_ac6():
    A = OctagonSpec.from_sides(0.25, 0.2 * SQ2)
    return run_flow(InitialCondition(A), ModelParams(0.5, 1, 0.6, 1 / 128), 200)


AC7_T = 0.15
AC7_EPS = (1 / 32, 1 / 64, 1 / 128)


@functools.lru_cache(maxsize=None)
def run_ac7(eps):
    p = ModelParams(0.5, 3, 0.5, eps)
    return run_flow(InitialCondition(GAMMA_HIGH_OCT), p, math.ceil(AC7_T / p.tau - 1e-9))


# ---------------------------------------------------------------- AC1


def _wetted_grid(rng, eps):
    """Random set I, surfactant on its outer boundary plus random extra cells, inside 12x12."""
    w, h = (int(v) for v in rng.integers(1, 11, 2))
    mask = rng.random((h, w)) < rng.uniform(0.3, 0.9)
    I = frozenset((x + 1, y + 1) for y in range(h) for x in range(w) if mask[y, x])
    if not I:
        I = frozenset({(1, 1)})
    extra = frozenset(
        (int(x), int(y)) for x, y in rng.integers(0, 12, (int(rng.integers(0, 10)), 2))
    ) - I
    return SpinGrid.from_sets(I, outer_boundary(I) | extra, eps)


def test_ac1_energy_identity():
    rng = np.random.default_rng(1)
    params = ModelParams(0.5, 3, 1.0, 1 / 16)  # dyadic: sums are exact
    with criterion("AC1 closed-form energy identity") as rec:
        t0 = time.perf_counter()
        n_i = n_ii = 0
        for _ in range(1000):
            w, h = (int(v) for v in rng.integers(1, 13, 2))
            spins = rng.integers(-1, 2, (h, w)).astype(np.int8)
            u = SpinGrid(RectSpec(0, w - 1, 0, h - 1), spins, params.epsilon)
            assert surfactant_energy_closed_form(u, params) == local_energy(u, u.Z, None, params)
            n_i += 1
        for _ in range(1000):
            u = _wetted_grid(rng, params.epsilon)
            for G in connected_components(u.I | u.Z, "strong"):
                if G & u.I:
                    assert wetted_component_energy(u, G, params) == local_energy(u, G, None, params)
                    n_ii += 1
        elapsed = time.perf_counter() - t0
        rec.detail = f"{n_i} grids for (i), {n_ii} wetted components for (ii), exact equality, {elapsed:.1f}s"
        assert elapsed < 10


# ---------------------------------------------------------------- AC2


def test_ac2_oracle_equivalence():
    with criterion("AC2 oracle equivalence") as rec:
        t0 = time.perf_counter()
        fixtures = default_fixtures()
        results = run_oracle(fixtures)
        elapsed = time.perf_counter() - t0
        worst = max(r.discrepancy for r in results)
        rec.detail = f"{len(results)} fixtures, max |dF| = {worst:.3g}, {elapsed:.1f}s"
        assert len(fixtures) >= 20
        assert max(f.window.size for f in fixtures) <= 16
        assert {f.params.gamma for f in fixtures} == {1, 3}
        assert worst <= 1e-12
        assert elapsed < 300


# ---------------------------------------------------------------- AC3


def test_ac3_surfactant_conservation():
    with criterion("AC3 surfactant conservation") as rec:
        t0 = time.perf_counter()
        tr = run_ac3()
        elapsed = time.perf_counter() - t0
        counts = {len(s.Z) for s in tr.steps}
        rec.detail = f"{len(tr.steps) - 1} steps, #Z in {sorted(counts)}, stop {tr.stop_reason}, {elapsed:.1f}s"
        assert len(tr.steps) - 1 >= 50
        assert len(counts) == 1
        assert elapsed < 60


# ---------------------------------------------------------------- AC4


def test_ac4_wetting():
    with criterion("AC4 wetting") as rec:
        t0 = time.perf_counter()
        info = []
        for eps in (1 / 16, 1 / 32):
            tr = run_ac4(eps)
            bad = [s.j for s in tr.steps[1:] if s.Z != outer_boundary(s.I)]
            info.append(f"eps=1/{round(1 / eps)}: {len(tr.steps) - 1} steps, {len(bad)} unwetted")
            assert len(tr.steps) > 2
            assert not bad
        elapsed = time.perf_counter() - t0
        rec.detail = "; ".join(info) + f", {elapsed:.1f}s"
        assert elapsed < 60


# ---------------------------------------------------------------- AC5


def test_ac5_quantized_velocity():
    with criterion("AC5 quantized velocity law") as rec:
        t0 = time.perf_counter()
        tr = run_ac5()
        p = tr.params
        band = p.epsilon ** 0.25
        checks, misses = 0, []
        for prev, cur in zip(tr.steps, tr.steps[1:]):
            if not prev.P:
                break
            for i in range(4):
                r = 2 * p.zeta * (1 - p.k) / prev.P[i]
                if 3 < r < 4:
                    want = 3
                elif abs(r - round(r)) > band:
                    want = math.floor(r)
                else:
                    continue
                checks += 1
                got = None if cur.alpha is None else cur.alpha[i]
                if got != want:
                    misses.append(f"j={cur.j} side {i + 1}: ratio {r:.3f} wants {want}, got {got}")
        elapsed = time.perf_counter() - t0
        rec.detail = f"{checks} side-steps checked, {len(misses)} mismatches {misses[:2]}, {elapsed:.1f}s"
        assert checks > 0
        assert not misses
        assert elapsed < 60


# ---------------------------------------------------------------- AC6


def test_ac6_diagonal_pinning():
    with criterion("AC6 diagonal pinning") as rec:
        t0 = time.perf_counter()
        tr = run_ac6()
        eps = tr.params.epsilon
        C = len(tr.steps[0].Z)
        thr_full = stage_threshold(C, eps)
        thr_mass = 2 * eps * math.sqrt(C)
        lines0 = diagonal_lines(tr.steps[0].I)
        above_full = above_mass = pinned = 0
        for prev, cur in zip(tr.steps, tr.steps[1:]):
            if not prev.D or not cur.I:
                break
            big = max(prev.D) / SQ2
            if big >= thr_full:
                above_full += 1
                assert diagonal_lines(cur.I) == diagonal_lines(prev.I)
            if big >= thr_mass:
                above_mass += 1
                assert diagonal_lines(cur.I) == diagonal_lines(prev.I)
        # while every diagonal keeps positive length the diagonal lines stay put
        for prev, cur in zip(tr.steps, tr.steps[1:]):
            if not cur.D or min(LatticeOctagon.hull(cur.I).legs()) == 0:
                break
            pinned += 1
            o0, o1 = LatticeOctagon.hull(prev.I), LatticeOctagon.hull(cur.I)
            assert diagonal_lines(cur.I) == lines0
            a = cur.alpha
            for i in range(4):
                assert o1.legs()[i] == o0.legs()[i] - a[i] - a[(i + 1) % 4]
                assert cur.D[i] == pytest.approx(prev.D[i] - SQ2 * eps * (a[i] + a[(i + 1) % 4]), abs=1e-12)
        bk = bookkeeping_violations(tr)
        elapsed = time.perf_counter() - t0
        rec.detail = (
            f"C={C}; steps above threshold {thr_full:.3f}: {above_full}, above 2eps*sqrt(C)={thr_mass:.3f}: "
            f"{above_mass}; {pinned} pinned steps with exact leg bookkeeping; "
            f"{len(bk)} bookkeeping violations over {len(tr.steps) - 1} steps, {elapsed:.1f}s"
        )
        assert pinned >= 5
        assert not bk
        assert elapsed < 120


# ---------------------------------------------------------------- AC7


def test_ac7_convergence():
    with criterion("AC7 discrete-to-continuum convergence") as rec:
        t0 = time.perf_counter()
        p = ModelParams(0.5, 3, 0.5, AC7_EPS[0])
        cont = integrate_flow(GAMMA_HIGH_OCT, p, AC7_T, "floor")
        table = compare_discrete_continuum([run_ac7(e) for e in AC7_EPS], cont)
        elapsed = time.perf_counter() - t0
        sups = [d for _, d in table]
        rec.detail = ", ".join(f"eps=1/{round(1 / e)}: {d:.4f} ({d / e:.2f} eps)" for e, d in table)
        rec.detail += f", {elapsed:.1f}s"
        assert not cont.stopped
        assert not [e for e in cont.events if e[1] == "diagonal-vanishes"]
        assert all(b <= a for a, b in zip(sups, sups[1:]))
        assert sups[-1] <= 10 * AC7_EPS[-1]
        assert elapsed < 600


# ---------------------------------------------------------------- AC8


def _random_octagon(rng):
    """A lattice octagon with every side at least two cells, and a continuum octagon discretizing to it."""
    while True:
        w, h = (int(v) for v in rng.integers(4, 21, 2))
        l = [int(v) for v in rng.integers(1, 8, 4)]
        if min(w - l[0] - l[3], h - l[0] - l[1], w - l[1] - l[2], h - l[2] - l[3]) >= 2:
            break
    x0, y0 = (int(v) for v in rng.integers(-20, 20, 2))
    xr, yt = x0 + w - 1, y0 + h - 1
    o = LatticeOctagon(x0, xr, y0, yt, x0 + y0 + l[0], xr + yt - l[2], x0 - yt + l[1], xr - y0 - l[3])
    eps = 1 / 16
    slack = rng.uniform(0, 0.45, 8) * eps
    slack[4:] /= SQ2
    h8 = np.array([-y0, -x0, yt, xr, -o.slo / SQ2, -o.dlo / SQ2, o.shi / SQ2, o.dhi / SQ2]) * eps + slack
    return o, OctagonSpec(tuple(h8)), eps


def test_ac8_geometry_invariants():
    rng = np.random.default_rng(8)
    with criterion("AC8 geometry invariants") as rec:
        t0 = time.perf_counter()
        for _ in range(10_000):
            I = random_staircase(rng)
            assert is_staircase(I)
            assert perimeter(I, 1.0, "slices") == perimeter(I, 1.0, "edges")
            assert outer_boundary_count(I) == len(outer_boundary(I))
        for _ in range(1000):
            o, A, eps = _random_octagon(rng)
            I = discretize_octagon(A, eps)
            assert I == o.cells()
            c = classify_shape(I, len(outer_boundary(I)), eps)
            assert c.kind == "octagon" and c.hull == o
            assert c.P == tuple(n * eps for n in o.parallel_counts())
            assert c.D == tuple(SQ2 * eps * n for n in o.legs())
            assert [len(s) for s in c.diagonal_sides] == [n + 1 for n in o.legs()]
        elapsed = time.perf_counter() - t0
        rec.detail = f"10000 staircases, 1000 octagon round trips, {elapsed:.1f}s"
        assert elapsed < 30


# ---------------------------------------------------------------- AC9


def test_ac9_inclusion_and_descent():
    with criterion("AC9 monotone inclusion and energy descent") as rec:
        traces = [run_ac3(), run_ac4(1 / 16), run_ac4(1 / 32), run_ac5(), run_ac6()]
        traces += [run_ac7(e) for e in AC7_EPS]
        n = 0
        bad = []
        for tr in traces:
            for prev, cur in zip(tr.steps, tr.steps[1:]):
                n += 1
                v = step_violations(prev, cur, tr.params, structured=False)
                if v:
                    bad.append((tr.params, cur.j, v))
        rec.detail = f"{n} accepted steps over {len(traces)} runs, {len(bad)} violations"
        assert not bad
