"""Minimizing-movement driver, traces and comparison metrics."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .dissipation import StepFunctionalValue
from .energy import ModelParams, ParameterError, total_energy
from .lattice import (
    EmptyRegionError,
    LatticeOctagon,
    Region,
    SpinGrid,
    bounding_rect,
    classify_shape,
    connected_components,
    discretize_octagon,
    is_octagon,
    is_staircase,
    outer_boundary,
)
from .minimize import (
    Displacements,
    PreconditionError,
    SearchCapError,
    StepResult,
    brute_force_search,
    place_surfactant,
    search_gamma_high,
    search_gamma_low,
    write_audit_csv,
)
from .octagon import SQRT2, OctagonSpec
from .serialize import grid_to_json

STOP_REASONS = ("max-steps", "side-collapse", "width-below-threshold", "pinned-steady")
SIDE_HEADER = ["t", "P1", "P2", "P3", "P4", "D1", "D2", "D3", "D4", "nZ", "energy"]


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    """An octagon and a surfactant amount ("ring" means #outer boundary)."""

    octagon: OctagonSpec
    surfactant_count: Union[int, str] = "ring"

    def phase_set(self, epsilon: float) -> Region:
        I = discretize_octagon(self.octagon, epsilon)
        if not I:
            raise EmptyRegionError("the initial octagon contains no lattice point")
        return I

    def count(self, epsilon: float) -> int:
        if self.surfactant_count == "ring":
            return len(outer_boundary(self.phase_set(epsilon)))
        return int(self.surfactant_count)

    def validate(self, params: ModelParams) -> None:
        I = self.phase_set(params.epsilon)
        C = self.count(params.epsilon)
        ring = len(outer_boundary(I))
        if C < ring:
            raise ParameterError(f"surfactant count {C} cannot ring the initial set ({ring} needed)")
        if params.gamma < 2:
            P, D = LatticeOctagon.hull(I).side_lengths(params.epsilon)
            need = sum(P) + sum(d / SQRT2 for d in D)
            if params.epsilon * C < need - 1e-12:
                raise ParameterError(
                    f"eps*C = {params.epsilon * C:.6g} is below the side budget {need:.6g}"
                )

    def build(self, params: ModelParams, order_seed: Optional[int] = None) -> SpinGrid:
        I = self.phase_set(params.epsilon)
        C = self.count(params.epsilon)
        Z = outer_boundary(I) if self.surfactant_count == "ring" else place_surfactant(I, C, params, order_seed)
        return SpinGrid.from_sets(I, Z, params.epsilon)


@dataclass(frozen=True)
class StepRecord:
    j: int
    grid: SpinGrid
    energy: float
    d1: float
    d0: int
    P: tuple
    D: tuple
    alpha: Optional[tuple]
    beta: Optional[tuple]
    stage: str = ""
    flags: tuple = ()
    alpha_band: Optional[tuple] = None

    @property
    def I(self) -> Region:
        return self.grid.I

    @property
    def Z(self) -> Region:
        return self.grid.Z


@dataclass
class FlowTrace:
    steps: list
    params: ModelParams
    stop_reason: str = "max-steps"
    header: dict = field(default_factory=dict)
    note: str = ""
    audit: list = field(default_factory=list)

    @property
    def tau(self) -> float:
        return self.params.tau

    def times(self) -> list[float]:
        return [s.j * self.tau for s in self.steps]


def _sides(I: Region, epsilon: float) -> tuple[tuple, tuple, tuple]:
    if I and is_octagon(I):
        P, D = LatticeOctagon.hull(I).side_lengths(epsilon)
        return P, D, ()
    return (), (), ("unclassifiable",)


def _record(j: int, grid: SpinGrid, value: StepFunctionalValue, disp: Optional[Displacements],
            stage: str, flags: tuple = (), band=None) -> StepRecord:
    P, D, f = _sides(grid.I, grid.epsilon)
    return StepRecord(
        j, grid, value.energy, value.d1, value.d0, P, D,
        disp.alpha if disp else None, disp.beta if disp else None,
        stage, tuple(flags) + f, band,
    )


def step_violations(prev: StepRecord, cur: StepRecord, params: ModelParams, structured: bool) -> list[str]:
    """Per-step invariants; regime-specific ones only for structured steps."""
    out = []
    I0, I1 = prev.I, cur.I
    if not I1 <= I0:
        out.append("inclusion")
    lhs = cur.energy + (cur.d1 + params.epsilon ** params.gamma * cur.d0) / params.tau
    if lhs > prev.energy + 1e-12 * max(1.0, prev.energy):
        out.append("energy-descent")
    if structured and I1:
        if not is_staircase(I1) or len(connected_components(I1, "strong")) != 1:
            out.append("staircase")
        if params.gamma < 2:
            if len(cur.Z) != len(prev.Z):
                out.append("conservation")
            if not outer_boundary(I1) <= cur.Z:
                out.append("ring")
        elif params.gamma > 2 and cur.Z != outer_boundary(I1):
            out.append("wetting")
    return out


def run_flow(
    init: InitialCondition,
    params: ModelParams,
    max_steps: int,
    minimizer: str = "structured",
    width_cells: int = 4,
    order_seed: Optional[int] = None,
    audit: bool = False,
    strict: bool = True,
    brute_window_dilation: int = 1,
) -> FlowTrace:
    """Iterate the step minimizer from the discretized initial octagon."""
    if minimizer not in ("structured", "brute"):
        raise ValueError(f"unknown minimizer {minimizer!r}")
    if params.gamma == 2:
        raise ParameterError("gamma = 2 is not covered by either regime")
    init.validate(params)
    u = init.build(params, order_seed)
    E0 = total_energy(u, params)
    first = _record(0, u, StepFunctionalValue(E0, 0.0, 0, E0), None, "initial")
    trace = FlowTrace([first], params, "max-steps", {
        "k": params.k, "gamma": params.gamma, "zeta": params.zeta, "epsilon": params.epsilon,
        "tau": params.tau, "max_steps": max_steps, "minimizer": minimizer, "width_cells": width_cells,
        "surfactant_count": init.surfactant_count, "octagon_offsets": list(init.octagon.offsets),
        "order_seed": order_seed, "brute_window_dilation": brute_window_dilation,
    })
    for j in range(1, max_steps + 1):
        prev = trace.steps[-1]
        I = prev.I
        if I and is_octagon(I) and min(LatticeOctagon.hull(I).parallel_counts()) < width_cells:
            trace.stop_reason = "width-below-threshold"
            break
        try:
            if minimizer == "brute":
                win = bounding_rect(I | u.Z).dilate(brute_window_dilation)
                grid, value = brute_force_search(u, params, win)
                disp = None
                if grid.I and is_octagon(grid.I) and I:
                    disp = Displacements.measure(LatticeOctagon.hull(I), LatticeOctagon.hull(grid.I))
                res = StepResult(grid, disp, value, None, "brute")
            elif params.gamma > 2:
                res = search_gamma_high(u, params, audit=audit)
            else:
                res = search_gamma_low(u, params, audit=audit, order_seed=order_seed)
        except (PreconditionError, SearchCapError, EmptyRegionError) as exc:
            trace.stop_reason = "side-collapse"
            trace.note = str(exc)
            break
        flags = []
        if params.gamma > 2 and res.displacements is not None and 0 in LatticeOctagon.hull(I).legs():
            flags.append("outside-theory")
        rec = _record(j, res.grid, res.value, res.displacements, res.stage, flags, res.alpha_band)
        bad = step_violations(prev, rec, params, minimizer == "structured")
        if bad:
            if strict:
                raise InvariantViolation(f"step {j}: {', '.join(bad)}")
            rec = StepRecord(**{**rec.__dict__, "flags": rec.flags + tuple(bad)})
        trace.steps.append(rec)
        if audit and res.audit:
            trace.audit.append((j, res))
        if res.grid.same_configuration(u):
            trace.stop_reason = "pinned-steady"
            break
        u = res.grid
        if not u.I:
            trace.stop_reason = "side-collapse"
            break
    trace.header["stop_reason"] = trace.stop_reason
    return trace


# ---------------------------------------------------------------- queries


def region_at_time(trace: FlowTrace, t: float) -> Region:
    n = len(trace.steps)
    if t < 0 or t > n * trace.tau * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {n * trace.tau}]")
    j = math.floor(t / trace.tau + 1e-9)
    return trace.steps[min(j, n - 1)].I


def _cells_polygon(I: Region, epsilon: float):
    from shapely.geometry import box
    from shapely.ops import unary_union

    h = epsilon / 2
    rows: dict[int, list[int]] = {}
    for x, y in I:
        rows.setdefault(y, []).append(x)
    boxes = []
    for y, xs in rows.items():
        xs.sort()
        start = prev = xs[0]
        for x in xs[1:] + [None]:
            if x is not None and x == prev + 1:
                prev = x
                continue
            boxes.append(box(start * epsilon - h, y * epsilon - h, prev * epsilon + h, y * epsilon + h))
            if x is not None:
                start = prev = x
    return unary_union(boxes)


def _as_geometry(X, epsilon: float):
    if isinstance(X, OctagonSpec):
        if X.is_empty():
            raise EmptyRegionError("empty octagon")
        return X.polygon(), True
    X = frozenset(X)
    if not X:
        raise EmptyRegionError("empty region")
    return _cells_polygon(X, epsilon), False


def _exterior_coords(g) -> np.ndarray:
    polys = getattr(g, "geoms", [g])
    return np.vstack([np.asarray(p.exterior.coords) for p in polys])


def _segments(g, max_len: float) -> np.ndarray:
    """Boundary of g as an (n, 4) array of segments no longer than max_len."""
    import shapely

    bd = shapely.segmentize(g.boundary, max_len)
    lines = getattr(bd, "geoms", [bd])
    segs = []
    for ln in lines:
        c = np.asarray(ln.coords)
        segs.append(np.hstack([c[:-1], c[1:]]))
    return np.vstack(segs)


def _point_segment_distance(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    a, b = segs[..., 0:2], segs[..., 2:4]
    ab = b - a
    L2 = np.maximum((ab * ab).sum(-1), 1e-300)
    t = np.clip(((pts - a) * ab).sum(-1) / L2, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.sqrt(((pts - proj) ** 2).sum(-1))


def _distance_to_boundary(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Exact distance from points to a union of short segments."""
    from scipy.spatial import cKDTree

    mid = (segs[:, 0:2] + segs[:, 2:4]) / 2
    half = np.sqrt(((segs[:, 2:4] - segs[:, 0:2]) ** 2).sum(-1)).max() / 2
    k = min(8, len(segs))
    tree = cKDTree(mid)
    dm, idx = tree.query(pts, k=k)
    dm, idx = dm.reshape(len(pts), k), idx.reshape(len(pts), k)
    d = _point_segment_distance(pts[:, None, :], segs[idx]).min(axis=1)
    # a segment is within half its length of its midpoint
    unsure = np.nonzero(dm[:, -1] - half < d)[0] if k < len(segs) else np.array([], dtype=int)
    for i in unsure:
        d[i] = _point_segment_distance(pts[i][None, :], segs).min()
    return d


def _directed(A, B, b_convex: bool, spacing: float, epsilon: float) -> float:
    """sup over a in A of dist(a, B)."""
    import shapely

    if b_convex:
        pts = _exterior_coords(A)
        return float(shapely.distance(B, shapely.points(pts)).max())
    rest = A.difference(B)
    if rest.is_empty:
        return 0.0
    # d(., B) is 1-Lipschitz; sample the boundary of A and a grid over A minus B
    pts = [shapely.get_coordinates(shapely.segmentize(A.boundary, spacing / 4))]
    for piece in getattr(rest, "geoms", [rest]):
        x0, y0, x1, y1 = piece.bounds
        xs = np.arange(x0, x1 + spacing, spacing)
        ys = np.arange(y0, y1 + spacing, spacing)
        gx, gy = np.meshgrid(xs, ys)
        cand = np.column_stack([gx.ravel(), gy.ravel()])
        pts.append(cand[shapely.contains_xy(piece, cand[:, 0], cand[:, 1])])
        pts.append(shapely.get_coordinates(piece.exterior))
    P = np.vstack(pts)
    outside = ~shapely.contains_xy(B, P[:, 0], P[:, 1])
    P = P[outside]
    if len(P) == 0:
        return 0.0
    return float(_distance_to_boundary(P, _segments(B, epsilon)).max())


def hausdorff_distance(X, Y, epsilon: float, spacing: Optional[float] = None) -> float:
    """Hausdorff distance of the physical sets (cell unions or octagons).

    Exact whenever the target of a directed distance is convex. Otherwise the
    source is sampled on a grid of the given spacing (default eps/32) plus a
    dense boundary sampling, so the error is below spacing/sqrt(2).
    """
    A, a_convex = _as_geometry(X, epsilon)
    B, b_convex = _as_geometry(Y, epsilon)
    s = spacing if spacing is not None else epsilon / 32
    return max(_directed(A, B, b_convex, s, epsilon), _directed(B, A, a_convex, s, epsilon))


# ---------------------------------------------------------------- side series


@dataclass(frozen=True)
class SideRow:
    t: float
    P: tuple
    D: tuple
    nZ: int
    energy: float
    flagged: bool


def extract_side_series(trace: FlowTrace) -> list[SideRow]:
    rows = []
    for s in trace.steps:
        flagged = not s.P
        P = s.P if s.P else (math.nan,) * 4
        D = s.D if s.D else (math.nan,) * 4
        rows.append(SideRow(s.j * trace.tau, P, D, len(s.Z), s.energy, flagged))
    return rows


def bookkeeping_violations(trace: FlowTrace) -> list[int]:
    """Steps whose side counts break P' = P + 2a_i - (b_{i-1} + b_i), leg' = leg + b_i - a_i - a_{i+1}."""
    bad = []
    for prev, cur in zip(trace.steps, trace.steps[1:]):
        if cur.alpha is None or not prev.I or not cur.I:
            continue
        o0, o1 = LatticeOctagon.hull(prev.I), LatticeOctagon.hull(cur.I)
        P0, P1 = o0.parallel_counts(), o1.parallel_counts()
        L0, L1 = o0.legs(), o1.legs()
        a, b = cur.alpha, cur.beta
        ok = all(P1[i] == P0[i] + 2 * a[i] - (b[i - 1] + b[i]) for i in range(4))
        ok &= all(L1[i] == L0[i] + b[i] - a[i] - a[(i + 1) % 4] for i in range(4))
        if not ok:
            bad.append(cur.j)
    return bad


def diagonal_lines(I: Region) -> tuple[int, int, int, int]:
    o = LatticeOctagon.hull(I)
    return (o.slo, o.dlo, o.shi, o.dhi)


# ---------------------------------------------------------------- output


def write_side_csv(trace: FlowTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SIDE_HEADER)
        for r in extract_side_series(trace):
            w.writerow([repr(r.t), *[repr(v) for v in r.P], *[repr(v) for v in r.D], r.nZ, repr(r.energy)])


def write_trace_jsonl(trace: FlowTrace, path) -> None:
    with open(path, "w") as fh:
        for s in trace.steps:
            line = {
                "j": s.j,
                "t": s.j * trace.tau,
                "grid": grid_to_json(s.grid),
                "energy": s.energy,
                "d1": s.d1,
                "d0": s.d0,
                "P": list(s.P),
                "D": list(s.D),
                "alpha": list(s.alpha) if s.alpha else None,
                "beta": list(s.beta) if s.beta else None,
                "stage": s.stage,
                "flags": list(s.flags),
            }
            if s.alpha_band is not None:
                line["alpha_band"] = [list(b) for b in s.alpha_band]
            fh.write(json.dumps(line, sort_keys=True) + "\n")


def write_header(trace: FlowTrace, path) -> None:
    with open(path, "w") as fh:
        json.dump({**trace.header, "note": trace.note}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_audit(trace: FlowTrace, path) -> None:
    write_audit_csv(path, trace.audit)
