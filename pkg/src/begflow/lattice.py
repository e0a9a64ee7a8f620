"""Lattice coordinates, spin grids, region geometry and shape predicates.

Coordinates are integer pairs (x, y); the physical point is epsilon*(x, y) and
the physical cell is the closed epsilon-square centred there. A Region is a
frozenset of coordinates.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .octagon import SQRT2, OctagonSpec

Coord = tuple[int, int]
Region = frozenset

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_STEPS8 = _STEPS + ((1, 1), (1, -1), (-1, 1), (-1, -1))


class EmptyRegionError(ValueError):
    pass


def region(cells: Iterable) -> Region:
    return frozenset((int(x), int(y)) for x, y in cells)


# ---------------------------------------------------------------- basics


def neighbors(p: Coord) -> set[Coord]:
    x, y = p
    return {(x + dx, y + dy) for dx, dy in _STEPS}


def dist(p: Coord, q: Coord, norm: str = "L1", epsilon: float = 1.0) -> float:
    dx, dy = abs(p[0] - q[0]), abs(p[1] - q[1])
    if norm == "L1":
        return epsilon * (dx + dy)
    if norm == "Linf":
        return epsilon * max(dx, dy)
    raise ValueError(f"unknown norm {norm!r}")


@dataclass(frozen=True)
class RectSpec:
    xmin: int
    xmax: int
    ymin: int
    ymax: int

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError("empty rectangle")

    @property
    def width(self) -> int:
        return self.xmax - self.xmin + 1

    @property
    def height(self) -> int:
        return self.ymax - self.ymin + 1

    @property
    def size(self) -> int:
        return self.width * self.height

    def dilate(self, r: int = 1) -> "RectSpec":
        return RectSpec(self.xmin - r, self.xmax + r, self.ymin - r, self.ymax + r)

    def union(self, other: "RectSpec") -> "RectSpec":
        return RectSpec(
            min(self.xmin, other.xmin), max(self.xmax, other.xmax),
            min(self.ymin, other.ymin), max(self.ymax, other.ymax),
        )

    def contains(self, p: Coord) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax

    def cells(self) -> Region:
        return frozenset(
            (x, y) for y in range(self.ymin, self.ymax + 1) for x in range(self.xmin, self.xmax + 1)
        )


def bounding_rect(I: Iterable[Coord]) -> RectSpec:
    I = list(I)
    if not I:
        raise EmptyRegionError("bounding_rect of an empty region")
    xs = [p[0] for p in I]
    ys = [p[1] for p in I]
    return RectSpec(min(xs), max(xs), min(ys), max(ys))


def to_mask(I: Iterable[Coord], rect: RectSpec) -> np.ndarray:
    """Boolean array indexed [y - ymin, x - xmin]."""
    m = np.zeros((rect.height, rect.width), dtype=bool)
    for x, y in I:
        if rect.contains((x, y)):
            m[y - rect.ymin, x - rect.xmin] = True
    return m


def from_mask(mask: np.ndarray, rect: RectSpec) -> Region:
    ys, xs = np.nonzero(mask)
    return frozenset(zip((xs + rect.xmin).tolist(), (ys + rect.ymin).tolist()))


# ---------------------------------------------------------------- distances


def dist_to_boundary(p: Coord, I: Region, norm: str = "L1", epsilon: float = 1.0) -> float:
    """Distance from p to I if p is outside, to the complement if p is inside."""
    if not I:
        raise EmptyRegionError("distance to the boundary of an empty region")
    if p in I:
        # the nearest complement cell lies in the 1-dilated bounding box
        targets = [q for q in bounding_rect(I).dilate(1).cells() if q not in I]
    else:
        targets = I
    return min(dist(p, q, norm, epsilon) for q in targets)


def boundary_distance_map(I: Region, rect: Optional[RectSpec] = None) -> tuple[np.ndarray, RectSpec]:
    """Integer L1 distance d1(p, dI)/epsilon for every cell of rect.

    Inside I this is the distance to the complement, outside it is the distance
    to I. rect defaults to the bounding box of I dilated by one cell.
    """
    if not I:
        raise EmptyRegionError("distance map of an empty region")
    if rect is None:
        rect = bounding_rect(I).dilate(1)
    # pad so that the complement is present and distances are not truncated
    pad = 1
    big = rect.union(bounding_rect(I)).dilate(pad)
    m = to_mask(I, big)
    inside = ndimage.distance_transform_cdt(m, metric="taxicab")
    outside = ndimage.distance_transform_cdt(~m, metric="taxicab")
    d = np.where(m, inside, outside)
    oy, ox = rect.ymin - big.ymin, rect.xmin - big.xmin
    return d[oy:oy + rect.height, ox:ox + rect.width].astype(np.int64), rect


def outer_boundary(I: Region) -> Region:
    return frozenset(q for p in I for q in neighbors(p) if q not in I)


def inner_boundary(I: Region) -> Region:
    return frozenset(p for p in I if any(q not in I for q in neighbors(p)))


def neighbor_count(p: Coord, I: Region) -> int:
    return sum(q in I for q in neighbors(p))


# ---------------------------------------------------------------- connectivity


def connected_components(I: Region, mode: str = "strong") -> list[Region]:
    if mode == "strong":
        steps = _STEPS
    elif mode == "weak":
        steps = _STEPS8
    else:
        raise ValueError(f"unknown mode {mode!r}")
    seen: set[Coord] = set()
    comps: list[Region] = []
    for start in sorted(I):
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            x, y = queue.popleft()
            for dx, dy in steps:
                q = (x + dx, y + dy)
                if q in I and q not in seen:
                    seen.add(q)
                    comp.append(q)
                    queue.append(q)
        comps.append(frozenset(comp))
    return comps


@dataclass(frozen=True)
class SliceDecomposition:
    horizontal: tuple[tuple[int, int, int], ...]
    vertical: tuple[tuple[int, int, int], ...]

    @property
    def n_h(self) -> int:
        return len(self.horizontal)

    @property
    def n_v(self) -> int:
        return len(self.vertical)


def _segments(values: list[int]) -> list[tuple[int, int]]:
    values = sorted(values)
    out = []
    lo = prev = values[0]
    for v in values[1:]:
        if v != prev + 1:
            out.append((lo, prev))
            lo = v
        prev = v
    out.append((lo, prev))
    return out


def slices(I: Region) -> SliceDecomposition:
    """Maximal horizontal and vertical segments of I, ordered bottom-up and left-right."""
    rows: dict[int, list[int]] = {}
    cols: dict[int, list[int]] = {}
    for x, y in I:
        rows.setdefault(y, []).append(x)
        cols.setdefault(x, []).append(y)
    h = tuple((y, a, b) for y in sorted(rows) for a, b in _segments(rows[y]))
    v = tuple((x, a, b) for x in sorted(cols) for a, b in _segments(cols[x]))
    return SliceDecomposition(h, v)


def is_staircase(I: Region) -> bool:
    if not I:
        return False
    s = slices(I)
    rows = {r for r, _, _ in s.horizontal}
    cols = {c for c, _, _ in s.vertical}
    if len(rows) != s.n_h or len(cols) != s.n_v:
        return False
    return len(connected_components(I, "strong")) == 1


# ---------------------------------------------------------------- perimeter


def perimeter_edges(I: Region, epsilon: float = 1.0) -> float:
    if not I:
        raise EmptyRegionError("perimeter of an empty region")
    return epsilon * sum(q not in I for p in I for q in neighbors(p))


def perimeter(I: Region, epsilon: float = 1.0, method: str = "auto") -> float:
    """Per(A_I). 'slices' uses 2eps(n_h+n_v) and needs a staircase set."""
    if not I:
        raise EmptyRegionError("perimeter of an empty region")
    if method == "edges":
        return perimeter_edges(I, epsilon)
    if method == "slices":
        if not is_staircase(I):
            raise ValueError("slice perimeter formula needs a staircase set")
        s = slices(I)
        return 2 * epsilon * (s.n_h + s.n_v)
    if method == "auto":
        return perimeter_edges(I, epsilon)
    raise ValueError(f"unknown method {method!r}")


def concave_outer_cells(I: Region) -> Region:
    """Complement cells with exactly two neighbours in I."""
    cand = outer_boundary(I)
    return frozenset(p for p in cand if neighbor_count(p, I) == 2)


def outer_boundary_count(I: Region) -> int:
    """#d+I through Per/eps minus the concave complement cells (staircase only)."""
    if not I:
        raise EmptyRegionError("empty region")
    if not is_staircase(I):
        raise ValueError("outer_boundary_count needs a staircase set")
    s = slices(I)
    return 2 * (s.n_h + s.n_v) - len(concave_outer_cells(I))


# ---------------------------------------------------------------- spin grids


@dataclass(frozen=True, eq=False)
class SpinGrid:
    """Spins in a window; everything outside the window is -1.

    spins is indexed [y - ymin, x - xmin] with int8 values in {-1, 0, 1}.
    """

    window: RectSpec
    spins: np.ndarray
    epsilon: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.spins, dtype=np.int8)
        if s.shape != (self.window.height, self.window.width):
            raise ValueError("spin array does not match window")
        if not np.isin(s, (-1, 0, 1)).all():
            raise ValueError("spins must be -1, 0 or +1")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "spins", s)

    @classmethod
    def from_sets(
        cls, I: Iterable[Coord], Z: Iterable[Coord], epsilon: float = 1.0, window: Optional[RectSpec] = None
    ) -> "SpinGrid":
        I, Z = frozenset(I), frozenset(Z)
        if I & Z:
            raise ValueError("phase and surfactant sets overlap")
        if window is None:
            allc = I | Z
            window = bounding_rect(allc) if allc else RectSpec(0, 0, 0, 0)
        s = np.full((window.height, window.width), -1, dtype=np.int8)
        for (x, y) in I:
            if not window.contains((x, y)):
                raise ValueError("phase-1 cell outside window")
            s[y - window.ymin, x - window.xmin] = 1
        for (x, y) in Z:
            if not window.contains((x, y)):
                raise ValueError("surfactant cell outside window")
            s[y - window.ymin, x - window.xmin] = 0
        return cls(window, s, epsilon)

    def _cells(self, value: int) -> Region:
        ys, xs = np.nonzero(self.spins == value)
        return frozenset(zip((xs + self.window.xmin).tolist(), (ys + self.window.ymin).tolist()))

    @property
    def I(self) -> Region:
        return self._cells(1)

    @property
    def Z(self) -> Region:
        return self._cells(0)

    def __getitem__(self, p: Coord) -> int:
        if not self.window.contains(p):
            return -1
        return int(self.spins[p[1] - self.window.ymin, p[0] - self.window.xmin])

    def padded(self, rect: RectSpec) -> np.ndarray:
        """Spin array over rect (which must contain the window's +1/0 cells)."""
        out = np.full((rect.height, rect.width), -1, dtype=np.int8)
        w = self.window
        x0, x1 = max(w.xmin, rect.xmin), min(w.xmax, rect.xmax)
        y0, y1 = max(w.ymin, rect.ymin), min(w.ymax, rect.ymax)
        if x0 <= x1 and y0 <= y1:
            out[y0 - rect.ymin:y1 - rect.ymin + 1, x0 - rect.xmin:x1 - rect.xmin + 1] = self.spins[
                y0 - w.ymin:y1 - w.ymin + 1, x0 - w.xmin:x1 - w.xmin + 1
            ]
        return out

    def with_window(self, rect: RectSpec) -> "SpinGrid":
        if not all(rect.contains(p) for p in self.I | self.Z):
            raise ValueError("new window drops nonambient cells")
        return SpinGrid(rect, self.padded(rect), self.epsilon)

    def same_configuration(self, other: "SpinGrid") -> bool:
        return self.I == other.I and self.Z == other.Z

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinGrid):
            return NotImplemented
        return self.epsilon == other.epsilon and self.same_configuration(other)

    def __hash__(self):
        return hash((self.I, self.Z, self.epsilon))

    def translate(self, dx: int, dy: int) -> "SpinGrid":
        w = self.window
        return SpinGrid(RectSpec(w.xmin + dx, w.xmax + dx, w.ymin + dy, w.ymax + dy), self.spins, self.epsilon)


# ---------------------------------------------------------------- corners


def corner_cells(u: SpinGrid) -> tuple[Region, Region, Region]:
    """(inner corners, outer corners, surfactant-in-the-corner cells)."""
    I = u.I
    inner = frozenset(p for p in inner_boundary(I) if neighbor_count(p, I) == 2)
    outer = concave_outer_cells(I)
    flagged = set()
    rot = [((1, 0), (0, 1)), ((0, 1), (-1, 0)), ((-1, 0), (0, -1)), ((0, -1), (1, 0))]
    for p in u.Z:
        x, y = p
        for (ax, ay), (bx, by) in rot:
            if u[(x + ax, y + ay)] == 0 and u[(x + bx, y + by)] == 0:
                s1, s2 = u[(x - ax, y - ay)], u[(x - bx, y - by)]
                if s1 == s2 and s1 != 0:
                    flagged.add(p)
                    break
    return inner, outer, frozenset(flagged)


# ---------------------------------------------------------------- octagons


@dataclass(frozen=True)
class LatticeOctagon:
    """Cells with xl<=x<=xr, yb<=y<=yt, slo<=x+y<=shi, dlo<=x-y<=dhi."""

    xl: int
    xr: int
    yb: int
    yt: int
    slo: int
    shi: int
    dlo: int
    dhi: int

    @classmethod
    def hull(cls, I: Iterable[Coord]) -> "LatticeOctagon":
        pts = np.array(sorted(I), dtype=np.int64)
        if len(pts) == 0:
            raise EmptyRegionError("hull of an empty region")
        x, y = pts[:, 0], pts[:, 1]
        s, d = x + y, x - y
        return cls(int(x.min()), int(x.max()), int(y.min()), int(y.max()),
                   int(s.min()), int(s.max()), int(d.min()), int(d.max()))

    def bounds(self) -> tuple[int, ...]:
        return (self.xl, self.xr, self.yb, self.yt, self.slo, self.shi, self.dlo, self.dhi)

    def row_range(self, y: int) -> tuple[int, int]:
        lo = max(self.xl, self.slo - y, self.dlo + y)
        hi = min(self.xr, self.shi - y, self.dhi + y)
        return lo, hi

    def cells(self) -> Region:
        out = []
        for y in range(self.yb, self.yt + 1):
            lo, hi = self.row_range(y)
            out.extend((x, y) for x in range(lo, hi + 1))
        return frozenset(out)

    def tightened(self) -> "LatticeOctagon":
        c = self.cells()
        if not c:
            raise EmptyRegionError("empty lattice octagon")
        return LatticeOctagon.hull(c)

    @property
    def width(self) -> int:
        return self.xr - self.xl + 1

    @property
    def height(self) -> int:
        return self.yt - self.yb + 1

    def legs(self) -> tuple[int, int, int, int]:
        """Cells on each diagonal side minus one (D1..D4), for tight bounds."""
        return (
            self.slo - self.xl - self.yb,
            self.dlo - (self.xl - self.yt),
            (self.xr + self.yt) - self.shi,
            (self.xr - self.yb) - self.dhi,
        )

    def parallel_counts(self) -> tuple[int, int, int, int]:
        l1, l2, l3, l4 = self.legs()
        return (
            self.width - l1 - l4,
            self.height - l1 - l2,
            self.width - l2 - l3,
            self.height - l3 - l4,
        )

    def side_lengths(self, epsilon: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
        P = tuple(epsilon * n for n in self.parallel_counts())
        D = tuple(SQRT2 * epsilon * m for m in self.legs())
        return P, D

    def parallel_sides(self) -> tuple[Region, Region, Region, Region]:
        c = self.cells()
        return (
            frozenset(p for p in c if p[1] == self.yb),
            frozenset(p for p in c if p[0] == self.xl),
            frozenset(p for p in c if p[1] == self.yt),
            frozenset(p for p in c if p[0] == self.xr),
        )

    def diagonal_sides(self) -> tuple[Region, Region, Region, Region]:
        c = self.cells()
        return (
            frozenset(p for p in c if p[0] + p[1] == self.slo),
            frozenset(p for p in c if p[0] - p[1] == self.dlo),
            frozenset(p for p in c if p[0] + p[1] == self.shi),
            frozenset(p for p in c if p[0] - p[1] == self.dhi),
        )

    def enclosing_octagon(self, epsilon: float) -> OctagonSpec:
        """Smallest continuum octagon containing the union of the cells."""
        e = epsilon
        par = (-(self.yb - 0.5) * e, -(self.xl - 0.5) * e, (self.yt + 0.5) * e, (self.xr + 0.5) * e)
        diag = (
            -(self.slo - 1) * e / SQRT2,
            (-(self.dlo - 1)) * e / SQRT2,
            (self.shi + 1) * e / SQRT2,
            (self.dhi + 1) * e / SQRT2,
        )
        return OctagonSpec(par + diag)


def is_octagon(I: Region) -> bool:
    """Def: I equals the lattice points of some octagon with the eight normals."""
    if not I:
        return False
    return LatticeOctagon.hull(I).cells() == I


def remark_boundary_pair_criterion(I: Region) -> bool:
    """Every axis-adjacent pair of inner-boundary cells lies in an external slice."""
    if not is_staircase(I):
        return False
    r = bounding_rect(I)
    inner = inner_boundary(I)
    for (x, y) in inner:
        for q in ((x + 1, y), (x, y + 1)):
            if q not in inner:
                continue
            same_row = q[1] == y
            if same_row and y in (r.ymin, r.ymax):
                continue
            if not same_row and x in (r.xmin, r.xmax):
                continue
            return False
    return True


@dataclass(frozen=True)
class OctagonClassification:
    kind: str
    parallel_sides: tuple
    diagonal_sides: tuple
    P: tuple
    D: tuple
    hull: Optional[LatticeOctagon] = None
    core: Optional[LatticeOctagon] = None
    fringes: tuple = field(default_factory=tuple)
    threshold_cells: int = 0


def quasi_rectangle_threshold(C: int, epsilon: float) -> int:
    """Diagonal threshold of the quasi-rectangle class, in cells (D/sqrt2/eps)."""
    a = math.ceil(4 * math.sqrt(C))
    b = math.ceil(epsilon ** (1 / 8 - 1) - 1e-9)
    return max(a, b)


def _quasi_rectangle_core(I: Region, m: int) -> Optional[LatticeOctagon]:
    r = bounding_rect(I)
    xl, xr, yb, yt = r.xmin + 1, r.xmax - 1, r.ymin + 1, r.ymax - 1
    if xr - xl + 1 < 2 * m + 1 or yt - yb + 1 < 2 * m + 1:
        return None
    core = LatticeOctagon(xl, xr, yb, yt, xl + yb + m, xr + yt - m, xl - yt + m, xr - yb - m)
    if core.cells() <= I:
        return core
    return None


def classify_shape(I: Region, C: int, epsilon: float) -> OctagonClassification:
    if not I or not is_staircase(I):
        return OctagonClassification("staircase-other", (), (), (), ())
    m = quasi_rectangle_threshold(C, epsilon)
    hull = LatticeOctagon.hull(I)
    if hull.cells() == I:
        P, D = hull.side_lengths(epsilon)
        kind = "octagon"
        core = None
        fringes: tuple = ()
        if max(hull.legs()) <= m:
            core = _quasi_rectangle_core(I, m)
            if core is not None:
                kind = "quasi-rectangle"
                fringes = _fringes(I, core)
        return OctagonClassification(kind, hull.parallel_sides(), hull.diagonal_sides(), P, D,
                                     hull, core, fringes, m)
    core = _quasi_rectangle_core(I, m)
    r = bounding_rect(I)
    ext = (
        frozenset(p for p in I if p[1] == r.ymin),
        frozenset(p for p in I if p[0] == r.xmin),
        frozenset(p for p in I if p[1] == r.ymax),
        frozenset(p for p in I if p[0] == r.xmax),
    )
    P = tuple(epsilon * len(s) for s in ext)
    if core is not None:
        return OctagonClassification("quasi-rectangle", ext, (), P, (), None, core, _fringes(I, core), m)
    return OctagonClassification("staircase-other", ext, (), P, (), None, None, (), m)


def _fringes(I: Region, core: LatticeOctagon) -> tuple:
    rest = I - core.cells()
    xl, xr, yb, yt = core.xl, core.xr, core.yb, core.yt
    inner = frozenset(p for p in rest if xl <= p[0] <= xr and yb <= p[1] <= yt)
    cx, cy = (xl + xr) / 2, (yb + yt) / 2
    quad = [[], [], [], []]
    for x, y in inner:
        if y < cy:
            quad[0 if x < cx else 3].append((x, y))
        else:
            quad[1 if x < cx else 2].append((x, y))
    return tuple(frozenset(q) for q in quad)


def discretize_octagon(A: OctagonSpec, epsilon: float) -> Region:
    """Lattice coordinates whose physical point lies in the closed octagon."""
    h = A.offsets
    xl = math.ceil(-h[1] / epsilon - 1e-9)
    xr = math.floor(h[3] / epsilon + 1e-9)
    yb = math.ceil(-h[0] / epsilon - 1e-9)
    yt = math.floor(h[2] / epsilon + 1e-9)
    if xl > xr or yb > yt:
        return frozenset()
    slo = math.ceil(-SQRT2 * h[4] / epsilon - 1e-9)
    shi = math.floor(SQRT2 * h[6] / epsilon + 1e-9)
    dlo = math.ceil(-SQRT2 * h[5] / epsilon - 1e-9)
    dhi = math.floor(SQRT2 * h[7] / epsilon + 1e-9)
    return LatticeOctagon(xl, xr, yb, yt, slo, shi, dlo, dhi).cells()
