"""Continuum octagons with sides normal to the eight lattice directions.

An octagon is stored as eight support offsets h_k = max_{x in A} <x, n_k>.
Index order: P1 (bottom), P2 (left), P3 (top), P4 (right), then
D1 (lower-left), D2 (upper-left), D3 (upper-right), D4 (lower-right).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)
_R = 1.0 / SQRT2

NORMALS = np.array(
    [
        [0.0, -1.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [1.0, 0.0],
        [-_R, -_R],
        [-_R, _R],
        [_R, _R],
        [_R, -_R],
    ]
)

# counterclockwise order of normals by angle: P1, D4, P4, D3, P3, D2, P2, D1
_CCW = [0, 7, 3, 6, 2, 5, 1, 4]


def _clip(poly: list[tuple[float, float]], n: np.ndarray, h: float) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        fa = n[0] * a[0] + n[1] * a[1] - h
        fb = n[0] * b[0] + n[1] * b[1] - h
        if fa <= 0:
            out.append(a)
        if (fa < 0 < fb) or (fb < 0 < fa):
            s = fa / (fa - fb)
            out.append((a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])))
    return out


@dataclass(frozen=True)
class OctagonSpec:
    offsets: tuple[float, ...]

    def __post_init__(self):
        if len(self.offsets) != 8:
            raise ValueError("an octagon needs exactly 8 support offsets")
        object.__setattr__(self, "offsets", tuple(float(h) for h in self.offsets))

    @classmethod
    def from_sides(cls, P: float, D: float, center: tuple[float, float] = (0.0, 0.0)) -> "OctagonSpec":
        """Symmetric octagon with all parallel sides P and all diagonal sides D."""
        if P < 0 or D < 0:
            raise ValueError("side lengths must be nonnegative")
        half = P / 2 + D / SQRT2
        diag = (P / 2 + D / (2 * SQRT2)) * SQRT2
        return cls.from_offsets_centered([half] * 4, [diag] * 4, center)

    @classmethod
    def rectangle(cls, width: float, height: float, center: tuple[float, float] = (0.0, 0.0)) -> "OctagonSpec":
        hx, hy = width / 2, height / 2
        diag = (hx + hy) / SQRT2
        return cls.from_offsets_centered([hy, hx, hy, hx], [diag] * 4, center)

    @classmethod
    def from_offsets_centered(cls, par, diag, center=(0.0, 0.0)) -> "OctagonSpec":
        c = np.asarray(center, dtype=float)
        h = np.concatenate([np.asarray(par, float), np.asarray(diag, float)])
        return cls(tuple(h + NORMALS @ c))

    def translate(self, dx: float, dy: float) -> "OctagonSpec":
        return OctagonSpec(tuple(np.asarray(self.offsets) + NORMALS @ np.array([dx, dy])))

    def vertices(self) -> list[tuple[float, float]]:
        """Vertices of the polygon, counterclockwise, duplicates removed."""
        h = self.offsets
        big = 1.0 + 4.0 * max(abs(v) for v in h)
        poly = [(-big, -big), (big, -big), (big, big), (-big, big)]
        for k in _CCW:
            poly = _clip(poly, NORMALS[k], h[k])
            if not poly:
                return []
        out: list[tuple[float, float]] = []
        for p in poly:
            if not out or math.dist(p, out[-1]) > 1e-13:
                out.append(p)
        if len(out) > 1 and math.dist(out[0], out[-1]) <= 1e-13:
            out.pop()
        return out

    def is_empty(self) -> bool:
        v = self.vertices()
        if len(v) < 3:
            return True
        return self.area() <= 0.0

    def area(self) -> float:
        v = self.vertices()
        if len(v) < 3:
            return 0.0
        a = 0.0
        for i in range(len(v)):
            x0, y0 = v[i]
            x1, y1 = v[(i + 1) % len(v)]
            a += x0 * y1 - x1 * y0
        return a / 2

    def tightened(self) -> "OctagonSpec":
        v = np.asarray(self.vertices())
        if len(v) == 0:
            raise ValueError("empty octagon")
        return OctagonSpec(tuple((v @ NORMALS.T).max(axis=0)))

    def side_lengths(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """(P1..P4, D1..D4) of the tightened octagon."""
        h = self.tightened().offsets
        hp, hd = h[:4], h[4:]
        P = tuple(max(0.0, SQRT2 * (hd[(i - 1) % 4] + hd[i]) - 2 * hp[i]) for i in range(4))
        D = tuple(max(0.0, SQRT2 * (hp[i] + hp[(i + 1) % 4]) - 2 * hd[i]) for i in range(4))
        return P, D

    def contains(self, x: np.ndarray, y: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        pts = np.stack([np.asarray(x, float), np.asarray(y, float)], axis=-1)
        lhs = pts @ NORMALS.T
        return np.all(lhs <= np.asarray(self.offsets) + tol, axis=-1)

    def polygon(self):
        from shapely.geometry import Polygon

        return Polygon(self.vertices())
