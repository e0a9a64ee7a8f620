"""Per-step minimizers of the step functional.

brute_force_minimizer enumerates every spin assignment of a small window and
is the oracle. The structured searches scan octagon candidates obtained by
moving the eight side lines of the previous octagon inward; their energies
and dissipations come from exact integer closed forms and the winner is
re-evaluated on the lattice.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dissipation import StepFunctionalValue, functional_total, step_functional
from .energy import ModelParams, energy_from_counts
from .lattice import (
    LatticeOctagon,
    Region,
    RectSpec,
    SpinGrid,
    boundary_distance_map,
    bounding_rect,
    classify_shape,
    neighbor_count,
    outer_boundary,
    to_mask,
)
from .octagon import SQRT2

log = logging.getLogger(__name__)

DEFAULT_CAP = 3 ** 16
STAGE_MU = 1 / 8


class PreconditionError(ValueError):
    pass


class SearchCapError(ValueError):
    pass


@dataclass(frozen=True)
class Displacements:
    alpha: tuple[int, int, int, int]
    beta: tuple[int, int, int, int]

    @classmethod
    def measure(cls, old: LatticeOctagon, new: LatticeOctagon) -> "Displacements":
        alpha = (new.yb - old.yb, new.xl - old.xl, old.yt - new.yt, old.xr - new.xr)
        beta = (new.slo - old.slo, new.dlo - old.dlo, old.shi - new.shi, old.dhi - new.dhi)
        return cls(alpha, beta)


@dataclass(frozen=True)
class SearchSpace:
    kind: str
    bounds: dict

    def __post_init__(self):
        for name, (lo, hi) in self.bounds.items():
            if lo > hi:
                raise ValueError(f"empty range for {name}")


@dataclass
class StepResult:
    grid: SpinGrid
    displacements: Optional[Displacements]
    value: StepFunctionalValue
    space: SearchSpace
    stage: str = ""
    n_candidates: int = 0
    audit: list = field(default_factory=list)
    alpha_band: Optional[tuple] = None


# ------------------------------------------------------------------ oracle


def _row_major(rect: RectSpec) -> list[tuple[int, int]]:
    return [(x, y) for y in range(rect.ymin, rect.ymax + 1) for x in range(rect.xmin, rect.xmax + 1)]


def brute_force_search(
    u_old: SpinGrid, params: ModelParams, search_window: Optional[RectSpec] = None, cap: int = DEFAULT_CAP
) -> tuple[SpinGrid, StepFunctionalValue]:
    I_old, Z_old = u_old.I, u_old.Z
    if search_window is None:
        search_window = bounding_rect(I_old | Z_old).dilate(1)
    cells = _row_major(search_window)
    n = len(cells)
    if 3 ** n > cap:
        raise SearchCapError(f"3^{n} assignments exceed the cap {cap}")
    index = {p: i for i, p in enumerate(cells)}

    outer = search_window.union(u_old.window).dilate(1)
    base = u_old.padded(outer)

    def spin(p):
        if outer.contains(p):
            return int(base[p[1] - outer.ymin, p[0] - outer.xmin])
        return -1

    # bonds entirely outside the window are constant
    s = base.astype(np.int64)
    win = np.zeros_like(s, dtype=bool)
    win[search_window.ymin - outer.ymin:search_window.ymax - outer.ymin + 1,
        search_window.xmin - outer.xmin:search_window.xmax - outer.xmin + 1] = True
    hb = s[:, 1:] * s[:, :-1]
    hfree = ~(win[:, 1:] | win[:, :-1])
    vb = s[1:, :] * s[:-1, :]
    vfree = ~(win[1:, :] | win[:-1, :])
    const_opp = int(((hb == -1) & hfree).sum() + ((vb == -1) & vfree).sum())
    const_zero = int(((hb == 0) & hfree).sum() + ((vb == 0) & vfree).sum())

    inner_bonds = []
    fixed_bonds = []  # (cell index, fixed spin)
    for i, (x, y) in enumerate(cells):
        for q in ((x + 1, y), (x, y + 1)):
            if q in index:
                inner_bonds.append((i, index[q]))
            else:
                fixed_bonds.append((i, spin(q)))
        for q in ((x - 1, y), (x, y - 1)):
            if q not in index:
                fixed_bonds.append((i, spin(q)))

    dmap, _ = boundary_distance_map(I_old, search_window)
    weights = np.array([int(dmap[y - search_window.ymin, x - search_window.xmin]) for x, y in cells])
    old_plus = np.array([p in I_old for p in cells])
    z_outside = sum(1 for p in Z_old if p not in index)
    z_old = len(Z_old)

    m = min(n, 12)
    lead = n - m
    tail = _enumerate(m)  # (3^m, m) spins in lexicographic order
    t_cells = list(range(lead, n))
    eps = params.epsilon

    def partial(conf, cols, offset):
        """Integer contributions of bonds and weights within a block of cells."""
        opp = np.zeros(conf.shape[0], dtype=np.int64)
        zer = np.zeros(conf.shape[0], dtype=np.int64)
        for i, j in inner_bonds:
            if offset <= i < offset + len(cols) and offset <= j < offset + len(cols):
                st = conf[:, i - offset] * conf[:, j - offset]
                opp += st == -1
                zer += st == 0
        for i, f in fixed_bonds:
            if offset <= i < offset + len(cols):
                st = conf[:, i - offset] * f
                opp += st == -1
                zer += st == 0
        w = weights[offset:offset + len(cols)]
        op = old_plus[offset:offset + len(cols)]
        dsum = (((conf == 1) != op) * w).sum(axis=1)
        nz = (conf == 0).sum(axis=1)
        return opp, zer, dsum, nz

    t_opp, t_zero, t_d, t_nz = partial(tail, t_cells, lead)
    cross = [(i, j) for i, j in inner_bonds if (i < lead) != (j < lead)]
    tail_eq = {v: (tail == v) for v in (-1, 0, 1)}

    best_F = math.inf
    best_idx = -1
    best_parts = None
    n_lead = 3 ** lead
    lead_confs = _enumerate(lead) if lead else np.zeros((1, 0), dtype=np.int8)
    l_opp, l_zero, l_d, l_nz = partial(lead_confs, list(range(lead)), 0) if lead else (
        np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(1, np.int64))
    for li in range(n_lead):
        lc = lead_confs[li]
        opp = t_opp + (const_opp + int(l_opp[li]))
        zer = t_zero + (const_zero + int(l_zero[li]))
        for i, j in cross:
            a, b = (i, j) if i < lead else (j, i)
            sa = int(lc[a])
            col = b - lead
            if sa == 0:
                zer = zer + 1
            else:
                opp = opp + tail_eq[-sa][:, col]
                zer = zer + tail_eq[0][:, col]
        dsum = t_d + int(l_d[li])
        nz = t_nz + (int(l_nz[li]) + z_outside)
        d0 = np.abs(nz - z_old)
        E = eps * (2 * opp + (1 - params.k) * zer)
        F = E + (eps ** 3 * dsum + eps ** params.gamma * d0) / params.tau
        cm = F.min()
        tol = 1e-12 * max(1.0, abs(cm))
        if cm < best_F - tol:
            k = int(np.argmax(F <= cm + tol))
            best_F = float(F[k])
            best_idx = li * tail.shape[0] + k
            best_parts = (int(opp[k]), int(zer[k]), int(dsum[k]), int(d0[k]))
    conf = _digits(best_idx, n)
    new = base.copy()
    for (x, y), v in zip(cells, conf):
        new[y - outer.ymin, x - outer.xmin] = v
    grid = SpinGrid(outer, new, u_old.epsilon)
    opp, zer, dsum, d0 = best_parts
    E = energy_from_counts(opp, zer, params)
    d1 = eps ** 3 * dsum
    value = StepFunctionalValue(E, d1, d0, functional_total(E, d1, d0, params))
    return grid, value


def brute_force_minimizer(
    u_old: SpinGrid, params: ModelParams, search_window: Optional[RectSpec] = None, cap: int = DEFAULT_CAP
) -> SpinGrid:
    return brute_force_search(u_old, params, search_window, cap)[0]


def _enumerate(m: int) -> np.ndarray:
    if m == 0:
        return np.zeros((1, 0), dtype=np.int8)
    idx = np.arange(3 ** m, dtype=np.int64)
    out = np.empty((3 ** m, m), dtype=np.int8)
    for c in range(m - 1, -1, -1):
        out[:, c] = (idx % 3) - 1
        idx //= 3
    return out


def _digits(index: int, n: int) -> list[int]:
    out = [0] * n
    for c in range(n - 1, -1, -1):
        out[c] = index % 3 - 1
        index //= 3
    return out


# ------------------------------------------------------------------ surfactant


def min_extra_lines(h0: int, w0: int, excess: int) -> tuple[int, int, int]:
    """(extra lines, H, W): smallest box H x W >= h0 x w0 holding h0*w0+excess cells."""
    if excess <= 0:
        return 0, h0, w0
    A = h0 * w0 + excess
    best = None
    H = h0
    while True:
        W = max(w0, -(-A // H))
        cost = H - h0 + W - w0
        if best is None or cost < best[0]:
            best = (cost, H, W)
        if H - h0 >= best[0]:
            break
        H += 1
    return best


def _extra_lines_vec(h0: int, w0: int, excess: np.ndarray) -> np.ndarray:
    excess = np.maximum(np.asarray(excess, dtype=np.int64), 0)
    top = int(excess.max()) if excess.size else 0
    Hs = np.arange(h0, h0 + top // max(w0, 1) + 2, dtype=np.int64)
    A = h0 * w0 + excess[None, :]
    W = np.maximum(w0, -(-A // Hs[:, None]))
    cost = (Hs[:, None] - h0) + (W - w0)
    return cost.min(axis=0)


def place_surfactant(
    I: Region, C: int, params: Optional[ModelParams] = None, order_seed: Optional[int] = None
) -> Region:
    """Layered placement of C surfactant cells around I."""
    I = frozenset(I)
    Z0 = outer_boundary(I)
    if C < len(Z0):
        raise PreconditionError(f"C={C} cannot ring the set (needs {len(Z0)})")
    rng = np.random.default_rng(order_seed) if order_seed is not None else None
    Z = set(Z0)
    G = set(I) | Z
    remaining = C - len(Z0)
    while remaining > 0:
        cand = {q for p in G for q in ((p[0] + 1, p[1]), (p[0] - 1, p[1]), (p[0], p[1] + 1), (p[0], p[1] - 1))
                if q not in G}
        layer = sorted((q for q in cand if neighbor_count(q, G) == 2), key=lambda p: (p[1], p[0]))
        if not layer:
            break
        if len(layer) > remaining:
            if rng is not None:
                pick = rng.permutation(len(layer))[:remaining]
                layer = [layer[i] for i in sorted(pick)]
            else:
                layer = layer[:remaining]
        Z.update(layer)
        G.update(layer)
        remaining -= len(layer)
    if remaining > 0:
        r = bounding_rect(G)
        _, H, W = min_extra_lines(r.height, r.width, remaining)
        order = []
        for y in range(r.ymin - 1, r.ymin - 1 - (H - r.height), -1):
            order.extend((x, y) for x in range(r.xmin, r.xmax + 1))
        ybot = r.ymin - (H - r.height)
        for x in range(r.xmax + 1, r.xmax + 1 + (W - r.width)):
            order.extend((x, y) for y in range(ybot, r.ymax + 1))
        Z.update(order[:remaining])
    return frozenset(Z)


def ring_energy_counts(n_h: int, n_v: int, c: int) -> int:
    """Zero-bond count of a staircase set wetted exactly on its outer boundary."""
    return 6 * (n_h + n_v) - 2 * c + 4


# ------------------------------------------------------------------ octagon search


class _OctagonSearch:
    def __init__(self, u_old: SpinGrid, params: ModelParams):
        I_old = u_old.I
        if not I_old:
            raise PreconditionError("empty phase set")
        self.oct = LatticeOctagon.hull(I_old)
        if self.oct.cells() != I_old:
            raise PreconditionError("the phase set is not a discrete octagon")
        self.I_old = I_old
        self.Z_old = u_old.Z
        self.u_old = u_old
        self.params = params
        o = self.oct
        self.rect = RectSpec(o.xl, o.xr, o.yb, o.yt)
        dmap, _ = boundary_distance_map(I_old, self.rect)
        d0 = np.where(to_mask(I_old, self.rect), dmap, 0).astype(np.int64)
        self.S_total = int(d0.sum())
        ii = np.zeros((d0.shape[0] + 1, d0.shape[1] + 1), dtype=np.int64)
        ii[1:, 1:] = d0.cumsum(0).cumsum(1)
        self.ii = ii
        # corner views: local (row, col) of corner i is (0, 0) in view i
        self.views = (d0, d0[::-1, :], d0[::-1, ::-1], d0[:, ::-1])
        self.legs_old = o.legs()
        self.P_old = o.parallel_counts()
        self._tri_cache: dict = {}

    def rect_sum(self, a) -> int:
        o = self.oct
        r0, r1 = a[0], o.yt - o.yb + 1 - a[2]
        c0, c1 = a[1], o.xr - o.xl + 1 - a[3]
        ii = self.ii
        return int(ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0])

    def tri_sums(self, i: int, a: tuple, L: int) -> np.ndarray:
        """Distance sums of the corner-i triangles of legs 0..L of the moved box."""
        # anchor offsets in the flipped view: corner i is displaced by the two adjacent alphas
        if i == 0:
            off = (a[0], a[1])
        elif i == 1:
            off = (a[2], a[1])
        elif i == 2:
            off = (a[2], a[3])
        else:
            off = (a[0], a[3])
        key = (i, off, L)
        hit = self._tri_cache.get(key)
        if hit is not None:
            return hit
        v = self.views[i]
        block = v[off[0]:off[0] + L, off[1]:off[1] + L]
        out = np.zeros(L + 1, dtype=np.int64)
        if block.size:
            rr, cc = np.indices(block.shape)
            t = (rr + cc).ravel()
            sums = np.bincount(t, weights=block.ravel(), minlength=L)[:L]
            out[1:] = np.cumsum(sums.astype(np.int64))
        self._tri_cache[key] = out
        return out

    def region_for(self, a, legs) -> LatticeOctagon:
        o = self.oct
        xl, yb = o.xl + a[1], o.yb + a[0]
        xr, yt = o.xr - a[3], o.yt - a[2]
        return LatticeOctagon(
            xl, xr, yb, yt,
            xl + yb + legs[0], xr + yt - legs[2],
            xl - yt + legs[1], xr - yb - legs[3],
        )


def _alpha_ranges(P_cells, params: ModelParams, extra: int = 2) -> list[range]:
    out = []
    for n in P_cells:
        v = 2 * params.zeta * (1 - params.k) / (n * params.epsilon)
        out.append(range(0, math.ceil(v - 1e-12) + extra + 1))
    return out


def _beta_cap(leg_old: int, params: ModelParams, extra: int = 2) -> Optional[int]:
    if leg_old == 0:
        return None
    D = SQRT2 * params.epsilon * leg_old
    return math.ceil(2 * SQRT2 * params.zeta * (1 - params.k) / D - 1e-12) + extra


def _lexmin_dp(costs: list[np.ndarray], keys: list[np.ndarray], phi: np.ndarray) -> tuple[float, list[int]]:
    """Minimize sum_i costs[i][m_i] + phi[sum_i keys[i][m_i]] with lexicographic ties."""
    K = len(phi) - 1
    suf = [None] * (len(costs) + 1)
    suf[-1] = phi
    ks = np.arange(K + 1)
    for i in range(len(costs) - 1, -1, -1):
        idx = np.minimum(ks[:, None] + keys[i][None, :], K)
        tot = costs[i][None, :] + suf[i + 1][idx]
        suf[i] = tot.min(axis=1)
    best = float(suf[0][0])
    choice = []
    k = 0
    for i in range(len(costs)):
        tot = costs[i] + suf[i + 1][np.minimum(k + keys[i], K)]
        tol = 1e-12 * max(1.0, abs(suf[i][k]))
        m = int(np.argmax(tot <= suf[i][k] + tol))
        choice.append(m)
        k = min(k + int(keys[i][m]), K)
    return best, choice


def _exhaustive(costs, keys, phi, feasible) -> Optional[tuple[float, list[int]]]:
    K = len(phi) - 1
    grids = np.meshgrid(*[np.arange(len(c)) for c in costs], indexing="ij")
    total = sum(c[g] for c, g in zip(costs, grids))
    ksum = np.minimum(sum(kk[g] for kk, g in zip(keys, grids)), K)
    total = total + phi[ksum]
    ok = feasible(grids)
    if not ok.any():
        return None
    total = np.where(ok, total, np.inf)
    flat = total.ravel()
    mn = flat.min()
    tol = 1e-12 * max(1.0, abs(mn))
    j = int(np.argmax(flat <= mn + tol))
    return float(flat[j]), [int(v) for v in np.unravel_index(j, total.shape)]


@dataclass
class _Cand:
    F: float
    alpha: tuple
    legs: tuple


def _search(srch: _OctagonSearch, mode: str, alpha_ranges, leg_limits, C: int = 0, audit=None) -> _Cand:
    """Scan alpha tuples; for each pick the best corner legs.

    mode 'high': surfactant equals the outer boundary; 'low': C conserved.
    leg_limits(i, a, base) -> max leg at corner i (None for no cut allowed).
    """
    p = srch.params
    eps, k, zeta = p.epsilon, p.k, p.zeta
    lam_d = eps ** 2 / zeta          # per unit of integer distance sum
    lam_z = eps ** p.gamma / p.tau    # per surfactant cell created or destroyed
    z_old = len(srch.Z_old)
    o = srch.oct
    w0, h0 = o.width, o.height
    best: Optional[_Cand] = None
    dims = (h0, w0, h0, w0)
    alpha_ranges = [range(r.start, min(r.stop, dims[i])) for i, r in enumerate(alpha_ranges)]
    for a in np.ndindex(*[len(r) for r in alpha_ranges]):
        a = tuple(int(alpha_ranges[i][a[i]]) for i in range(4))
        w, h = w0 - a[1] - a[3], h0 - a[0] - a[2]
        if w < 1 or h < 1:
            continue
        base_legs = [max(srch.legs_old[i] - a[i] - a[(i + 1) % 4], 0) for i in range(4)]
        lims = []
        for i in range(4):
            lim = leg_limits(i, a, base_legs[i])
            lim = base_legs[i] if lim is None else max(base_legs[i], min(lim, min(w, h) - 1))
            lims.append(lim)
        S_rect = srch.rect_sum(a)
        legs_arr = [np.arange(base_legs[i], lims[i] + 1) for i in range(4)]
        tri = [srch.tri_sums(i, a, lims[i])[legs_arr[i]] for i in range(4)]
        base_d = srch.S_total - S_rect
        if mode == "high":
            costs = [lam_d * tri[i] - 2 * (1 - k) * eps * legs_arr[i] for i in range(4)]
            keys = [legs_arr[i] for i in range(4)]
            K = int(sum(l[-1] for l in legs_arr))
            ks = np.arange(K + 1)
            n_out = 2 * (h + w) - ks
            phi = lam_z * np.abs(n_out - z_old) + eps * (1 - k) * (6 * (h + w) + 4) + lam_d * base_d
        else:
            areas = [l * (l + 1) // 2 for l in legs_arr]
            costs = [lam_d * tri[i] for i in range(4)]
            keys = areas
            cap0 = (h + 2) * (w + 2) - w * h
            excess0 = C - cap0
            K = max(excess0, 0)
            ks = np.arange(K + 1)
            lines = _extra_lines_vec(h + 2, w + 2, excess0 - ks)
            phi = eps * (1 - k) * (2 * C + 2 * (h + w) + 4 + lines) + lam_d * base_d
            phi = phi.astype(float)

        def feasible(grids, legs_arr=legs_arr, w=w, h=h):
            L = [legs_arr[i][g] for i, g in enumerate(grids)]
            ok = (w - L[0] - L[3] >= 1) & (h - L[0] - L[1] >= 1) & (w - L[1] - L[2] >= 1) & (h - L[2] - L[3] >= 1)
            if mode == "low":
                ok &= (2 * (h + w) - (L[0] + L[1] + L[2] + L[3])) <= C
            return ok

        size = int(np.prod([len(c) for c in costs]))
        if size <= 20000:
            res = _exhaustive(costs, keys, phi, feasible)
        else:
            res = _lexmin_dp(costs, keys, phi)
            if not feasible([np.array([m]) for m in res[1]])[0]:
                res = _exhaustive(costs, keys, phi, feasible)
        if res is None:
            continue
        F, ms = res
        legs = tuple(int(legs_arr[i][ms[i]]) for i in range(4))
        if audit is not None:
            audit.append((a, legs, F))
        if best is None or F < best.F - 1e-12 * max(1.0, abs(F)):
            best = _Cand(F, a, legs)
    if best is None:
        raise PreconditionError("no admissible octagon candidate")
    return best


def _parts(srch: _OctagonSearch, mode: str, a, legs, C: int = 0) -> StepFunctionalValue:
    """Closed-form energy and dissipations of one candidate."""
    p = srch.params
    o = srch.oct
    w, h = o.width - a[1] - a[3], o.height - a[0] - a[2]
    c = sum(legs)
    tri = sum(int(srch.tri_sums(i, a, legs[i])[legs[i]]) for i in range(4))
    dsum = srch.S_total - srch.rect_sum(a) + tri
    if mode == "high":
        n_zero = ring_energy_counts(h, w, c)
        d0 = abs(2 * (h + w) - c - len(srch.Z_old))
    else:
        area = w * h - sum(l * (l + 1) // 2 for l in legs)
        lines = min_extra_lines(h + 2, w + 2, C - ((h + 2) * (w + 2) - area))[0]
        n_zero = 2 * C + 2 * (h + w) + 4 + lines
        d0 = abs(C - len(srch.Z_old))
    E = energy_from_counts(0, n_zero, p)
    d1 = p.epsilon ** 3 * dsum
    return StepFunctionalValue(E, d1, d0, functional_total(E, d1, d0, p))


def compact_block(C: int, origin: tuple[int, int] = (0, 0)) -> Region:
    """C cells filling a near-square box row by row; its perimeter is minimal."""
    if C <= 0:
        return frozenset()
    w = math.isqrt(C - 1) + 1
    x0, y0 = origin
    return frozenset((x0 + i % w, y0 + i // w) for i in range(C))


def _blob_zero_bonds(m: int) -> int:
    if m <= 0:
        return 0
    w = math.isqrt(m - 1) + 1
    return 2 * m + w + -(-m // w)


def _vanish(srch: _OctagonSearch, mode: str, C: int) -> tuple[StepFunctionalValue, Region]:
    """The best candidate in which the phase set disappears.

    The surfactant left behind is a compact block; for gamma > 2 its size is
    chosen among 0..#Z_old to balance energy against evaporation.
    """
    p = srch.params
    z_old = len(srch.Z_old)
    sizes = range(z_old + 1) if mode == "high" else [C]
    d1 = p.epsilon ** 3 * srch.S_total
    best = None
    for m in sizes:
        E = energy_from_counts(0, _blob_zero_bonds(m), p)
        d0 = abs(m - z_old)
        v = StepFunctionalValue(E, d1, d0, functional_total(E, d1, d0, p))
        if best is None or v.total < best[0].total - 1e-12 * max(1.0, abs(v.total)):
            best = (v, m)
    v, m = best
    return v, compact_block(m, (srch.oct.xl, srch.oct.yb))


def _reaches_collapse(srch: _OctagonSearch, space: SearchSpace) -> bool:
    """Whether the alpha box contains displacements that empty the set."""
    top = [space.bounds[f"alpha{i + 1}"][1] for i in range(4)]
    return top[1] + top[3] >= srch.oct.width or top[0] + top[2] >= srch.oct.height


def _finish(srch: _OctagonSearch, cand: _Cand, mode: str, C: int, Z_new: Region, space, stage,
            audit_rows) -> StepResult:
    vanish, Z_empty = _vanish(srch, mode, C)
    if _reaches_collapse(srch, space) and vanish.total < cand.F - 1e-12 * max(1.0, abs(cand.F)):
        grid = SpinGrid.from_sets(frozenset(), Z_empty, srch.u_old.epsilon)
        value = step_functional(grid, srch.u_old, srch.params)
        if abs(value.total - vanish.total) > 1e-9 * max(1.0, abs(value.total)):
            raise AssertionError("closed-form value of the vanishing candidate disagrees with the lattice")
        return StepResult(grid, None, value, space, "vanished", len(audit_rows or []) + 1,
                          _audit(srch, mode, C, audit_rows))
    new_oct = srch.region_for(cand.alpha, cand.legs)
    I_new = new_oct.cells()
    grid = SpinGrid.from_sets(I_new, Z_new, srch.u_old.epsilon)
    value = step_functional(grid, srch.u_old, srch.params)
    closed = _parts(srch, mode, cand.alpha, cand.legs, C)
    for got in (cand.F, closed.total):
        if abs(value.total - got) > 1e-9 * max(1.0, abs(value.total)):
            raise AssertionError(
                f"closed-form value {got!r} disagrees with lattice evaluation {value.total!r}"
            )
    disp = Displacements.measure(srch.oct, new_oct)
    return StepResult(grid, disp, value, space, stage, len(audit_rows or []), _audit(srch, mode, C, audit_rows))


def _audit(srch: _OctagonSearch, mode: str, C: int, audit_rows) -> list:
    out = []
    for a, legs, _ in audit_rows or []:
        d = Displacements.measure(srch.oct, srch.region_for(a, legs))
        out.append((d.alpha, d.beta, _parts(srch, mode, a, legs, C)))
    return out


def search_gamma_high(u_old: SpinGrid, params: ModelParams, audit: bool = False, min_width: int = 1) -> StepResult:
    if params.gamma <= 2:
        raise PreconditionError("the evaporating-surfactant search needs gamma > 2")
    srch = _OctagonSearch(u_old, params)
    if not outer_boundary(srch.I_old) <= srch.Z_old:
        raise PreconditionError("the outer boundary is not wetted")
    if min(srch.P_old) < min_width:
        raise PreconditionError("a parallel side is below the configured width")
    ar = _alpha_ranges(srch.P_old, params)

    def limits(i, a, base):
        cap = _beta_cap(srch.legs_old[i], params)
        if cap is None:
            return 10 ** 9
        # beta = a_i + a_{i+1} + leg' - leg_old
        return srch.legs_old[i] - a[i] - a[(i + 1) % 4] + cap

    rows = [] if audit else None
    cand = _search(srch, "high", ar, limits, audit=rows)
    I_new = srch.region_for(cand.alpha, cand.legs).cells()
    bounds = {f"alpha{i + 1}": (r.start, r.stop - 1) for i, r in enumerate(ar)}
    space = SearchSpace("octagon-gamma-high", bounds)
    return _finish(srch, cand, "high", 0, outer_boundary(I_new), space, "gamma-high", rows)


def stage_threshold(C: int, epsilon: float, mu: float = STAGE_MU) -> float:
    return max(2 * epsilon * math.sqrt(C), epsilon ** mu)


def search_gamma_low(
    u_old: SpinGrid, params: ModelParams, audit: bool = False, mu: float = STAGE_MU,
    order_seed: Optional[int] = None,
) -> StepResult:
    if params.gamma >= 2:
        raise PreconditionError("the conserved-surfactant search needs gamma < 2")
    srch = _OctagonSearch(u_old, params)
    C = len(srch.Z_old)
    if C < len(outer_boundary(srch.I_old)):
        raise PreconditionError("surfactant insufficient to ring the phase set")
    eps = params.epsilon
    cls = classify_shape(srch.I_old, C, eps)
    thr = stage_threshold(C, eps, mu)
    stage1 = any(D / SQRT2 >= thr for D in cls.D)
    ar = _alpha_ranges(srch.P_old, params)
    if stage1:
        def limits(i, a, base):
            return None
        kind = "pinned-gamma-low"
    else:
        def limits(i, a, base):
            return 10 ** 9
        kind = "quasi-rectangle"
    rows = [] if audit else None
    cand = _search(srch, "low", ar, limits, C=C, audit=rows)
    I_new = srch.region_for(cand.alpha, cand.legs).cells()
    Z_new = place_surfactant(I_new, C, params, order_seed)
    bounds = {f"alpha{i + 1}": (r.start, r.stop - 1) for i, r in enumerate(ar)}
    space = SearchSpace(kind, bounds)
    res = _finish(srch, cand, "low", C, Z_new, space, "stage-1" if stage1 else "stage-2", rows)
    v = [2 * params.zeta * (1 - params.k) / (n * eps) for n in srch.P_old]
    res.alpha_band = tuple((max(0, math.floor(x) - 1), math.ceil(x)) for x in v)
    return res


def structured_minimizer_gamma_high(u_old: SpinGrid, params: ModelParams) -> tuple[SpinGrid, Displacements]:
    r = search_gamma_high(u_old, params)
    return r.grid, r.displacements


def structured_minimizer_gamma_low(u_old: SpinGrid, params: ModelParams) -> tuple[SpinGrid, Displacements]:
    r = search_gamma_low(u_old, params)
    return r.grid, r.displacements


def write_audit_csv(path, results: list[tuple[int, StepResult]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4", "energy", "d1", "d0", "total"])
        for j, res in results:
            for alpha, beta, v in res.audit:
                w.writerow([j, *alpha, *beta, repr(v.energy), repr(v.d1), v.d0, repr(v.total)])
