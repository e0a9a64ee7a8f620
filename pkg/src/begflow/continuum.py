"""Limit crystalline flows of octagons, integrated event by event.

Each side carries an integer level n: between events its velocity is fixed by
n (the floor of 2*zeta*(1-k)/length for parallel sides, or the diagonal
analogue) and every side length is affine in time, so event times solve
linear equations. A side sitting at a resonance whose one-sided velocities
both push it back onto the resonance slides along it with the velocity that
keeps its length constant, which is the element of the velocity interval
selected by the dynamics.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import ModelParams, ParameterError
from .octagon import SQRT2, OctagonSpec

REGIMES = ("gamma-high", "gamma-low-octagon", "gamma-low-rectangle")
EVENT_KINDS = ("diagonal-vanishes", "resonance-crossed", "side-collapse")
CONTINUUM_HEADER = ["t", "P1", "P2", "P3", "P4", "D1", "D2", "D3", "D4", "event"]
_RES_TOL = 1e-12


@dataclass(frozen=True)
class Velocity:
    value: float
    interval: tuple[float, float]
    resonant: bool


def _ratio(c: float, L: float) -> tuple[float, Optional[int]]:
    x = c / L
    n = round(x)
    if n >= 1 and abs(x - n) <= _RES_TOL * max(1.0, x):
        return x, int(n)
    return x, None


def velocity_parallel(P: float, params: ModelParams, regime: str = "gamma-high", branch: str = "floor") -> Velocity:
    if P <= 0:
        raise ValueError("side length must be positive")
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if branch not in ("floor", "ceil"):
        raise ValueError(f"unknown branch {branch!r}")
    z, k = params.zeta, params.k
    x, m = _ratio(2 * z * (1 - k), P)
    if m is None:
        lo, hi = math.floor(x) / z, math.floor(x) / z
        if regime == "gamma-low-rectangle":
            hi = math.ceil(x) / z
        return Velocity(lo if branch == "floor" else hi, (lo, hi), False)
    lo = 2 * (1 - k) / P - 1 / z
    hi = 2 * (1 - k) / P + (1 / z if regime == "gamma-low-rectangle" else 0.0)
    return Velocity(lo if branch == "floor" else hi, (lo, hi), True)


def velocity_diagonal(D: float, params: ModelParams, regime: str = "gamma-high", branch: str = "floor") -> Velocity:
    if D <= 0:
        raise ValueError("side length must be positive")
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if regime != "gamma-high":
        return Velocity(0.0, (0.0, 0.0), False)
    z, k = params.zeta, params.k
    x, m = _ratio(2 * SQRT2 * z * (1 - k), D)
    if m is None:
        v = SQRT2 / (2 * z) * math.floor(x)
        return Velocity(v, (v, v), False)
    lo = 2 * (1 - k) / D - SQRT2 / (2 * z)
    hi = 2 * (1 - k) / D
    return Velocity(lo if branch == "floor" else hi, (lo, hi), True)


# lengths L = M @ h for offsets h = (P1..P4, D1..D4)
_M = np.zeros((8, 8))
for _i in range(4):
    _M[_i, _i] = -2.0
    _M[_i, 4 + (_i - 1) % 4] = SQRT2
    _M[_i, 4 + _i] = SQRT2
    _M[4 + _i, 4 + _i] = -2.0
    _M[4 + _i, _i] = SQRT2
    _M[4 + _i, (_i + 1) % 4] = SQRT2


def lengths(h: np.ndarray) -> np.ndarray:
    return _M @ h


@dataclass
class ContinuumTrace:
    samples: list  # (t, OctagonSpec)
    events: list  # (t, kind, side index 0..7)
    params: ModelParams
    regime: str
    branch: str
    T: float
    t_end: float = 0.0
    stopped: str = ""
    _times: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._times = [t for t, _ in self.samples]

    def at(self, t: float) -> OctagonSpec:
        """A(t), exact by linear interpolation of offsets between events."""
        if t < -1e-15 or t > self.t_end * (1 + 1e-12) + 1e-15:
            raise ValueError(f"t={t} outside [0, {self.t_end}]")
        ts = self._times
        i = bisect.bisect_right(ts, t) - 1
        i = max(0, min(i, len(ts) - 1))
        if i == len(ts) - 1 or ts[i + 1] == ts[i]:
            return self.samples[i][1]
        t0, A0 = self.samples[i]
        t1, A1 = self.samples[i + 1]
        w = (t - t0) / (t1 - t0)
        h = (1 - w) * np.asarray(A0.offsets) + w * np.asarray(A1.offsets)
        return OctagonSpec(tuple(h))

    def side_lengths_at(self, t: float) -> np.ndarray:
        return np.maximum(lengths(np.asarray(self.at(t).offsets)), 0.0)


def _consts(params: ModelParams) -> np.ndarray:
    z, k = params.zeta, params.k
    return np.array([2 * z * (1 - k)] * 4 + [2 * SQRT2 * z * (1 - k)] * 4)


def _unit_velocity(params: ModelParams) -> np.ndarray:
    z = params.zeta
    return np.array([1 / z] * 4 + [SQRT2 / (2 * z)] * 4)


class _Integrator:
    def __init__(self, A0: OctagonSpec, params: ModelParams, regime: str, branch: str,
                 min_side: float, max_events: int):
        self.p = params
        self.regime = regime
        self.branch = branch
        self.c = _consts(params)
        self.unit = _unit_velocity(params)
        h0 = np.asarray(A0.offsets, dtype=float)
        tight = np.asarray(A0.tightened().offsets, dtype=float)
        self.scale = float(max(lengths(tight).max(), 1e-300))
        # keep the given offsets when tightening only moves them by rounding
        self.h = np.where(np.abs(tight - h0) <= 1e-12 * self.scale, h0, tight)
        L = lengths(self.h)
        self.tol = 1e-12 * self.scale
        L = np.where(np.abs(L) <= self.tol, 0.0, L)
        self.min_side = min_side
        self.max_events = max_events
        self.level = np.zeros(8, dtype=np.int64)
        self.clamped = np.zeros(8, dtype=bool)  # diagonals held at zero length
        for i in range(8):
            if L[i] <= 0:
                self.clamped[i] = i >= 4
                continue
            x, m = _ratio(self.c[i], L[i])
            if m is None:
                self.level[i] = math.floor(x)
            else:
                self.level[i] = m - 1 if branch == "floor" else m
        self.sliding = np.zeros(8, dtype=bool)

    def is_rectangle(self) -> bool:
        return bool(self.clamped[4:].all())

    def law(self, i: int, n: int) -> float:
        if i >= 4:
            if self.regime == "gamma-high":
                return n * self.unit[i]
            return 0.0
        if self.regime != "gamma-high" and self.is_rectangle() and self.branch == "ceil":
            return (n + 1) * self.unit[i]
        return n * self.unit[i]

    def velocities(self) -> np.ndarray:
        v = np.array([self.law(i, int(self.level[i])) for i in range(8)])
        fixed = self.clamped | self.sliding
        if fixed.any():
            # hold clamped and sliding lengths constant: (M v)_k = 0 on those rows
            idx = np.nonzero(fixed)[0]
            free = np.nonzero(~fixed)[0]
            A = _M[np.ix_(idx, idx)]
            b = -_M[np.ix_(idx, free)] @ v[free]
            v[idx] = np.linalg.lstsq(A, b, rcond=None)[0]
        return v

    def resolve(self, L: np.ndarray) -> None:
        """Decide levels or sliding for sides sitting exactly on a resonance."""
        at_res = {}
        for i in range(8):
            if self.clamped[i] or L[i] <= 0:
                continue
            x, m = _ratio(self.c[i], L[i])
            if m is not None and (self.regime == "gamma-high" or i < 4):
                at_res[i] = m
        self.sliding[:] = False
        for _ in range(16):
            changed = False
            for i, m in at_res.items():
                if self.sliding[i]:
                    continue
                # level m-1 lives at larger length, level m at smaller length
                self.level[i] = m - 1
                s_lo = -(_M @ self.velocities())[i]
                self.level[i] = m
                s_hi = -(_M @ self.velocities())[i]
                if s_lo > self.tol:
                    new, slide = m - 1, False
                elif s_hi < -self.tol:
                    new, slide = m, False
                elif s_lo <= self.tol and s_hi >= -self.tol and not (s_lo > 0 and s_hi < 0):
                    new, slide = m - 1, True
                else:
                    new, slide = (m - 1 if self.branch == "floor" else m), False
                self.level[i] = new
                if slide:
                    self.sliding[i] = True
                    changed = True
            # a sliding side whose constant-length velocity leaves its interval stops sliding
            v = self.velocities()
            for i in np.nonzero(self.sliding)[0]:
                m = at_res[i]
                lo, hi = self.law(i, m - 1), self.law(i, m)
                if v[i] < lo - 1e-9 or v[i] > hi + 1e-9:
                    self.sliding[i] = False
                    self.level[i] = m - 1 if v[i] < lo else m
                    changed = True
            if not changed:
                break


def integrate_flow(
    A0: OctagonSpec,
    params: ModelParams,
    T: float,
    branch: str = "floor",
    regime: Optional[str] = None,
    min_side: Optional[float] = None,
    max_events: int = 100000,
) -> ContinuumTrace:
    """Event-driven exact integration of the crystalline flow up to time T."""
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if params.gamma == 2:
        raise ParameterError("gamma = 2 is not covered by either regime")
    if regime is None:
        regime = "gamma-high" if params.gamma > 2 else "gamma-low-octagon"
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if A0.is_empty():
        raise ValueError("empty initial octagon")
    st = _Integrator(A0, params, regime, branch, 0.0, max_events)
    if min_side is None:
        min_side = 1e-4 * st.scale
    L0 = lengths(st.h)
    if regime == "gamma-high" and (L0[4:] <= st.tol).any():
        raise ValueError("the evaporating regime needs a non-degenerate octagon")
    t = 0.0
    samples = [(0.0, OctagonSpec(tuple(st.h)))]
    events: list = []
    stopped = ""
    n_events = 0
    while t < T:
        L = lengths(st.h)
        L = np.where(np.abs(L) <= st.tol, 0.0, L)
        st.resolve(L)
        v = st.velocities()
        slope = -(_M @ v)
        # next event per side
        dt = np.full(8, np.inf)
        kind = [""] * 8
        for i in range(8):
            if st.clamped[i] or st.sliding[i] or abs(slope[i]) <= 1e-15 * max(1.0, abs(v).max()):
                continue
            s = slope[i]
            n = int(st.level[i])
            if s < 0:
                if i >= 4 and regime != "gamma-high":
                    target, kd = 0.0, "diagonal-vanishes"
                else:
                    target, kd = st.c[i] / (n + 1), "resonance-crossed"
                    if L[i] <= min_side:
                        target, kd = 0.0, "side-collapse" if i < 4 else "diagonal-vanishes"
            else:
                if i >= 4 and regime != "gamma-high":
                    continue
                if n < 1:
                    continue
                target, kd = st.c[i] / n, "resonance-crossed"
            dt[i] = max((target - L[i]) / s, 0.0)
            kind[i] = kd
        step = float(dt.min())
        if t + step >= T:
            st.h = st.h - v * (T - t)
            t = T
            samples.append((t, OctagonSpec(tuple(st.h))))
            break
        t += step
        st.h = st.h - v * step
        hits = [i for i in range(8) if dt[i] <= step + 1e-15 * max(1.0, t)]
        L = lengths(st.h)
        for i in hits:
            kd = kind[i]
            if kd == "resonance-crossed":
                L[i] = st.c[i] / (st.level[i] + 1) if slope[i] < 0 else st.c[i] / st.level[i]
            else:
                L[i] = 0.0
        # snap the hitting sides exactly onto their targets
        st.h = st.h + np.linalg.lstsq(_M, L - lengths(st.h), rcond=None)[0]
        n_events += 1
        samples.append((t, OctagonSpec(tuple(st.h))))
        for i in hits:
            events.append((t, kind[i], i))
        if any(kind[i] == "side-collapse" for i in hits) or (L[:4] <= min_side).any():
            if not any(kind[i] == "side-collapse" for i in hits):
                events.append((t, "side-collapse", int(np.argmin(L[:4]))))
            stopped = "side-collapse"
            break
        if any(kind[i] == "diagonal-vanishes" for i in hits):
            if regime == "gamma-high":
                stopped = "diagonal-vanishes"
                break
            for i in hits:
                if kind[i] == "diagonal-vanishes":
                    st.clamped[i] = True
        if n_events >= max_events:
            # resonance events accumulate (Zeno) only as a side shrinks to nothing
            stopped = "side-collapse"
            events.append((t, "side-collapse", int(np.argmin(L[:4]))))
            break
    trace = ContinuumTrace(samples, events, params, regime, branch, T, t, stopped)
    return trace


def side_table(trace: ContinuumTrace) -> list[tuple]:
    """(t, P1..P4, D1..D4, event) at every sample."""
    ev: dict[float, list[str]] = {}
    for t, kind, _ in trace.events:
        ev.setdefault(t, []).append(kind)
    rows = []
    seen = set()
    for t, A in trace.samples:
        L = np.maximum(lengths(np.asarray(A.offsets)), 0.0)
        tag = ";".join(sorted(set(ev.get(t, [])))) if t not in seen else ""
        seen.add(t)
        rows.append((t, *[float(x) for x in L], tag))
    return rows


def write_continuum_csv(trace: ContinuumTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONTINUUM_HEADER)
        for row in side_table(trace):
            w.writerow([repr(row[0]), *[repr(x) for x in row[1:9]], row[9]])


def compare_discrete_continuum(traces: list, continuum: ContinuumTrace, spacing: Optional[float] = None) -> list[tuple]:
    """(eps, sup_t Hausdorff(A_eps(t), A(t))) for each trace, largest eps first.

    Each discrete state I_j is compared with A(t) at both ends of the interval
    [j tau, (j+1) tau) on which it is displayed, clipped to the continuum span.
    """
    from .flow import FlowTrace, hausdorff_distance

    out = []
    base = continuum.params
    for tr in traces:
        if isinstance(tr, ContinuumTrace):
            sup = 0.0
            for t, A in tr.samples:
                if t <= continuum.t_end:
                    sup = max(sup, hausdorff_distance(A, continuum.at(t), 1.0))
            out.append((tr.params.epsilon, sup))
            continue
        if not isinstance(tr, FlowTrace):
            raise TypeError("expected a FlowTrace or ContinuumTrace")
        p = tr.params
        if (p.k, p.gamma, p.zeta) != (base.k, base.gamma, base.zeta):
            raise ParameterError("traces and continuum flow use different parameters")
        eps, tau = p.epsilon, p.tau
        sup = 0.0
        for s in tr.steps:
            t0 = s.j * tau
            if t0 > continuum.t_end or not s.I:
                break
            t1 = min((s.j + 1) * tau, continuum.t_end)
            for t in {t0, t1}:
                sup = max(sup, hausdorff_distance(s.I, continuum.at(t), eps, spacing))
        out.append((eps, sup))
    out.sort(key=lambda r: -r[0])
    return out
