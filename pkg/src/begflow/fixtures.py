"""Small configurations on which the structured searches are checked against brute force."""
from __future__ import annotations

from dataclasses import dataclass

from .energy import ModelParams
from .lattice import Region, RectSpec, SpinGrid, bounding_rect, outer_boundary
from .minimize import brute_force_search, place_surfactant, search_gamma_high, search_gamma_low


@dataclass(frozen=True)
class OracleFixture:
    name: str
    I: Region
    Z: Region
    params: ModelParams

    @property
    def window(self) -> RectSpec:
        return bounding_rect(self.I | self.Z)

    def grid(self) -> SpinGrid:
        return SpinGrid.from_sets(self.I, self.Z, self.params.epsilon)


@dataclass(frozen=True)
class OracleResult:
    name: str
    brute: float
    structured: float

    @property
    def discrepancy(self) -> float:
        return abs(self.brute - self.structured)


def _block(w: int, h: int) -> Region:
    return RectSpec(0, w - 1, 0, h - 1).cells()


def default_fixtures() -> list[OracleFixture]:
    out = []
    shapes = [(1, 1), (2, 1), (1, 3), (2, 2)]
    for w, h in shapes:
        I = _block(w, h)
        Z = outer_boundary(I)
        for gamma in (3, 1):
            for zeta, k, eps in ((0.01, 0.5, 1 / 8), (0.05, 0.75, 1 / 16), (0.2, 0.5, 1 / 4)):
                p = ModelParams(k, gamma, zeta, eps)
                out.append(OracleFixture(f"block{w}x{h}-g{gamma}-z{zeta}", I, Z, p))
    for w, h, C in ((1, 1, 6), (1, 1, 8), (1, 2, 8), (1, 2, 10)):
        I = _block(w, h)
        for zeta in (0.03, 0.1):
            p = ModelParams(0.5, 1, zeta, 1 / 8)
            out.append(OracleFixture(f"block{w}x{h}-C{C}-z{zeta}", I, place_surfactant(I, C), p))
    return out


def run_oracle(fixtures: list[OracleFixture]) -> list[OracleResult]:
    out = []
    for fx in fixtures:
        u = fx.grid()
        _, vb = brute_force_search(u, fx.params, fx.window)
        if fx.params.gamma > 2:
            r = search_gamma_high(u, fx.params)
        else:
            r = search_gamma_low(u, fx.params)
        out.append(OracleResult(fx.name, vb.total, r.value.total))
    return out
