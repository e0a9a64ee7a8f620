"""Scaled BEG energy, its localized form, closed forms and the limit anisotropy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .lattice import (
    Region,
    SpinGrid,
    connected_components,
    inner_boundary,
    perimeter,
)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    k: float
    gamma: float
    zeta: float
    epsilon: float

    def __post_init__(self):
        if not (1 / 3 < self.k < 1):
            raise ParameterError(f"k={self.k} violates the constraint k in (1/3, 1)")
        if self.gamma <= 0:
            raise ParameterError("gamma must be positive")
        if self.zeta <= 0:
            raise ParameterError("zeta must be positive")
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")

    @property
    def tau(self) -> float:
        return self.zeta * self.epsilon

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return ModelParams(self.k, self.gamma, self.zeta, epsilon)


def pair_cost(s: int, t: int, params: ModelParams) -> float:
    st = s * t
    return params.epsilon * (1 - st - params.k * (1 - st * st))


def energy_from_counts(n_opp: int, n_zero: int, params: ModelParams) -> float:
    """Energy of n_opp (+1,-1) bonds and n_zero bonds touching a 0 spin."""
    return params.epsilon * (2 * n_opp + (1 - params.k) * n_zero)


def bond_counts(u: SpinGrid) -> tuple[int, int]:
    """(# bonds with st=-1, # bonds with st=0) over the whole lattice."""
    s = u.padded(u.window.dilate(1)).astype(np.int64)
    h = s[:, 1:] * s[:, :-1]
    v = s[1:, :] * s[:-1, :]
    n_opp = int((h == -1).sum() + (v == -1).sum())
    n_zero = int((h == 0).sum() + (v == 0).sum())
    return n_opp, n_zero


def total_energy(u: SpinGrid, params: ModelParams) -> float:
    return energy_from_counts(*bond_counts(u), params)


def local_energy(
    u: SpinGrid, I: Iterable, J: Optional[Iterable], params: ModelParams
) -> float:
    """Bond sum over p in I, q in J; J=None means the whole lattice.

    A bond whose two orientations both qualify is counted once, through the
    orientation with p before q in lexicographic order.
    """
    I = frozenset(I)
    Jset = None if J is None else frozenset(J)

    def in_J(q):
        return Jset is None or q in Jset

    n_opp = n_zero = 0
    for p in I:
        x, y = p
        s = u[p]
        for q in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if not in_J(q):
                continue
            if q in I and in_J(p) and q < p:
                continue
            st = s * u[q]
            n_opp += st == -1
            n_zero += st == 0
    return energy_from_counts(n_opp, n_zero, params)


def surfactant_energy_closed_form(u: SpinGrid, params: ModelParams) -> float:
    """2eps(1-k)#Z + (1-k)Per(Z)/2."""
    Z = u.Z
    if not Z:
        return 0.0
    k, e = params.k, params.epsilon
    return 2 * e * (1 - k) * len(Z) + 0.5 * (1 - k) * perimeter(Z, e, "edges")


def surfactant_energy_direct(u: SpinGrid, params: ModelParams) -> float:
    """Bond sum over all bonds touching Z."""
    return local_energy(u, u.Z, None, params)


def wetted_component_energy(u: SpinGrid, G: Region, params: ModelParams) -> float:
    I, Z = u.I, u.Z
    G = frozenset(G)
    if not G <= (I | Z):
        raise ValueError("G is not contained in the phase and surfactant sets")
    comps = connected_components(I | Z, "strong")
    if G not in comps:
        raise ValueError("G is not a strong component of the phase and surfactant sets")
    if not inner_boundary(G) <= Z:
        raise ValueError("the inner boundary of G is not wetted by surfactant")
    k, e = params.k, params.epsilon
    B = connected_components(I & G, "strong")
    per = perimeter(G, e, "edges") + sum(perimeter(b, e, "edges") for b in B)
    return 2 * e * (1 - k) * len(G & Z) + 0.5 * (1 - k) * per


def limit_surface_tension(nu, k: float) -> float:
    n1, n2 = (abs(float(c)) for c in nu)
    if abs(math.hypot(n1, n2) - 1.0) > 1e-12:
        raise ValueError("nu must be a unit vector")
    return (1 - k) * (3 * max(n1, n2) + min(n1, n2))
