"""Bulk and surfactant dissipations and the step functional."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import ModelParams, ParameterError, total_energy
from .lattice import (
    EmptyRegionError,
    Region,
    SpinGrid,
    bounding_rect,
    boundary_distance_map,
    dist_to_boundary,
)


@dataclass(frozen=True)
class StepFunctionalValue:
    energy: float
    d1: float
    d0: int
    total: float


def bulk_distance_sum(I_new: Region, I_old: Region) -> int:
    """Sum of d1(p, dI_old)/eps over the symmetric difference (an integer)."""
    if not I_old:
        raise EmptyRegionError("bulk dissipation needs a nonempty reference set")
    diff = I_new ^ I_old
    if not diff:
        return 0
    rect = bounding_rect(diff)
    d, rect = boundary_distance_map(I_old, rect)
    xs = np.fromiter((p[0] for p in diff), dtype=np.int64, count=len(diff)) - rect.xmin
    ys = np.fromiter((p[1] for p in diff), dtype=np.int64, count=len(diff)) - rect.ymin
    return int(d[ys, xs].sum())


def dissipation_bulk(I_new: Region, I_old: Region, epsilon: float) -> float:
    return epsilon ** 3 * bulk_distance_sum(frozenset(I_new), frozenset(I_old))


def dissipation_bulk_integral(I_new: Region, I_old: Region, epsilon: float) -> float:
    """Integral of the piecewise constant d1 over A_new sym-diff A_old."""
    I_old = frozenset(I_old)
    area = epsilon ** 2
    return sum(area * dist_to_boundary(p, I_old, "L1", epsilon) for p in frozenset(I_new) ^ I_old)


def dissipation_surfactant(Z_new: Region, Z_old: Region) -> int:
    return abs(len(Z_new) - len(Z_old))


def functional_total(energy: float, d1: float, d0: int, params: ModelParams) -> float:
    return energy + (d1 + params.epsilon ** params.gamma * d0) / params.tau


def step_functional(u_new: SpinGrid, u_old: SpinGrid, params: ModelParams) -> StepFunctionalValue:
    if u_new.epsilon != u_old.epsilon or u_new.epsilon != params.epsilon:
        raise ParameterError("lattice spacing mismatch between configurations and parameters")
    E = total_energy(u_new, params)
    I_old = u_old.I
    if I_old:
        d1 = dissipation_bulk(u_new.I, I_old, params.epsilon)
    elif u_new.I:
        raise EmptyRegionError("bulk dissipation from an empty phase set is undefined")
    else:
        d1 = 0.0
    d0 = dissipation_surfactant(u_new.Z, u_old.Z)
    return StepFunctionalValue(E, d1, d0, functional_total(E, d1, d0, params))

