"""Hausdorff distance between discrete flows and the continuum flow as epsilon shrinks."""
import math

from begflow.continuum import compare_discrete_continuum, integrate_flow
from begflow.energy import ModelParams
from begflow.flow import InitialCondition, run_flow
from begflow.octagon import OctagonSpec

T = 0.15
A = OctagonSpec.from_sides(0.375, 0.6)
base = ModelParams(k=0.5, gamma=3, zeta=0.5, epsilon=1 / 32)
cont = integrate_flow(A, base, T)

flows = []
for eps in (1 / 32, 1 / 64, 1 / 128):
    p = base.with_epsilon(eps)
    flows.append(run_flow(InitialCondition(A), p, math.ceil(T / p.tau - 1e-9)))

for eps, d in compare_discrete_continuum(flows, cont):
    print(f"eps = 1/{round(1 / eps):<4d} sup distance = {d:.4f} ({d / eps:.2f} eps)")
