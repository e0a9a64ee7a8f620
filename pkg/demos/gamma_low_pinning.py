"""With gamma < 1 surfactant is conserved and the diagonal sides stay pinned.

The parallel sides retreat while each diagonal keeps its lattice line and only
loses length from its two ends, until a diagonal shrinks to nothing.
"""
import math

from begflow.energy import ModelParams
from begflow.flow import InitialCondition, diagonal_lines, run_flow
from begflow.octagon import OctagonSpec

params = ModelParams(k=0.5, gamma=1, zeta=0.6, epsilon=1 / 64)
trace = run_flow(InitialCondition(OctagonSpec.from_sides(0.25, 0.2 * math.sqrt(2))), params, 100)
lines0 = diagonal_lines(trace.steps[0].I)

print(f"surfactant cells: {len(trace.steps[0].Z)}, stop: {trace.stop_reason}")
for step in trace.steps:
    same = diagonal_lines(step.I) == lines0 if step.I else None
    D = " ".join(f"{d:.3f}" for d in step.D) if step.D else "-"
    print(f"j={step.j:2d} |I|={len(step.I):4d} |Z|={len(step.Z)} D=[{D}] diagonals fixed: {same}")
