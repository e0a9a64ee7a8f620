"""Shrink an octagon in the wetted regime and print how its sides evolve.

Every step the minimizer picks how many lattice lines each side retreats by.
Surfactant is re-placed on the outer boundary each time, so the sides move
with a quantized velocity set by 2*zeta*(1-k)/P.
"""
from begflow.continuum import integrate_flow
from begflow.energy import ModelParams
from begflow.flow import InitialCondition, extract_side_series, run_flow
from begflow.octagon import OctagonSpec

params = ModelParams(k=0.5, gamma=3, zeta=0.5, epsilon=1 / 32)
A = OctagonSpec.from_sides(0.375, 0.6)
trace = run_flow(InitialCondition(A), params, 100)

print(f"tau = {params.tau:.5f}, stop: {trace.stop_reason}")
print(" j      t     P1     P2     D1   alpha")
for row, step in zip(extract_side_series(trace), trace.steps):
    if not step.I:
        break
    print(f"{step.j:2d} {row.t:6.3f} {row.P[0]:6.3f} {row.P[1]:6.3f} "
          f"{row.D[0]:6.3f}   {step.alpha}")

cont = integrate_flow(A, params, trace.tau * (len(trace.steps) - 1))
print(f"continuum: {len(cont.events)} events, stopped: {cont.stopped or 'horizon reached'}")
print("continuum side lengths at the end:",
      [round(float(x), 4) for x in cont.side_lengths_at(cont.t_end)])
