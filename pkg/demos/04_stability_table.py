"""
A corner of the stability study
===============================

Each cell integrates the pulse with step dt0 = alpha h and viscosity
nu = beta h / alpha, then reports Var (the worst relative excursion of
H + QH - H0), the time reached, and the accepted step count.  On this
coarse mesh the interesting behavior is at the edges: beta = 0 rings
through the unresolved front but completes, while large nu on a coarse
mesh loses velocity-sign control near the walls and the run stops early
with a flagged dt underflow rather than silent garbage.
"""

from phburgers import SweepGrid, emit_table, run_sweep

grid = SweepGrid(alphas=(0.5, 1.0), betas=(0.0, 1.0, 5.0), hs=(1e-2,))
result = run_sweep(grid, workers=1)

print(emit_table(result, "text"))

print("cells that stopped before t_final:")
for c in result.cells:
    if c.termination != "completed":
        print(f"  alpha={c.alpha:g} beta={c.beta:g} h={c.h:g}: "
              f"stopped at t={c.t_final:.4f} ({c.termination})")
