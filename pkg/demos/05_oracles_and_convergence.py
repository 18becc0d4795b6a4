"""
Analytic oracles and mesh convergence
=====================================

Before the characteristics cross, the inviscid equation has an exact
solution by tracing each point back along its characteristic.  The P2
solutions converge to it under mesh refinement, and the closed-form
shock quantities (formation time, jump speed, jump dissipation) anchor
the post-shock diagnostics.  The built-in check battery bundles these
oracles into a one-call verification.
"""

import numpy as np

from phburgers import (
    RunConfig,
    characteristics_l2_error,
    fem1d,
    rankine_hugoniot_speed,
    run_simulation,
    selftest,
    shock_dissipation,
    shock_formation_time,
)

t_star = shock_formation_time()
print(f"shock formation time of the pulse: t* = {t_star:.6f}")
print(f"speed of a (1, 0) jump:            {rankine_hugoniot_speed(1.0, 0.0):g}")
de, dh = shock_dissipation(1.0, 0.0)
print(f"its budget drains:                 dE = {de:+.4f}, dH = {dh:+.4f}\n")

# inviscid runs to t = 0.1 < t*, measured against the exact solution
print("mesh convergence before the shock (t = 0.1):")
prev = None
for h in (1e-2, 5e-3, 2.5e-3):
    run = run_simulation(RunConfig(h=h, beta=0.0, t_final=0.1, n_snapshots=2))
    mesh = fem1d.build_mesh(run.config.mesh_elems)
    err = characteristics_l2_error(mesh, run.snapshots[-1].v, 0.1)
    note = "" if prev is None else f"  (ratio {prev / err:.2f})"
    print(f"  h = {h:7.4f}:  L2 error = {err:.3e}{note}")
    prev = err

# the same oracles, packaged as the verification battery
print("\nbuilt-in checks:")
for name, ok, detail in selftest.run_checks():
    print(f"  {'ok  ' if ok else 'FAIL'}  {name}  ({detail})")
