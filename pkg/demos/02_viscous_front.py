"""
A viscous run and the speed of its front
========================================

Integrate the Gaussian pulse with beta = 1 on the fine mesh.  After the
characteristics first cross (t* = 0.1649) the solution organizes into a
thin moving layer; its measured speed should match the Rankine-Hugoniot
prediction (v_left + v_right) / 2 built from the sampled edge states.
"""

import numpy as np

from phburgers import RunConfig, diagnostics, fem1d, run_simulation

config = RunConfig(h=1e-3, alpha=1.0, beta=1.0, t_final=0.4)
print(f"h = {config.width:g}, nu = {config.nu:g}, dt0 = {config.dt0:g}")
result = run_simulation(config)
print(f"finished: {result.n_steps} steps to t = {result.t_reached:g}, "
      f"Var = {result.var:.3e}, termination {result.termination_reason}\n")

mesh = fem1d.build_mesh(config.mesh_elems)

# track the front through the snapshots of the post-shock window
print("   t       x_front   v_left   v_right")
ts, xs, vls, vrs = [], [], [], []
for snap in result.snapshots:
    if not 0.25 <= snap.t <= 0.35:
        continue
    x_f, v_l, v_r = diagnostics.detect_front(mesh, snap.v, config.nu)
    print(f"  {snap.t:.3f}   {x_f:.4f}    {v_l:.4f}   {v_r:.4f}")
    ts.append(snap.t)
    xs.append(x_f)
    vls.append(v_l)
    vrs.append(v_r)

speed = np.polyfit(ts, xs, 1)[0]
rh = diagnostics.rankine_hugoniot_speed(np.mean(vls), np.mean(vrs))
print(f"\nfitted front speed:          {speed:.4f}")
print(f"Rankine-Hugoniot from edges: {rh:.4f}")
print(f"difference:                  {100 * abs(speed - rh) / rh:.2f}%")
