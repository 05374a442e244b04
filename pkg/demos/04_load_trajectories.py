"""Load modulation seen by the balanced pair.

With the two paths phase-aligned, the BA load trajectory is the same at
every frequency: it starts open (BA off below back-off), then slides along
the real axis to twice the reference impedance at full drive. Detuning the
CA match by a dispersive 30 degrees splits the trajectories apart.
"""
import numpy as np

from pdlmba import lmba
from pdlmba.components import linear_phase_theta
from pdlmba.netcore import FrequencyGrid

grid = FrequencyGrid.linspace(0.2e9, 2e9, 181)
theta = linear_phase_theta(grid, -900.0)
co = np.exp(-1j * np.deg2rad(70.0) * grid.points / grid.f_mid)
aligned = lmba.ideal_topology(grid, theta=theta, phs=co, btr=3.0, ctr=3.0, co=co)

profile = lmba.make_drive_profile(obo_db=10.0, n_levels=11)
traj = lmba.trajectory_sweep(aligned, profile)
print("drive  Gamma_BA (every frequency)")
for r, g in zip(profile.levels, traj.gamma[0]):
    print(f" {r:4.1f}  {g.real:+.6f}{round(g.imag, 9) + 0.0:+.6f}j")
print(f"spread across frequency: {traj.max_deviation():.1e}")

tilt = np.exp(-1j * np.deg2rad(30.0) * grid.points / grid.f_max)
detuned = aligned.replace(ca_omn=lmba.ideal_topology(grid, co=co * tilt).ca_omn)
bad = lmba.trajectory_sweep(detuned, profile)
print(f"with the CA match detuned: spread {bad.max_deviation():.4f}, "
      f"offset {bad.offset_deg.min():.1f} to {bad.offset_deg.max():.1f} deg")
