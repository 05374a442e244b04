"""Building blocks: the quadrature coupler and transmission lines.

The coupler keeps 90 degrees between its thru and coupled ports at every
frequency, however much its common phase wanders. Lines cascade by adding
electrical length, and a mismatched quarter-wave line transforms impedance.
"""
import numpy as np

from pdlmba.components import CouplerSpec, LineSpec, linear_phase_theta, make_coupler, make_line
from pdlmba.netcore import FrequencyGrid, cascade, check_lossless, check_reciprocal

grid = FrequencyGrid.linspace(0.2e9, 2e9, 181)
f0 = grid.f_mid

theta = linear_phase_theta(grid, -500.0)
coupler = make_coupler(CouplerSpec(theta), grid)
ratio = coupler.sij(2, 1) / coupler.sij(4, 1)
print(f"coupler phase swings {np.rad2deg(np.ptp(theta)):.0f} deg over the band")
print(f"S21/S41 stays at j: max error {np.abs(ratio - 1j).max():.1e}")
print(f"lossless: {check_lossless(coupler, 1e-12)}, reciprocal: {check_reciprocal(coupler, 1e-12)}")

q = make_line(LineSpec(50.0, 90.0, f0), grid)
h = cascade(q, q)
k = int(np.argmin(np.abs(grid.points - f0)))
print(f"two quarter-wave lines at f0: S21 = {h.s21[k]:.6f}")

t40 = make_line(LineSpec(40.0, 90.0, f0), grid)
g = t40.sij(1, 1)[k]
z_in = 50 * (1 + g) / (1 - g)
print(f"40 ohm quarter-wave into 50 ohm looks like {z_in.real:.3f} ohm (expect 40^2/50 = 32)")
