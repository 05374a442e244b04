"""Exporting a block to Touchstone and reading it back on another grid.

The coupler is written as a 4-port file on a coarse grid, then resampled
onto a finer one. Interpolation uses magnitude and unwrapped phase, so the
quadrature relation survives.
"""
import tempfile
from pathlib import Path

import numpy as np

from pdlmba import touchstone as ts
from pdlmba.components import CouplerSpec, linear_phase_theta, make_coupler
from pdlmba.netcore import FrequencyGrid

coarse = FrequencyGrid.linspace(0.2e9, 2e9, 19)
fine = FrequencyGrid.linspace(0.2e9, 2e9, 181)
coupler = make_coupler(CouplerSpec(linear_phase_theta(coarse, -300.0)), coarse)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "coupler.s4p"
    ts.write(path, ts.from_network(coupler, format="MA"))
    text = path.read_text()
    print("\n".join(text.splitlines()[:6]))
    print("...")
    resampled = ts.to_network(ts.read(path), fine)

err = np.abs(resampled.sij(2, 1) - 1j * resampled.sij(4, 1)).max()
truth = make_coupler(CouplerSpec(linear_phase_theta(fine, -300.0)), fine)
print(f"resampled to {len(fine)} points: |S21 - jS41| <= {err:.1e}")
print(f"deviation from the analytic coupler: {np.abs(resampled.s - truth.s).max():.1e}")
