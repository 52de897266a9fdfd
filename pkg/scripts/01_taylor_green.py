"""
A single Stokes eigenmode
=========================

The Taylor-Green field is an eigenfunction of the Stokes operator and its
self-advection is a pure gradient, so the theta scheme reduces to a scalar
recursion with factor (1 - 2 nu tau (1 - theta)) / (1 + 2 nu tau theta).
"""

import numpy as np

from oneleg.spectral_field import TorusGrid, taylor_green
from oneleg.stepper import ForcingSpec, RunConfig, run

grid = TorusGrid(32)
nu, tau, steps = 1.0, 0.1, 200

for theta in (0.5, 0.75, 1.0):
    cfg = RunConfig(nu=nu, theta=theta, tau=tau, steps=steps, grid=grid,
                    forcing=ForcingSpec(), u0=taylor_green(grid))
    log = run(cfg)
    r = (1 - 2 * nu * tau * (1 - theta)) / (1 + 2 * nu * tau * theta)
    ratios = log.column("l2_np1") / log.column("l2_n")
    print(f"theta={theta:4}  factor={r:.15f}  max deviation={np.max(np.abs(ratios - r)):.2e}")

# theta = 1/2 has factor -> -1 as nu tau grows: stable but not damping
for tau in (0.1, 1.0, 10.0):
    print(f"tau={tau:5}  theta=1/2 factor={(1 - nu * tau) / (1 + nu * tau):+.4f}"
          f"  theta=1 factor={1 / (1 + 2 * nu * tau):.4f}")
