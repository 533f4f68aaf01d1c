"""Step-size convergence of the cavity output pulse and the DPA transient.

Halving dt should cut the pulse error by about 4 (trapezoid) and the RK4
covariance error by far more.
"""

import numpy as np

from qlinphoton import fields, golden, intensity
from qlinphoton.grid import TimeGrid
from qlinphoton.model import SystemParams, realize


def main():
    cav = realize(SystemParams.cavity(2.0, 1.0))
    cav0 = realize(SystemParams.cavity(2.0, 0.0))
    nu = fields.ExponentialPulse(1.0)
    prev = None
    print(f"{'dt':>8s} {'pulse rel L2':>14s} {'ratio':>7s} {'Sigma max':>12s}")
    for dt in (8e-3, 4e-3, 2e-3, 1e-3, 5e-4):
        grid = TimeGrid(-2.0, 20.0, dt)
        xi = fields.photon_pulses([nu], grid)
        y = intensity.steady_pulses(cav, xi).xi_minus[:, 0, 0]
        ref = golden.cavity_output_pulse(grid.times, 2.0, 1.0, 1.0)
        err = np.linalg.norm(y - ref) / np.linalg.norm(ref)
        sol = intensity.integrate_transient(cav0, xi, 0.0, 10.0, dt)
        sig = np.max(np.abs(sol.Sigma - golden.cavity_sigma(sol.times, 2.0, 1.0)))
        ratio = f"{prev / err:7.2f}" if prev else " " * 7
        print(f"{dt:8.1e} {err:14.3e} {ratio} {sig:12.3e}")
        prev = err


if __name__ == "__main__":
    main()
