"""Input and output pulses of the two-section pulse shaper, written as CSV.

Usage: python3 scripts/shaper_figure.py [out.csv]
"""

import sys

import numpy as np

from qlinphoton import fields, golden, synthesis
from qlinphoton.grid import TimeGrid


def main(path="shaper.csv"):
    grid = TimeGrid(-2.0, 20.0, 1e-3)
    nu = fields.ExponentialPulse(2.0)
    target = fields.ExpSumPulse(golden.SHAPER_COEFFS, golden.SHAPER_RATES)
    out = synthesis.shape_pulse(nu, target, synthesis.example_shaper(), grid)
    y = out.xi_minus[:, 0, 0]
    ref = golden.shaper_output(grid.times)
    print(f"rel L2 vs closed form: {np.linalg.norm(y - ref) / np.linalg.norm(ref):.3e}")
    data = np.column_stack([grid.times, nu(grid.times), y.real, y.imag, ref.real, ref.imag])
    np.savetxt(path, data, delimiter=",", fmt="%.10e", header="t,nu_in,out_re,out_im,ref_re,ref_im", comments="")
    print(f"wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:])
