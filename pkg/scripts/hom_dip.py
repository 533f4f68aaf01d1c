"""Coincidence probability at a balanced beamsplitter against the pulse mismatch."""

import numpy as np

from qlinphoton import fields, pgstate
from qlinphoton.grid import TimeGrid


def main():
    grid = TimeGrid(-1.0, 60.0, 1e-3)
    nu = fields.ExponentialPulse(1.0)
    print(f"{'gamma2':>7s} {'overlap':>9s} {'P(1,1)':>9s}")
    for g2 in np.geomspace(0.25, 4.0, 9):
        bs = pgstate.beamsplitter_coefficients(0.5, nu, fields.ExponentialPulse(g2), grid)
        print(f"{g2:7.3f} {abs(bs.overlap):9.5f} {bs.coincidence_probability():9.5f}")


if __name__ == "__main__":
    main()
