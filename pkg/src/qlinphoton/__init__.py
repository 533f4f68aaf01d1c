"""Linear quantum systems driven by single-photon and Gaussian fields."""

__version__ = "0.1.0"
