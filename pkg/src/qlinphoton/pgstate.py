"""Photon-Gaussian states: certification and steady-state transfer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DimensionError, RejectedStateError, ValidationError
from .fields import (
    CovKernel,
    PhotonGaussianState,
    PulseMatrix,
    normalization,
    photon_coherent_cov,
    photon_pulses,
    sample_pulse,
)
from .grid import TimeGrid, onset_mask
from .intensity import covariance_transfer, steady_pulses
from .model import StateSpaceModel

CERTIFY_TOL = 1e-3


def make_state(xi: PulseMatrix, cov: CovKernel, tol: float = CERTIFY_TOL) -> PhotonGaussianState:
    """Certify ``(xi, cov)`` as a photon-Gaussian state.

    Raises
    ------
    RejectedStateError
        When the normalization differs from 1 by ``tol`` or more; ``.value``
        holds the computed normalization.
    """
    value, err = normalization(xi, cov)
    state = PhotonGaussianState(xi, cov, value, tol, err)
    if not state.certified:
        raise RejectedStateError(f"normalization {value:.6g} is not 1 within {tol:g}", value)
    return state


@dataclass(frozen=True, eq=False)
class TransferResult:
    input_state: PhotonGaussianState
    output_state: PhotonGaussianState
    system: StateSpaceModel

    @property
    def drift(self) -> float:
        return abs(self.output_state.norm_value - self.input_state.norm_value)


def transfer_state(g: StateSpaceModel, state: PhotonGaussianState) -> TransferResult:
    """Steady-state output ``(g_G * xi, g_G R g_G^dagger)`` and its certificate.

    Raises
    ------
    ConsistencyError
        If the output normalization is off by more than ten times the input
        tolerance (preservation is exact, so this flags quadrature breakdown).
    """
    xi_out = steady_pulses(g, state.xi)
    cov_out = covariance_transfer(g, state.cov, state.xi.grid)
    value, err = normalization(xi_out, cov_out)
    out = PhotonGaussianState(xi_out, cov_out, value, state.tol, err)
    if abs(value - 1.0) > 10 * state.tol:
        raise ConsistencyError(f"output normalization {value:.6g} drifted beyond {10 * state.tol:g}")
    return TransferResult(state, out, g)


# ----------------------------------------------------------------------------
# beamsplitter


@dataclass(frozen=True)
class TwoPhotonTerm:
    """``coeff * B_a^*(f) B_b^*(h) |0>``, with ``arms = (a, b)`` (1-based output
    arms) and ``pulses = (f, h)`` naming input pulses (1 or 2)."""

    coeff: float
    arms: tuple
    pulses: tuple


@dataclass(frozen=True)
class BeamsplitterOutput:
    """Two-photon output of a beamsplitter fed one photon per arm.

    ``overlap`` is ``<nu_1, nu_2>``; it fixes how the one-in-each terms
    interfere when the two photons are detected.
    """

    eta: float
    terms: tuple
    overlap: complex

    @property
    def both_arm1(self) -> TwoPhotonTerm:
        return self.terms[0]

    @property
    def both_arm2(self) -> TwoPhotonTerm:
        return self.terms[3]

    def one_in_each_amplitude(self) -> complex:
        """Amplitude of the one-in-each component along ``B_1^*(nu_1) B_2^*(nu_2)|0>``.

        The two one-in-each terms overlap by ``|<nu_1, nu_2>|^2``, giving
        ``eta - (1 - eta) |<nu_1, nu_2>|^2``; zero for identical pulses at
        ``eta = 1/2``.
        """
        return self.terms[1].coeff + self.terms[2].coeff * abs(self.overlap) ** 2

    def coincidence_probability(self) -> float:
        """Probability of one photon in each output arm:
        ``eta^2 + (1 - eta)^2 - 2 eta (1 - eta) |<nu_1, nu_2>|^2``."""
        e = self.eta
        return float(e**2 + (1 - e) ** 2 - 2 * e * (1 - e) * abs(self.overlap) ** 2)


def beamsplitter_coefficients(eta: float, nu1, nu2, grid: TimeGrid | None = None) -> BeamsplitterOutput:
    """Coefficients of the four two-photon output terms.

    ``nu1``, ``nu2`` may be pulse callables (then ``grid`` is required) or
    sampled arrays on ``grid``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"beamsplitter eta must lie in [0, 1], got {eta}")
    overlap = _overlap(nu1, nu2, grid)
    r = np.sqrt(eta * (1 - eta))
    terms = (
        TwoPhotonTerm(float(r), (1, 1), (1, 2)),
        TwoPhotonTerm(float(eta), (1, 2), (1, 2)),
        TwoPhotonTerm(float(-(1 - eta)), (1, 2), (2, 1)),
        TwoPhotonTerm(float(-r), (2, 2), (1, 2)),
    )
    return BeamsplitterOutput(float(eta), terms, overlap)


def _overlap(nu1, nu2, grid):
    if nu1 is nu2:
        return 1.0 + 0.0j
    if grid is None:
        raise ValidationError("pulse overlap needs a grid")
    a, ka = sample_pulse(nu1, grid) if callable(nu1) else (np.asarray(nu1, dtype=complex), 0)
    b, kb = sample_pulse(nu2, grid) if callable(nu2) else (np.asarray(nu2, dtype=complex), 0)
    wa, wb = onset_mask(grid.n, [ka, kb]).T
    w = np.minimum(wa, wb)
    ab = np.sum(w * np.conj(a) * b)
    # normalized on the grid so identical samples give exactly unit overlap
    return complex(ab / np.sqrt(np.sum(wa * np.abs(a) ** 2) * np.sum(wb * np.abs(b) ** 2)))


# ----------------------------------------------------------------------------
# photon + coherent


def photon_coherent_transfer(g: StateSpaceModel, nu, alpha, grid: TimeGrid) -> TransferResult:
    """Photon ``nu`` on channel 1 and coherent amplitude ``alpha`` on channel 2.

    The output pulses are the first columns of ``g_G * Delta(diag(nu, 0), 0)``;
    the background is the coherent kernel pushed through ``g``.
    """
    if g.n_ch != 2:
        raise DimensionError(f"photon + coherent input needs m = 2, got {g.n_ch}")
    one = photon_pulses([nu], grid)
    xm = np.zeros((grid.n, 2, 1), dtype=complex)
    xm[:, 0, 0] = one.xi_minus[:, 0, 0]
    xi = PulseMatrix(grid, xm, np.zeros_like(xm), one.onset)
    cov = photon_coherent_cov(alpha, grid, nu)
    state = make_state(xi, cov)
    return transfer_state(g, state)
