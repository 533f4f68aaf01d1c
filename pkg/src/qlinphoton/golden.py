"""Closed-form reference values for the worked single-channel systems.

Each function takes plain parameters and returns arrays on the given times;
pulses vanish for ``t < 0``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def _causal(t, val):
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0, val, 0.0)


def exponential_pulse(t, gamma):
    t = np.asarray(t, dtype=float)
    return _causal(t, np.sqrt(2 * gamma) * np.exp(-gamma * np.clip(t, 0, None))).astype(complex)


def cavity_output_pulse(t, kappa, omega, gamma):
    """``xi^-_out`` of a cavity driven by the exponential pulse."""
    tt = np.clip(np.asarray(t, dtype=float), 0, None)
    lam = kappa / 2 + 1j * omega
    val = np.sqrt(2 * gamma) * np.exp(-gamma * tt) - kappa * np.sqrt(2 * gamma) / (lam - gamma) * (
        np.exp(-gamma * tt) - np.exp(-lam * tt)
    )
    return _causal(t, val)


def cavity_m_minus(t, kappa, omega, gamma):
    """First entry of ``m_-(t)`` (the second is zero), start at ``t0 = 0``."""
    tt = np.asarray(t, dtype=float)
    return -np.sqrt(2 * kappa * gamma) / (kappa / 2 - gamma - 1j * omega) * (
        np.exp(-gamma * tt) - np.exp(-(kappa / 2 - 1j * omega) * tt)
    )


def cavity_m_plus(t, kappa, omega, gamma):
    """Second entry of ``m_+(t)`` (the first is zero), start at ``t0 = 0``."""
    tt = np.asarray(t, dtype=float)
    return -np.sqrt(2 * kappa * gamma) / (kappa / 2 - gamma + 1j * omega) * (
        np.exp(-gamma * tt) - np.exp(-(kappa / 2 + 1j * omega) * tt)
    )


def cavity_sigma(t, kappa, gamma):
    """``Sigma_nu(t)`` for a resonant cavity (``omega = 0``), shape ``(N, 2, 2)``.

    At ``kappa / 2 = gamma`` the coefficient is taken in the limit,
    ``(e^{-kappa t/2} - e^{-gamma t}) / (kappa/2 - gamma) -> t e^{-gamma t}``.
    """
    tt = np.asarray(t, dtype=float)
    d = kappa / 2 - gamma
    if abs(d) < 1e-12:
        ratio = tt * np.exp(-gamma * tt)
    else:
        ratio = (np.exp(-kappa / 2 * tt) - np.exp(-gamma * tt)) / d
    c = 2 * gamma * kappa * ratio**2
    out = np.zeros((len(tt), 2, 2))
    out[:, 0, 0] = 1.0 + c
    out[:, 1, 1] = c
    return out


def dpa_output_pulses(t, kappa, eps, gamma):
    """``(xi^-_out, xi^+_out)`` of the DPA driven by the exponential pulse."""
    t = np.asarray(t, dtype=float)
    tt = np.clip(t, 0, None)
    den = (kappa - 2 * gamma - eps) * (kappa - 2 * gamma + eps)
    pre = 2 * kappa * np.sqrt(2 * gamma) * np.exp(-kappa * tt / 2) / den
    e1 = np.exp(-(2 * gamma - kappa) / 2 * tt)
    ch, sh = np.cosh(eps * tt / 2), np.sinh(eps * tt / 2)
    xm = np.sqrt(2 * gamma) * np.exp(-gamma * tt) + pre * (e1 * (2 * gamma - kappa) - (2 * gamma - kappa) * ch + eps * sh)
    xp = pre * (-eps * e1 + eps * ch - (2 * gamma - kappa) * sh)
    return _causal(t, xm).astype(complex), _causal(t, xp).astype(complex)


def dpa_noise_integral(t, kappa, eps):
    """``kappa^2 int_0^t e^{-kappa r} sinh^2(eps r / 2) dr`` in closed form."""
    t = np.asarray(t, dtype=float)

    def prim(r):
        # sinh^2(x) = (cosh(2x) - 1) / 2 with x = eps r / 2
        a, b = kappa - eps, kappa + eps
        return 0.25 * (-np.exp(-a * r) / a - np.exp(-b * r) / b) + 0.5 * np.exp(-kappa * r) / kappa

    return kappa**2 * (prim(t) - prim(0.0))


def dpa_transient_intensity(t, kappa, eps, gamma):
    """Displayed mean output intensity of the DPA started at ``t0 = 0``."""
    xm, xp = dpa_output_pulses(t, kappa, eps, gamma)
    return dpa_noise_integral(t, kappa, eps) + np.abs(xm) ** 2 + np.abs(xp) ** 2


def dpa_initial_state_term(t, kappa, eps):
    """``kappa e^{-kappa t} sinh^2(eps t / 2)``: output flux from the oscillator's
    own ground state, squeezed by the DPA."""
    t = np.asarray(t, dtype=float)
    return kappa * np.exp(-kappa * t) * np.sinh(eps * t / 2) ** 2


def dpa_w(kappa, eps):
    return kappa * eps**2 / (2 * (kappa**2 - eps**2))


def dpa_matrix(kappa, eps):
    return -0.5 * np.array([[kappa, -eps], [-eps, kappa]], dtype=complex)


def dpa_output_kernel(tau, kappa, eps):
    """Smooth part of the DPA vacuum output kernel at lag ``tau`` (``(N, 2, 2)``),
    with the midpoint convention at ``tau = 0``."""
    A = dpa_matrix(kappa, eps)
    E = np.diag([1.0, 0.0])
    ups = kappa * scipy.linalg.solve_continuous_lyapunov(A, -E)
    out = []
    for s in np.atleast_1d(np.asarray(tau, dtype=float)):
        if s > 0:
            eA = scipy.linalg.expm(A * s)
            out.append(kappa * eA @ ups - kappa * eA @ E)
        elif s < 0:
            eA = scipy.linalg.expm(-A.conj().T * s)
            out.append(kappa * ups @ eA - kappa * E @ eA)
        else:
            out.append(kappa * ups - kappa * E)
    return np.array(out)


def shaper_output(t):
    """Target pulse of the two-section shaper driven by the ``gamma = 2`` pulse."""
    t = np.asarray(t, dtype=float)
    tt = np.clip(t, 0, None)
    val = 2 * ((54 + 12j) / 5 * np.exp(-3 * tt) - 5 * (2 + 1j) * np.exp(-2 * tt) + (1 + 13j) / 5 * np.exp((-1 - 1j) * tt))
    return _causal(t, val)


SHAPER_COEFFS = (2 * (54 + 12j) / 5, -10 * (2 + 1j), 2 * (1 + 13j) / 5)
SHAPER_RATES = (3.0, 2.0, 1 + 1j)
