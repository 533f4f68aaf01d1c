"""Uniform time grids and the quadrature used on them.

Every integral in the package is a composite trapezoid rule on a uniform grid.
Signals that switch on abruptly (a causal pulse at ``t = 0``) carry an *onset*
index: the signal is zero strictly before that node, and the sample at the onset
is the right-hand limit. The trapezoid rule then runs over ``[t_onset, t_max]``,
which keeps it second order despite the jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import ValidationError


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"grid dt must be positive, got {self.dt}")
        if not self.t_min < self.t_max:
            raise ValidationError(f"grid needs t_min < t_max, got [{self.t_min}, {self.t_max}]")
        steps = (self.t_max - self.t_min) / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ValidationError(
                f"grid span {self.t_max - self.t_min} is not a whole number of steps dt={self.dt}"
            )

    @property
    def n(self) -> int:
        return int(round((self.t_max - self.t_min) / self.dt)) + 1

    @property
    def times(self) -> np.ndarray:
        return self.t_min + self.dt * np.arange(self.n)

    def index_of(self, t: float) -> int:
        """Index of the first node at or after ``t`` (clipped to the grid)."""
        k = int(np.ceil((t - self.t_min) / self.dt - 1e-9))
        return min(max(k, 0), self.n - 1)

    def contains_node(self, t: float) -> bool:
        k = (t - self.t_min) / self.dt
        return 0 <= k <= self.n - 1 + 1e-9 and abs(k - round(k)) < 1e-9

    def coarsened(self, factor: int = 2) -> "TimeGrid":
        n_steps = (self.n - 1) // factor
        return TimeGrid(self.t_min, self.t_min + n_steps * factor * self.dt, factor * self.dt)

    def with_dt(self, dt: float) -> "TimeGrid":
        return TimeGrid(self.t_min, self.t_max, dt)


def onset_mask(n: int, onset) -> np.ndarray:
    """Dimensionless trapezoid weights on ``[t_onset, t_max]``, one column per onset.

    Returns shape ``(n, len(onset))``: 0 before the onset, 1/2 at the onset and at
    the last node, 1 in between.
    """
    onset = np.atleast_1d(np.asarray(onset, dtype=int))
    idx = np.arange(n)[:, None]
    w = (idx >= onset[None, :]).astype(float)
    w[idx[:, 0] == n - 1, :] *= 0.5
    w[onset, np.arange(len(onset))] = np.where(onset == n - 1, 0.0, 0.5)
    return w


def conv_mask(n: int, onset) -> np.ndarray:
    """Signal-side weights for a running convolution: like :func:`onset_mask` but
    with no half weight at the last node (the upper limit of a causal convolution
    is handled on the kernel side)."""
    onset = np.atleast_1d(np.asarray(onset, dtype=int))
    idx = np.arange(n)[:, None]
    w = (idx >= onset[None, :]).astype(float)
    w[onset, np.arange(len(onset))] = 0.5
    return w


def expm_grid(A: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``exp(A t)`` for every ``t`` in ``times``; shape ``(len(times), n, n)``."""
    A = np.asarray(A, dtype=complex)
    times = np.asarray(times, dtype=float)
    if A.shape[0] == 0:
        return np.zeros((len(times), 0, 0), dtype=complex)
    return scipy.linalg.expm(times[:, None, None] * A[None, :, :])


def _fft_matmul_conv(kernel: np.ndarray, signal: np.ndarray, length: int) -> np.ndarray:
    """Full linear convolution ``sum_j kernel[i-j] @ signal[j]`` along axis 0."""
    nfft = scipy.fft.next_fast_len(length)
    kf = scipy.fft.fft(kernel, nfft, axis=0)
    sf = scipy.fft.fft(signal, nfft, axis=0)
    return scipy.fft.ifft(np.einsum("lab,lbc->lac", kf, sf), axis=0)[:length]


def causal_convolve(kernel: np.ndarray, signal: np.ndarray, weights: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid approximation of ``(k * f)(t_i) = int_{-inf}^{t_i} k(t_i - s) f(s) ds``.

    ``kernel`` holds ``k`` at lags ``0, dt, 2 dt, ...`` with shape ``(N, a, b)``; the
    lag-0 sample is the right-hand limit ``k(0+)`` and is halved here. ``signal``
    has shape ``(N, b, c)`` and ``weights`` shape ``(N, c)`` (see :func:`conv_mask`).
    """
    n = signal.shape[0]
    k = np.array(kernel[:n], dtype=complex)
    k[0] *= 0.5
    f = signal * weights[:, None, :]
    return dt * _fft_matmul_conv(k, f, n)


def two_sided_convolve(kernel: np.ndarray, signal: np.ndarray, weights: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid approximation of ``int k(t_i - s) f(s) ds`` over the whole grid.

    ``kernel`` has shape ``(2N-1, a, b)`` with lag ``l * dt`` stored at index
    ``l + N - 1``. Any jump of ``k`` at lag 0 must already be resolved by the caller
    (midpoint value), which keeps the rule second order.
    """
    n = signal.shape[0]
    f = signal * weights[:, None, :]
    full = _fft_matmul_conv(kernel, f, 3 * n - 2)
    return dt * full[n - 1 : 2 * n - 1]
