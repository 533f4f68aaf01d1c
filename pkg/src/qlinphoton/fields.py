"""Moment-level field states: pulse matrices, covariance kernels and the
normalization functional of photon-Gaussian states.

Kernels are ``R(t, r) = <b(t) b(r)^dagger>`` for the doubled-up field vector
``b = (b, b^#)``. They split into a Dirac part ``D delta(t - r)`` and smooth
pieces, each kept in the cheapest exact form available:

* stationary: ``K(t - r)`` with ``K(tau) = left exp(gen tau) right`` for
  ``tau > 0`` and ``K(-tau)^dagger`` for ``tau < 0``;
* factored: ``F(t) F(r)^dagger`` with ``F`` sampled on the grid;
* dense: arbitrary samples on the grid (small grids only).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.integrate

from . import dmat
from .errors import AccuracyWarning, ComplexityError, DimensionError, PreconditionError, ValidationError
from .grid import TimeGrid, expm_grid, onset_mask, two_sided_convolve

NORM_TOL = 1e-6
MAX_WICK_CHANNELS = 4


# ----------------------------------------------------------------------------
# scalar pulse families


@dataclass(frozen=True)
class ExponentialPulse:
    """``sqrt(2 gamma) exp(-gamma (t - t0))`` for ``t >= t0``, zero before."""

    gamma: float
    t0: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError(f"exponential pulse needs gamma > 0, got {self.gamma}")

    @property
    def onset(self) -> float:
        return self.t0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = np.sqrt(2 * self.gamma) * np.exp(-self.gamma * np.clip(t - self.t0, 0.0, None))
        return np.where(t >= self.t0, val, 0.0).astype(complex)

    def laplace(self, s):
        return np.sqrt(2 * self.gamma) * np.exp(-s * self.t0) / (s + self.gamma)


@dataclass(frozen=True)
class ExpSumPulse:
    """``sum_k c_k exp(-r_k (t - t0))`` for ``t >= t0``; the causal pulses with a
    rational Laplace transform and simple poles ``-r_k``."""

    coeffs: tuple
    rates: tuple
    t0: float = 0.0

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coeffs)
        r = tuple(complex(x) for x in self.rates)
        if len(c) != len(r) or not c:
            raise ValidationError("exp-sum pulse needs matching, non-empty coeffs and rates")
        if any(x.real <= 0 for x in r):
            raise ValidationError("exp-sum pulse rates must have positive real part")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "rates", r)

    @property
    def onset(self) -> float:
        return self.t0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tau = np.clip(t - self.t0, 0.0, None)
        val = sum(c * np.exp(-r * tau) for c, r in zip(self.coeffs, self.rates))
        return np.where(t >= self.t0, val, 0.0).astype(complex)

    def laplace(self, s):
        return np.exp(-s * self.t0) * sum(c / (s + r) for c, r in zip(self.coeffs, self.rates))

    def norm_squared(self) -> float:
        """Exact ``int |nu|^2``."""
        c = np.array(self.coeffs)
        r = np.array(self.rates)
        return float(np.real(np.sum(np.conj(c)[:, None] * c[None, :] / (np.conj(r)[:, None] + r[None, :]))))


@dataclass(frozen=True, eq=False)
class SampledPulse:
    """Pulse given by samples; linearly interpolated, zero outside ``[t[0], t[-1]]``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise DimensionError("sampled pulse needs 1-D times and values of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("sampled pulse times must be increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def onset(self) -> float:
        return float(self.times[0])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        re = np.interp(t, self.times, self.values.real, left=0.0, right=0.0)
        im = np.interp(t, self.times, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im


def sample_pulse(pulse, grid: TimeGrid) -> tuple[np.ndarray, int]:
    """Samples on the grid and the onset index (first node at or after the onset)."""
    onset = getattr(pulse, "onset", None)
    k = 0 if onset is None else grid.index_of(onset)
    vals = np.asarray(pulse(grid.times), dtype=complex)
    vals[:k] = 0.0
    return vals, k


def pulse_norm_squared(values: np.ndarray, onset: int, dt: float) -> float:
    """``int |nu|^2`` over ``[t_onset, t_max]`` by Simpson's rule.

    The membership check uses a fourth-order rule so that it tests the pulse
    rather than the trapezoid error (which is ``O((gamma dt)^2)`` for a jump).
    """
    tail = np.abs(np.asarray(values)[onset:]) ** 2
    if len(tail) < 3:
        return float(dt * np.sum(tail))
    return float(scipy.integrate.simpson(tail, dx=dt))


# ----------------------------------------------------------------------------
# pulse matrices


@dataclass(frozen=True, eq=False)
class PulseMatrix:
    """Sampled ``xi(t) = Delta(xi^-(t), xi^+(t))``.

    ``xi_minus`` and ``xi_plus`` have shape ``(N, m, p)``: ``m`` channels and
    ``p`` wavepacket columns. Column ``k`` vanishes before node ``onset[k]``.
    ``source``, when given, maps an array of times to the exact pair
    ``(xi^-, xi^+)`` of shape ``(K, m, p)`` each, and
    is preferred by integrators that need off-grid values.
    """

    grid: TimeGrid
    xi_minus: np.ndarray
    xi_plus: np.ndarray
    onset: tuple
    source: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        xm = np.asarray(self.xi_minus, dtype=complex)
        xp = np.asarray(self.xi_plus, dtype=complex)
        if xm.ndim != 3 or xm.shape != xp.shape or xm.shape[0] != self.grid.n:
            raise DimensionError(f"pulse arrays must be (N, m, p) with N={self.grid.n}, got {xm.shape}, {xp.shape}")
        onset = tuple(int(k) for k in self.onset)
        if len(onset) != xm.shape[2]:
            raise DimensionError("need one onset index per pulse column")
        object.__setattr__(self, "xi_minus", xm)
        object.__setattr__(self, "xi_plus", xp)
        object.__setattr__(self, "onset", onset)

    @property
    def n_ch(self) -> int:
        return self.xi_minus.shape[1]

    @property
    def n_cols(self) -> int:
        return self.xi_minus.shape[2]

    def full(self) -> np.ndarray:
        """``Delta(xi^-, xi^+)`` at every node, shape ``(N, 2m, 2p)``."""
        return dmat.delta_array(self.xi_minus, self.xi_plus)

    def weights(self) -> np.ndarray:
        """Trapezoid weights per column, shape ``(N, p)``."""
        return onset_mask(self.grid.n, self.onset)

    def evaluate(self, t, left_limit: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """``(xi^-(t), xi^+(t))`` for a 1-D array of times, shapes ``(K, m, p)``.

        Uses ``source`` when present, else linear interpolation. With
        ``left_limit`` a column is zero at its own onset node.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        g = self.grid
        if self.source is not None:
            xm, xp = self.source(t)
            xm, xp = np.array(xm, dtype=complex), np.array(xp, dtype=complex)
        else:
            x = (t - g.t_min) / g.dt
            i = np.clip(np.floor(x).astype(int), 0, g.n - 2)
            f = (x - i)[:, None, None]
            xm = (1 - f) * self.xi_minus[i] + f * self.xi_minus[i + 1]
            xp = (1 - f) * self.xi_plus[i] + f * self.xi_plus[i + 1]
            outside = (t < g.t_min) | (t > g.t_max)
            xm[outside] = 0.0
            xp[outside] = 0.0
        on_t = g.t_min + g.dt * np.asarray(self.onset, dtype=float)
        tol = 1e-9 * g.dt
        dead = t[:, None] < on_t[None, :] - tol
        if left_limit:
            dead |= np.abs(t[:, None] - on_t[None, :]) <= tol
        xm = np.where(dead[:, None, :], 0.0, xm)
        xp = np.where(dead[:, None, :], 0.0, xp)
        return xm, xp

    def column_norms(self) -> np.ndarray:
        """``int (|xi^-_{.k}|^2 - |xi^+_{.k}|^2)`` summed over channels, per column."""
        w = self.weights()
        dens = np.sum(np.abs(self.xi_minus) ** 2 - np.abs(self.xi_plus) ** 2, axis=1)
        return self.grid.dt * np.sum(w * dens, axis=0)

    def with_arrays(self, xi_minus, xi_plus, source=None) -> "PulseMatrix":
        return PulseMatrix(self.grid, xi_minus, xi_plus, self.onset, source)


def photon_pulses(nu_list: Sequence, grid: TimeGrid, check: bool = True, tol: float = NORM_TOL) -> PulseMatrix:
    """``xi^- = diag(nu_1, ..., nu_m)``, ``xi^+ = 0``.

    Raises
    ------
    ValidationError
        If ``check`` and some ``nu_k`` is not unit-normalized on the grid.
    """
    nu_list = list(nu_list)
    m = len(nu_list)
    if m < 1:
        raise ValidationError("need at least one pulse")
    xm = np.zeros((grid.n, m, m), dtype=complex)
    onsets = []
    for k, nu in enumerate(nu_list):
        vals, k0 = sample_pulse(nu, grid)
        if check:
            nrm = pulse_norm_squared(vals, k0, grid.dt)
            if abs(nrm - 1.0) > tol:
                raise ValidationError(f"pulse {k + 1} has squared norm {nrm:.8g} on the grid, expected 1")
        xm[:, k, k] = vals
        onsets.append(k0)

    def source(t):
        out = np.zeros((len(t), m, m), dtype=complex)
        for k, nu in enumerate(nu_list):
            out[:, k, k] = nu(t)
        return out, np.zeros_like(out)

    return PulseMatrix(grid, xm, np.zeros_like(xm), tuple(onsets), source)


# ----------------------------------------------------------------------------
# covariance kernels


@dataclass(frozen=True, eq=False)
class StationaryKernel:
    """``K(tau) = left exp(gen tau) right`` for ``tau > 0``; ``K(-tau)^dagger`` for
    ``tau < 0``; the midpoint ``(K(0+) + K(0+)^dagger) / 2`` at ``tau = 0``."""

    left: np.ndarray
    gen: np.ndarray
    right: np.ndarray

    def positive(self, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.gen.shape[0] == 0:
            return np.zeros((len(tau), self.left.shape[0], self.right.shape[1]), dtype=complex)
        return self.left @ expm_grid(self.gen, tau) @ self.right

    def __call__(self, tau):
        scalar = np.ndim(tau) == 0
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        Kp = self.positive(np.abs(tau))
        out = np.where((tau > 0)[:, None, None], Kp, np.conj(np.swapaxes(Kp, -1, -2)))
        zero = tau == 0
        out[zero] = 0.5 * (Kp[zero] + np.conj(np.swapaxes(Kp[zero], -1, -2)))
        return out[0] if scalar else out

    def lags(self, n: int, dt: float) -> np.ndarray:
        """Samples at lags ``-(n-1) dt .. (n-1) dt`` (index ``l + n - 1``)."""
        Kp = self.positive(dt * np.arange(n))
        Kn = np.conj(np.swapaxes(Kp, -1, -2))
        mid = 0.5 * (Kp[0] + Kn[0])
        return np.concatenate([Kn[:0:-1], mid[None], Kp[1:]])

    def spectrum(self, omega) -> np.ndarray:
        """``int K(tau) exp(-i omega tau) dtau`` (gen must be Hurwitz)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        q = self.gen.shape[0]
        out = []
        for w in omega:
            Z = self.left @ np.linalg.solve(1j * w * np.eye(q) - self.gen, self.right)
            out.append(Z + Z.conj().T)
        return np.array(out)


@dataclass(frozen=True, eq=False)
class CovKernel:
    """Two-time kernel ``R(t, r) = D delta(t - r) + smooth(t, r)``.

    Attributes
    ----------
    n_ch : int
    delta_coeff : (2m, 2m) array
    stationary_part : StationaryKernel, optional
    factor : (N, 2m, q) array, optional
        Adds ``F(t) F(r)^dagger``; column ``j`` vanishes before ``factor_onset[j]``.
    dense : (N, N, 2m, 2m) array, optional
    grid : TimeGrid, optional
        Required by the sampled parts.
    mean : (N, 2m) array, optional
        Field mean ``<b(t)>``; its outer product is already part of ``factor``.
    """

    n_ch: int
    delta_coeff: np.ndarray
    stationary_part: StationaryKernel | None = None
    factor: np.ndarray | None = None
    factor_onset: tuple = ()
    dense: np.ndarray | None = None
    grid: TimeGrid | None = None
    mean: np.ndarray | None = None

    def __post_init__(self):
        m2 = 2 * self.n_ch
        D = np.asarray(self.delta_coeff, dtype=complex)
        if D.shape != (m2, m2):
            raise DimensionError(f"delta_coeff must be {m2}x{m2}, got {D.shape}")
        object.__setattr__(self, "delta_coeff", D)
        if (self.factor is not None or self.dense is not None) and self.grid is None:
            raise ValidationError("sampled kernel parts need a grid")
        if self.factor is not None:
            F = np.asarray(self.factor, dtype=complex)
            if F.ndim != 3 or F.shape[:2] != (self.grid.n, m2):
                raise DimensionError(f"factor must be (N, {m2}, q), got {F.shape}")
            onset = tuple(self.factor_onset) or (0,) * F.shape[2]
            if len(onset) != F.shape[2]:
                raise DimensionError("need one onset per factor column")
            object.__setattr__(self, "factor", F)
            object.__setattr__(self, "factor_onset", tuple(int(k) for k in onset))

    @property
    def is_stationary(self) -> bool:
        return self.factor is None and self.dense is None

    def with_grid(self, grid: TimeGrid) -> "CovKernel":
        if self.grid is not None and self.grid != grid:
            raise ValidationError("kernel already lives on a different grid")
        return replace(self, grid=grid)

    def _node(self, t: np.ndarray) -> np.ndarray:
        g = self.grid
        k = np.rint((np.asarray(t, dtype=float) - g.t_min) / g.dt).astype(int)
        return k

    def smooth(self, t, r) -> np.ndarray:
        """Smooth part at ``(t, r)``; broadcasts. Sampled parts need grid nodes."""
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        shape = t.shape
        t, r = t.ravel(), r.ravel()
        m2 = 2 * self.n_ch
        out = np.zeros((len(t), m2, m2), dtype=complex)
        if self.stationary_part is not None:
            out += self.stationary_part(t - r)
        if self.factor is not None or self.dense is not None:
            i, j = self._node(t), self._node(r)
            inside = (i >= 0) & (i < self.grid.n) & (j >= 0) & (j < self.grid.n)
            ii, jj = i[inside], j[inside]
            if self.factor is not None:
                F = self.factor * _column_support(self.grid.n, self.factor_onset)[:, None, :]
                out[inside] += F[ii] @ np.conj(np.swapaxes(F[jj], -1, -2))
            if self.dense is not None:
                out[inside] += self.dense[ii, jj]
        return out.reshape(shape + (m2, m2))

    def smooth_matrix(self, idx: np.ndarray | None = None) -> np.ndarray:
        """Smooth part on all node pairs (or on the subset ``idx``), ``(K, K, 2m, 2m)``."""
        g = self.grid
        if idx is None:
            idx = np.arange(g.n)
        t = g.times[idx]
        return self.smooth(t[:, None], t[None, :])

    def hermitian_residual(self, idx=None) -> float:
        M = self.smooth_matrix(idx)
        MT = np.conj(np.swapaxes(np.swapaxes(M, 0, 1), -1, -2))
        d = np.max(np.abs(self.delta_coeff - self.delta_coeff.conj().T), initial=0.0)
        return float(max(d, np.max(np.abs(M - MT), initial=0.0)))


def _column_support(n: int, onset) -> np.ndarray:
    idx = np.arange(n)[:, None]
    return (idx >= np.asarray(onset)[None, :]).astype(float)


def vacuum_delta(m: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(m), np.zeros(m)])).astype(complex)


def vacuum_cov(m: int) -> CovKernel:
    if m < 1:
        raise ValidationError("vacuum kernel needs m >= 1")
    return CovKernel(m, vacuum_delta(m))


def photon_input_cov(xi: PulseMatrix) -> CovKernel:
    """``R_0(t - r) + Delta(xi^-(t), xi^+(t)) Delta(xi^-(r), xi^+(r))^dagger``."""
    F = xi.full()
    return CovKernel(xi.n_ch, vacuum_delta(xi.n_ch), factor=F, factor_onset=xi.onset * 2, grid=xi.grid)


def photon_coherent_cov(alpha, grid: TimeGrid, nu=None) -> CovKernel:
    """Two-channel kernel for vacuum on channel 1 and a coherent state of
    amplitude ``alpha(t)`` on channel 2 (photon pulse ``nu`` rides on channel 1).

    The coherent part is the rank-one factor ``F(t) = [0, alpha(t), 0, alpha(t)^*]^T``.
    """
    if nu is not None:
        vals, k0 = sample_pulse(nu, grid)
        nrm = pulse_norm_squared(vals, k0, grid.dt)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValidationError(f"photon pulse has squared norm {nrm:.8g}, expected 1")
    a, k0 = sample_pulse(alpha, grid) if callable(alpha) else (np.asarray(alpha, dtype=complex), 0)
    if a.shape != (grid.n,):
        raise DimensionError("alpha samples must match the grid")
    F = np.zeros((grid.n, 4, 1), dtype=complex)
    F[:, 1, 0] = a
    F[:, 3, 0] = np.conj(a)
    return CovKernel(2, vacuum_delta(2), factor=F, factor_onset=(k0,), grid=grid, mean=F[:, :, 0])


# ----------------------------------------------------------------------------
# normalization


@dataclass(frozen=True, eq=False)
class PhotonGaussianState:
    xi: PulseMatrix
    cov: CovKernel
    norm_value: float
    tol: float = 1e-3
    error_estimate: float = float("nan")

    @property
    def certified(self) -> bool:
        return abs(self.norm_value - 1.0) < self.tol


def _slot_vectors(xi: PulseMatrix):
    """Coefficient vectors of the creation/annihilation products.

    The state is ``X_1 .. X_p rho X_p^* .. X_1^*``; its trace is the moment of
    ``X_p^* .. X_1^* X_1 .. X_p`` with ``X_k = int v_k(t)^T b(t) dt`` and
    ``X_k^* = int u_k(t)^T b(t) dt``.
    """
    xm, xp = xi.xi_minus, xi.xi_plus
    p = xi.n_cols
    u = [np.concatenate([np.conj(xm[:, :, k]), -xp[:, :, k]], axis=1) for k in range(p)]
    v = [np.concatenate([-np.conj(xp[:, :, k]), xm[:, :, k]], axis=1) for k in range(p)]
    slots = [u[k] for k in reversed(range(p))] + [v[k] for k in range(p)]
    onsets = [xi.onset[k] for k in reversed(range(p))] + list(xi.onset)
    return slots, onsets


def _pair_matrix(slots, onsets, cov: CovKernel, grid: TimeGrid) -> np.ndarray:
    n = grid.n
    dt = grid.dt
    m2 = 2 * cov.n_ch
    P = dmat.swap(cov.n_ch)
    L = len(slots)
    W = [onset_mask(n, [k])[:, 0] for k in onsets]
    G = np.zeros((L, L), dtype=complex)

    stat = None
    if cov.stationary_part is not None:
        stat = cov.stationary_part.lags(n, dt)
    F = None
    if cov.factor is not None:
        F = cov.factor * _column_support(n, cov.factor_onset)[:, None, :]
    DP = cov.delta_coeff @ P

    for b in range(L):
        pc = slots[b] @ P.T  # rows: (P c_b(s))^T
        y_stat = None
        if stat is not None:
            y_stat = two_sided_convolve(stat, pc[:, :, None], W[b][:, None], dt)[:, :, 0]
        if F is not None:
            fb = dt * np.einsum("s,sij,si->j", W[b], np.conj(F), pc)
        if cov.dense is not None:
            y_dense = dt * np.einsum("tsij,sj,s->ti", cov.dense, pc, W[b])
        for a in range(b):
            ca = slots[a]
            wmin = np.minimum(W[a], W[b])
            val = dt * np.einsum("t,ti,ij,tj->", wmin, ca, DP, slots[b])
            if y_stat is not None:
                val += dt * np.einsum("t,ti,ti->", W[a], ca, y_stat)
            if F is not None:
                fa = dt * np.einsum("t,ti,tij->j", W[a], ca, F)
                val += fa @ fb
            if cov.dense is not None:
                val += dt * np.einsum("t,ti,ti->", W[a], ca, y_dense)
            G[a, b] = val
    return G


def _perfect_matchings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for tail in _perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner)] + tail


def _wick_sum(G: np.ndarray) -> complex:
    total = 0.0 + 0.0j
    for match in _perfect_matchings(list(range(G.shape[0]))):
        prod = 1.0 + 0.0j
        for a, b in match:
            prod *= G[a, b]
        total += prod
    return total


def _raw_normalization(xi: PulseMatrix, cov: CovKernel) -> complex:
    grid = xi.grid
    if cov.grid is not None and cov.grid != grid:
        raise ValidationError("pulse and kernel live on different grids")
    if xi.n_ch != cov.n_ch:
        raise DimensionError(f"pulse has {xi.n_ch} channels, kernel has {cov.n_ch}")
    slots, onsets = _slot_vectors(xi)
    G = _pair_matrix(slots, onsets, cov, grid)
    return _wick_sum(G)


def _subsample(xi: PulseMatrix, cov: CovKernel):
    """The same problem on every second node, or None when onsets do not align."""
    if (xi.grid.n - 1) % 2 or any(k % 2 for k in xi.onset) or any(k % 2 for k in cov.factor_onset):
        return None
    g2 = xi.grid.coarsened(2)
    xi2 = PulseMatrix(g2, xi.xi_minus[::2], xi.xi_plus[::2], tuple(k // 2 for k in xi.onset))
    kw = {}
    if cov.factor is not None:
        kw.update(factor=cov.factor[::2], factor_onset=tuple(k // 2 for k in cov.factor_onset))
    if cov.dense is not None:
        kw.update(dense=cov.dense[::2, ::2])
    cov2 = CovKernel(cov.n_ch, cov.delta_coeff, cov.stationary_part, grid=g2 if kw else None, **kw)
    return xi2, cov2


def normalization(xi: PulseMatrix, cov: CovKernel, warn_tol: float = 1e-4, estimate: bool = True):
    """Trace of the photon-Gaussian operator built from ``(xi, cov)``.

    The ``2p``-point Gaussian moment is expanded by Wick's theorem into pair
    integrals, with each Dirac term integrated exactly. ``p`` is the number of
    pulse columns (``p = m`` for one photon per channel).

    Returns
    -------
    value : float
    error : float
        Richardson estimate ``|N_h - N_2h| / 3`` (nan when not available).

    Raises
    ------
    ComplexityError
        For more than four pulse columns.
    PreconditionError
        When the kernel carries a nonzero mean and ``p > 1`` (Wick's theorem
        needs a centered Gaussian beyond second moments).
    """
    p = xi.n_cols
    if p > MAX_WICK_CHANNELS:
        raise ComplexityError(f"normalization with {p} photons needs {_double_factorial(2 * p - 1)} matchings; limit is m <= 4")
    if cov.mean is not None and np.any(cov.mean) and p > 1:
        raise PreconditionError("Wick expansion beyond second order needs a zero-mean kernel")
    val = _raw_normalization(xi, cov)
    err = float("nan")
    if estimate:
        sub = _subsample(xi, cov)
        if sub is not None:
            err = abs(val - _raw_normalization(*sub)) / 3.0
            if err > warn_tol:
                warnings.warn(f"normalization quadrature error estimate {err:.2e} exceeds {warn_tol:.1e}; refine dt", AccuracyWarning, stacklevel=2)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        warnings.warn(f"normalization has imaginary part {val.imag:.2e}", AccuracyWarning, stacklevel=2)
    return float(val.real), err


def _double_factorial(k: int) -> int:
    out = 1
    for j in range(k, 0, -2):
        out *= j
    return out


def normalization_single(xi: PulseMatrix, cov: CovKernel) -> float:
    """Direct one-channel double integral of
    ``[xi^-(t)^*, -xi^+(t)] R(t, r) [xi^-(r); -xi^+(r)^*]``, summed over all node
    pairs. Used as an independent check of the Wick evaluator; small grids only.
    """
    if xi.n_ch != 1 or xi.n_cols != 1:
        raise DimensionError("single-channel check needs m = p = 1")
    g = xi.grid
    w = xi.weights()[:, 0]
    a = np.stack([np.conj(xi.xi_minus[:, 0, 0]), -xi.xi_plus[:, 0, 0]], axis=1)
    b = np.stack([xi.xi_minus[:, 0, 0], -np.conj(xi.xi_plus[:, 0, 0])], axis=1)
    M = cov.smooth_matrix()
    smooth = g.dt**2 * np.einsum("t,ti,tsij,sj,s->", w, a, M, b, w)
    delta = g.dt * np.einsum("t,ti,ij,tj->", w, a, cov.delta_coeff, b)
    return float((smooth + delta).real)
