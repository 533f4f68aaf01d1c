"""Impulse responses, transfer functions and the stable inverse.

An impulse response is kept as ``delta_coeff * delta(t) + smooth(t)`` where the
smooth part has the exponential form ``left @ expm(gen * t) @ right`` on its
support (``t >= 0`` when causal, ``t <= 0`` otherwise). The Dirac part is never
discretized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dmat
from .errors import PoleError, PreconditionError
from .grid import _fft_matmul_conv, expm_grid
from .model import StateSpaceModel, is_stable

POLE_RCOND = 1e-13


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """``g(t) = delta_coeff delta(t) + left exp(gen t) right`` on its support.

    Attributes
    ----------
    delta_coeff : (2m, 2m) array
    left, gen, right : arrays of shapes (2m, 2n), (2n, 2n), (2n, 2m)
    causal : bool
        Support ``t >= 0`` if True, ``t <= 0`` otherwise.
    """

    delta_coeff: np.ndarray
    left: np.ndarray
    gen: np.ndarray
    right: np.ndarray
    causal: bool = True

    @property
    def n_ch(self) -> int:
        return self.delta_coeff.shape[0] // 2

    def smooth(self, t):
        """Smooth part at ``t`` (scalar or 1-D array). At ``t = 0`` the one-sided
        limit from inside the support is returned."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        inside = t_arr >= 0 if self.causal else t_arr <= 0
        out = np.zeros((len(t_arr),) + self.delta_coeff.shape, dtype=complex)
        if self.gen.shape[0] and np.any(inside):
            E = expm_grid(self.gen, t_arr[inside])
            out[inside] = self.left @ E @ self.right
        return out[0] if np.ndim(t) == 0 else out

    def lag_samples(self, n: int, dt: float) -> np.ndarray:
        """``smooth(+-l dt)`` for ``l = 0..n-1``, walking into the support."""
        sign = 1.0 if self.causal else -1.0
        return self.smooth(sign * dt * np.arange(n))

    def minus(self, t):
        """``g_{G^-}`` block (top-left) of the smooth part."""
        m = self.n_ch
        return self.smooth(t)[..., :m, :m]

    def plus(self, t):
        """``g_{G^+}`` block (top-right) of the smooth part."""
        m = self.n_ch
        return self.smooth(t)[..., :m, m:]


def impulse(g: StateSpaceModel) -> ImpulseResponse:
    """Causal response: ``S delta(t) - C exp(A t) C^flat S`` for ``t >= 0``."""
    Cflat = dmat.flat(g.C)
    return ImpulseResponse(g.S.copy(), -g.C, g.A, Cflat @ g.S, causal=True)


def stable_inverse(g: StateSpaceModel) -> ImpulseResponse:
    """Anti-causal response of the inverse system.

    ``S^flat delta(t) - S^flat C exp(-A^flat t) C^flat`` for ``t <= 0``.

    Raises
    ------
    PreconditionError
        If ``A`` is not Hurwitz.
    """
    if not is_stable(g):
        raise PreconditionError("stable_inverse needs a Hurwitz A")
    Sflat = dmat.flat(g.S)
    return ImpulseResponse(Sflat, -Sflat @ g.C, -dmat.flat(g.A), dmat.flat(g.C), causal=False)


def _resolvent_solve(A: np.ndarray, s: complex, rhs: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    M = s * np.eye(n) - A
    # reciprocal condition estimate relative to the scale of A
    scale = max(1.0, abs(s), float(np.linalg.norm(A, 2)))
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    if smin <= POLE_RCOND * scale:
        raise PoleError(s)
    return np.linalg.solve(M, rhs)


def transfer(g: StateSpaceModel, s: complex) -> np.ndarray:
    """``Xi[s] = S - C (sI - A)^{-1} C^flat S``.

    The lower blocks are the reflected conjugates of the upper ones,
    ``Xi[s]_lower = conj(Xi[conj(s)]_upper)`` swapped, so ``Xi[s]`` is
    doubled-up entrywise only for real ``s``; see :func:`transfer_blocks`.

    Raises
    ------
    PoleError
        When ``s`` is (numerically) an eigenvalue of ``A``.
    """
    return _transfer_array(g, s)


def transfer_blocks(g: StateSpaceModel, s: complex) -> tuple[np.ndarray, np.ndarray]:
    """``(Xi_-[s], Xi_+[s])``, the upper blocks of ``Xi[s]``."""
    X = _transfer_array(g, s)
    m = g.n_ch
    return X[:m, :m], X[:m, m:]


def reflection_residual(g: StateSpaceModel, s: complex) -> float:
    """Deviation of ``Xi[s]`` from ``Delta``-form with reflected conjugation:
    ``Xi[s] = [[U(s), V(s)], [conj(V(conj s)), conj(U(conj s))]]``."""
    X = _transfer_array(g, s)
    Y = _transfer_array(g, np.conj(s))
    m = g.n_ch
    lower = np.concatenate([np.conj(Y[:m, m:]), np.conj(Y[:m, :m])], axis=1)
    return float(np.max(np.abs(X[m:] - lower), initial=0.0))


def _transfer_array(g: StateSpaceModel, s: complex) -> np.ndarray:
    if g.A.shape[0] == 0:
        return g.S.copy()
    CfS = dmat.flat(g.C) @ g.S
    return g.S - g.C @ _resolvent_solve(g.A, complex(s), CfS)


def transfer_grid(g: StateSpaceModel, s_values) -> np.ndarray:
    """``Xi[s]`` for each ``s``; shape ``(len(s), 2m, 2m)``."""
    return np.stack([_transfer_array(g, s) for s in np.atleast_1d(s_values)])


def default_omega_grid() -> np.ndarray:
    return np.linspace(-50.0, 50.0, 2001)


def check_flat_unitary(g: StateSpaceModel, omega_grid=None) -> float:
    """Largest spectral-norm residual of ``Xi^flat Xi - I`` and ``Xi Xi^flat - I``
    over ``s = i omega``."""
    if omega_grid is None:
        omega_grid = default_omega_grid()
    X = transfer_grid(g, 1j * np.asarray(omega_grid, dtype=float))
    Xf = dmat.flat(X)
    eye = np.eye(X.shape[-1])
    r1 = np.linalg.norm(Xf @ X - eye, ord=2, axis=(-2, -1))
    r2 = np.linalg.norm(X @ Xf - eye, ord=2, axis=(-2, -1))
    return float(max(r1.max(initial=0.0), r2.max(initial=0.0)))


def inverse_composition_residual(g: StateSpaceModel, dt: float, t_span: float):
    """Smooth part of ``g_inv * g_G`` on the lag grid ``[-t_span, t_span]``.

    The Dirac parts are composed exactly (``S^flat S``); the remaining smooth terms
    ``S^flat h(t) + h_inv(t) S + (h_inv * h)(t)`` should vanish away from the
    origin. Returns ``(lags, residual (2N-1, 2m, 2m), delta_product)``.
    """
    fwd = impulse(g)
    inv = stable_inverse(g)
    n = int(round(t_span / dt)) + 1
    H = fwd.lag_samples(n, dt)      # h(l dt)
    Hi = inv.lag_samples(n, dt)     # h_inv(-l dt)
    w = np.ones(n)
    w[0] = 0.5
    # t = k dt >= 0 : sum_l w_l Hi[l] H[k+l]
    # t = -k dt < 0 : sum_l w_l Hi[k+l] H[l]
    pos = dt * _cross_correlate(Hi * w[:, None, None], H, n)
    neg = dt * _cross_correlate_rev(Hi, H * w[:, None, None], n)
    conv = np.concatenate([neg[:0:-1], pos])
    lags = dt * np.arange(-(n - 1), n)
    smooth_fwd = np.concatenate([np.zeros_like(H[1:]), H])
    smooth_inv = np.concatenate([Hi[:0:-1], np.zeros_like(Hi)])
    # at lag 0 each one-sided piece sits at its jump; use the one-sided values
    smooth_inv[n - 1] = Hi[0]
    res = inv.delta_coeff @ smooth_fwd + smooth_inv @ fwd.delta_coeff + conv
    return lags, res, inv.delta_coeff @ fwd.delta_coeff


def _cross_correlate(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """``c[k] = sum_l a[l] @ b[k + l]`` for ``k = 0..n-1``."""
    full = _fft_matmul_conv(a[::-1], b, 2 * n - 1)
    return full[n - 1 : 2 * n - 1]


def _cross_correlate_rev(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """``c[k] = sum_l a[k + l] @ b[l]`` for ``k = 0..n-1``."""
    full = _fft_matmul_conv(a, b[::-1], 2 * n - 1)
    return full[n - 1 : 2 * n - 1]
