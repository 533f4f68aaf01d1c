"""Output intensities, output pulses and covariance transfer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import dmat
from .errors import AccuracyError, DimensionError, PreconditionError, ValidationError
from .fields import CovKernel, PulseMatrix, StationaryKernel
from .grid import TimeGrid, causal_convolve, conv_mask, expm_grid, onset_mask
from .model import StateSpaceModel, is_decoupled, is_stable
from .response import impulse, transfer_grid

HERMITIAN_DRIFT_TOL = 1e-6
DENSE_LIMIT = 2001


def _require_steady(g: StateSpaceModel, what: str):
    if not (is_stable(g) or is_decoupled(g)):
        raise PreconditionError(f"{what} needs a Hurwitz A (steady state does not exist)")


def _dag(X):
    return np.conj(np.swapaxes(X, -1, -2))


# ----------------------------------------------------------------------------
# transient


@dataclass(frozen=True)
class TransientState:
    t: float
    m_minus: np.ndarray
    m_plus: np.ndarray
    Sigma_nu: np.ndarray


@dataclass(frozen=True, eq=False)
class TransientSolution:
    """Moments on the integration nodes ``t0, t0 + dt, ..., t_end``.

    ``xi`` holds the input ``xi^-`` at each node (right-hand limit).
    """

    times: np.ndarray
    m_minus: np.ndarray
    m_plus: np.ndarray
    Sigma: np.ndarray
    xi: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> TransientState:
        return TransientState(float(self.times[k]), self.m_minus[k], self.m_plus[k], self.Sigma[k])


def _input_blocks(g: StateSpaceModel):
    m = g.n_ch
    BS = g.B @ g.S
    return BS[:, :m], BS[:, m:], BS


def integrate_transient(g: StateSpaceModel, xi_in: PulseMatrix, t0: float, t_end: float, dt: float) -> TransientSolution:
    """Fixed-step RK4 for ``m_-``, ``m_+`` and ``Sigma_nu`` from the ground state.

    Initial values: ``m_-(t0) = m_+(t0) = 0`` and ``Sigma_nu(t0) = diag(I_n, 0_n)``.
    Stage inputs use the right-hand limit of ``xi`` at a step's left node and the
    left-hand limit at its right node, so a pulse edge on a node is resolved.

    Raises
    ------
    AccuracyError
        If ``Sigma_nu`` drifts from Hermitian by more than 1e-6.
    """
    if not t0 < t_end:
        raise ValidationError(f"need t0 < t_end, got {t0}, {t_end}")
    if np.any(xi_in.xi_plus):
        raise ValidationError("transient moments need xi^+ = 0 (photon input)")
    m, p = xi_in.n_ch, xi_in.n_cols
    if m != g.n_ch or p != m:
        raise DimensionError(f"need a square {g.n_ch}x{g.n_ch} xi^-, got {m}x{p}")
    steps = int(round((t_end - t0) / dt))
    if abs(steps * dt - (t_end - t0)) > 1e-9 * max(1.0, abs(t_end - t0)):
        raise ValidationError("t_end - t0 must be a whole number of steps")
    times = t0 + dt * np.arange(steps + 1)
    X0, _ = xi_in.evaluate(times)
    Xh, _ = xi_in.evaluate(times[:-1] + 0.5 * dt)
    X1, _ = xi_in.evaluate(times[1:], left_limit=True)

    n2 = g.A.shape[0]
    n = n2 // 2
    A = g.A
    Ad = A.conj().T
    Bm, Bp, BS = _input_blocks(g)
    Bmd, Bpd = Bm.conj().T, Bp.conj().T
    noise = BS @ np.diag(np.r_[np.ones(m), np.zeros(m)]) @ BS.conj().T

    def rhs(mm, mp, Sig, X):
        Xd = X.conj().T
        dmm = mm @ Ad + Xd @ Bmd
        dmp = mp @ Ad + X @ Bpd
        cross = Bm @ X @ mm + Bp @ Xd @ mp
        dS = A @ Sig + Sig @ Ad + cross + cross.conj().T + noise
        return dmm, dmp, dS

    MM = np.zeros((steps + 1, m, n2), dtype=complex)
    MP = np.zeros_like(MM)
    SG = np.zeros((steps + 1, n2, n2), dtype=complex)
    SG[0] = np.diag(np.r_[np.ones(n), np.zeros(n)])
    mm, mp, Sig = MM[0], MP[0], SG[0]
    h = dt
    for k in range(steps):
        k1 = rhs(mm, mp, Sig, X0[k])
        k2 = rhs(mm + 0.5 * h * k1[0], mp + 0.5 * h * k1[1], Sig + 0.5 * h * k1[2], Xh[k])
        k3 = rhs(mm + 0.5 * h * k2[0], mp + 0.5 * h * k2[1], Sig + 0.5 * h * k2[2], Xh[k])
        k4 = rhs(mm + h * k3[0], mp + h * k3[1], Sig + h * k3[2], X1[k])
        mm = mm + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        mp = mp + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        Sig = Sig + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        MM[k + 1], MP[k + 1], SG[k + 1] = mm, mp, Sig
    drift = float(np.max(np.abs(SG - _dag(SG)), initial=0.0))
    if drift > HERMITIAN_DRIFT_TOL:
        raise AccuracyError(f"Sigma_nu lost Hermiticity (drift {drift:.2e}); reduce dt")
    return TransientSolution(times, MM, MP, SG, X0)


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    """``n_out(t)`` as ``(N, m, m)`` matrices with their traces."""

    times: np.ndarray
    values: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return np.real(np.trace(self.values, axis1=-2, axis2=-1))

    def min_eigenvalue(self) -> float:
        H = 0.5 * (self.values + _dag(self.values))
        return float(np.min(np.linalg.eigvalsh(H)))


def transient_intensity(g: StateSpaceModel, states: TransientSolution, xi_in: PulseMatrix | None = None) -> IntensityTrace:
    """Output intensity from transient moments.

    ``xi_in`` is accepted for symmetry with :func:`integrate_transient`; the
    node values stored in ``states`` are the ones used.
    """
    m = g.n_ch
    n = g.n_osc
    Cm = g.C[:m]
    Smin = g.S[:m, :m]
    Cmc, CmT = np.conj(Cm), Cm.T
    Smc, SmT = np.conj(Smin), Smin.T
    X = states.xi
    Xd = _dag(X)
    Sig_T = np.swapaxes(states.Sigma, -1, -2)
    mmT = np.swapaxes(states.m_minus, -1, -2)
    vals = (
        Cmc @ Sig_T @ CmT
        - Cmc @ dmat.J(n) @ CmT
        + Smc @ Xd @ X @ SmT
        + Smc @ Xd @ np.conj(states.m_minus) @ CmT
        + Cmc @ mmT @ X @ SmT
    )
    return IntensityTrace(states.times, vals)


# ----------------------------------------------------------------------------
# steady state


def _smooth_kernel(g: StateSpaceModel, n: int, dt: float) -> np.ndarray:
    return impulse(g).lag_samples(n, dt)


def _apply_response(g: StateSpaceModel, signal: np.ndarray, onset, dt: float) -> np.ndarray:
    """``S f(t) + int h(t - r) f(r) dr`` for ``signal`` of shape ``(N, 2m, q)``.

    Column ``j`` of the signal vanishes before node ``onset[j]``; the output
    column does too.
    """
    n = signal.shape[0]
    out = g.S @ signal
    if g.A.shape[0] and np.any(g.C):
        k = _smooth_kernel(g, n, dt)
        conv = causal_convolve(k, signal, conv_mask(n, onset), dt)
        idx = np.arange(n)[:, None]
        conv = np.where((idx <= np.asarray(onset)[None, :])[:, None, :], 0.0, conv)
        out = out + conv
    return out


def steady_pulses(g: StateSpaceModel, xi_in: PulseMatrix) -> PulseMatrix:
    """``xi_out = g_G * xi_in`` with the full doubled-up response, Dirac part exact.

    Raises
    ------
    PreconditionError
        For a non-Hurwitz ``A``.
    """
    _require_steady(g, "steady_pulses")
    if xi_in.n_ch != g.n_ch:
        raise DimensionError(f"system has {g.n_ch} channels, pulse has {xi_in.n_ch}")
    m, p = g.n_ch, xi_in.n_cols
    full = _apply_response(g, xi_in.full(), xi_in.onset * 2, xi_in.grid.dt)
    return PulseMatrix(xi_in.grid, full[:, :m, :p], full[:, :m, p:], xi_in.onset)


def gramian_w(g: StateSpaceModel) -> np.ndarray:
    """``W = int_0^inf g_+(r)^# g_+(r)^T dr`` via a Lyapunov solve.

    With ``g_+(t) = -Ct exp(A t) Dt`` (``Ct`` the top ``m`` rows of ``C``, ``Dt``
    the right ``m`` columns of ``C^flat S``), ``W = conj(Ct P Ct^dagger)`` where
    ``A P + P A^dagger + Dt Dt^dagger = 0``.
    """
    _require_steady(g, "gramian_w")
    m = g.n_ch
    if g.A.shape[0] == 0 or not np.any(g.C):
        return np.zeros((m, m), dtype=complex)
    Ct = g.C[:m]
    Dt = (dmat.flat(g.C) @ g.S)[:, m:]
    P = scipy.linalg.solve_continuous_lyapunov(g.A, -Dt @ Dt.conj().T)
    W = np.conj(Ct @ P @ Ct.conj().T)
    return 0.5 * (W + W.conj().T)


def steady_intensity(g: StateSpaceModel, xi_out: PulseMatrix) -> IntensityTrace:
    """``n_out(t) = W + xi_+^# xi_+^T + xi_-^# xi_-^T``."""
    W = gramian_w(g)
    xm, xp = xi_out.xi_minus, xi_out.xi_plus
    vals = W[None] + np.conj(xp) @ np.swapaxes(xp, -1, -2) + np.conj(xm) @ np.swapaxes(xm, -1, -2)
    return IntensityTrace(xi_out.grid.times, vals)


def _output_stationary(g: StateSpaceModel, D: np.ndarray) -> StationaryKernel | None:
    """Smooth stationary kernel produced by a Dirac input ``D delta(t - r)``.

    ``K(tau) = C exp(A tau) Q`` for ``tau > 0`` with
    ``Q = P C^dagger - C^flat S D S^dagger`` and ``A P + P A^dagger + M = 0``,
    ``M = C^flat S D S^dagger C^flat^dagger``.
    """
    if g.A.shape[0] == 0 or not np.any(g.C):
        return None
    Cf = dmat.flat(g.C)
    SDS = g.S @ D @ g.S.conj().T
    M = Cf @ SDS @ Cf.conj().T
    P = scipy.linalg.solve_continuous_lyapunov(g.A, -M)
    Q = P @ g.C.conj().T - Cf @ SDS
    return StationaryKernel(g.C.copy(), g.A.copy(), Q)


def covariance_transfer(g: StateSpaceModel, R_in: CovKernel, grid: TimeGrid | None = None) -> CovKernel:
    """Steady-state output kernel ``R_out = g_G R_in g_G^dagger``.

    Dirac parts are propagated exactly; the stationary part generated from them
    is closed form. Factored parts are convolved on the grid; dense parts go
    through two successive convolutions. A stationary input part is sampled
    densely (small grids only).
    """
    _require_steady(g, "covariance_transfer")
    if R_in.n_ch != g.n_ch:
        raise DimensionError(f"system has {g.n_ch} channels, kernel has {R_in.n_ch}")
    grid = grid or R_in.grid
    if R_in.grid is not None and grid != R_in.grid:
        raise ValidationError("covariance_transfer grid must match the kernel grid")
    D = R_in.delta_coeff
    D_out = g.S @ D @ g.S.conj().T
    stat = _output_stationary(g, D)
    kw = {}
    if R_in.factor is not None:
        F_out = _apply_response(g, R_in.factor, R_in.factor_onset, grid.dt)
        kw.update(factor=F_out, factor_onset=R_in.factor_onset)
    dense = R_in.dense
    if R_in.stationary_part is not None:
        if grid is None or grid.n > DENSE_LIMIT:
            raise PreconditionError("stationary input parts are transferred densely; use a grid with at most 2001 nodes")
        t = grid.times
        sampled = R_in.stationary_part(np.subtract.outer(t, t).ravel()).reshape(grid.n, grid.n, *D.shape)
        dense = sampled if dense is None else dense + sampled
    if dense is not None:
        kw.update(dense=_transfer_dense(g, dense, grid.dt))
    mean = None
    if R_in.mean is not None:
        mean = _apply_response(g, R_in.mean[:, :, None], (0,), grid.dt)[:, :, 0]
    return CovKernel(g.n_ch, D_out, stat, grid=grid if kw else R_in.grid, mean=mean, **kw)


def _transfer_dense(g: StateSpaceModel, dense: np.ndarray, dt: float) -> np.ndarray:
    n, _, m2, _ = dense.shape
    # apply on t: Y(t, r) = (g * dense(., r))(t)
    sig = np.transpose(dense, (0, 2, 1, 3)).reshape(n, m2, n * m2)
    Y = _apply_response(g, sig, (0,) * (n * m2), dt).reshape(n, m2, n, m2).transpose(0, 2, 1, 3)
    # apply on r: Z(t, r) = (g * Y(t, .)^dagger)(r)^dagger
    sig2 = np.conj(np.transpose(Y, (1, 3, 0, 2))).reshape(n, m2, n * m2)
    Z = _apply_response(g, sig2, (0,) * (n * m2), dt).reshape(n, m2, n, m2)
    return np.conj(np.transpose(Z, (2, 0, 3, 1)))


def spectral_transfer(g: StateSpaceModel, R_in_spectrum, omega_grid) -> np.ndarray:
    """``R_out[i w] = Xi[i w] R_in[i w] Xi[i w]^dagger`` on the grid.

    ``R_in_spectrum`` is a callable ``w -> (2m, 2m)`` or a constant matrix.
    """
    omega = np.asarray(omega_grid, dtype=float)
    Xi = transfer_grid(g, 1j * omega)
    if callable(R_in_spectrum):
        R = np.stack([np.asarray(R_in_spectrum(w), dtype=complex) for w in omega])
    else:
        R = np.broadcast_to(np.asarray(R_in_spectrum, dtype=complex), Xi.shape)
    return Xi @ R @ _dag(Xi)


def kernel_spectrum(R: CovKernel, omega) -> np.ndarray:
    """Spectrum ``D + int K(tau) exp(-i w tau) dtau`` of a stationary kernel."""
    if not R.is_stationary:
        raise ValidationError("spectrum needs a stationary kernel")
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.broadcast_to(R.delta_coeff, (len(omega),) + R.delta_coeff.shape).copy()
    if R.stationary_part is not None:
        out += R.stationary_part.spectrum(omega)
    return out
