"""All-pass pulse shapers: feasibility, realization and cascades."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import dmat
from .errors import AssumptionError, ConsistencyError, DimensionError, MinimalityError, ValidationError
from .fields import PulseMatrix, photon_pulses, sample_pulse
from .grid import TimeGrid, onset_mask
from .intensity import steady_pulses
from .model import StateSpaceModel, SystemParams, realize

RANK_TOL = 1e-8
FEASIBLE_TOL = 1e-4


def _rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > RANK_TOL * max(sv[0], 1e-300)))


@dataclass(frozen=True, eq=False)
class RationalAllPass:
    """Single-input single-output realization ``D + C (sI - A)^{-1} B``.

    Complex coefficients are accepted. Construction checks that ``A`` is
    Hurwitz, that the realization is minimal and that ``D = 1``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: complex = 1.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        n = A.shape[0] if A.size else 0
        A = A.reshape(n, n)
        B = np.asarray(self.B, dtype=complex).reshape(n, 1)
        C = np.asarray(self.C, dtype=complex).reshape(1, n)
        for name, val in (("A", A), ("B", B), ("C", C)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "D", complex(self.D))
        if abs(self.D - 1.0) > 1e-12:
            raise AssumptionError(f"all-pass feedthrough must be D = 1, got {self.D}")
        if n and np.max(np.linalg.eigvals(A).real) >= 0:
            raise AssumptionError("A is not Hurwitz")
        if n:
            ctrb = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
            obsv = np.vstack([C @ np.linalg.matrix_power(A, k) for k in range(n)])
            if _rank(ctrb) < n or _rank(obsv) < n:
                raise MinimalityError("realization is not minimal")

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @classmethod
    def first_order(cls, pole: complex) -> "RationalAllPass":
        """``(s + conj(p)) / (s - p)`` for a pole ``p`` in the open left half-plane."""
        p = complex(pole)
        if p.real >= 0:
            raise AssumptionError(f"pole {p} is not in the open left half-plane")
        c = np.sqrt(-2 * p.real)
        return cls([[p]], [[-c]], [[c]], 1.0)

    @classmethod
    def identity(cls) -> "RationalAllPass":
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), 1.0)

    def transfer(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        n = self.state_dim
        if n == 0:
            return np.full(len(s), self.D)
        out = [self.D + (self.C @ np.linalg.solve(z * np.eye(n) - self.A, self.B))[0, 0] for z in s]
        return np.array(out)

    def series(self, other: "RationalAllPass") -> "RationalAllPass":
        """``other`` after ``self``: transfer ``other(s) * self(s)``."""
        n1, n2 = self.state_dim, other.state_dim
        A = np.block([[self.A, np.zeros((n1, n2))], [other.B @ self.C, other.A]])
        B = np.vstack([self.B, other.B * self.D])
        C = np.hstack([other.D * self.C, other.C])
        return RationalAllPass(A, B, C, other.D * self.D)


def fourier_on_grid(values: np.ndarray, onset: int, grid: TimeGrid, omega) -> np.ndarray:
    """``int nu(t) exp(-i w t) dt`` by the trapezoid rule from the onset node."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    w = onset_mask(grid.n, [onset])[:, 0]
    t = grid.times
    return grid.dt * np.exp(-1j * np.outer(omega, t)) @ (w * values)


def default_feasibility_grid() -> np.ndarray:
    return np.linspace(-20.0, 20.0, 401)


def check_feasible(nu, nu_out, grid: TimeGrid, omega_grid=None, tol: float = FEASIBLE_TOL):
    """Compare ``|nu_out[i w]|^2`` with ``|nu[i w]|^2``.

    Returns
    -------
    feasible : bool
    deviation : float
        ``max | |nu_out|^2 - |nu|^2 | / max |nu|^2`` over the grid.
    """
    if omega_grid is None:
        omega_grid = default_feasibility_grid()
    a, ka = sample_pulse(nu, grid)
    b, kb = sample_pulse(nu_out, grid)
    Fa = np.abs(fourier_on_grid(a, ka, grid, omega_grid)) ** 2
    Fb = np.abs(fourier_on_grid(b, kb, grid, omega_grid)) ** 2
    dev = float(np.max(np.abs(Fb - Fa)) / np.max(Fa))
    return dev < tol, dev


def lyapunov_x(d: RationalAllPass) -> np.ndarray:
    """Solution of ``A^dagger X + X A + C^dagger C = 0``."""
    X = scipy.linalg.solve_continuous_lyapunov(d.A.conj().T, -d.C.conj().T @ d.C)
    return 0.5 * (X + X.conj().T)


def synthesize(d: RationalAllPass) -> SystemParams:
    """Passive single-channel system realizing the all-pass ``d``.

    Solves the observability Lyapunov equation for ``X > 0`` and works in the
    coordinates where ``X = I``; there ``S_- = 1``, ``C_- = C``, ``C_+ = 0``,
    ``Omega_- = (i/2)(A - A^dagger)``, ``Omega_+ = 0``.

    Raises
    ------
    MinimalityError
        If ``X`` is not positive definite.
    """
    n = d.state_dim
    if n == 0:
        return SystemParams.static([[d.D]])
    X = lyapunov_x(d)
    ev = np.linalg.eigvalsh(X)
    if ev.min() <= 1e-12 * max(1.0, ev.max()):
        raise MinimalityError(f"Lyapunov solution is not positive definite (min eigenvalue {ev.min():.3e})")
    if np.max(np.abs(X - np.eye(n))) < 1e-12:
        A, C = d.A, d.C
    else:
        T = scipy.linalg.sqrtm(X)
        Ti = np.linalg.inv(T)
        A, C = T @ d.A @ Ti, d.C @ Ti
    Om = 0.5j * (A - A.conj().T)
    Om = 0.5 * (Om + Om.conj().T)
    z = np.zeros((1, n))
    return SystemParams([[1.0]], C, z, Om, np.zeros((n, n)))



def _interleave(n1: int, n2: int) -> np.ndarray:
    """Permutation taking ``(a1, a1^#, a2, a2^#)`` to ``(a1, a2, a1^#, a2^#)``."""
    order = list(range(n1)) + list(range(2 * n1, 2 * n1 + n2)) + list(range(n1, 2 * n1)) + list(range(2 * n1 + n2, 2 * n1 + 2 * n2))
    return np.eye(2 * (n1 + n2))[order]


def cascade(g1, g2) -> StateSpaceModel:
    """Series connection: the output of ``g1`` drives ``g2``.

    Accepts :class:`SystemParams` or :class:`StateSpaceModel`; the composite
    transfer is ``Xi_2[s] Xi_1[s]``.
    """
    m1 = g1 if isinstance(g1, StateSpaceModel) else realize(g1)
    m2 = g2 if isinstance(g2, StateSpaceModel) else realize(g2)
    if m1.n_ch != m2.n_ch:
        raise DimensionError(f"cascade needs equal channel counts, got {m1.n_ch} and {m2.n_ch}")
    n1, n2 = m1.A.shape[0], m2.A.shape[0]
    B1S, B2S = m1.B @ m1.S, m2.B @ m2.S
    A = np.block([[m1.A, np.zeros((n1, n2))], [B2S @ m1.C, m2.A]])
    Bin = np.vstack([B1S, B2S @ m1.S])
    C = np.hstack([m2.S @ m1.C, m2.C])
    S = m2.S @ m1.S
    B = Bin @ dmat.flat(S)
    P = _interleave(n1 // 2, n2 // 2)
    return StateSpaceModel(P @ A @ P.T, P @ B, C @ P.T, S)


def shape_pulse(nu, nu_out, d: RationalAllPass, grid: TimeGrid, tol: float = 1e-3, check: bool = True) -> PulseMatrix:
    """Send ``nu`` through the shaper synthesized from ``d``.

    With ``check`` the frequency-domain relation ``nu_out = d * nu`` is tested
    first (relative deviation ``tol``).

    Raises
    ------
    ConsistencyError
        If ``d`` does not map ``nu`` to ``nu_out``.
    """
    if check:
        omega = default_feasibility_grid()
        a, ka = sample_pulse(nu, grid)
        b, kb = sample_pulse(nu_out, grid)
        Fa = fourier_on_grid(a, ka, grid, omega)
        Fb = fourier_on_grid(b, kb, grid, omega)
        dev = float(np.max(np.abs(Fb - d.transfer(1j * omega) * Fa)) / np.max(np.abs(Fb)))
        if dev > tol:
            raise ConsistencyError(f"the all-pass does not map nu to nu_out (relative deviation {dev:.3e})")
    g = realize(synthesize(d))
    return steady_pulses(g, photon_pulses([nu], grid))


def example_shaper() -> RationalAllPass:
    """``(s - 3)/(s + 3) * (s - (1 - i))/(s + (1 + i))``."""
    return RationalAllPass.first_order(-3.0).series(RationalAllPass.first_order(-1 - 1j))
