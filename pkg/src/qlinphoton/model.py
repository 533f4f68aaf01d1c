"""System parameterization and the doubled-up state-space realization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dmat
from .errors import DimensionError, ValidationError

UNITARY_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def _cmat(x, shape=None, name="matrix"):
    a = np.array(x, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if shape is not None and a.shape != shape:
        raise DimensionError(f"{name} has shape {a.shape}, expected {shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SystemParams:
    """Physical parameters ``(S_-, C_-, C_+, Omega_-, Omega_+)``.

    ``n_osc`` oscillators coupled to ``n_ch`` field channels. ``n_osc = 0`` is
    allowed and describes a static device (pure scattering).
    """

    S_minus: np.ndarray
    C_minus: np.ndarray
    C_plus: np.ndarray
    Omega_minus: np.ndarray
    Omega_plus: np.ndarray

    def __post_init__(self):
        S = _cmat(self.S_minus, name="S_minus")
        m = S.shape[0]
        if S.shape != (m, m):
            raise DimensionError(f"S_minus must be square, got {S.shape}")
        Cm = np.array(self.C_minus, dtype=complex)
        if Cm.ndim < 2:
            Cm = Cm.reshape(m, -1)
        n = Cm.shape[1]
        Cm = _cmat(Cm, (m, n), "C_minus")
        Cp = _cmat(np.reshape(np.asarray(self.C_plus, dtype=complex), (m, n)), (m, n), "C_plus")
        Om = _cmat(np.reshape(np.asarray(self.Omega_minus, dtype=complex), (n, n)), (n, n), "Omega_minus")
        Op = _cmat(np.reshape(np.asarray(self.Omega_plus, dtype=complex), (n, n)), (n, n), "Omega_plus")
        for name, val in (("S_minus", S), ("C_minus", Cm), ("C_plus", Cp), ("Omega_minus", Om), ("Omega_plus", Op)):
            object.__setattr__(self, name, val)

        eye = np.eye(m)
        if np.max(np.abs(S @ S.conj().T - eye)) > UNITARY_TOL or np.max(np.abs(S.conj().T @ S - eye)) > UNITARY_TOL:
            raise ValidationError("S_minus is not unitary (S S^dagger != I)")
        if n and np.max(np.abs(Om - Om.conj().T)) > SYMMETRY_TOL:
            raise ValidationError("Omega_minus is not Hermitian")
        if n and np.max(np.abs(Op - Op.T)) > SYMMETRY_TOL:
            raise ValidationError("Omega_plus is not symmetric")

    @property
    def n_osc(self) -> int:
        return self.C_minus.shape[1]

    @property
    def n_ch(self) -> int:
        return self.S_minus.shape[0]

    # Named constructors for the worked systems.

    @classmethod
    def cavity(cls, kappa: float, omega: float = 0.0) -> "SystemParams":
        return cls([[1.0]], [[np.sqrt(kappa)]], [[0.0]], [[omega]], [[0.0]])

    @classmethod
    def dpa(cls, kappa: float, epsilon: float) -> "SystemParams":
        """Degenerate parametric amplifier; ``Omega_+ = i eps / 2`` reproduces
        ``A = -1/2 [[kappa, -eps], [-eps, kappa]]``."""
        return cls([[1.0]], [[np.sqrt(kappa)]], [[0.0]], [[0.0]], [[0.5j * epsilon]])

    @classmethod
    def static(cls, S_minus) -> "SystemParams":
        S = np.atleast_2d(np.asarray(S_minus, dtype=complex))
        m = S.shape[0]
        z = np.zeros((m, 0))
        return cls(S, z, z, np.zeros((0, 0)), np.zeros((0, 0)))

    @classmethod
    def beamsplitter(cls, eta: float) -> "SystemParams":
        if not 0.0 <= eta <= 1.0:
            raise ValidationError(f"beamsplitter eta must lie in [0, 1], got {eta}")
        a, b = np.sqrt(eta), np.sqrt(1.0 - eta)
        return cls.static([[a, b], [-b, a]])


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Doubled-up realization ``da/dt = A a + B S b``, ``b_out = C a + S b``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    S: np.ndarray
    params: SystemParams | None = field(default=None, repr=False)

    def __post_init__(self):
        A = _cmat(self.A, name="A")
        S = _cmat(self.S, name="S")
        n2, m2 = A.shape[0], S.shape[0]
        if A.shape != (n2, n2) or n2 % 2 or m2 % 2 or S.shape != (m2, m2):
            raise DimensionError(f"need A 2n x 2n and S 2m x 2m, got {A.shape}, {S.shape}")
        B = _cmat(np.reshape(np.asarray(self.B, dtype=complex), (n2, m2)), name="B")
        C = _cmat(np.reshape(np.asarray(self.C, dtype=complex), (m2, n2)), name="C")
        for name, val in (("A", A), ("B", B), ("C", C), ("S", S)):
            if not dmat.is_doubled_up(val):
                raise ValidationError(f"{name} is not doubled-up")
            object.__setattr__(self, name, val)

    @property
    def n_osc(self) -> int:
        return self.A.shape[0] // 2

    @property
    def n_ch(self) -> int:
        return self.S.shape[0] // 2

    @property
    def C_minus_rows(self) -> np.ndarray:
        """``[I_m 0_m] C`` (``m x 2n``)."""
        return self.C[: self.n_ch]

    @property
    def S_minus(self) -> np.ndarray:
        return self.S[: self.n_ch, : self.n_ch]

    def perturbed(self, dA) -> "StateSpaceModel":
        """Copy with ``A + dA``; used for fault injection in checks."""
        return StateSpaceModel(self.A + dA, self.B, self.C, self.S)


def realize(p: SystemParams) -> StateSpaceModel:
    n = p.n_osc
    S = dmat.delta_array(p.S_minus, np.zeros_like(p.S_minus))
    C = dmat.delta_array(p.C_minus, p.C_plus)
    Cflat = dmat.flat(C)
    B = -Cflat
    A = -0.5 * Cflat @ C - 1j * dmat.J(n) @ dmat.delta_array(p.Omega_minus, p.Omega_plus)
    return StateSpaceModel(A, B, C, S, params=p)


def dpa_model(kappa: float, epsilon: float) -> StateSpaceModel:
    """The DPA given directly as matrices, bypassing :func:`realize`."""
    A = -0.5 * np.array([[kappa, -epsilon], [-epsilon, kappa]], dtype=complex)
    r = np.sqrt(kappa)
    return StateSpaceModel(A, -r * np.eye(2), r * np.eye(2), np.eye(2))


def is_stable(g: StateSpaceModel, margin: float = 0.0) -> bool:
    """True iff every eigenvalue of ``A`` has real part below ``-margin``."""
    if g.A.shape[0] == 0:
        return True
    ev = np.linalg.eigvals(g.A)
    return bool(np.all(ev.real < -margin))


def stability_rate(g: StateSpaceModel) -> float:
    """``-max Re eig(A)``; positive for stable systems, ``inf`` for static ones."""
    if g.A.shape[0] == 0:
        return np.inf
    return float(-np.max(np.linalg.eigvals(g.A).real))


def is_passive(p: SystemParams, tol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(p.C_plus) <= tol) and np.all(np.abs(p.Omega_plus) <= tol))


def is_decoupled(g: StateSpaceModel) -> bool:
    """The oscillators never reach the output (``C = 0``)."""
    return not np.any(g.C)
