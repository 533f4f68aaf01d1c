"""Doubled-up complex matrices.

A doubled-up matrix has the block form ``[[U, V], [conj(V), conj(U)]]``; it is the
natural shape of any linear map acting on the stacked vector of annihilation and
creation operators ``(a, a^#)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError

DEFAULT_TOL = 1e-10


def J(k: int) -> np.ndarray:
    """``diag(I_k, -I_k)``."""
    return np.diag(np.concatenate([np.ones(k), -np.ones(k)])).astype(complex)


def Theta(k: int) -> np.ndarray:
    """``[[0, I_k], [-I_k, 0]]``."""
    eye = np.eye(k)
    zero = np.zeros((k, k))
    return np.block([[zero, eye], [-eye, zero]]).astype(complex)


def swap(k: int) -> np.ndarray:
    """Permutation exchanging the two halves: ``swap(k) @ x_breve == conj(x_breve)``
    for a doubled-up vector."""
    eye = np.eye(k)
    zero = np.zeros((k, k))
    return np.block([[zero, eye], [eye, zero]]).astype(complex)


def blocks(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(U, V)``, the top blocks of a ``2j x 2k`` matrix (trailing two axes)."""
    X = np.asarray(X)
    r, c = X.shape[-2:]
    if r % 2 or c % 2:
        raise DimensionError(f"doubled-up matrix needs even dimensions, got {r}x{c}")
    j, k = r // 2, c // 2
    return X[..., :j, :k], X[..., :j, k:]


def structure_residual(X: np.ndarray) -> float:
    """Largest entrywise deviation of the lower blocks from the doubled-up pattern,
    relative to ``max(1, max|X|)``."""
    X = np.asarray(X)
    U, V = blocks(X)
    j, k = U.shape[-2:]
    lower = X[..., j:, :]
    expected = np.concatenate([np.conj(V), np.conj(U)], axis=-1)
    if X.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(X))))
    return float(np.max(np.abs(lower - expected), initial=0.0)) / scale


def is_doubled_up(X: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return structure_residual(X) <= tol


@dataclass(frozen=True, eq=False)
class DoubledMatrix:
    """A ``2j x 2k`` complex matrix validated to carry the doubled-up structure.

    The full matrix is stored; ``U`` and ``V`` are views of its top blocks.
    """

    data: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {data.shape}")
        res = structure_residual(data)
        if res > self.tol:
            raise ValidationError(f"matrix is not doubled-up (residual {res:.3e} > {self.tol:.1e})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def rows_half(self) -> int:
        return self.data.shape[0] // 2

    @property
    def cols_half(self) -> int:
        return self.data.shape[1] // 2

    @property
    def U(self) -> np.ndarray:
        return self.data[: self.rows_half, : self.cols_half]

    @property
    def V(self) -> np.ndarray:
        return self.data[: self.rows_half, self.cols_half :]

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data.copy() if copy else self.data
        return self.data.astype(dtype)

    def __matmul__(self, other):
        if isinstance(other, DoubledMatrix):
            return DoubledMatrix(self.data @ other.data, tol=max(self.tol, other.tol))
        return self.data @ np.asarray(other)

    def __rmatmul__(self, other):
        return np.asarray(other) @ self.data

    def flat(self) -> "DoubledMatrix":
        return flat(self)

    def __repr__(self):
        return f"DoubledMatrix(j={self.rows_half}, k={self.cols_half})"


def delta(U, V) -> DoubledMatrix:
    """``Delta(U, V) = [[U, V], [V^#, U^#]]``."""
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    if U.shape != V.shape:
        raise DimensionError(f"delta: U has shape {U.shape} but V has shape {V.shape}")
    return DoubledMatrix(delta_array(U, V))


def delta_array(U, V) -> np.ndarray:
    """Unvalidated ``Delta`` on the trailing two axes; works on stacks of matrices."""
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    top = np.concatenate([U, V], axis=-1)
    bottom = np.concatenate([np.conj(V), np.conj(U)], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def flat(X):
    """``X^flat = J_k X^dagger J_j`` for ``X`` of size ``2j x 2k``.

    Accepts a :class:`DoubledMatrix` (returns one) or any array, including a stack
    of matrices along leading axes.
    """
    if isinstance(X, DoubledMatrix):
        return DoubledMatrix(flat(X.data), tol=X.tol)
    X = np.asarray(X)
    r, c = X.shape[-2:]
    sr = np.concatenate([np.ones(r // 2), -np.ones(r // 2)])
    sc = np.concatenate([np.ones(c // 2), -np.ones(c // 2)])
    Xh = np.conj(np.swapaxes(X, -1, -2))
    return sc[:, None] * Xh * sr[None, :]


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A), np.asarray(B))


def kron_power(A, j: int) -> np.ndarray:
    if j < 1:
        raise ValueError("kron_power needs j >= 1")
    out = np.asarray(A)
    for _ in range(j - 1):
        out = np.kron(out, A)
    return out
