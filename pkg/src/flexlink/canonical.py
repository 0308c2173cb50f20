"""Controllable canonical (companion) form of a single-input linear system."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

COND_WARN = 1e8
RANK_RTOL = 1e-8


class UncontrollableError(ValueError):
    pass


@dataclass(frozen=True)
class CanonicalSystem:
    """Companion-form realisation ``z' = A_C z + B_C u``, ``g = C_C z`` with ``z = T psi``.

    ``f`` holds the monic characteristic coefficients, constant term first, so
    the last row of ``A_C`` is ``-f``.
    """

    T: np.ndarray
    T_inv: np.ndarray
    A_C: np.ndarray
    B_C: np.ndarray
    C_C: np.ndarray
    f: np.ndarray

    @property
    def dim(self) -> int:
        return self.A_C.shape[0]

    def transform_state(self, psi) -> np.ndarray:
        return self.T @ np.asarray(psi, dtype=float)

    def transform_desired(self, psi_d) -> np.ndarray:
        """Set-point in canonical coordinates.

        For an equilibrium set-point (rigid angle only) the result is constant,
        so every time derivative of it is zero.
        """
        psi_d = np.asarray(psi_d, dtype=float)
        if psi_d.shape != (self.dim,):
            raise ValueError(f"psi_d must have shape ({self.dim},), got {psi_d.shape}")
        return self.T @ psi_d

    def inverse_transform(self, z) -> np.ndarray:
        return self.T_inv @ np.asarray(z, dtype=float)

    def to_dict(self) -> dict:
        return {k: np.asarray(getattr(self, k)).tolist()
                for k in ("T", "T_inv", "A_C", "B_C", "C_C", "f")}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def characteristic_coefficients(A) -> np.ndarray:
    """Coefficients ``f_0..f_{m-1}`` of ``det(sI - A) = s^m + f_{m-1} s^{m-1} + ... + f_0``.

    Faddeev-LeVerrier recursion: M_k = A M_{k-1} + c_{m-k+1} I and
    c_{m-k} = -tr(A M_k)/k, starting from M_0 = 0, c_m = 1.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    m = A.shape[0]
    c = np.zeros(m + 1)
    c[m] = 1.0
    M = np.zeros_like(A)
    eye = np.eye(m)
    for k in range(1, m + 1):
        M = A @ M + c[m - k + 1] * eye
        c[m - k] = -np.trace(A @ M) / k
    return c[:m]


def companion_matrix(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    m = f.size
    A_C = np.zeros((m, m))
    A_C[np.arange(m - 1), np.arange(1, m)] = 1.0
    A_C[-1, :] = -f
    return A_C


def controllability_matrix(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    b = np.asarray(B, dtype=float).reshape(-1)
    cols = [b]
    for _ in range(A.shape[0] - 1):
        cols.append(A @ cols[-1])
    return np.column_stack(cols)


def numerical_rank(M, rtol: float = RANK_RTOL) -> int:
    sv = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def to_canonical(A, B, C) -> CanonicalSystem:
    """Transform ``(A, B, C)`` to companion form.

    ``q`` is the last row of the inverse controllability matrix and the rows of
    ``T`` are ``q, qA, qA^2, ...``.  Raises :class:`UncontrollableError` when the
    controllability matrix is rank deficient.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(-1)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    m = A.shape[0]
    W = controllability_matrix(A, B)
    r = numerical_rank(W)
    if r < m:
        raise UncontrollableError(f"controllability matrix has rank {r} < {m}")
    q = np.linalg.solve(W.T, np.eye(m)[:, -1])  # last row of W^-1
    rows = [q]
    for _ in range(m - 1):
        rows.append(rows[-1] @ A)
    T = np.vstack(rows)
    T_inv = np.linalg.inv(T)
    cond = np.linalg.cond(T)
    if cond > COND_WARN:
        warnings.warn(f"canonical transform is ill-conditioned (cond(T) = {cond:.3g})",
                      RuntimeWarning, stacklevel=2)
    f = characteristic_coefficients(A)
    B_C = np.zeros(m)
    B_C[-1] = 1.0
    return CanonicalSystem(T=T, T_inv=T_inv, A_C=companion_matrix(f), B_C=B_C,
                           C_C=C @ T_inv, f=f)


def plant_to_canonical(plant) -> CanonicalSystem:
    return to_canonical(plant.A, plant.B, plant.C)
