"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Bipartite operators on ``H (x) K`` carry their factor dimensions in a
:class:`BipartiteOperator`; the composite basis is ``|i>_H (x) |j>_K`` with
``i`` major, so the entry of ``A`` at row ``i``, column ``j`` sits at composite
index ``i * dK + j`` under :func:`vec`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

__all__ = [
    "DimensionError",
    "DomainError",
    "BipartiteOperator",
    "as_matrix",
    "matrix_to_json",
    "matrix_from_json",
    "trace_norm",
    "hs_norm",
    "spectral_norm",
    "kron",
    "split_indices",
    "partial_trace",
    "partial_transpose",
    "vec",
    "unvec",
    "swap_operator",
    "herm_eig",
    "numerical_rank",
    "HERMITIAN_TOL",
    "RANK_TOL",
]

HERMITIAN_TOL = 1e-10
RANK_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when operand shapes do not fit together."""


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def as_matrix(M, *, square: bool = False) -> np.ndarray:
    """Coerce ``M`` to a finite 2-D complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    return A


def matrix_to_json(M) -> dict:
    A = as_matrix(M)
    flat = A.reshape(-1)
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed matrix record: {exc}") from None
    if rows < 1 or cols < 1:
        raise DimensionError("rows and cols must be positive")
    if len(entries) != rows * cols:
        raise DimensionError(
            f"expected {rows * cols} entries for a {rows}x{cols} matrix, got {len(entries)}"
        )
    try:
        data = np.array([complex(re, im) for re, im in entries], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix entry: {exc}") from None
    return as_matrix(data.reshape(rows, cols))


@dataclass(frozen=True, eq=False)
class BipartiteOperator:
    """An operator on ``H (x) K`` with ``dim H = dH`` and ``dim K = dK``."""

    dH: int
    dK: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.dH < 1 or self.dK < 1:
            raise DimensionError("factor dimensions must be positive")
        M = as_matrix(self.matrix, square=True)
        if M.shape[0] != self.dH * self.dK:
            raise DimensionError(
                f"matrix side {M.shape[0]} does not match dH*dK = {self.dH * self.dK}"
            )
        object.__setattr__(self, "matrix", M)

    @classmethod
    def square(cls, matrix, d: int | None = None) -> "BipartiteOperator":
        """Wrap ``matrix`` as an operator on ``C^d (x) C^d``."""
        M = as_matrix(matrix, square=True)
        if d is None:
            d = int(round(np.sqrt(M.shape[0])))
        return cls(d, d, M)

    @property
    def tensor(self) -> np.ndarray:
        return split_indices(self.matrix, self.dH, self.dK)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def split_indices(M: np.ndarray, dH: int, dK: int) -> np.ndarray:
    """View a ``(dH*dK) x (dH*dK)`` matrix as a tensor ``T[i, j, k, l]``.

    ``T[i, j, k, l] = <i|<j| M |k>|l>`` with ``i, k`` on ``H`` and ``j, l`` on
    ``K``. Every bipartite routine goes through this one reshape so the
    H-major ordering is fixed in a single place.
    """
    return np.asarray(M).reshape(dH, dK, dH, dK)


def trace_norm(M) -> float:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"trace norm needs a square matrix, got {A.shape}")
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def hs_norm(M) -> float:
    return float(np.linalg.norm(as_matrix(M), "fro"))


def spectral_norm(M) -> float:
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def kron(A, B) -> np.ndarray:
    return np.kron(as_matrix(A), as_matrix(B))


def partial_trace(X: BipartiteOperator, which: Literal["H", "K"]) -> np.ndarray:
    """Trace out factor ``which``; returns an operator on the other factor."""
    T = X.tensor
    if which == "H":
        return np.einsum("ijil->jl", T)
    if which == "K":
        return np.einsum("ijkj->ik", T)
    raise ValueError(f"which must be 'H' or 'K', got {which!r}")


def partial_transpose(X: BipartiteOperator) -> BipartiteOperator:
    """Transpose the ``H`` factor: ``out[(i,j),(k,l)] = X[(k,j),(i,l)]``."""
    T = X.tensor.transpose(2, 1, 0, 3)
    n = X.dH * X.dK
    return BipartiteOperator(X.dH, X.dK, np.ascontiguousarray(T).reshape(n, n))


def vec(A) -> np.ndarray:
    """``|vec(A)> = sum_ij A_ij |i>|j>``; entry ``A_ij`` lands at index ``i*d + j``."""
    M = as_matrix(A, square=True)
    return M.reshape(-1).copy()


def unvec(v, d: int | None = None) -> np.ndarray:
    w = np.asarray(v, dtype=complex).reshape(-1)
    if d is None:
        d = int(round(np.sqrt(w.size)))
    if d * d != w.size:
        raise DimensionError(f"vector of length {w.size} is not a square number of entries")
    return w.reshape(d, d).copy()


@lru_cache(maxsize=None)
def _swap_permutation(d: int) -> np.ndarray:
    idx = np.arange(d * d).reshape(d, d)
    return idx.T.reshape(-1)


def swap_operator(d: int) -> BipartiteOperator:
    """The swap ``F|i>|j> = |j>|i>`` on ``C^d (x) C^d``."""
    if d < 1:
        raise DimensionError("d must be positive")
    F = np.zeros((d * d, d * d), dtype=complex)
    F[_swap_permutation(d), np.arange(d * d)] = 1.0
    return BipartiteOperator(d, d, F)


def herm_eig(H, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns eigenvalues in descending order and the matching unitary of
    eigenvectors (columns). Inputs whose anti-Hermitian part exceeds ``tol``
    in spectral norm (relative to ``max(1, ||H||)``) are rejected; smaller
    drift is symmetrized away.
    """
    A = as_matrix(H, square=True)
    skew = spectral_norm(A - A.conj().T) / 2
    if skew > tol * max(1.0, spectral_norm(A)):
        raise DomainError(f"matrix is not Hermitian (anti-Hermitian part {skew:.3e})")
    A = (A + A.conj().T) / 2
    w, V = np.linalg.eigh(A)
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def numerical_rank(M, rel_tol: float = RANK_TOL) -> int:
    """Number of singular values above ``rel_tol`` times the largest one."""
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    A = as_matrix(M)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))
