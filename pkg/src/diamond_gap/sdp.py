"""Small dense semidefinite programs in LMI form.

Solves the pair

    maximize    b @ y        subject to  S = C - sum_i y_i A_i  >= 0
    minimize    <C, Z>       subject to  <A_i, Z> = b_i,  Z >= 0

for real symmetric ``C`` and ``A_i`` with an infeasible-start primal-dual
path-following method (HKM search direction, Mehrotra predictor-corrector).
The Schur-complement assembly is delegated to :mod:`diamond_gap.kernels`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import kernels

__all__ = ["SparseConstraints", "IPMResult", "solve_lmi", "max_step"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SparseConstraints:
    """Constraint matrices ``A_0 .. A_{m-1}`` of side ``n`` in grouped coordinate form."""

    n: int
    ptr: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @classmethod
    def from_triplets(cls, n: int, triplets) -> "SparseConstraints":
        """Build from one ``(rows, cols, vals)`` triple per constraint.

        Duplicate coordinates within a constraint are summed and explicit
        zeros dropped.
        """
        ptr = [0]
        all_r, all_c, all_v = [], [], []
        for r, c, v in triplets:
            key = np.asarray(r, dtype=np.int64) * n + np.asarray(c, dtype=np.int64)
            uniq, inv = np.unique(key, return_inverse=True)
            acc = np.zeros(uniq.size)
            np.add.at(acc, inv, np.asarray(v, dtype=float))
            keep = acc != 0.0
            if not np.any(keep):
                raise ValueError("constraint matrix is identically zero")
            all_r.append(uniq[keep] // n)
            all_c.append(uniq[keep] % n)
            all_v.append(acc[keep])
            ptr.append(ptr[-1] + int(np.count_nonzero(keep)))
        return cls(
            n=n,
            ptr=np.asarray(ptr, dtype=np.int64),
            rows=np.ascontiguousarray(np.concatenate(all_r), dtype=np.int64),
            cols=np.ascontiguousarray(np.concatenate(all_c), dtype=np.int64),
            vals=np.ascontiguousarray(np.concatenate(all_v), dtype=np.float64),
        )

    @property
    def m(self) -> int:
        return self.ptr.size - 1

    def inner(self, Y: np.ndarray) -> np.ndarray:
        return kernels.constraint_inner(
            self.ptr, self.rows, self.cols, self.vals, np.ascontiguousarray(Y, dtype=np.float64)
        )

    def combine(self, y: np.ndarray) -> np.ndarray:
        return kernels.constraint_combine(
            self.ptr, self.rows, self.cols, self.vals, np.ascontiguousarray(y, dtype=np.float64), self.n
        )

    def schur(self, X: np.ndarray, Sinv: np.ndarray) -> np.ndarray:
        return kernels.schur_complement(
            self.ptr,
            self.rows,
            self.cols,
            self.vals,
            np.ascontiguousarray(X, dtype=np.float64),
            np.ascontiguousarray(Sinv, dtype=np.float64),
        )

    def frobenius_norms(self) -> np.ndarray:
        return np.sqrt(np.add.reduceat(self.vals**2, self.ptr[:-1]))


@dataclass
class IPMResult:
    y: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    primal_obj: float  # b @ y
    dual_obj: float  # <C, Z>
    iterations: int
    converged: bool
    status: str
    primal_infeasibility: float
    dual_infeasibility: float
    rel_gap: float


def _sym(A: np.ndarray) -> np.ndarray:
    return (A + A.T) / 2


def max_step(X: np.ndarray, dX: np.ndarray, L: np.ndarray | None = None) -> float:
    """Largest ``alpha`` with ``X + alpha dX >= 0`` (``inf`` if unbounded)."""
    if L is None:
        L = np.linalg.cholesky(X)
    W = sla.solve_triangular(L, dX, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(W))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve_lmi(
    C: np.ndarray,
    A: SparseConstraints,
    b: np.ndarray,
    *,
    tol: float = 1e-9,
    accept_tol: float = 1e-7,
    max_iter: int = 200,
) -> IPMResult:
    """Run the interior-point iteration.

    Stops once relative gap and both relative infeasibilities are below
    ``tol``. If the iteration breaks down numerically first, the result is
    still reported as converged when all three are below ``accept_tol``.
    """
    n, m = A.n, A.m
    C = np.asarray(C, dtype=float)
    b = np.asarray(b, dtype=float)
    if C.shape != (n, n) or b.shape != (m,):
        raise ValueError("inconsistent problem dimensions")

    normA = A.frobenius_norms()
    normb = float(np.linalg.norm(b))
    normC = float(np.linalg.norm(C))
    xi = max(10.0, np.sqrt(n), n * float(np.max((1 + np.abs(b)) / (1 + normA))))
    eta = max(10.0, np.sqrt(n), float(np.max(normA)), normC)
    Z = xi * np.eye(n)
    S = eta * np.eye(n)
    y = np.zeros(m)
    eye = np.eye(n)

    status = "max_iter"
    it = 0
    rel_gap = pinf = dinf = np.inf
    pobj = dobj = 0.0
    best = None
    for it in range(max_iter + 1):
        Rp = b - A.inner(Z)
        Rd = C - S - A.combine(y)
        pobj = float(b @ y)
        dobj = float(np.sum(C * Z))
        comp = float(np.sum(Z * S))
        rel_gap = max(comp, abs(dobj - pobj)) / (1 + abs(pobj) + abs(dobj))
        pinf = float(np.linalg.norm(Rp)) / (1 + normb)
        dinf = float(np.linalg.norm(Rd)) / (1 + normC)
        score = max(rel_gap, pinf, dinf)
        if best is None or score < best[0]:
            best = (score, y.copy(), S.copy(), Z.copy(), pobj, dobj, rel_gap, pinf, dinf)
        log.debug("it=%d pobj=%.12g dobj=%.12g gap=%.3e pinf=%.3e dinf=%.3e", it, pobj, dobj, rel_gap, pinf, dinf)
        if score <= tol:
            status = "optimal"
            break
        if it == max_iter:
            break
        mu = comp / n
        try:
            Lz = np.linalg.cholesky(Z)
            Ls = np.linalg.cholesky(S)
            Ls_inv = sla.solve_triangular(Ls, eye, lower=True)
            Sinv = Ls_inv.T @ Ls_inv
            M = A.schur(Z, Sinv)
            Mfac = sla.cho_factor(_sym(M))
        except (np.linalg.LinAlgError, sla.LinAlgError):
            status = "numerical_breakdown"
            break

        ZRdSinv = A.inner(Z @ Rd @ Sinv)

        def direction(K):
            rhs = b - A.inner(K @ Sinv) + ZRdSinv
            dy = sla.cho_solve(Mfac, rhs)
            dS = Rd - A.combine(dy)
            dZ = _sym(K @ Sinv - Z - Z @ dS @ Sinv)
            return dy, dZ, _sym(dS)

        try:
            dy_a, dZ_a, dS_a = direction(np.zeros((n, n)))
            ap = min(1.0, max_step(Z, dZ_a, Lz))
            ad = min(1.0, max_step(S, dS_a, Ls))
            mu_aff = float(np.sum((Z + ap * dZ_a) * (S + ad * dS_a))) / n
            sigma = min(1.0, max(0.0, mu_aff / mu) ** 3)
            dy, dZ, dS = direction(sigma * mu * eye - dZ_a @ dS_a)
            ap = max_step(Z, dZ, Lz)
            ad = max_step(S, dS, Ls)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            status = "numerical_breakdown"
            break
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        if max(ap, ad) < 1e-12:
            status = "stalled"
            break
        Z = Z + ap * dZ
        y = y + ad * dy
        S = S + ad * dS

    score, y, S, Z, pobj, dobj, rel_gap, pinf, dinf = best
    converged = status == "optimal" or score <= accept_tol
    if status != "optimal" and converged:
        status = "accepted"
    return IPMResult(
        y=y,
        S=S,
        Z=Z,
        primal_obj=pobj,
        dual_obj=dobj,
        iterations=it,
        converged=converged,
        status=status,
        primal_infeasibility=pinf,
        dual_infeasibility=dinf,
        rel_gap=rel_gap,
    )
