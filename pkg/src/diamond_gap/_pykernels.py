"""Numpy implementations of the interior-point kernels.

Constraint matrices ``A_0, ..., A_{m-1}`` are stored together in grouped
coordinate form: the nonzeros of ``A_i`` are ``vals[ptr[i]:ptr[i+1]]`` at
``(rows, cols)[ptr[i]:ptr[i+1]]``. Both triangles are stored explicitly.
"""

import numpy as np


def schur_complement(ptr, rows, cols, vals, X, Sinv):
    """``M[i, j] = tr(A_i X A_j Sinv)`` for symmetric ``A``, ``X`` and ``Sinv``."""
    # term for nonzero b of A_i and nonzero a of A_j:
    #   vals[b] vals[a] X[cols[b], rows[a]] Sinv[cols[a], rows[b]]
    T = X[np.ix_(cols, rows)] * Sinv[np.ix_(cols, rows)].T
    T *= vals[:, None]
    T *= vals[None, :]
    starts = ptr[:-1]
    return np.add.reduceat(np.add.reduceat(T, starts, axis=0), starts, axis=1)


def constraint_inner(ptr, rows, cols, vals, Y):
    """``out[i] = <A_i, Y>``."""
    return np.add.reduceat(vals * Y[rows, cols], ptr[:-1])


def constraint_combine(ptr, rows, cols, vals, y, n):
    """``sum_i y[i] A_i`` as a dense ``n x n`` array."""
    counts = np.diff(ptr)
    weights = vals * np.repeat(y, counts)
    out = np.zeros(n * n)
    np.add.at(out, rows * n + cols, weights)
    return out.reshape(n, n)
