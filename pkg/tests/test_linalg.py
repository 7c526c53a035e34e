import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diamond_gap.linalg import (
    BipartiteOperator,
    DimensionError,
    DomainError,
    herm_eig,
    hs_norm,
    kron,
    matrix_from_json,
    matrix_to_json,
    numerical_rank,
    partial_trace,
    partial_transpose,
    spectral_norm,
    swap_operator,
    trace_norm,
    unvec,
    vec,
)

from conftest import cgauss, rand_hermitian, rand_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# --- norms -------------------------------------------------------------------


def test_trace_norm_small_cases():
    assert trace_norm(np.diag([1, -1])) == pytest.approx(2.0, abs=1e-15)
    assert trace_norm(np.diag([0.5, -0.5, 0])) == pytest.approx(1.0, abs=1e-15)


def test_trace_norm_matches_svd_oracle(rng):
    M = cgauss(rng, 3, 3)
    # independent oracle: singular values as square roots of eigenvalues of M^dagger M
    oracle = np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(M.conj().T @ M), 0, None)))
    assert abs(trace_norm(M) - oracle) <= 1e-12


def test_trace_norm_rejects_rectangular():
    with pytest.raises(DimensionError):
        trace_norm(np.zeros((2, 3)))


def test_hs_norm_cases():
    assert hs_norm(np.diag([1, -1])) == pytest.approx(np.sqrt(2), abs=1e-15)
    assert hs_norm(np.zeros((3, 2))) == 0.0
    assert hs_norm(np.diag([0.5, -0.5, 0])) == pytest.approx(0.70710678, abs=1e-8)


def test_spectral_norm_cases(rng):
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0)
    assert spectral_norm(np.diag([3, -1])) == pytest.approx(3.0)
    M = cgauss(rng, 4, 4)
    r = numerical_rank(M)
    assert spectral_norm(M) <= hs_norm(M) + 1e-12
    assert hs_norm(M) <= np.sqrt(r) * spectral_norm(M) + 1e-12


def test_nonfinite_rejected():
    with pytest.raises(DomainError):
        hs_norm(np.array([[np.nan]]))


# --- kron, vec ---------------------------------------------------------------


def test_kron_cases():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(kron(np.diag([1, -1]), np.eye(2)), np.diag([1, 1, -1, -1]))


def test_kron_vec_identity(rng):
    A, B, X = (cgauss(rng, 2, 2) for _ in range(3))
    assert np.max(np.abs(kron(A, B) @ vec(X) - vec(A @ X @ B.T))) <= 1e-13


def test_vec_layout():
    np.testing.assert_array_equal(vec(np.eye(2)), [1, 0, 0, 1])
    E12 = np.zeros((2, 2))
    E12[0, 1] = 1
    np.testing.assert_array_equal(vec(E12), [0, 1, 0, 0])


def test_vec_inner_product(rng):
    A, B = cgauss(rng, 3, 3), cgauss(rng, 3, 3)
    assert abs(np.vdot(vec(A), vec(B)) - np.trace(A.conj().T @ B)) <= 1e-13


def test_unvec_roundtrip_and_errors(rng):
    A = cgauss(rng, 4, 4)
    np.testing.assert_array_equal(unvec(vec(A)), A)
    np.testing.assert_array_equal(unvec(vec(A), 4), A)
    with pytest.raises(DimensionError):
        unvec(np.ones(5))


# --- partial operations ------------------------------------------------------


def _outer_vec(A):
    v = vec(A)
    return BipartiteOperator.square(np.outer(v, v.conj()))


def test_partial_trace_K_oracle(rng):
    A = cgauss(rng, 2, 2)
    got = partial_trace(_outer_vec(A), "K")
    oracle = np.array([[sum(A[i, j] * A[k, j].conj() for j in range(2)) for k in range(2)] for i in range(2)])
    assert np.max(np.abs(got - oracle)) <= 1e-13
    assert np.max(np.abs(got - A @ A.conj().T)) <= 1e-13


def test_partial_trace_H_oracle(rng):
    A = cgauss(rng, 3, 3)
    got = partial_trace(_outer_vec(A), "H")
    oracle = np.array([[sum(A[i, j] * A[i, l].conj() for i in range(3)) for l in range(3)] for j in range(3)])
    assert np.max(np.abs(got - oracle)) <= 1e-13
    assert np.max(np.abs(got - (A.conj().T @ A).T)) <= 1e-13


def test_partial_trace_identity_and_trace(rng):
    np.testing.assert_allclose(partial_trace(BipartiteOperator(2, 2, np.eye(4)), "H"), 2 * np.eye(2))
    X = BipartiteOperator(2, 3, cgauss(rng, 6, 6))
    for which in "HK":
        assert abs(np.trace(partial_trace(X, which)) - np.trace(X.matrix)) <= 1e-13
    with pytest.raises(ValueError):
        partial_trace(X, "Q")


def test_partial_transpose_entries_and_involution(rng):
    X = BipartiteOperator(2, 3, cgauss(rng, 6, 6))
    Y = partial_transpose(X)
    T, U = X.tensor, Y.tensor
    for i, j, k, l in np.ndindex(2, 3, 2, 3):
        assert U[i, j, k, l] == T[k, j, i, l]
    np.testing.assert_array_equal(partial_transpose(Y).matrix, X.matrix)


def test_partial_transpose_product_state(rng):
    A, B = cgauss(rng, 2, 2), cgauss(rng, 2, 2)
    Y = partial_transpose(BipartiteOperator(2, 2, np.kron(A, B)))
    np.testing.assert_allclose(Y.matrix, np.kron(A.T, B), atol=1e-14)


def test_partial_transpose_outer_product_identity(rng):
    d = 3
    A, B = cgauss(rng, d, d), cgauss(rng, d, d)
    X = BipartiteOperator.square(np.outer(vec(A), vec(B).conj()))
    F = swap_operator(d).matrix
    rhs = np.kron(np.eye(d), A.T) @ F @ np.kron(np.eye(d), B.conj())
    assert np.max(np.abs(partial_transpose(X).matrix - rhs)) <= 1e-13


# --- swap --------------------------------------------------------------------


def test_swap_d2_matrix():
    expected = np.eye(4)[[0, 2, 1, 3]]
    np.testing.assert_array_equal(swap_operator(2).matrix, expected)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_swap_trace_square_and_spectrum(d):
    F = swap_operator(d).matrix
    assert np.trace(F).real == d
    np.testing.assert_array_equal(F @ F, np.eye(d * d))
    w, _ = herm_eig(F)
    assert np.sum(np.abs(w - 1) <= 1e-10) == d * (d + 1) // 2
    assert np.sum(np.abs(w + 1) <= 1e-10) == d * (d - 1) // 2


def test_swap_exchanges_factors(rng):
    X, Y = cgauss(rng, 2, 2), cgauss(rng, 2, 2)
    F = swap_operator(2).matrix
    assert np.max(np.abs(F @ np.kron(X, Y) - np.kron(Y, X) @ F)) <= 1e-13


# --- herm_eig, rank ----------------------------------------------------------


def test_herm_eig_descending():
    w, V = herm_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_array_equal(w, [3, 2, 1])
    np.testing.assert_allclose(np.abs(V), np.eye(3)[:, [0, 2, 1]])


def test_herm_eig_two_level_witness(rng):
    U = rand_unitary(rng, 5)
    psi, phi = U[:, 0], U[:, 1]
    t = 0.7
    w, _ = herm_eig(t * (np.outer(psi, psi.conj()) - np.outer(phi, phi.conj())))
    np.testing.assert_allclose(w, [t, 0, 0, 0, -t], atol=1e-14)


def test_herm_eig_reconstruction_and_trace(rng):
    H = rand_hermitian(rng, 6)
    w, V = herm_eig(H)
    assert abs(np.sum(w) - np.trace(H).real) <= 1e-12
    assert spectral_norm(V @ np.diag(w) @ V.conj().T - H) <= 1e-10 * spectral_norm(H)
    assert spectral_norm(V.conj().T @ V - np.eye(6)) <= 1e-12


def test_herm_eig_tolerance(rng):
    H = rand_hermitian(rng, 4)
    A = cgauss(rng, 4, 4) * 1e-13
    herm_eig(H + A)  # drift below tolerance is symmetrized
    with pytest.raises(DomainError):
        herm_eig(H + 1e-3 * (A / spectral_norm(A)))


def test_numerical_rank_cases(rng):
    assert numerical_rank(np.zeros((4, 4))) == 0
    U = rand_unitary(rng, 4)
    X = np.outer(U[:, 0], U[:, 0].conj()) - np.outer(U[:, 1], U[:, 1].conj())
    assert numerical_rank(X, 1e-10) == 2
    V = rand_unitary(rng, 2)
    assert numerical_rank(np.eye(4) - np.kron(V.T, V.conj()), 1e-10) <= 2
    with pytest.raises(ValueError):
        numerical_rank(X, 0.0)


# --- serialization and wrapper ----------------------------------------------


def test_matrix_json_roundtrip(rng):
    M = cgauss(rng, 2, 3)
    obj = json.loads(json.dumps(matrix_to_json(M)))
    assert obj["rows"] == 2 and obj["cols"] == 3 and len(obj["entries"]) == 6
    np.testing.assert_array_equal(matrix_from_json(obj), M)


def test_matrix_json_rejects_wrong_length():
    with pytest.raises(DimensionError):
        matrix_from_json({"rows": 2, "cols": 2, "entries": [[1, 0]] * 3})
    with pytest.raises(DomainError):
        matrix_from_json({"rows": 2})


def test_bipartite_operator_validation():
    with pytest.raises(DimensionError):
        BipartiteOperator(2, 2, np.eye(3))
    with pytest.raises(DimensionError):
        BipartiteOperator(0, 2, np.eye(0))
    op = BipartiteOperator.square(np.eye(9))
    assert (op.dH, op.dK) == (3, 3)


# --- properties --------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=st.integers(2, 16))
def test_traceless_hermitian_hs_vs_trace_norm(seed, d):
    rng = np.random.default_rng(seed)
    X = rand_hermitian(rng, d)
    X -= np.trace(X) / d * np.eye(d)
    assert hs_norm(X) <= trace_norm(X) / np.sqrt(2) + 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 16))
def test_trace_norm_cauchy_schwarz(seed, n):
    Y = cgauss(np.random.default_rng(seed), n, n)
    assert trace_norm(Y) <= np.sqrt(n) * hs_norm(Y) + 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, dH=st.integers(1, 4), dK=st.integers(1, 4))
def test_partial_transpose_preserves_hs(seed, dH, dK):
    n = dH * dK
    X = BipartiteOperator(dH, dK, cgauss(np.random.default_rng(seed), n, n))
    assert abs(hs_norm(partial_transpose(X).matrix) - hs_norm(X.matrix)) <= 1e-13 * max(1, hs_norm(X.matrix))


@settings(max_examples=30, deadline=None)
@given(t=st.floats(1e-3, 1e3), n=st.integers(2, 10))
def test_two_level_equality_witness(t, n):
    X = np.diag([t, -t] + [0.0] * (n - 2))
    assert abs(hs_norm(X) - trace_norm(X) / np.sqrt(2)) <= 1e-13 * max(1, t)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 12))
def test_unitary_equality_witness(seed, n):
    U = rand_unitary(np.random.default_rng(seed), n)
    assert abs(trace_norm(U) - np.sqrt(n) * hs_norm(U)) <= 1e-12 * n


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(1, 5))
def test_vec_kron_compatibility(seed, d):
    rng = np.random.default_rng(seed)
    M, N, A = (cgauss(rng, d, d) for _ in range(3))
    scale = max(1.0, hs_norm(M) * hs_norm(N) * hs_norm(A))
    assert np.max(np.abs(kron(M, N) @ vec(A) - vec(M @ A @ N.T))) <= 1e-13 * scale
