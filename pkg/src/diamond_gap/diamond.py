"""Diamond norms of superoperators.

Two independent routes:

* :func:`diamond_norm_sdp` solves the completely-bounded trace-norm program
  over the Choi matrix ``J`` of the map,

      maximize Re <J, X>  s.t.  [[I (x) rho0, X], [X^dagger, I (x) rho1]] >= 0,
                                rho0, rho1 density matrices,

  and returns certified lower and upper bounds recomputed from the solver's
  primal and dual iterates.
* :func:`diamond_norm_ascent` maximizes ``||(S (x) id)(psi psi^dagger)||_1``
  over unit vectors by projected gradient ascent, giving a lower bound.

The ancilla dimension equals ``d`` throughout.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .channels import Channel, SuperOperator, apply_extended, compose_theta, id_minus, superop_choi
from .linalg import BipartiteOperator, DimensionError, DomainError, as_matrix, herm_eig, partial_transpose, trace_norm
from .sdp import SparseConstraints, solve_lmi

__all__ = [
    "DiamondResult",
    "AscentState",
    "SDPFailure",
    "pointwise_LR",
    "diamond_norm_sdp",
    "diamond_norm_ascent",
    "ascent_objective",
    "hermitian_traceless_basis",
    "MAX_GAP",
    "theorem_norms",
]

MAX_GAP = 1e-6
_ZERO_MAP = 1e-14


@dataclass(frozen=True)
class DiamondResult:
    value: float
    lower_certificate: float
    upper_certificate: float
    gap: float
    iterations: int
    method: str
    converged: bool = True

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "lower": float(self.lower_certificate),
            "upper": float(self.upper_certificate),
            "gap": float(self.gap),
            "method": self.method,
            "iterations": int(self.iterations),
        }

    def scaled(self, c: float) -> "DiamondResult":
        return DiamondResult(
            value=c * self.value,
            lower_certificate=c * self.lower_certificate,
            upper_certificate=c * self.upper_certificate,
            gap=c * self.gap,
            iterations=self.iterations,
            method=self.method,
            converged=self.converged,
        )


class SDPFailure(RuntimeError):
    """The interior-point solve did not reach the requested accuracy."""

    def __init__(self, message: str, result: DiamondResult):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class AscentState:
    psi: np.ndarray
    value: float
    restarts_used: int
    seed: int
    steps: int = 0

    def to_json(self) -> dict:
        out = asdict(self)
        out["psi"] = [[float(z.real), float(z.imag)] for z in self.psi]
        return out


def _check_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    try:
        w, _ = herm_eig(rho, tol)
    except DomainError:
        raise DomainError("input state is not Hermitian") from None
    if w[-1] < -tol:
        raise DomainError(f"input state is not positive semidefinite (min eigenvalue {w[-1]:.3e})")
    if abs(np.sum(w) - 1.0) > tol:
        raise DomainError(f"input state has trace {np.sum(w):.12g}, expected 1")


def pointwise_LR(T: Channel, rho) -> tuple[float, float]:
    """Return ``(L, R)`` for ``Phi = id - T`` at the state ``rho`` on ``H (x) K``.

    ``R = ||(Phi (x) id)(rho)||_1`` and ``L = ||(Theta o Phi (x) id)(rho)||_1``.
    """
    if not isinstance(rho, BipartiteOperator):
        rho = BipartiteOperator(T.d, T.d, as_matrix(rho, square=True))
    if rho.dH != T.d or rho.dK != T.d:
        raise DimensionError(f"state on {rho.dH}x{rho.dK}, expected {T.d}x{T.d}")
    _check_density(rho.matrix)
    X = apply_extended(id_minus(T), rho)
    return trace_norm(partial_transpose(X).matrix), trace_norm(X.matrix)


# --- semidefinite route -------------------------------------------------------


def hermitian_traceless_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) basis of traceless Hermitian ``d x d`` matrices."""
    basis = []
    for k in range(d):
        for l in range(k + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[k, l] = E[l, k] = 1 / np.sqrt(2)
            basis.append(E)
            E = np.zeros((d, d), dtype=complex)
            E[k, l] = -1j / np.sqrt(2)
            E[l, k] = 1j / np.sqrt(2)
            basis.append(E)
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        basis.append(np.diag(diag / np.sqrt(k * (k + 1))).astype(complex))
    return basis


def _embed_triplets(rows, cols, vals, N):
    """Real-embedding triplets of a complex Hermitian matrix of side ``N``.

    ``H = Hr + i Hi`` maps to ``[[Hr, -Hi], [Hi, Hr]]``.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    vals = np.asarray(vals, dtype=complex)
    r = np.concatenate([rows, rows + N, rows, rows + N])
    c = np.concatenate([cols, cols + N, cols + N, cols])
    v = np.concatenate([vals.real, vals.real, -vals.imag, vals.imag])
    return r, c, v


@dataclass(frozen=True)
class _DiamondLMI:
    d: int
    constraints: SparseConstraints
    C: np.ndarray
    n_rho: int  # parameters per density block


@lru_cache(maxsize=None)
def _diamond_lmi(d: int) -> _DiamondLMI:
    """Constraint structure for a map on ``d x d`` matrices (independent of the map).

    Parameter order: traceless parts of ``rho0`` then ``rho1``, then
    ``(Re X_ab, Im X_ab)`` pairs in row-major order of ``X``. The complex block
    matrix has side ``N = 2 d^2`` and is embedded as a real matrix of side ``2N``.
    """
    D = d * d
    N = 2 * D
    basis = hermitian_traceless_basis(d)
    eye_d = np.eye(d)
    triplets = []
    for offset in (0, D):
        for G in basis:
            B = np.kron(eye_d, G)
            r, c = np.nonzero(B)
            er, ec, ev = _embed_triplets(r + offset, c + offset, B[r, c], N)
            triplets.append((er, ec, -ev))
    for a in range(D):
        for bb in range(D):
            # W = E_{a, D+b} + E_{D+b, a} (real part) and i E_{a,D+b} - i E_{D+b,a} (imaginary part)
            for vals in ((1.0, 1.0), (1j, -1j)):
                er, ec, ev = _embed_triplets([a, D + bb], [D + bb, a], vals, N)
                triplets.append((er, ec, -ev))
    A = SparseConstraints.from_triplets(2 * N, triplets)
    C = np.eye(2 * N) / d
    return _DiamondLMI(d=d, constraints=A, C=C, n_rho=len(basis))


def _unpack_primal(lmi: _DiamondLMI, y: np.ndarray):
    d, k = lmi.d, lmi.n_rho
    basis = hermitian_traceless_basis(d)
    rho0 = np.eye(d, dtype=complex) / d + sum((c * G for c, G in zip(y[:k], basis)), np.zeros((d, d)))
    rho1 = np.eye(d, dtype=complex) / d + sum((c * G for c, G in zip(y[k : 2 * k], basis)), np.zeros((d, d)))
    xs = y[2 * k :].reshape(d * d, d * d, 2)
    X = xs[..., 0] + 1j * xs[..., 1]
    return rho0, rho1, X


def _complex_compress(Z: np.ndarray) -> np.ndarray:
    N = Z.shape[0] // 2
    Z11, Z12, Z21, Z22 = Z[:N, :N], Z[:N, N:], Z[N:, :N], Z[N:, N:]
    Zc = ((Z11 + Z22) + 1j * (Z21 - Z12)) / 2
    return (Zc + Zc.conj().T) / 2


def _psd_part(H: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    return (V * np.clip(w, 0.0, None)) @ V.conj().T


def _inv_sqrt(P: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(P)
    if w[0] <= 0:
        raise np.linalg.LinAlgError("not positive definite")
    return (V / np.sqrt(w)) @ V.conj().T


_RIDGES = (0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6)


def _lower_certificate(J: np.ndarray, rho0: np.ndarray, rho1: np.ndarray, X: np.ndarray) -> float:
    """Objective of a strictly feasible point obtained by rescaling ``X``.

    The block matrix is PSD iff ``||(I (x) rho0)^{-1/2} X (I (x) rho1)^{-1/2}|| <= 1``.
    """
    d = rho0.shape[0]
    eye_d = np.eye(d)
    best = 0.0
    for ridge in _RIDGES:
        r0 = _psd_part(rho0) + ridge * eye_d
        r1 = _psd_part(rho1) + ridge * eye_d
        r0 /= np.trace(r0).real
        r1 /= np.trace(r1).real
        try:
            P = np.kron(eye_d, _inv_sqrt(r0))
            Q = np.kron(eye_d, _inv_sqrt(r1))
        except np.linalg.LinAlgError:
            continue
        sigma = np.linalg.norm(P @ X @ Q, 2)
        value = float(np.real(np.vdot(J, X))) / max(1.0, sigma)
        best = max(best, value)
    return best


def _upper_certificate(J: np.ndarray, Y0: np.ndarray, Y1: np.ndarray, d: int) -> float:
    """Dual objective of a feasible point built from ``Y0``, ``Y1``.

    Any positive definite ``Y0, Y1`` become feasible for
    ``[[Y0, -J], [-J^dagger, Y1]] >= 0`` after scaling by
    ``||Y0^{-1/2} J Y1^{-1/2}||``; balancing the two blocks gives the bound
    ``sigma * sqrt(||tr_out Y0|| * ||tr_out Y1||)``.
    """
    scale = max(np.linalg.norm(Y0, 2), np.linalg.norm(Y1, 2), 1e-300)
    eye = np.eye(Y0.shape[0])
    best = np.inf
    for ridge in _RIDGES:
        P0 = _psd_part(Y0) + ridge * scale * eye
        P1 = _psd_part(Y1) + ridge * scale * eye
        try:
            sigma = np.linalg.norm(_inv_sqrt(P0) @ J @ _inv_sqrt(P1), 2)
        except np.linalg.LinAlgError:
            continue
        a = np.linalg.eigvalsh(np.einsum("ijil->jl", P0.reshape(d, d, d, d)))[-1]
        b = np.linalg.eigvalsh(np.einsum("ijil->jl", P1.reshape(d, d, d, d)))[-1]
        best = min(best, float(sigma * np.sqrt(a * b)))
    return best


def diamond_norm_sdp(
    S: SuperOperator,
    *,
    tol: float = 1e-9,
    max_iter: int = 200,
    max_gap: float = MAX_GAP,
    raise_on_failure: bool = True,
) -> DiamondResult:
    """Diamond norm of ``S`` with certified bounds.

    ``value`` is the midpoint of the certificates. Raises :class:`SDPFailure`
    (carrying the best certificates) when the certified gap exceeds
    ``max_gap * max(1, value)`` and ``raise_on_failure`` is set.
    """
    d = S.d
    J = superop_choi(S).matrix.matrix
    scale = float(np.linalg.norm(J, 2))
    if scale <= _ZERO_MAP:
        return DiamondResult(0.0, 0.0, 0.0, 0.0, 0, "sdp")
    Jn = J / scale
    lmi = _diamond_lmi(d)
    k = lmi.n_rho
    b = np.zeros(lmi.constraints.m)
    b[2 * k :] = np.stack([Jn.real, Jn.imag], axis=-1).reshape(-1)
    res = solve_lmi(lmi.C, lmi.constraints, b, tol=tol, max_iter=max_iter)

    rho0, rho1, X = _unpack_primal(lmi, res.y)
    lower = _lower_certificate(Jn, rho0, rho1, X)
    Zc = _complex_compress(res.Z)
    D = d * d
    upper = _upper_certificate(Jn, Zc[:D, :D], Zc[D:, D:], d)
    upper = max(upper, lower)
    result = DiamondResult(
        value=(lower + upper) / 2,
        lower_certificate=lower,
        upper_certificate=upper,
        gap=upper - lower,
        iterations=res.iterations,
        method="sdp",
        converged=res.converged,
    ).scaled(scale)
    if raise_on_failure and (not np.isfinite(result.gap) or result.gap > max_gap * max(1.0, result.value)):
        raise SDPFailure(
            f"diamond-norm SDP did not certify gap <= {max_gap:g} "
            f"(gap {result.gap:.3e}, status {res.status}, {res.iterations} iterations)",
            result,
        )
    return result


# --- ascent route -------------------------------------------------------------


def _adjoint(S: SuperOperator) -> SuperOperator:
    return SuperOperator(S.d, S.transfer.conj().T)


class _PureResponse:
    """``psi -> (S (x) id)(psi psi^dagger)`` on raw arrays, for the ascent loop.

    With ``psi = vec(A)`` the grouped form of ``psi psi^dagger`` is
    ``kron(A, conj(A))``, so one matrix product gives the output.
    """

    def __init__(self, S: SuperOperator):
        self.d = S.d
        self.R = S.transfer
        self.R_adj = S.transfer.conj().T

    def _ungroup(self, M):
        d = self.d
        return M.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)

    def spectrum(self, psi):
        d = self.d
        A = psi.reshape(d, d)
        Y = self._ungroup(self.R @ np.kron(A, A.conj()))
        w, V = np.linalg.eigh((Y + Y.conj().T) / 2)
        return float(np.sum(np.abs(w))), w, V

    def gradient_matrix(self, w, V):
        signs = np.where(w >= 0, 1.0, -1.0)
        W = (V * signs) @ V.conj().T
        # the grouping permutation is an involution
        G = self._ungroup(self.R_adj @ self._ungroup(W))
        return (G + G.conj().T) / 2


def ascent_objective(S: SuperOperator, psi: np.ndarray):
    """Value ``||(S (x) id)(psi psi^dagger)||_1`` and the matrix ``G`` with value ``psi^dagger G psi``.

    ``G = (S^dagger (x) id)(sign(Y))`` for ``Y = (S (x) id)(psi psi^dagger)``, with
    ``sign(0) = +1``; ``G psi`` is the ascent direction.
    """
    resp = _PureResponse(S)
    value, w, V = resp.spectrum(np.asarray(psi, dtype=complex))
    return value, resp.gradient_matrix(w, V)


def _ascend(resp: _PureResponse, psi, *, step0, halvings, stall_steps, max_steps):
    value, w, V = resp.spectrum(psi)
    small = 0
    steps = 0
    eta_prev = step0
    while steps < max_steps:
        G = resp.gradient_matrix(w, V)
        g = G @ psi
        g = g - np.vdot(psi, g) * psi
        gnorm = np.linalg.norm(g)
        if gnorm < 1e-15:
            break
        direction = g / gnorm
        eta = min(step0, 2 * eta_prev)
        accepted = False
        for _ in range(halvings + 1):
            cand = psi + eta * direction
            cand /= np.linalg.norm(cand)
            cand_value, cand_w, cand_V = resp.spectrum(cand)
            if cand_value > value:
                accepted = True
                break
            eta /= 2
        if not accepted:
            break
        steps += 1
        eta_prev = eta
        small = small + 1 if cand_value - value < 1e-12 else 0
        psi, value, w, V = cand, cand_value, cand_w, cand_V
        if small >= stall_steps:
            break
    return psi, value, steps


def diamond_norm_ascent(
    S: SuperOperator,
    restarts: int = 50,
    seed: int = 0,
    *,
    step0: float = 0.1,
    halvings: int = 30,
    stall_steps: int = 5,
    max_steps: int = 2000,
) -> AscentState:
    """Lower bound on the diamond norm of a Hermiticity-preserving map.

    Each restart starts from a Gaussian unit vector drawn from
    ``default_rng([seed, restart])`` and takes normalized gradient steps on
    the unit sphere, halving the step from ``step0`` until the objective
    increases. A restart stops after ``stall_steps`` consecutive improvements
    below ``1e-12`` or when no halving improves.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if not S.is_hermiticity_preserving():
        raise DomainError("ascent requires a Hermiticity-preserving map")
    d = S.d
    D = d * d
    if np.linalg.norm(S.transfer) <= _ZERO_MAP:
        psi = np.zeros(D, dtype=complex)
        psi[0] = 1.0
        return AscentState(psi=psi, value=0.0, restarts_used=restarts, seed=seed)
    resp = _PureResponse(S)
    best_psi, best_value, total_steps = None, -1.0, 0
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        psi = rng.standard_normal(D) + 1j * rng.standard_normal(D)
        psi /= np.linalg.norm(psi)
        psi, value, steps = _ascend(
            resp, psi, step0=step0, halvings=halvings, stall_steps=stall_steps, max_steps=max_steps
        )
        total_steps += steps
        if value > best_value:
            best_psi, best_value = psi, value
    # report the value recomputed at the returned state
    value = trace_norm(apply_extended(S, BipartiteOperator(d, d, np.outer(best_psi, best_psi.conj()))).matrix)
    return AscentState(psi=best_psi, value=value, restarts_used=restarts, seed=seed, steps=total_steps)


def theorem_norms(T: Channel, **kwargs) -> tuple[DiamondResult, DiamondResult]:
    """SDP results for ``Theta o (id - T)`` and ``id - T``."""
    phi = id_minus(T)
    return diamond_norm_sdp(compose_theta(phi), **kwargs), diamond_norm_sdp(phi, **kwargs)
