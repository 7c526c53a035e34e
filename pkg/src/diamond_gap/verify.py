"""Verification harness for ``||Theta o (id - T)|| <= (d / sqrt 2) ||id - T||``.

Diamond norms are written ``||.||`` in this module. The harness covers:

* :func:`verify_theorem` for a single channel and :func:`theorem_sweep` over
  Haar-random channels,
* :func:`lemma_suite`, randomized checks of every inequality and identity
  the proof relies on,
* the equality analysis: :func:`equality_witness_analysis`,
  :func:`uhlmann_unitary`, :func:`rank_defect` and :func:`gap_demonstration`,
* :func:`search_max_ratio`, a budgeted search for channels with a large
  ratio ``||Theta o Phi|| / (d ||Phi||)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channels import (
    Channel,
    apply_extended,
    channel_from_isometry,
    channel_isometry,
    channel_to_json,
    channel_to_superop,
    compose_theta,
    haar_unitary,
    id_minus,
    is_cptp,
    random_channel,
)
from .diamond import MAX_GAP, DiamondResult, SDPFailure, diamond_norm_ascent, diamond_norm_sdp
from .linalg import (
    BipartiteOperator,
    DomainError,
    as_matrix,
    herm_eig,
    hs_norm,
    kron,
    numerical_rank,
    partial_trace,
    partial_transpose,
    spectral_norm,
    swap_operator,
    trace_norm,
    vec,
)

__all__ = [
    "ALPHA",
    "VerificationReport",
    "verify_theorem",
    "theorem_sweep",
    "task_seed",
    "sweep_env",
    "LemmaTally",
    "LemmaSuiteResult",
    "lemma_suite",
    "LEMMA_STATEMENTS",
    "two_level_equality_slack",
    "unitary_equality_slack",
    "WitnessAnalysis",
    "equality_witness_analysis",
    "UhlmannPreconditionError",
    "uhlmann_unitary",
    "phase_aligned_error",
    "RankDefectReport",
    "rank_defect",
    "GapWitness",
    "gap_demonstration",
    "SearchStep",
    "SearchResult",
    "search_max_ratio",
    "random_unitary",
    "CSV_COLUMNS",
]

ALPHA = 1 / math.sqrt(2)
THEOREM_TOL = 1e-6
LEMMA_TOL = 1e-10
TIGHT_REL = 1e-9
STRICT_GAP = 1e-8


def task_seed(seed: int, counter: int) -> int:
    """Per-task 64-bit seed derived from the run seed and a task counter."""
    return int(np.random.SeedSequence([seed, counter]).generate_state(1, np.uint64)[0])


def sweep_env(d: int, env: str | int, counter: int) -> int:
    """Environment dimension for task ``counter`` of a sweep.

    ``env`` is ``1``, ``"d"``, ``"d2"``, an integer, or ``"mixed"`` which
    cycles through ``1, d, d^2``.
    """
    if env == "mixed":
        return (1, d, d * d)[counter % 3]
    if env == "d":
        return d
    if env == "d2":
        return d * d
    return int(env)


# --- theorem -----------------------------------------------------------------


@dataclass
class VerificationReport:
    d: int
    seed: int
    L: float
    R: float
    bound: float
    ratio: float
    pass_: bool
    certificates: tuple[DiamondResult, DiamondResult]
    channel_description: str = ""
    alpha_bound: float = ALPHA
    trivial: bool = False
    ascent_L: float | None = None
    ascent_R: float | None = None
    cross_check: bool = True

    @property
    def passed(self) -> bool:
        return self.pass_ and self.cross_check

    def to_record(self) -> dict:
        cert_L, cert_R = self.certificates
        return {
            "d": self.d,
            "seed": self.seed,
            "channel": self.channel_description,
            "L": self.L,
            "R": self.R,
            "bound": self.bound,
            "ratio": self.ratio,
            "alpha_bound": self.alpha_bound,
            "pass": self.pass_,
            "trivial": self.trivial,
            "ascent_L": self.ascent_L,
            "ascent_R": self.ascent_R,
            "cross_check": self.cross_check,
            "certificates": {"L": cert_L.to_json(), "R": cert_R.to_json()},
        }

    def csv_row(self) -> list:
        cert_L, cert_R = self.certificates
        return [self.d, self.seed, self.L, self.R, self.bound, self.ratio, self.pass_, cert_L.gap, cert_R.gap]


CSV_COLUMNS = ["d", "seed", "L", "R", "bound", "ratio", "pass", "sdp_gap_L", "sdp_gap_R"]


def verify_theorem(
    T: Channel,
    *,
    seed: int = 0,
    ascent_restarts: int = 0,
    description: str | None = None,
    tol: float = THEOREM_TOL,
    max_gap: float = MAX_GAP,
) -> VerificationReport:
    """Compute ``L = ||Theta o (id-T)||`` and ``R = ||id-T||`` and check ``L <= (d/sqrt 2) R``.

    Both norms come from :func:`~diamond_gap.diamond.diamond_norm_sdp`. With
    ``ascent_restarts > 0`` the ascent lower bounds are computed as well and
    must not exceed the SDP upper certificates. If either SDP fails to
    certify its gap, :class:`~diamond_gap.diamond.SDPFailure` is raised with
    the partial report attached as ``exc.report``.
    """
    cptp = is_cptp(T)
    if not cptp.passed:
        raise DomainError(f"channel is not trace preserving (error {cptp.tp_error:.3e})")
    d = T.d
    phi = id_minus(T)
    theta_phi = compose_theta(phi)
    res_L = diamond_norm_sdp(theta_phi, raise_on_failure=False)
    res_R = diamond_norm_sdp(phi, raise_on_failure=False)
    L, R = float(res_L.value), float(res_R.value)
    trivial = bool(R <= 1e-12)
    ratio = 0.0 if trivial else L / (d * R)
    bound = d * ALPHA * R
    report = VerificationReport(
        d=d,
        seed=int(seed),
        L=L,
        R=R,
        bound=bound,
        ratio=ratio,
        pass_=bool(L <= bound + tol),
        certificates=(res_L, res_R),
        channel_description=description if description is not None else T.description,
        trivial=trivial,
    )
    if ascent_restarts > 0:
        asc_L = diamond_norm_ascent(theta_phi, restarts=ascent_restarts, seed=seed).value
        asc_R = diamond_norm_ascent(phi, restarts=ascent_restarts, seed=seed).value
        report.ascent_L, report.ascent_R = asc_L, asc_R
        report.cross_check = bool(
            asc_L <= res_L.upper_certificate + tol and asc_R <= res_R.upper_certificate + tol
        )
    for res in (res_L, res_R):
        if not res.gap <= max_gap * max(1.0, res.value):
            exc = SDPFailure(f"SDP gap {res.gap:.3e} exceeds {max_gap:g}", res)
            exc.report = report
            raise exc
    return report


def _sweep_task(args) -> VerificationReport:
    d, seed, counter, env, ascent_restarts, tol, max_gap = args
    s = task_seed(seed, counter)
    e = sweep_env(d, env, counter)
    T = random_channel(d, e, s)
    return verify_theorem(T, seed=s, ascent_restarts=ascent_restarts, tol=tol, max_gap=max_gap)


def theorem_sweep(
    d: int,
    samples: int,
    seed: int,
    *,
    env: str | int = "mixed",
    workers: int = 1,
    ascent_restarts: int = 0,
    tol: float = THEOREM_TOL,
    max_gap: float = MAX_GAP,
) -> list[VerificationReport]:
    """:func:`verify_theorem` on ``samples`` Haar-random channels.

    Task ``k`` uses the channel ``random_channel(d, sweep_env(d, env, k),
    task_seed(seed, k))``, so the output does not depend on ``workers``.
    """
    tasks = [(d, seed, k, env, ascent_restarts, tol, max_gap) for k in range(samples)]
    if workers > 1 and samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_task, tasks, chunksize=max(1, samples // (4 * workers))))
    return [_sweep_task(t) for t in tasks]


# --- lemma suite -------------------------------------------------------------


def _gaussian(rng, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _random_hermitian(rng, n) -> np.ndarray:
    G = _gaussian(rng, (n, n))
    return (G + G.conj().T) / 2


def _random_density(rng, n) -> np.ndarray:
    G = _gaussian(rng, (n, n))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def _random_env(rng, d) -> int:
    return int(rng.integers(1, d * d + 1))


def _traceless_hs(rng, d):
    X = _random_hermitian(rng, d * d)
    X -= np.trace(X).real / (d * d) * np.eye(d * d)
    X /= hs_norm(X)
    slack = trace_norm(X) / math.sqrt(2) - hs_norm(X)
    return max(0.0, -slack), slack


def _trace_vs_hs(rng, d):
    N = d * d
    Y = _gaussian(rng, (N, N))
    Y /= hs_norm(Y)
    slack = math.sqrt(N) * hs_norm(Y) - trace_norm(Y)
    return max(0.0, -slack), slack


def _pt_isometry(rng, d):
    X = BipartiteOperator(d, d, _gaussian(rng, (d * d, d * d)))
    err = abs(hs_norm(partial_transpose(X).matrix) - hs_norm(X.matrix))
    return err, None


def _partial_trace_invariance(rng, d):
    T = random_channel(d, _random_env(rng, d), int(rng.integers(2**63)))
    Z = BipartiteOperator(d, d, _gaussian(rng, (d * d, d * d)))
    out = apply_extended(channel_to_superop(T), Z)
    return hs_norm(partial_trace(out, "H") - partial_trace(Z, "H")), None


def _difference_tr_H(rng, d):
    T = random_channel(d, _random_env(rng, d), int(rng.integers(2**63)))
    rho = BipartiteOperator(d, d, _random_density(rng, d * d))
    X = apply_extended(id_minus(T), rho)
    return hs_norm(partial_trace(X, "H")), None


def _vec_kron(rng, d):
    M, N, A = (_gaussian(rng, (d, d)) for _ in range(3))
    return hs_norm((kron(M, N) @ vec(A) - vec(M @ A @ N.T))[:, None]), None


def _swap(rng, d):
    X, Y = _gaussian(rng, (d, d)), _gaussian(rng, (d, d))
    F = swap_operator(d).matrix
    return hs_norm(F @ kron(X, Y) - kron(Y, X) @ F), None


def _pt_outer(rng, d):
    A, B = _gaussian(rng, (d, d)), _gaussian(rng, (d, d))
    lhs = partial_transpose(BipartiteOperator(d, d, np.outer(vec(A), vec(B).conj()))).matrix
    eye = np.eye(d)
    rhs = kron(eye, A.T) @ swap_operator(d).matrix @ kron(eye, B.conj())
    return hs_norm(lhs - rhs), None


LEMMA_STATEMENTS: dict[str, tuple[str, Callable]] = {
    "traceless_hs_bound": ("||X||_2 <= ||X||_1 / sqrt 2 for traceless Hermitian X", _traceless_hs),
    "trace_vs_hs_bound": ("||Y||_1 <= sqrt(N) ||Y||_2 for N x N Y", _trace_vs_hs),
    "pt_hs_isometry": ("||(Theta (x) id)(X)||_2 = ||X||_2", _pt_isometry),
    "partial_trace_invariance": ("tr_H((T (x) id)(Z)) = tr_H(Z) for a channel T", _partial_trace_invariance),
    "difference_tr_H_zero": ("tr_H(((id - T) (x) id)(rho)) = 0", _difference_tr_H),
    "vec_kron_identity": ("(M (x) N) vec(A) = vec(M A N^T)", _vec_kron),
    "swap_identity": ("F (X (x) Y) = (Y (x) X) F", _swap),
    "pt_outer_product": ("(Theta (x) id)(|vec A><vec B|) = (I (x) A^T) F (I (x) B*)", _pt_outer),
}


@dataclass
class LemmaTally:
    name: str
    statement: str
    trials: int
    max_violation: float
    min_slack: float | None
    passed: bool

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "statement": self.statement,
            "trials": self.trials,
            "max_violation": self.max_violation,
            "min_slack": self.min_slack,
            "pass": self.passed,
        }


@dataclass
class LemmaSuiteResult:
    seed: int
    tallies: list[LemmaTally]

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tallies)

    def __getitem__(self, name: str) -> LemmaTally:
        for t in self.tallies:
            if t.name == name:
                return t
        raise KeyError(name)


def lemma_suite(seed: int, trials: int, dims=(2, 3, 4), tol: float = LEMMA_TOL) -> LemmaSuiteResult:
    """Check every statement of :data:`LEMMA_STATEMENTS` on ``trials`` random instances.

    Trial ``t`` of statement ``s`` uses dimension ``dims[t % len(dims)]`` and
    the generator ``default_rng([seed, s, t])``. A statement passes when its
    largest violation is at most ``tol``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tallies = []
    for s_idx, (name, (statement, check)) in enumerate(LEMMA_STATEMENTS.items()):
        worst = 0.0
        min_slack = None
        for t in range(trials):
            rng = np.random.default_rng([seed, s_idx, t])
            violation, slack = check(rng, dims[t % len(dims)])
            worst = max(worst, violation)
            if slack is not None:
                min_slack = float(slack) if min_slack is None else min(min_slack, float(slack))
        tallies.append(LemmaTally(name, statement, trials, float(worst), min_slack, bool(worst <= tol)))
    return LemmaSuiteResult(seed, tallies)


def two_level_equality_slack(t: float = 0.5, n: int = 3) -> float:
    """``||X||_1 / sqrt 2 - ||X||_2`` for ``X = diag(t, -t, 0, ...)`` of size ``n``."""
    X = np.zeros((n, n), dtype=complex)
    X[0, 0], X[1, 1] = t, -t
    return trace_norm(X) / math.sqrt(2) - hs_norm(X)


def unitary_equality_slack(U) -> float:
    """``sqrt(N) ||U||_2 - ||U||_1``; zero for unitary ``U``."""
    U = as_matrix(U, square=True)
    return math.sqrt(U.shape[0]) * hs_norm(U) - trace_norm(U)


# --- equality analysis -------------------------------------------------------


@dataclass(frozen=True)
class WitnessAnalysis:
    rank: int
    balanced: bool
    lemma1_tight: bool
    lemma2_tight_after_pt: bool

    @property
    def both_tight(self) -> bool:
        return self.lemma1_tight and self.lemma2_tight_after_pt


def equality_witness_analysis(X: BipartiteOperator, tol: float = 1e-10) -> WitnessAnalysis:
    """Which of the two lemma inequalities in the proof chain are tight at ``X``.

    ``balanced`` means the nonzero spectrum is exactly ``{+t, -t}``;
    ``lemma1_tight`` means ``||X||_2 = ||X||_1 / sqrt 2`` to relative precision
    ``1e-9``; ``lemma2_tight_after_pt`` means all singular values of the
    partial transpose agree to relative precision ``1e-9``. For ``X = 0``
    every flag is false.
    """
    M = X.matrix
    scale = max(1.0, spectral_norm(M))
    if spectral_norm(M - M.conj().T) > tol * scale:
        raise DomainError("witness operator is not Hermitian")
    if abs(np.trace(M)) > tol * scale:
        raise DomainError(f"witness operator is not traceless (trace {np.trace(M):.3e})")
    rank = numerical_rank(M)
    if rank == 0:
        return WitnessAnalysis(0, False, False, False)
    w, _ = herm_eig(M)
    nonzero = w[np.abs(w) > 1e-10 * np.max(np.abs(w))]
    balanced = bool(nonzero.size == 2 and abs(nonzero[0] + nonzero[1]) <= tol * max(1.0, abs(nonzero[0])))
    tn, hs = trace_norm(M), hs_norm(M)
    lemma1_tight = bool((tn / math.sqrt(2) - hs) <= TIGHT_REL * tn / math.sqrt(2))
    s = np.linalg.svd(partial_transpose(X).matrix, compute_uv=False)
    lemma2_tight = bool(s[0] > 0 and (s[0] - s[-1]) <= TIGHT_REL * s[0])
    return WitnessAnalysis(rank, balanced, lemma1_tight, lemma2_tight)


class UhlmannPreconditionError(DomainError):
    def __init__(self, discrepancy: float):
        super().__init__(f"reduced states differ by {discrepancy:.3e} in spectral norm")
        self.discrepancy = discrepancy


def _polar_unitary(A: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(A)
    return W @ Vh


def uhlmann_unitary(psi, phi, d: int | None = None, tol: float = 1e-8) -> np.ndarray:
    """Unitary ``U`` on ``H`` with ``(U (x) id) psi = phi`` up to a global phase.

    Writing ``psi = vec(A)`` and ``phi = vec(B)``, equal reduced states on
    ``K`` mean ``A^dagger A = B^dagger B``, so ``A`` and ``B`` share the
    positive polar factor and ``U = W_B W_A^dagger`` from their unitary polar
    factors. The phase is fixed so the largest-magnitude entry of ``U`` is
    real and positive.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if psi.shape != phi.shape:
        raise DomainError("vectors have different lengths")
    if d is None:
        d = int(round(math.sqrt(psi.size)))
    if d * d != psi.size:
        raise DomainError(f"vector of length {psi.size} is not on C^{d} (x) C^{d}")
    A, B = psi.reshape(d, d), phi.reshape(d, d)
    discrepancy = spectral_norm(A.conj().T @ A - B.conj().T @ B)
    if discrepancy > tol:
        raise UhlmannPreconditionError(discrepancy)
    U = _polar_unitary(B) @ _polar_unitary(A).conj().T
    k = np.argmax(np.abs(U).reshape(-1))
    z = U.reshape(-1)[k]
    return U * (abs(z) / z)


def phase_aligned_error(a, b) -> float:
    """``min_theta ||a - e^{i theta} b||`` for vectors or matrices of the same shape."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


@dataclass(frozen=True)
class RankDefectReport:
    d: int
    rank: int
    bound: int
    passed: bool
    eig_error: float


def rank_defect(U, rel_tol: float = 1e-10) -> RankDefectReport:
    """Rank of ``I - U^T (x) U*`` against ``d^2 - d``.

    Also matches the spectrum of ``U^T (x) U*`` with the products
    ``lambda_i conj(lambda_j)`` of eigenvalues of ``U``; ``eig_error`` is the
    largest distance under the best pairing.
    """
    U = as_matrix(U, square=True)
    d = U.shape[0]
    if spectral_norm(U.conj().T @ U - np.eye(d)) > 1e-10:
        raise DomainError("U is not unitary")
    K = np.kron(U.T, U.conj())
    rank = numerical_rank(np.eye(d * d) - K, rel_tol)
    lam = np.linalg.eigvals(U)
    expected = np.outer(lam, lam.conj()).reshape(-1)
    actual = np.linalg.eigvals(K)
    cost = np.abs(actual[:, None] - expected[None, :])
    r, c = linear_sum_assignment(cost)
    bound = d * d - d
    return RankDefectReport(d, rank, bound, rank <= bound, float(cost[r, c].max()))


@dataclass
class GapWitness:
    psi_star: np.ndarray
    X_star: BipartiteOperator
    Y_star: BipartiteOperator
    rank_X: int
    rank_Y: int
    slack_lemma1: float
    slack_lemma2: float
    spectrum_X: np.ndarray
    trace_X: float
    partial_trace_H_error: float
    R_value: float
    analysis: WitnessAnalysis
    label: str = "empirical witness"

    @property
    def total_slack(self) -> float:
        return self.slack_lemma1 + self.slack_lemma2

    @property
    def strict(self) -> bool:
        return bool(max(self.slack_lemma1, self.slack_lemma2) >= STRICT_GAP)

    @property
    def classification(self) -> str:
        """``strict``, ``tight`` or ``review`` (between the two thresholds)."""
        if self.strict:
            return "strict"
        scale = max(self.R_value, 1e-300)
        if max(self.slack_lemma1, self.slack_lemma2) <= TIGHT_REL * scale:
            return "tight"
        return "review"

    def to_record(self) -> dict:
        return {
            "label": self.label,
            "R": self.R_value,
            "rank_X": self.rank_X,
            "rank_Y": self.rank_Y,
            "slack_lemma1": self.slack_lemma1,
            "slack_lemma2": self.slack_lemma2,
            "total_slack": self.total_slack,
            "classification": self.classification,
            "spectrum_X": [float(x) for x in self.spectrum_X],
            "trace_X": self.trace_X,
            "partial_trace_H_error": self.partial_trace_H_error,
            "balanced": self.analysis.balanced,
            "lemma1_tight": self.analysis.lemma1_tight,
            "lemma2_tight_after_pt": self.analysis.lemma2_tight_after_pt,
            "psi_star": [[float(z.real), float(z.imag)] for z in self.psi_star],
        }


def gap_demonstration(T: Channel, restarts: int = 50, seed: int = 0) -> GapWitness:
    """Slack of the two-lemma chain at the best state found for ``||id - T||``.

    With ``X* = ((id - T) (x) id)(psi psi^dagger)`` and ``Y*`` its partial
    transpose, the chain is ``||Y*||_1 <= d ||X*||_2 <= (d / sqrt 2) ||X*||_1``;
    ``slack_lemma2`` is the first gap and ``slack_lemma1`` the second.
    """
    phi = id_minus(T)
    if np.linalg.norm(phi.transfer) <= 1e-12:
        raise DomainError("gap demonstration needs T != id")
    d = T.d
    state = diamond_norm_ascent(phi, restarts=restarts, seed=seed)
    psi = state.psi
    X = apply_extended(phi, BipartiteOperator(d, d, np.outer(psi, psi.conj())))
    Y = partial_transpose(X)
    tn_X, hs_X, tn_Y = trace_norm(X.matrix), hs_norm(X.matrix), trace_norm(Y.matrix)
    w, _ = herm_eig(X.matrix)
    return GapWitness(
        psi_star=psi,
        X_star=X,
        Y_star=Y,
        rank_X=numerical_rank(X.matrix),
        rank_Y=numerical_rank(Y.matrix),
        slack_lemma1=d / math.sqrt(2) * tn_X - d * hs_X,
        slack_lemma2=d * hs_X - tn_Y,
        spectrum_X=w,
        trace_X=float(abs(np.trace(X.matrix))),
        partial_trace_H_error=hs_norm(partial_trace(X, "H")),
        R_value=state.value,
        analysis=equality_witness_analysis(X),
    )


# --- open-problem search -----------------------------------------------------


@dataclass(frozen=True)
class SearchStep:
    iteration: int
    ratio: float
    kind: str

    def to_record(self) -> dict:
        return {"iteration": self.iteration, "ratio": self.ratio, "kind": self.kind}


@dataclass
class SearchResult:
    d: int
    seed: int
    best_ratio: float
    best_channel: Channel
    best_report: VerificationReport
    trace: list[SearchStep] = field(default_factory=list)

    @property
    def within_bound(self) -> bool:
        return bool(self.best_ratio <= ALPHA + THEOREM_TOL)

    def to_record(self) -> dict:
        return {
            "d": self.d,
            "seed": self.seed,
            "best_ratio": self.best_ratio,
            "alpha_bound": ALPHA,
            "within_bound": self.within_bound,
            "evaluations": len(self.trace),
            "best_channel": channel_to_json(self.best_channel),
            "best_report": self.best_report.to_record(),
        }


def _reorthonormalize(V: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(V)
    diag = np.diagonal(R)
    return Q * np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)


def search_max_ratio(
    d: int,
    budget: int,
    seed: int,
    *,
    env: str | int = "d2",
    fresh_fraction: float = 0.7,
    step: float = 0.05,
) -> SearchResult:
    """Budgeted search for the largest ``||Theta o Phi|| / (d ||Phi||)``.

    The first ``ceil(fresh_fraction * budget)`` evaluations are fresh
    Haar-random channels; the rest perturb the Kraus isometry of the best
    channel so far by ``step`` times a complex Gaussian matrix and
    re-orthonormalize. Every ratio comes from the SDP. Deterministic in
    ``seed``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n_fresh = max(1, math.ceil(fresh_fraction * budget))
    best: tuple[float, Channel, VerificationReport] | None = None
    trace: list[SearchStep] = []
    for k in range(budget):
        s = task_seed(seed, k)
        if k < n_fresh:
            kind = "fresh"
            T = random_channel(d, sweep_env(d, env, k), s)
        else:
            kind = "perturb"
            rng = np.random.default_rng(s)
            V = channel_isometry(best[1])
            V = _reorthonormalize(V + step * (rng.standard_normal(V.shape) + 1j * rng.standard_normal(V.shape)) / math.sqrt(2))
            T = channel_from_isometry(V, d, f"perturb(iteration={k},seed={s})")
        report = verify_theorem(T, seed=s)
        trace.append(SearchStep(k, report.ratio, kind))
        if best is None or report.ratio > best[0]:
            best = (report.ratio, T, report)
    return SearchResult(d=d, seed=seed, best_ratio=best[0], best_channel=best[1], best_report=best[2], trace=trace)


def random_unitary(d: int, seed: int) -> np.ndarray:
    """Haar-random ``d x d`` unitary from ``default_rng(seed)``."""
    return haar_unitary(d, np.random.default_rng(seed))
