"""Quantum channels, superoperators and Choi matrices.

A :class:`SuperOperator` stores the transfer matrix ``R`` with
``vec(Phi(X)) = R @ vec(X)`` under the row-major :func:`~diamond_gap.linalg.vec`,
so a Kraus channel has ``R = sum_k E_k (x) conj(E_k)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import (
    BipartiteOperator,
    DimensionError,
    DomainError,
    as_matrix,
    herm_eig,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    spectral_norm,
    swap_operator,
    unvec,
    vec,
)

__all__ = [
    "Channel",
    "SuperOperator",
    "ChoiMatrix",
    "CPTPReport",
    "channel_to_superop",
    "superop_choi",
    "choi_to_superop",
    "theta_superop",
    "identity_superop",
    "apply",
    "apply_extended",
    "grouping_permutation",
    "is_cptp",
    "haar_unitary",
    "haar_isometry",
    "random_channel",
    "channel_from_isometry",
    "channel_isometry",
    "named_channel",
    "parse_channel_spec",
    "id_minus",
    "compose_theta",
    "channel_to_json",
    "channel_from_json",
    "superop_to_json",
    "superop_from_json",
]


@dataclass(frozen=True, eq=False)
class Channel:
    """A map ``X -> sum_k E_k X E_k^dagger`` on ``d x d`` matrices.

    Construction only checks shapes; use :func:`is_cptp` to check trace
    preservation.
    """

    d: int
    kraus: tuple
    description: str = field(default="", compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise DimensionError("d must be positive")
        ops = tuple(as_matrix(E) for E in self.kraus)
        if not ops:
            raise DimensionError("a channel needs at least one Kraus operator")
        for E in ops:
            if E.shape != (self.d, self.d):
                raise DimensionError(f"Kraus operator of shape {E.shape}, expected {(self.d, self.d)}")
        object.__setattr__(self, "kraus", ops)

    def __call__(self, X) -> np.ndarray:
        X = as_matrix(X, square=True)
        return sum(E @ X @ E.conj().T for E in self.kraus)


@dataclass(frozen=True, eq=False)
class SuperOperator:
    d: int
    transfer: np.ndarray

    def __post_init__(self):
        R = as_matrix(self.transfer, square=True)
        if R.shape[0] != self.d * self.d:
            raise DimensionError(f"transfer matrix of shape {R.shape} for d={self.d}")
        object.__setattr__(self, "transfer", R)

    def __call__(self, X) -> np.ndarray:
        return apply(self, X)

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        _check_same_d(self, other)
        return SuperOperator(self.d, self.transfer + other.transfer)

    def __sub__(self, other: "SuperOperator") -> "SuperOperator":
        _check_same_d(self, other)
        return SuperOperator(self.d, self.transfer - other.transfer)

    def __mul__(self, c) -> "SuperOperator":
        return SuperOperator(self.d, complex(c) * self.transfer)

    __rmul__ = __mul__

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        """Composition ``self o other``."""
        _check_same_d(self, other)
        return SuperOperator(self.d, self.transfer @ other.transfer)

    def hermiticity_error(self) -> float:
        """Largest ``||Phi(E^dagger) - Phi(E)^dagger||`` over matrix units ``E``."""
        d = self.d
        worst = 0.0
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d), dtype=complex)
                E[i, j] = 1.0
                out = apply(self, E)
                out_dag = apply(self, E.T)
                worst = max(worst, spectral_norm(out_dag - out.conj().T))
        return worst

    def trace_error(self) -> float:
        """Largest ``|tr Phi(E)|`` over matrix units ``E``."""
        # tr(Phi(E_ij)) is the pairing of vec(I) with column (i, j) of R
        traces = vec(np.eye(self.d)) @ self.transfer
        return float(np.max(np.abs(traces)))

    def is_hermiticity_preserving(self, tol: float = 1e-10) -> bool:
        return self.hermiticity_error() <= tol

    def is_trace_annihilating(self, tol: float = 1e-12) -> bool:
        return self.trace_error() <= tol


def _check_same_d(a: SuperOperator, b: SuperOperator) -> None:
    if a.d != b.d:
        raise DimensionError(f"superoperators act on different dimensions ({a.d} vs {b.d})")


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Unnormalized Choi matrix ``J = sum_ij Phi(E_ij) (x) E_ij``."""

    d: int
    matrix: BipartiteOperator

    def psd_error(self) -> float:
        """Magnitude of the most negative eigenvalue (0 if PSD)."""
        w, _ = herm_eig(self.matrix.matrix)
        return float(max(0.0, -w[-1]))

    def tp_error(self) -> float:
        return spectral_norm(partial_trace(self.matrix, "H") - np.eye(self.d))


@dataclass(frozen=True)
class CPTPReport:
    tp_error: float
    passed: bool

    def to_json(self) -> dict:
        return {"tp_error": self.tp_error, "pass": self.passed}


def channel_to_superop(T: Channel) -> SuperOperator:
    R = sum(np.kron(E, E.conj()) for E in T.kraus)
    return SuperOperator(T.d, R)


def _realign(M: np.ndarray, d: int) -> np.ndarray:
    # R[(a,b),(i,j)] <-> J[(a,i),(b,j)]; the map is its own inverse
    return M.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def superop_choi(S: SuperOperator) -> ChoiMatrix:
    J = _realign(S.transfer, S.d)
    return ChoiMatrix(S.d, BipartiteOperator(S.d, S.d, J))


def choi_to_superop(J: ChoiMatrix) -> SuperOperator:
    return SuperOperator(J.d, _realign(J.matrix.matrix, J.d))


def identity_superop(d: int) -> SuperOperator:
    return SuperOperator(d, np.eye(d * d, dtype=complex))


def theta_superop(d: int) -> SuperOperator:
    """The transposition map; ``vec(X^T) = F vec(X)``."""
    return SuperOperator(d, swap_operator(d).matrix)


def apply(S: SuperOperator, X) -> np.ndarray:
    X = as_matrix(X, square=True)
    if X.shape[0] != S.d:
        raise DimensionError(f"operator of side {X.shape[0]} for a map on d={S.d}")
    return unvec(S.transfer @ vec(X), S.d)


@lru_cache(maxsize=None)
def grouping_permutation(d: int, dK: int) -> np.ndarray:
    """Index bijection from the composite matrix to ``(vec_H, vec_K)`` order.

    With ``p = grouping_permutation(d, dK)``, ``M.reshape(-1)[p]`` reshaped to
    ``(d*d, dK*dK)`` holds ``<i|<j| M |k>|l>`` at row ``i*d + k`` and column
    ``j*dK + l``. The inverse permutation maps back.
    """
    n = d * dK
    idx = np.arange(n * n).reshape(d, dK, d, dK)
    p = idx.transpose(0, 2, 1, 3).reshape(-1)
    p.setflags(write=False)
    return p


def apply_extended(S: SuperOperator, X: BipartiteOperator) -> BipartiteOperator:
    """``(Phi (x) id_K)(X)`` for a bipartite ``X`` whose first factor is ``Phi``'s."""
    if X.dH != S.d:
        raise DimensionError(f"operator has dH={X.dH}, map acts on d={S.d}")
    d, dK = X.dH, X.dK
    p = grouping_permutation(d, dK)
    grouped = X.matrix.reshape(-1)[p].reshape(d * d, dK * dK)
    out = np.empty(grouped.size, dtype=complex)
    out[p] = (S.transfer @ grouped).reshape(-1)
    n = d * dK
    return BipartiteOperator(d, dK, out.reshape(n, n))


def is_cptp(T: Channel, tol: float = 1e-10) -> CPTPReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    acc = sum(E.conj().T @ E for E in T.kraus)
    err = spectral_norm(acc - np.eye(T.d))
    return CPTPReport(tp_error=err, passed=err <= tol)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _phase_fixed_q(G: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(G)
    diag = np.diagonal(R)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return Q * phases


def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random isometry ``C^cols -> C^rows`` (columns orthonormal)."""
    if rows < cols:
        raise DimensionError("an isometry needs rows >= cols")
    return _phase_fixed_q(_complex_gaussian(rng, (rows, cols)))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(d, d, rng)


def channel_from_isometry(V: np.ndarray, d: int, description: str = "") -> Channel:
    """Kraus blocks ``E_e[a, i] = V[a*env + e, i]`` of an isometry ``C^d -> C^d (x) C^env``."""
    V = as_matrix(V)
    env = V.shape[0] // d
    if V.shape != (d * env, d):
        raise DimensionError(f"isometry of shape {V.shape} for d={d}")
    blocks = V.reshape(d, env, d)
    return Channel(d, tuple(blocks[:, e, :] for e in range(env)), description)


def channel_isometry(T: Channel) -> np.ndarray:
    """Inverse of :func:`channel_from_isometry`."""
    stacked = np.stack(T.kraus, axis=1)  # (a, e, i)
    return stacked.reshape(T.d * len(T.kraus), T.d)


def random_channel(d: int, env: int | None = None, seed: int = 0) -> Channel:
    """Channel with Kraus blocks of a Haar-random isometry; deterministic in ``seed``."""
    if d < 1:
        raise DimensionError("d must be positive")
    env = d * d if env is None else env
    if env < 1:
        raise DimensionError("env must be positive")
    rng = np.random.default_rng(seed)
    V = haar_isometry(d * env, d, rng)
    return channel_from_isometry(V, d, f"haar(d={d},env={env},seed={seed})")


def named_channel(family: str, d: int, **params) -> Channel:
    """Build one of the reference channels.

    ``family`` is one of ``identity``, ``depolarizing`` (``p``),
    ``dephasing`` (``p``), ``unitary`` (``U``) or ``replacer`` (``sigma``).
    """
    if d < 1:
        raise DimensionError("d must be positive")
    eye = np.eye(d, dtype=complex)
    desc = family + "".join(f",{k}={v}" for k, v in params.items() if np.isscalar(v))

    if family == "identity":
        return Channel(d, (eye,), "identity")

    if family in ("depolarizing", "dephasing"):
        p = float(params.get("p", 1.0))
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {p}")
        kraus = []
        if p < 1.0:
            kraus.append(np.sqrt(1 - p) * eye)
        if p > 0.0:
            if family == "depolarizing":
                # sum_ij E_ij X E_ji = tr(X) I
                for i in range(d):
                    for j in range(d):
                        E = np.zeros((d, d), dtype=complex)
                        E[i, j] = np.sqrt(p / d)
                        kraus.append(E)
            else:
                for i in range(d):
                    P = np.zeros((d, d), dtype=complex)
                    P[i, i] = np.sqrt(p)
                    kraus.append(P)
        return Channel(d, tuple(kraus), desc)

    if family == "unitary":
        U = as_matrix(params["U"], square=True)
        if U.shape != (d, d):
            raise DimensionError(f"unitary of shape {U.shape} for d={d}")
        if spectral_norm(U.conj().T @ U - eye) > 1e-10:
            raise DomainError("U is not unitary")
        return Channel(d, (U,), params.get("description", "unitary"))

    if family == "replacer":
        sigma = as_matrix(params["sigma"], square=True)
        if sigma.shape != (d, d):
            raise DimensionError(f"sigma of shape {sigma.shape} for d={d}")
        try:
            w, V = herm_eig(sigma)
        except DomainError:
            raise DomainError("sigma is not Hermitian") from None
        if w[-1] < -1e-10 or abs(np.sum(w) - 1) > 1e-10:
            raise DomainError("sigma is not a density matrix")
        kraus = []
        for lam, v in zip(w, V.T):
            if lam <= 0:
                continue
            for i in range(d):
                E = np.zeros((d, d), dtype=complex)
                E[:, i] = np.sqrt(lam) * v
                kraus.append(E)
        return Channel(d, tuple(kraus), params.get("description", "replacer"))

    raise DomainError(f"unknown channel family {family!r}")


_SPEC_RE = re.compile(r"^(?P<name>[a-z_-]+)(?::(?P<args>.*))?$")


def _phase_gate(d: int, theta: float) -> np.ndarray:
    return np.diag(np.exp(1j * theta * np.arange(d)))


def parse_channel_spec(spec: str, d: int, seed: int = 0) -> Channel:
    """Parse ``name[:key=val[,key=val...]]`` or ``@file.json``.

    Besides the named families, ``haar`` (keys ``env``, ``seed``) draws a
    random channel, ``zphase`` (key ``theta``, default pi) is the unitary
    channel of ``diag(exp(i theta k))``, and ``replacer`` without ``sigma``
    replaces with ``|0><0|``.
    """
    spec = spec.strip()
    if spec.startswith("@"):
        with open(spec[1:], encoding="utf-8") as fh:
            T = channel_from_json(json.load(fh))
        if T.d != d:
            raise DimensionError(f"channel file has d={T.d}, requested d={d}")
        return T
    m = _SPEC_RE.match(spec)
    if m is None:
        raise DomainError(f"cannot parse channel spec {spec!r}")
    name = m.group("name")
    kv: dict[str, str] = {}
    if m.group("args"):
        for part in m.group("args").split(","):
            if "=" not in part:
                raise DomainError(f"expected key=val in channel spec, got {part!r}")
            k, v = part.split("=", 1)
            kv[k.strip()] = v.strip()

    def number(key, default):
        try:
            return float(kv.pop(key, default))
        except ValueError:
            raise DomainError(f"bad value for {key!r} in channel spec") from None

    if name == "haar":
        env = int(number("env", d * d))
        s = int(number("seed", seed))
        T = random_channel(d, env, s)
    elif name == "zphase":
        theta = number("theta", np.pi)
        T = named_channel("unitary", d, U=_phase_gate(d, theta), description=f"zphase,theta={theta}")
    elif name == "replacer" and "sigma" not in kv:
        sigma = np.zeros((d, d), dtype=complex)
        sigma[0, 0] = 1.0
        T = named_channel("replacer", d, sigma=sigma, description="replacer,|0><0|")
    elif name in ("depolarizing", "dephasing"):
        T = named_channel(name, d, p=number("p", 1.0))
    elif name == "identity":
        T = named_channel("identity", d)
    else:
        raise DomainError(f"unknown channel family {name!r}")
    if kv:
        raise DomainError(f"unused keys in channel spec: {sorted(kv)}")
    return T


def id_minus(T: Channel) -> SuperOperator:
    """``id - T`` as a superoperator."""
    return identity_superop(T.d) - channel_to_superop(T)


def compose_theta(S: SuperOperator) -> SuperOperator:
    """``Theta o S``: transpose the output of ``S``."""
    return theta_superop(S.d) @ S


def channel_to_json(T: Channel) -> dict:
    return {"d": T.d, "kraus": [matrix_to_json(E) for E in T.kraus]}


def channel_from_json(obj: dict) -> Channel:
    try:
        d = int(obj["d"])
        kraus = [matrix_from_json(E) for E in obj["kraus"]]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed channel record: {exc}") from None
    return Channel(d, tuple(kraus))


def superop_to_json(S: SuperOperator) -> dict:
    return {"d": S.d, "transfer": matrix_to_json(S.transfer)}


def superop_from_json(obj: dict) -> SuperOperator:
    try:
        return SuperOperator(int(obj["d"]), matrix_from_json(obj["transfer"]))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed superoperator record: {exc}") from None
