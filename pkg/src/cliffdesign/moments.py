"""Convergence of K-interleaved Clifford circuits, computed in the small basis.

Everything lives in coordinates over Sigma_{t,t}.  For one site, R_1 is an
average of Ad_g^{(x)t} over a short gate list; the n-site matrix elements
factor as <Q_T|R_1|Q_T'> <Q_T|Q_T'>^{n-1}.  With W an orthonormal basis of
range(P_Cl - P_H),

    ||[(P_Cl - P_H) R]^k||_2^2 = tr(M^{k-1} G M^{k-1 dagger}),

where M = W^dagger R W and G = W^dagger R R^dagger W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .commutant import CommutantModel, gram, overlap_exponents
from .errors import ConditioningError, ResourceLimitError
from .lagrangian import StochasticLagrangian, enumerate_sigma
from .operators import haar_symmetrizer, r_of

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
METRIC_TOL = 1e-12


@dataclass(frozen=True)
class GateK:
    matrix: np.ndarray
    label: str = "K"

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("gate must be 2x2")
        if not np.allclose(m @ m.conj().T, np.eye(2), rtol=0, atol=1e-12):
            raise ValueError(f"gate {self.label} is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def dagger(self) -> "GateK":
        return GateK(self.matrix.conj().T, self.label + "^dag")

    @property
    def is_clifford(self) -> bool:
        """True when K X K^dag and K Z K^dag are both +-Paulis."""
        K = self.matrix
        for P in (PAULI_X, PAULI_Z):
            img = K @ P @ K.conj().T
            if not any(abs(abs(np.trace(Q @ img)) / 2 - 1) < 1e-9 for Q in (PAULI_X, PAULI_Y, PAULI_Z)):
                return False
        return True

    def to_list(self) -> list[float]:
        return [float(v) for z in self.matrix.reshape(-1) for v in (z.real, z.imag)]


def t_gate() -> GateK:
    return GateK(np.diag([1, np.exp(1j * np.pi / 4)]), "T")


def sqrt_t_gate() -> GateK:
    return GateK(np.diag([1, np.exp(1j * np.pi / 8)]), "sqrtT")


def s_gate() -> GateK:
    return GateK(np.diag([1, 1j]), "S")


def hadamard_gate() -> GateK:
    return GateK(np.array([[1, 1], [1, -1]]) / np.sqrt(2), "H")


def identity_gate() -> GateK:
    return GateK(np.eye(2), "I")


def parse_gate(spec: str) -> GateK:
    """'T', 'sqrtT', 'S', 'H', 'I' or 'custom:' followed by 8 comma-separated floats.

    The floats are the real and imaginary parts of the entries in row-major order.
    """
    named = {"T": t_gate, "sqrtT": sqrt_t_gate, "S": s_gate, "H": hadamard_gate, "I": identity_gate}
    if spec in named:
        return named[spec]()
    if spec.startswith("custom:"):
        parts = [p for p in spec[len("custom:"):].replace(" ", ",").split(",") if p]
        if len(parts) != 8:
            raise ValueError("custom gate needs 8 floats (re, im of a, b, c, d)")
        v = [float(p) for p in parts]
        m = np.array([complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]),
                      complex(v[6], v[7])]).reshape(2, 2)
        return GateK(m, "custom")
    raise ValueError(f"unknown gate {spec!r}")


def tensor_power(U: np.ndarray, t: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(t):
        out = np.kron(U, out)
    return out


def channel_terms(K: GateK, include_identity: bool = True) -> list[tuple[float, np.ndarray]]:
    """Weighted unitaries whose Ad-average is R_1."""
    terms = [(1.0, K.matrix), (1.0, K.matrix.conj().T)]
    if include_identity:
        terms.append((1.0, np.eye(2, dtype=complex)))
    w = 1.0 / len(terms)
    return [(w, U) for _, U in terms]


def squared_terms(terms) -> list[tuple[float, np.ndarray]]:
    """Terms of R_1 R_1^dag = sum over g, h of p_g p_h Ad_{g h^dag}."""
    return [(pa * pb, A @ B.conj().T) for pa, A in terms for pb, B in terms]


@lru_cache(maxsize=None)
def _r_stack(t: int) -> np.ndarray:
    stack = np.array([r_of(T) for T in enumerate_sigma(t)])
    stack.setflags(write=False)
    return stack


def adjoint_overlaps(t: int, U: np.ndarray, stack: np.ndarray | None = None) -> np.ndarray:
    """X[T, T'] = 2^-t tr(r(T)^dag U^{(x)t} r(T') U^{dag (x)t}) for a 2x2 unitary U."""
    stack = _r_stack(t) if stack is None else stack
    V = tensor_power(U, t)
    conj = np.einsum("ab,mbc,dc->mad", V, stack, V.conj(), optimize=True)
    return np.einsum("iab,jab->ij", stack, conj, optimize=True) / 2**t


def single_site_matrix(t: int, terms, stack=None) -> np.ndarray:
    """<Q_T| sum_g p_g Ad_g^{(x)t} |Q_T'> over Sigma_{t,t}."""
    out = 0
    merged: dict[bytes, list] = {}
    for p, U in terms:
        # merge equal unitaries (e.g. K K^dag = 1) before the dense work
        key = np.round(U, 12).tobytes()
        if key in merged:
            merged[key][0] += p
        else:
            merged[key] = [p, U]
    for p, U in merged.values():
        out = out + p * adjoint_overlaps(t, U, stack)
    return out


def r_matrix_element(t: int, K: GateK, T1: StochasticLagrangian, T2: StochasticLagrangian,
                     include_identity: bool = True) -> complex:
    """<Q_T1| R_1 |Q_T2> for R_1 the average of Ad over {K, K^dag, 1}."""
    r1, r2 = r_of(T1), r_of(T2)
    total = 0j
    for p, U in channel_terms(K, include_identity):
        V = tensor_power(U, t)
        total += p * np.sum(r1 * (V @ r2 @ V.conj().T)) / 2**t
    return complex(total)


def haar_site_matrix(t: int) -> np.ndarray:
    """<Q_T|P_H|Q_T'> on one site."""
    B = haar_symmetrizer(t).orthonormal_basis
    C = _r_stack(t).reshape(len(enumerate_sigma(t)), -1) @ B.T
    return C @ C.T / 2**t


def eta(t: int, K: GateK, include_identity: bool = True) -> float:
    return float(eta_table(t, K, include_identity)["eta"])


def eta_table(t: int, K: GateK, include_identity: bool = True) -> dict:
    """Max of |<Q_T|R_1|Q_T'>| over non-permutation T and all T'."""
    sigma = enumerate_sigma(t)
    R1 = single_site_matrix(t, channel_terms(K, include_identity))
    p = sum(T.is_permutation for T in sigma)
    vals = np.abs(R1[p:, :])
    if vals.size == 0:
        return {"eta": 0.0, "argmax": None, "row_max": []}
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    return {"eta": float(vals[i, j]), "argmax": (int(i + p), int(j)),
            "row_max": [float(v) for v in vals.max(axis=1)]}


# --- orthonormal basis of range(P_Cl - P_H) ---------------------------------

def complement_basis(G: np.ndarray, p: int, method: str = "spectral") -> np.ndarray:
    """Coefficient vectors w_a (columns) with w^dag G w = 1 and G-orthogonal to the first p.

    ``spectral`` diagonalizes the Schur complement of the permutation block;
    ``gram_schmidt`` takes the trailing columns of the inverse Cholesky factor.
    """
    m = G.shape[0]
    if p == m:
        return np.zeros((m, 0), dtype=G.dtype)
    if method == "gram_schmidt":
        L = np.linalg.cholesky(G)
        Linv_T = np.linalg.inv(L).conj().T
        return Linv_T[:, p:]
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    Gpp, Gpq = G[:p, :p], G[:p, p:]
    X = np.linalg.solve(Gpp, Gpq)
    F = np.vstack([-X, np.eye(m - p)])
    S = G[p:, p:] - Gpq.conj().T @ X
    S = (S + S.conj().T) / 2
    lam, U = np.linalg.eigh(S)
    if lam[0] < METRIC_TOL * max(lam[-1], 1.0):
        raise ConditioningError("complement metric is singular")
    return F @ (U / np.sqrt(lam))


@dataclass(frozen=True)
class InterleavedModel:
    t: int
    n: int
    label: str
    commutant: CommutantModel = field(repr=False)
    R1: np.ndarray = field(repr=False)
    R1R1: np.ndarray = field(repr=False)
    M_R: np.ndarray = field(repr=False)
    M_RR: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    G: np.ndarray = field(repr=False)

    @property
    def complement_dim(self) -> int:
        return self.W.shape[1]


def _assemble(t, n, label, R1, R1R1, method) -> InterleavedModel:
    model = gram(t, n)
    model.require_conditioned()
    site = np.exp2(overlap_exponents(t).astype(float))
    power = site ** (n - 1)
    M_R = R1 * power
    M_RR = R1R1 * power
    W = complement_basis(model.gram, model.perm_count, method)
    M = W.conj().T @ M_R @ W
    G = W.conj().T @ M_RR @ W
    return InterleavedModel(t, n, label, model, R1, R1R1, M_R, M_RR, W, M, G)


def interleaved_model(t: int, n: int, K: GateK, include_identity: bool = True,
                      method: str = "spectral") -> InterleavedModel:
    if n < t - 1:
        raise ConditioningError(f"need n >= t-1 for an independent basis (t={t}, n={n})")
    terms = channel_terms(K, include_identity)
    R1 = single_site_matrix(t, terms)
    R1R1 = single_site_matrix(t, squared_terms(terms))
    label = K.label + ("" if include_identity else ",no-identity")
    return _assemble(t, n, label, R1, R1R1, method)


def haar_interleaved_model(t: int, n: int, method: str = "spectral") -> InterleavedModel:
    if n < t - 1:
        raise ConditioningError(f"need n >= t-1 for an independent basis (t={t}, n={n})")
    H1 = haar_site_matrix(t)
    return _assemble(t, n, "haar", H1, H1, method)


def convergence_norm(model: InterleavedModel, k: int) -> float:
    """||[(P_Cl - P_H) R]^k||_2 for k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if model.complement_dim == 0:
        return 0.0
    Mk = np.linalg.matrix_power(model.M, k - 1)
    val = np.trace(Mk @ model.G @ Mk.conj().T).real
    return float(np.sqrt(max(val, 0.0)))


def convergence_log2_curve(model: InterleavedModel, k_max: int) -> np.ndarray:
    """log2 convergence_norm for k = 1..k_max; rescales as it goes, so no underflow."""
    out = np.full(k_max, -np.inf)
    if model.complement_dim == 0:
        return out
    Mk = np.eye(model.complement_dim, dtype=model.M.dtype)
    scale = 0.0
    for k in range(1, k_max + 1):
        val = np.trace(Mk @ model.G @ Mk.conj().T).real
        if val <= 0:
            break
        out[k - 1] = scale + 0.5 * np.log2(val)
        Mk = model.M @ Mk
        s = np.abs(Mk).max()
        if s == 0:
            break
        Mk /= s
        scale += np.log2(s)
    return out


def convergence_curve(model: InterleavedModel, k_max: int) -> np.ndarray:
    """convergence_norm for k = 1..k_max."""
    return np.exp2(convergence_log2_curve(model, k_max))


def convergence_ratios(model: InterleavedModel, k_max: int) -> np.ndarray:
    """norm(k) / norm(k-1) for k = 2..k_max."""
    return np.exp2(np.diff(convergence_log2_curve(model, k_max)))


def sandwiched_norm(model: InterleavedModel, k: int) -> float:
    """||Delta_t(mu_Cl * (xi * mu_Cl)^k) - P_H||_2 = ||M^k||_F; k = 0 gives sqrt(rank)."""
    if model.complement_dim == 0:
        return 0.0
    return float(np.linalg.norm(np.linalg.matrix_power(model.M, k)))


def spectral_contraction(model: InterleavedModel) -> float:
    if model.complement_dim == 0:
        return 0.0
    return float(np.linalg.norm(model.M, 2))


def haar_interleaved_norm(t: int, n: int, k: int) -> float:
    return convergence_norm(haar_interleaved_model(t, n), k)


# --- closed-form bound -------------------------------------------------------

def _log2_one_plus_pow2(a: float) -> float:
    """log2(1 + 2^a) without overflow."""
    if a < 0:
        return math.log1p(2.0**a) / math.log(2)
    return a + math.log1p(2.0**-a) / math.log(2)


def paper_depth_bound(t: int, n: int, k: int, eta_bar: float) -> float:
    """log2 of 2^{33t^4 + t log2 k} (1 + 2^{32t^2 - n})^{5k} eta_bar^{k-1}."""
    if t < 1 or n < 1 or k < 1 or not 0 < eta_bar <= 1:
        raise ValueError("need positive t, n, k and 0 < eta_bar <= 1")
    return (33 * t**4 + t * math.log2(k) + 5 * k * _log2_one_plus_pow2(32 * t * t - n)
            + (k - 1) * math.log2(eta_bar))


def haar_interleaved_depth(t: int, eps: float) -> int:
    """36 (33 t^4 + 3 t log2(1/eps)), rounded up."""
    return math.ceil(36 * (33 * t**4 + 3 * t * math.log2(1 / eps)))


def eta_bar(eta_value: float) -> float:
    return max(0.25, eta_value)


# --- relative-design check ---------------------------------------------------

MAX_SUPEROP_DIM = 4**6


def choi(S: np.ndarray) -> np.ndarray:
    """Choi matrix of a superoperator acting on row-major vectorized d x d operators."""
    D = S.shape[0]
    d = math.isqrt(D)
    if d * d != D or S.shape != (D, D):
        raise ValueError("superoperator must be square of size d^2")
    return S.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(D, D)


def relative_design_check(A: np.ndarray, B: np.ndarray, eps: float, tol: float = 1e-9) -> bool:
    """(1 - eps) B <= A <= (1 + eps) B in the completely-positive order."""
    if A.shape != B.shape:
        raise ValueError("superoperators differ in shape")
    if A.shape[0] > MAX_SUPEROP_DIM:
        raise ResourceLimitError(f"Choi check limited to dimension {MAX_SUPEROP_DIM}")
    for X in ((1 + eps) * B - A, A - (1 - eps) * B):
        J = choi(X)
        J = (J + J.conj().T) / 2
        if np.linalg.eigvalsh(J)[0] < -tol:
            return False
    return True


def diamond_bound(norm2: float, t: int, n: int) -> float:
    """(dim H)^2 times the 2-norm, dim H = 2^{nt}; an upper bound on the diamond norm."""
    return math.ldexp(norm2, 2 * n * t) if norm2 else 0.0
