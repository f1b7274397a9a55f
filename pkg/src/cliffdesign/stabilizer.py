"""Independent oracles built from stabilizer tableaux and dense linear algebra.

A tableau lists the images of X_0..X_{n-1} and then Z_0..Z_{n-1} under
conjugation, each as a Hermitian Pauli (x, z, sign): the operator
(-1)^sign i^{|x & z|} X^x Z^z, with bit q of x and z referring to qubit q.
Qubit q is bit q of a computational basis index.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .commutant import gram
from .errors import ResourceLimitError
from .lagrangian import enumerate_sigma
from .moments import GateK, PAULI_X, PAULI_Y, PAULI_Z
from .operators import haar_symmetrizer, permutation_operator, r_of

MAX_DENSE_QUBITS = 5
MAX_PTM_QUBITS = 6
MAX_KERNEL_QUBITS = 32
MAX_SAMPLE_QUBITS = 64

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_CX = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
# CX on local qubits (0 = control, 1 = target); index bit 0 is the control

GATE_MATRICES = {"H": _H, "S": _S, "S3": _S.conj().T, "CX": _CX}
GATE_INVERSE = {"H": "H", "S": "S3", "S3": "S", "CX": "CX"}


def _pc(v: int) -> int:
    return int(v).bit_count()


def _check_qubits(n: int, limit: int) -> None:
    if not 1 <= n <= limit:
        raise ResourceLimitError(f"need 1 <= n <= {limit} qubits, got {n}")


# --- Pauli arithmetic -----------------------------------------------------------

def pauli_product(a: tuple[int, int, int], b: tuple[int, int, int]) -> tuple[int, int, int]:
    """(x, z, e) means i^e X^x Z^z."""
    x1, z1, e1 = a
    x2, z2, e2 = b
    return x1 ^ x2, z1 ^ z2, (e1 + e2 + 2 * _pc(z1 & x2)) % 4


def hermitian_to_phase(x: int, z: int, s: int) -> tuple[int, int, int]:
    return x, z, (2 * s + _pc(x & z)) % 4


def phase_to_hermitian(x: int, z: int, e: int) -> tuple[int, int, int]:
    d = (e - _pc(x & z)) % 4
    if d % 2:
        raise ValueError("Pauli is not Hermitian")
    return x, z, d // 2


def pauli_matrix(x: int, z: int, s: int, n: int) -> np.ndarray:
    d = 1 << n
    a = np.arange(d)
    ph = (_pc(x & z) + 2 * s + 2 * (np.bitwise_count(a & z) & 1)) % 4
    M = np.zeros((d, d), dtype=complex)
    M[a ^ x, a] = (1j) ** ph
    return M


def identify_pauli(M: np.ndarray, n: int, atol: float = 1e-9) -> tuple[int, int, int]:
    """Hermitian (x, z, s) with M = that Pauli; ValueError if M is not one."""
    x = int(np.argmax(np.abs(M[:, 0])))
    e = int(round(np.angle(M[x, 0]) / (np.pi / 2))) % 4
    z = 0
    for q in range(n):
        a = 1 << q
        if np.real(M[x ^ a, a] / M[x, 0]) < 0:
            z |= a
    x, z, s = phase_to_hermitian(x, z, e)
    if not np.allclose(M, pauli_matrix(x, z, s, n), atol=atol):
        raise ValueError("matrix is not a Hermitian Pauli")
    return x, z, s


# --- tableaux --------------------------------------------------------------------

@dataclass(frozen=True)
class Tableau:
    n: int
    x: tuple[int, ...]
    z: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.x) == len(self.z) == len(self.signs) == 2 * self.n):
            raise ValueError("tableau needs 2n rows")

    @classmethod
    def identity(cls, n: int) -> "Tableau":
        return cls(n, tuple(1 << j for j in range(n)) + (0,) * n,
                   (0,) * n + tuple(1 << j for j in range(n)), (0,) * (2 * n))

    @classmethod
    def from_packed(cls, n: int, rows, signs) -> "Tableau":
        mask = (1 << n) - 1
        rows = [int(r) for r in rows]
        return cls(n, tuple(r & mask for r in rows), tuple(r >> n for r in rows),
                   tuple(int(s) for s in signs))

    def packed(self) -> tuple[np.ndarray, np.ndarray]:
        _check_qubits(self.n, MAX_KERNEL_QUBITS)
        rows = np.array([x | (z << self.n) for x, z in zip(self.x, self.z)], dtype=np.uint64)
        return rows, np.array(self.signs, dtype=np.uint64)

    def rows(self):
        return zip(self.x, self.z, self.signs)

    def symplectic_form(self, i: int, j: int) -> int:
        return (_pc(self.x[i] & self.z[j]) + _pc(self.z[i] & self.x[j])) & 1

    def is_symplectic(self) -> bool:
        n = self.n
        for i in range(2 * n):
            for j in range(i + 1, 2 * n):
                want = 1 if j == i + n else 0
                if self.symplectic_form(i, j) != want:
                    return False
        return True

    def key(self) -> int:
        """Integer id of the Clifford (mod phase); equals the kernel key for n <= 32."""
        n = self.n
        key = 0
        for r, (x, z) in enumerate(zip(self.x, self.z)):
            key |= (x | (z << n)) << (2 * n * r)
        for r, s in enumerate(self.signs):
            key |= s << (4 * n * n + r)
        return key

    # conjugation by gates applied after this Clifford (AG update rules)
    def apply(self, gate: str, *qubits: int) -> "Tableau":
        x, z, s = list(self.x), list(self.z), list(self.signs)
        for r in range(2 * self.n):
            x[r], z[r], s[r] = _conjugate_row(x[r], z[r], s[r], gate, qubits)
        return Tableau(self.n, tuple(x), tuple(z), tuple(s))

    def apply_circuit(self, circuit) -> "Tableau":
        tab = self
        for gate, qubits in circuit:
            tab = tab.apply(gate, *qubits)
        return tab

    def image(self, x: int, z: int, e: int = 0) -> tuple[int, int, int]:
        """Image of i^e X^x Z^z in (x, z, e) form."""
        out = (0, 0, e)
        for q in range(self.n):
            if (x >> q) & 1:
                out = pauli_product(out, hermitian_to_phase(self.x[q], self.z[q], self.signs[q]))
        for q in range(self.n):
            if (z >> q) & 1:
                r = self.n + q
                out = pauli_product(out, hermitian_to_phase(self.x[r], self.z[r], self.signs[r]))
        return out

    def compose(self, other: "Tableau") -> "Tableau":
        """Tableau of U_self U_other (other acts first)."""
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        rows = [phase_to_hermitian(*self.image(*hermitian_to_phase(x, z, s)))
                for x, z, s in other.rows()]
        return Tableau(self.n, *map(tuple, zip(*rows)))

    def inverse(self) -> "Tableau":
        n = self.n
        # S^-1 = Omega S^T Omega, with row r of S the packed image of generator r
        packed = [x | (z << n) for x, z in zip(self.x, self.z)]
        swap = lambda v: (v >> n) | ((v & ((1 << n) - 1)) << n)
        cols = []
        for c in range(2 * n):
            src = swap(1 << c)
            col = 0
            for r in range(2 * n):
                if (packed[r] >> (src.bit_length() - 1)) & 1:
                    col |= 1 << r
            cols.append(swap(col))
        mask = (1 << n) - 1
        inv0 = Tableau(n, tuple(v & mask for v in cols), tuple(v >> n for v in cols), (0,) * (2 * n))
        check = self.compose(inv0)
        return Tableau(n, inv0.x, inv0.z, check.signs)

    def unitary(self) -> np.ndarray:
        return tableau_to_unitary(self)


def _conjugate_row(x: int, z: int, s: int, gate: str, qubits) -> tuple[int, int, int]:
    if gate in ("H", "S", "S3"):
        (q,) = qubits
        xq, zq = (x >> q) & 1, (z >> q) & 1
        if gate == "H":
            s ^= xq & zq
            x = (x & ~(1 << q)) | (zq << q)
            z = (z & ~(1 << q)) | (xq << q)
        elif gate == "S":
            s ^= xq & zq
            z ^= xq << q
        else:
            s ^= xq & (1 - zq)
            z ^= xq << q
    elif gate == "CX":
        c, t = qubits
        xc, zc, xt, zt = (x >> c) & 1, (z >> c) & 1, (x >> t) & 1, (z >> t) & 1
        s ^= xc & zt & (xt ^ zc ^ 1)
        x ^= xc << t
        z ^= zt << c
    else:
        raise ValueError(f"unknown gate {gate!r}")
    return x, z, s


def compose(a: Tableau, b: Tableau) -> Tableau:
    return a.compose(b)


def tableau_of_gate(gate: str, qubits, n: int) -> Tableau:
    return Tableau.identity(n).apply(gate, *qubits)


def sample_clifford(n: int, rng: np.random.Generator) -> Tableau:
    """Uniform Clifford (mod phase): a uniform symplectic basis plus uniform sign bits.

    Pairs (v_j, w_j) are drawn in turn: v_j uniform and nonzero in the symplectic
    complement of the earlier pairs, then w_j uniform there subject to
    <v_j, w_j> = 1.  Complement vectors come from the linear projection
    u -> u + sum_i (<u, w_i> v_i + <u, v_i> w_i) of a uniform u.
    """
    _check_qubits(n, MAX_SAMPLE_QUBITS)
    full = (1 << 2 * n) - 1

    def draw() -> int:
        return int.from_bytes(rng.bytes((2 * n + 7) // 8), "little") & full

    def form(u: int, v: int) -> int:
        m = (1 << n) - 1
        return (_pc((u & m) & (v >> n)) + _pc((u >> n) & (v & m))) & 1

    vs: list[int] = []
    ws: list[int] = []

    def project(u: int) -> int:
        for v, w in zip(vs, ws):
            a, b = form(u, w), form(u, v)
            if a:
                u ^= v
            if b:
                u ^= w
        return u

    for _ in range(n):
        v = 0
        while v == 0:
            v = project(draw())
        while True:
            w = project(draw())
            if form(v, w):
                break
        vs.append(v)
        ws.append(w)
    rows = vs + ws
    signs = rng.integers(0, 2, size=2 * n)
    return Tableau.from_packed(n, rows, signs)


def sample_cliffords_fast(n: int, count: int, seed: int, start: int = 0) -> list[Tableau]:
    """Same algorithm in the compiled kernel with counter-based streams (n <= 32)."""
    _check_qubits(n, MAX_KERNEL_QUBITS)
    rows, signs = _kernels.sample_tableaux(n, count, seed, start)
    return [Tableau.from_packed(n, r, s) for r, s in zip(rows, signs)]


# --- dense unitaries ------------------------------------------------------------

def embed(G: np.ndarray, qubits, n: int) -> np.ndarray:
    """The n-qubit matrix acting as G on ``qubits`` (qubits[i] is bit i of G's index)."""
    d = 1 << n
    k = len(qubits)
    a = np.arange(d)
    sub = np.zeros(d, dtype=np.intp)
    rest = a.copy()
    for i, q in enumerate(qubits):
        sub |= ((a >> q) & 1) << i
        rest &= ~(1 << q)
    out = np.zeros((d, d), dtype=complex)
    for b_sub in range(1 << k):
        b = rest.copy()
        for i, q in enumerate(qubits):
            b |= ((b_sub >> i) & 1) << q
        out[b, a] = G[b_sub, sub]
    return out


def gate_unitary(gate: str, qubits, n: int) -> np.ndarray:
    return embed(GATE_MATRICES[gate], qubits, n)


def circuit_unitary(circuit, n: int) -> np.ndarray:
    _check_qubits(n, MAX_DENSE_QUBITS)
    U = np.eye(1 << n, dtype=complex)
    for gate, qubits in circuit:
        U = gate_unitary(gate, qubits, n) @ U
    return U


def tableau_to_unitary(tab: Tableau) -> np.ndarray:
    """Dense U (up to global phase) with U P U^dag given by the tableau rows.

    U|0> is the stabilizer state of the Z-images; U|x> = prod_j P_j^{x_j} U|0>
    with P_j the X-images.
    """
    n = tab.n
    _check_qubits(n, MAX_DENSE_QUBITS)
    d = 1 << n
    psi = None
    for b in range(d):
        v = np.zeros(d, dtype=complex)
        v[b] = 1
        for j in range(n):
            r = n + j
            v = 0.5 * (v + pauli_matrix(tab.x[r], tab.z[r], tab.signs[r], n) @ v)
        if np.vdot(v, v).real > 0.5 / d:
            psi = v / np.linalg.norm(v)
            break
    X = [pauli_matrix(tab.x[j], tab.z[j], tab.signs[j], n) for j in range(n)]
    U = np.zeros((d, d), dtype=complex)
    U[:, 0] = psi
    for x in range(1, d):
        j = (x & -x).bit_length() - 1
        U[:, x] = X[j] @ U[:, x & (x - 1)]
    return U


def unitary_to_tableau(U: np.ndarray) -> Tableau:
    d = U.shape[0]
    n = d.bit_length() - 1
    if 1 << n != d:
        raise ValueError("dimension is not a power of two")
    rows = []
    for gen in [(1 << j, 0) for j in range(n)] + [(0, 1 << j) for j in range(n)]:
        P = pauli_matrix(gen[0], gen[1], 0, n)
        rows.append(identify_pauli(U @ P @ U.conj().T, n))
    return Tableau(n, *map(tuple, zip(*rows)))


def equal_up_to_phase(A: np.ndarray, B: np.ndarray, atol: float = 1e-9) -> bool:
    k = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    if abs(A[k]) < atol:
        return False
    return np.allclose(A * (B[k] / A[k]), B, atol=atol)


def tableau_to_circuit(tab: Tableau) -> list[tuple[str, tuple[int, ...]]]:
    """Gate list over {H, S, S3, CX} implementing the tableau (first gate acts first).

    Gates are appended on the left until every row is +-X_j or +-Z_j, qubit by
    qubit; Pauli corrections finish the reduction and the inverse list is
    returned.
    """
    n = tab.n
    ops: list[tuple[str, tuple[int, ...]]] = []
    cur = tab

    def do(gate, *qs):
        nonlocal cur
        ops.append((gate, qs))
        cur = cur.apply(gate, *qs)

    for j in range(n):
        # X-image: move an X/Y onto qubit j, clear other X parts, then other Z parts
        x, z = cur.x[j], cur.z[j]
        if not x >> j:
            k = next(q for q in range(j, n) if (z >> q) & 1)
            do("H", k)
        x = cur.x[j]
        if not (x >> j) & 1:
            k = next(q for q in range(j + 1, n) if (x >> q) & 1)
            do("CX", k, j)
        for q in range(j + 1, n):
            if (cur.x[j] >> q) & 1:
                do("CX", j, q)
        if (cur.z[j] >> j) & 1:
            do("S", j)
        for q in range(j + 1, n):
            if (cur.z[j] >> q) & 1:
                do("H", q)
                do("CX", j, q)
                do("H", q)
        # Z-image: make qubit j a Z, then clear the rest without touching X_j
        r = n + j
        if (cur.x[r] >> j) & 1:
            do("H", j)
            do("S", j)
            do("H", j)
        for q in range(j + 1, n):
            xq, zq = (cur.x[r] >> q) & 1, (cur.z[r] >> q) & 1
            if xq and zq:
                do("S", q)
            if xq:
                do("H", q)
        for q in range(j + 1, n):
            if (cur.z[r] >> q) & 1:
                do("CX", q, j)
    for j in range(n):
        if cur.signs[j]:
            do("S", j)
            do("S", j)
        if cur.signs[n + j]:
            for g in ("H", "S", "S", "H"):
                do(g, j)
    if cur != Tableau.identity(n):
        raise RuntimeError("tableau reduction did not reach the identity")
    return [(GATE_INVERSE[g], qs) for g, qs in reversed(ops)]


# --- single-qubit group and exact moment operators ------------------------------

def _phase_normalize(U: np.ndarray) -> np.ndarray:
    flat = U.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    return U * (abs(flat[k]) / flat[k])


@lru_cache(maxsize=None)
def clifford_group_1q() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Cliffords mod phase, by closure of {H, S}."""
    seen: dict[bytes, np.ndarray] = {}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        nxt = []
        for U in frontier:
            V = _phase_normalize(U)
            key = (np.round(V, 8) + 0.0).tobytes()
            if key in seen:
                continue
            seen[key] = V
            nxt += [_H @ V, _S @ V]
        frontier = nxt
    return tuple(seen.values())


def moment_superoperator(unitaries, t: int) -> np.ndarray:
    """Average of U^{(x)t} (x) conj(U)^{(x)t}: the moment map on row-major vectorized operators."""
    D = unitaries[0].shape[0] ** t
    out = np.zeros((D * D, D * D), dtype=complex)
    for U in unitaries:
        Ut = np.ones((1, 1), dtype=complex)
        for _ in range(t):
            Ut = np.kron(Ut, U)
        out += np.kron(Ut, Ut.conj())
    return out / len(unitaries)


def copy_major_permutation(t: int, n: int) -> np.ndarray:
    """perm[i] = copy-major index of site-major index i.

    Site-major puts site q's t copies on bits q t .. q t + t - 1 (the layout of
    r(T)^{(x)n}); copy-major puts copy c on bits c n .. c n + n - 1 (the layout of
    U^{(x)t}).
    """
    N = n * t
    idx = np.arange(1 << N)
    out = np.zeros_like(idx)
    for q in range(n):
        for c in range(t):
            out |= ((idx >> (q * t + c)) & 1) << (c * n + q)
    return out


def commutant_vectors(t: int, n: int) -> np.ndarray:
    """Rows: row-major vec of Q_T^{(x)n} in the copy-major layout, T over Sigma_{t,t}."""
    N = n * t
    _check_qubits(N, MAX_PTM_QUBITS)
    perm = copy_major_permutation(t, n)
    vecs = []
    for T in enumerate_sigma(t):
        q = r_of(T) * 2.0 ** (-t / 2)
        A = np.ones((1, 1))
        for _ in range(n):
            A = np.kron(q, A)
        B = np.zeros_like(A)
        B[np.ix_(perm, perm)] = A
        vecs.append(B.reshape(-1))
    return np.array(vecs)


def dense_moment_operator(measure: str, t: int) -> np.ndarray:
    """Delta_t as a dense superoperator for 'clifford1', 'haar1' or 'clifford2'.

    'clifford1' sums the 24 group elements.  'clifford2' projects onto the span
    of the Q_T^{(x)2} through the inverse Gram matrix instead of summing 11520
    elements.
    """
    if measure == "clifford1":
        if 2 * t > 2 * MAX_PTM_QUBITS:
            raise ResourceLimitError("superoperator too large")
        return moment_superoperator(clifford_group_1q(), t)
    if measure == "haar1":
        return haar_symmetrizer(t).superoperator().astype(complex)
    if measure == "clifford2":
        V = commutant_vectors(t, 2)
        G = V.conj() @ V.T
        return (V.T @ np.linalg.inv(G) @ V.conj()).astype(complex)
    raise ValueError(f"unknown measure {measure!r}")


# --- gate sets, local walks -------------------------------------------------------

@dataclass(frozen=True)
class GateSet:
    """Named 1- or 2-qubit Cliffords; a 2-qubit gate acts on (i, i+1 mod n)."""

    names: tuple[str, ...]
    matrices: tuple[np.ndarray, ...]

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(m.shape[0].bit_length() - 1 for m in self.matrices)

    def tables(self) -> np.ndarray:
        """(gates, 16, 2) Pauli tables; single-qubit tables use the first 4 rows."""
        out = np.zeros((len(self.matrices), 16, 2), dtype=np.int64)
        for i, m in enumerate(self.matrices):
            tb = pauli_table(m)
            out[i, :len(tb)] = tb
        return out

    def is_closed(self) -> bool:
        tabs = [unitary_to_tableau(m) if m.shape[0] == 4 else
                unitary_to_tableau(np.kron(np.eye(2), m)) for m in self.matrices]
        return all(t.inverse() in tabs for t in tabs)

    def require_closed(self) -> None:
        if not self.is_closed():
            raise ValueError("gate set is not closed under inverses")


def canonical_gate_set(n: int = 2) -> GateSet:
    """{H (x) 1, S (x) 1, S^3 (x) 1, CX}; the CX is dropped for a single qubit."""
    names = ("H", "S", "S3", "CX") if n > 1 else ("H", "S", "S3")
    return GateSet(names, tuple(GATE_MATRICES[g] for g in names))


def gate_set(names) -> GateSet:
    return GateSet(tuple(names), tuple(GATE_MATRICES[g] for g in names))


def pauli_table(G: np.ndarray) -> np.ndarray:
    """table[p] = (image index, sign flip) for the local Hermitian Paulis under Ad_G.

    Local index p = x-bits | z-bits << k for a k-qubit gate.
    """
    k = G.shape[0].bit_length() - 1
    out = np.zeros((4**k, 2), dtype=np.int64)
    for p in range(4**k):
        x, z = p & ((1 << k) - 1), p >> k
        P = pauli_matrix(x, z, 0, k)
        xi, zi, s = identify_pauli(G @ P @ G.conj().T, k)
        out[p] = (xi | (zi << k), s)
    return out


def local_walk_step(tab: Tableau, gates: GateSet, rng: np.random.Generator) -> Tableau:
    """Apply one uniformly chosen gate at a uniformly chosen site (periodic boundary)."""
    gates.require_closed()
    g = int(rng.integers(len(gates.names)))
    i = int(rng.integers(tab.n))
    name, arity = gates.names[g], gates.arities[g]
    if arity == 2:
        if tab.n < 2:
            raise ValueError("two-qubit gate on a single qubit")
        return tab.apply(name, i, (i + 1) % tab.n)
    return tab.apply(name, i)


def walk_census(n: int, steps: int, seed: int, gates: GateSet | None = None) -> np.ndarray:
    """Visit counts per class (indexed by Tableau.key) for one walk from the identity."""
    _check_qubits(n, 2)
    gates = canonical_gate_set(n) if gates is None else gates
    gates.require_closed()
    if n == 1 and max(gates.arities) > 1:
        raise ValueError("two-qubit gates need n >= 2")
    return _kernels.walk_census(n, gates.tables(), np.array(gates.arities), steps, seed)


def clifford_count(n: int) -> int:
    """|Cl(n)| mod phases: 2^{n^2 + 2n} prod (4^j - 1)."""
    return 2 ** (n * n + 2 * n) * math.prod(4**j - 1 for j in range(1, n + 1))


# --- Pauli transfer matrices and the walk Hamiltonian ---------------------------

def pauli_basis_arrays(N: int):
    """x, z bitmasks of the Pauli basis; index p = x | z << N."""
    p = np.arange(4**N, dtype=np.uint64)
    mask = np.uint64((1 << N) - 1)
    return p & mask, p >> np.uint64(N)


def clifford_ptm(table: np.ndarray, arity: int, sites, N: int) -> sp.csr_matrix:
    """Real signed-permutation PTM of a local Clifford applied at each (q0, q1) in ``sites``."""
    x, z = pauli_basis_arrays(N)
    s = np.zeros_like(x)
    for q in sites:
        x, z, s = _kernels.conjugate_paulis(x, z, s, table, arity, *q)
    rows = (x | (z << np.uint64(N))).astype(np.intp)
    vals = 1.0 - 2.0 * s.astype(float)
    cols = np.arange(4**N)
    return sp.csr_matrix((vals, (rows, cols)), shape=(4**N, 4**N))


def single_qubit_ptm(K: np.ndarray) -> np.ndarray:
    """4 x 4 real PTM in the local order (I, X, Z, Y) = index x | z << 1."""
    P = [np.eye(2), PAULI_X, PAULI_Z, PAULI_Y]
    return np.array([[np.trace(P[a] @ K @ P[b] @ K.conj().T).real / 2 for b in range(4)]
                     for a in range(4)])


def product_ptm(local: dict[int, np.ndarray], N: int) -> np.ndarray:
    """Dense PTM of a product of single-qubit channels given by their 4x4 PTMs."""
    M = np.ones((1, 1))
    for q in range(N - 1, -1, -1):
        M = np.kron(M, local.get(q, np.eye(4)))
    # M is in the qubit-interleaved order sum_q (x_q | z_q << 1) << 2q
    x, z = pauli_basis_arrays(N)
    inter = np.zeros(4**N, dtype=np.intp)
    for q in range(N):
        inter |= (((x >> np.uint64(q)) & np.uint64(1)) << np.uint64(2 * q)).astype(np.intp)
        inter |= (((z >> np.uint64(q)) & np.uint64(1)) << np.uint64(2 * q + 1)).astype(np.intp)
    return M[np.ix_(inter, inter)]


def operator_to_pauli(A: np.ndarray) -> np.ndarray:
    """Coefficients tr(P_p A) / sqrt(d) in the orthonormal Hermitian Pauli basis."""
    d = A.shape[0]
    N = d.bit_length() - 1
    c = np.arange(d)
    Hd = 1.0 - 2.0 * (np.bitwise_count(c[:, None] & c[None, :]) & 1)
    B = np.array([A[c, c ^ x] for x in range(d)])  # B[x, c] = A[c, c ^ x]
    F = B @ Hd  # F[x, z] = sum_c (-1)^{z.c} A[c, c ^ x]
    xs = c[:, None]
    zs = c[None, :]
    F = F * (1j) ** (np.bitwise_count(xs & zs) % 4)
    out = np.zeros(d * d, dtype=complex)
    out[(xs | (zs << N)).reshape(-1)] = F.reshape(-1)
    return out / np.sqrt(d)


@dataclass(frozen=True)
class WalkHamiltonian:
    t: int
    n: int
    matrix: np.ndarray  # H_{n,t} in the Pauli basis of the n t qubits (copy-major)
    local_terms: tuple[sp.csr_matrix, ...]

    @property
    def qubits(self) -> int:
        return self.n * self.t


def _walk_sites(t: int, n: int, arity: int, i: int):
    j = (i + 1) % n
    if arity == 2:
        return [(c * n + i, c * n + j) for c in range(t)]
    return [(c * n + i,) for c in range(t)]


def walk_hamiltonian(t: int, n: int, gates: GateSet | None = None) -> WalkHamiltonian:
    """H_{n,t} = sum_i h_{i,i+1}, h = mean over g in G of (id - Ad(g^{(x)t})), as a real PTM."""
    N = n * t
    _check_qubits(N, MAX_PTM_QUBITS)
    gates = canonical_gate_set(n) if gates is None else gates
    gates.require_closed()
    tables = gates.tables()
    I = sp.identity(4**N, format="csr")
    terms = []
    for i in range(n):
        h = sp.csr_matrix((4**N, 4**N))
        for table, arity in zip(tables, gates.arities):
            if arity == 2 and n < 2:
                raise ValueError("two-qubit gate on a single qubit")
            h = h + (I - clifford_ptm(table, arity, _walk_sites(t, n, arity, i), N))
        terms.append(h / len(tables))
    H = sum(terms[1:], terms[0]).toarray()
    return WalkHamiltonian(t, n, H, tuple(terms))


def walk_moment_operator(t: int, n: int, gates: GateSet | None = None) -> np.ndarray:
    """Delta_t(sigma_G) in the Pauli basis, averaged over all gate placements."""
    N = n * t
    _check_qubits(N, MAX_PTM_QUBITS)
    gates = canonical_gate_set(n) if gates is None else gates
    tables = gates.tables()
    out = np.zeros((4**N, 4**N))
    for i in range(n):
        for table, arity in zip(tables, gates.arities):
            out += clifford_ptm(table, arity, _walk_sites(t, n, arity, i), N).toarray()
    return out / (n * len(tables))


@dataclass(frozen=True)
class GapResult:
    gap: float
    ground_dim: int
    ground_energy: float
    lambda2: float
    eigenvalues: np.ndarray
    ground_vectors: np.ndarray


GROUND_TOL = 1e-8


def hamiltonian_gap(t: int, n: int, gates: GateSet | None = None) -> GapResult:
    """Dense eigensolve of H_{n,t}; lambda2 comes from an independent solve of Delta_t(sigma_G)."""
    H = walk_hamiltonian(t, n, gates)
    ev, vecs = np.linalg.eigh(H.matrix)
    ground = int(np.count_nonzero(ev < GROUND_TOL))
    delta = np.linalg.eigvalsh(walk_moment_operator(t, n, gates))[::-1]
    return GapResult(float(ev[ground]), ground, float(ev[0]), float(delta[ground]), ev,
                     vecs[:, :ground])


def projector_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Operator-norm distance between the projectors onto the column spans of A and B."""
    def proj(M):
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        U = U[:, s > 1e-9 * s[0]]
        return U @ U.conj().T
    return float(np.linalg.norm(proj(A) - proj(B), 2))


def commutant_pauli_vectors(t: int, n: int) -> np.ndarray:
    """Columns: Pauli coefficients of r(T)^{(x)n} in the copy-major layout."""
    d = 1 << (n * t)
    V = commutant_vectors(t, n)
    return np.array([operator_to_pauli(v.reshape(d, d)) for v in V]).T


def permutation_pauli_vectors(t: int, n: int) -> np.ndarray:
    """Columns: Pauli coefficients of the t! copy permutations on n t qubits."""
    import itertools
    d = 1 << (n * t)
    cols = []
    idx = np.arange(d)
    for perm in itertools.permutations(range(t)):
        target = np.zeros_like(idx)
        for c in range(t):
            block = (idx >> (c * n)) & ((1 << n) - 1)
            target |= block << (perm[c] * n)
        A = np.zeros((d, d))
        A[target, idx] = 1.0
        cols.append(operator_to_pauli(A))
    return np.array(cols).T


# --- dense oracles for the convergence norm --------------------------------------

def _orthonormal_columns(V: np.ndarray) -> np.ndarray:
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    return U[:, s > 1e-9 * s[0]]


def dense_interleaved_norms(t: int, n: int, K: GateK, ks, include_identity: bool = True) -> dict:
    """||[(P_Cl - P_H) R]^k||_2 with full superoperators on n t qubits (n t <= 6).

    P_Cl is the fixed space of the local walk operator, P_H the span of the copy
    permutations and R the Pauli transfer matrix of the K-channel on qubit 0 of
    each copy; nothing here goes through Sigma_{t,t}.
    """
    N = n * t
    _check_qubits(N, MAX_PTM_QUBITS)
    ev, vecs = np.linalg.eigh(walk_moment_operator(t, n))
    fixed = vecs[:, ev > 1 - 1e-9]
    P_cl = fixed @ fixed.T
    Bh = _orthonormal_columns(permutation_pauli_vectors(t, n))
    P_h = (Bh @ Bh.conj().T).real
    ptm_k, ptm_kd = single_qubit_ptm(K.matrix), single_qubit_ptm(K.matrix.conj().T)
    sites = [c * n for c in range(t)]
    R = product_ptm({q: ptm_k for q in sites}, N) + product_ptm({q: ptm_kd for q in sites}, N)
    if include_identity:
        R = (R + np.eye(4**N)) / 3
    else:
        R = R / 2
    X = (P_cl - P_h) @ R
    out = {}
    Xk = np.eye(4**N)
    for k in range(1, max(ks) + 1):
        Xk = X @ Xk
        if k in ks:
            out[k] = float(np.linalg.norm(Xk))
    return {"norms": out, "clifford_rank": fixed.shape[1], "haar_rank": Bh.shape[1]}


def _sparse_site_operator(T, n: int, perm: np.ndarray) -> sp.csr_matrix:
    r = sp.csr_matrix(r_of(T) * 2.0 ** (-T.t / 2))
    A = r
    for _ in range(n - 1):
        A = sp.kron(r, A, format="csr")
    A = A.tocoo()
    d = A.shape[0]
    return sp.csr_matrix((A.data, (perm[A.row], perm[A.col])), shape=(d, d))


def _sparse_copies(K: np.ndarray, t: int, n: int) -> sp.csr_matrix:
    """K on qubit 0 of every copy (copy-major), identity elsewhere."""
    N = n * t
    out = sp.identity(1, format="csr", dtype=complex)
    for q in range(N - 1, -1, -1):
        f = sp.csr_matrix(K) if q % n == 0 else sp.identity(2, format="csr", dtype=complex)
        out = sp.kron(out, f, format="csr")
    return out


def full_space_interleaved_model(t: int, n: int, K: GateK, include_identity: bool = True) -> dict:
    """Gram, M_R and M_RR from the full 2^{nt}-dimensional operators Q_T^{(x)n}.

    Operators are sparse; the K-channel is applied by conjugation.  No
    single-site factorization and no intersection dimensions are used.
    """
    N = n * t
    if N > 14:
        raise ResourceLimitError("full-space oracle limited to 14 qubits")
    perm = copy_major_permutation(t, n)
    ops = [_sparse_site_operator(T, n, perm) for T in enumerate_sigma(t)]
    Us = [_sparse_copies(K.matrix, t, n), _sparse_copies(K.matrix.conj().T, t, n)]

    def channel(A):
        terms = [U @ A @ U.conj().T for U in Us]
        if include_identity:
            terms.append(A)
        return sum(terms[1:], terms[0]) / len(terms)

    def inner(A, B):
        return complex(A.conj().multiply(B).sum())

    images = [channel(A) for A in ops]
    m = len(ops)
    Gm = np.zeros((m, m))
    MR = np.zeros((m, m), dtype=complex)
    MRR = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            Gm[i, j] = inner(ops[i], ops[j]).real
            MR[i, j] = inner(ops[i], images[j])
            MRR[i, j] = inner(images[i], images[j])
    return {"gram": Gm, "M_R": MR, "M_RR": MRR}


def full_space_convergence_norm(t: int, n: int, K: GateK, k: int, include_identity: bool = True) -> float:
    """convergence_norm rebuilt from full_space_interleaved_model with a Cholesky basis."""
    from .moments import complement_basis
    data = full_space_interleaved_model(t, n, K, include_identity)
    p = math.factorial(t)
    W = complement_basis(data["gram"], p, method="gram_schmidt")
    if W.shape[1] == 0:
        return 0.0
    M = W.conj().T @ data["M_R"] @ W
    G = W.conj().T @ data["M_RR"] @ W
    Mk = np.linalg.matrix_power(M, k - 1)
    return float(np.sqrt(max(np.trace(Mk @ G @ Mk.conj().T).real, 0.0)))


# --- Monte Carlo frame potentials --------------------------------------------------

@dataclass(frozen=True)
class FrameEstimate:
    mean: np.ndarray  # indexed by k
    stderr: np.ndarray
    samples: int
    block: int

    def as_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "stderr": self.stderr.tolist(),
                "samples": self.samples, "block": self.block}


def jackknife(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and delete-one jackknife standard error along axis 0."""
    v = np.asarray(values, dtype=float)
    m = v.shape[0]
    if m < 2:
        raise ValueError("jackknife needs at least two values")
    total = v.sum(axis=0)
    loo = (total - v) / (m - 1)
    mean = total / m
    se = np.sqrt((m - 1) / m * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return mean, se


def _threads(threads: int | None) -> int:
    return max(1, threads if threads else (os.cpu_count() or 1))


def _run_blocks(fn, blocks: int, threads: int | None, chunk: int = 64) -> np.ndarray:
    """Evaluate fn(first_block, count) over fixed chunks; output order never depends on threads."""
    spans = [(b, min(chunk, blocks - b)) for b in range(0, blocks, chunk)]
    workers = _threads(threads)
    if workers == 1 or len(spans) == 1:
        parts = [fn(b, c) for b, c in spans]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda s: fn(*s), spans))
    return np.concatenate(parts, axis=0)


def interleaved_circuit_mc(t: int, n: int, K: GateK | None, k_max: int, samples: int, seed: int,
                           block: int = 32, pauli_average: bool = True,
                           threads: int | None = None) -> FrameEstimate:
    """Frame potentials of mu_Cl * (xi_K * mu_Cl)^k for k = 0..k_max.

    ``samples`` circuits are drawn for each side of the pair.  Samples are
    grouped in independent blocks and every cross pair inside a block is
    evaluated; the jackknife runs over blocks.  K = None gives the pure
    Clifford measure.
    """
    _check_qubits(n, MAX_DENSE_QUBITS)
    if samples % block:
        raise ValueError("samples must be a multiple of block")
    if K is None:
        gates = np.eye(2, dtype=complex)[None]
    else:
        gates = np.array([K.matrix, K.matrix.conj().T, np.eye(2)])
    blocks = samples // block
    if blocks < 2:
        raise ValueError("need at least two blocks")
    vals = _run_blocks(lambda b, c: _kernels.frame_potential_blocks(
        n, t, k_max, gates, seed, b, c, block, pauli_average), blocks, threads)
    mean, se = jackknife(vals)
    return FrameEstimate(mean, se, samples, block)


def haar_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diagonal(R, axis1=1, axis2=2)
    return Q * (ph / np.abs(ph))[:, None, :]


def frame_potential_mc(t: int, n: int, family: str, samples: int, seed: int,
                       K: GateK | None = None, k: int = 0, block: int = 32,
                       threads: int | None = None) -> tuple[float, float]:
    """(estimate, stderr) of E |tr(U^dag V)|^{2t} for 'haar', 'clifford' or 'interleaved'."""
    _check_qubits(n, MAX_DENSE_QUBITS)
    if family == "haar":
        rng = np.random.Generator(np.random.Philox(seed))
        d = 1 << n
        vals = []
        for start in range(0, samples, 4096):
            c = min(4096, samples - start)
            U = haar_unitaries(d, c, rng)
            V = haar_unitaries(d, c, rng)
            tr = np.einsum("sab,sab->s", U.conj(), V)
            vals.append(np.abs(tr) ** (2 * t))
        mean, se = jackknife(np.concatenate(vals))
        return float(mean), float(se)
    if family == "clifford":
        est = interleaved_circuit_mc(t, n, None, 0, samples, seed, block, threads=threads)
        return float(est.mean[0]), float(est.stderr[0])
    if family == "interleaved":
        if K is None:
            raise ValueError("interleaved family needs a gate")
        est = interleaved_circuit_mc(t, n, K, k, samples, seed, block, threads=threads)
        return float(est.mean[k]), float(est.stderr[k])
    raise ValueError(f"unknown family {family!r}")


def gram_rank(t: int, n: int) -> int:
    return gram(t, n).rank


def walk_gap_report(t: int, n: int) -> dict:
    res = hamiltonian_gap(t, n)
    return {"t": t, "n": n, "gap": res.gap, "ground_dim": res.ground_dim,
            "ground_energy": res.ground_energy, "lambda2": res.lambda2,
            "one_minus_gap_over_n": 1 - res.gap / n, "gram_rank": gram_rank(t, n)}
