"""Hot loops, compiled with numba unless CLIFFDESIGN_NO_NUMBA is set.

Each kernel has a loop form (compiled by numba) and a numpy form; ``BACKEND``
records which one the public names point at.  Both forms return identical
values; the benchmark script compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("CLIFFDESIGN_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

if _DISABLED:
    numba = None
else:
    import numba

BACKEND = "python" if numba is None else "numba"


def njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


@njit
def _popcount(v):
    c = 0
    while v:
        v &= v - np.uint64(1)
        c += 1
    return c


# --- rank of unions, for pairwise intersection dimensions -------------------

@njit
def _union_rank_loop(rows_a, rows_b, width):
    basis = np.zeros(width, dtype=np.uint64)
    r = 0
    for src in (rows_a, rows_b):
        for k in range(src.shape[0]):
            v = src[k]
            for bit in range(width - 1, -1, -1):
                if (v >> np.uint64(bit)) & np.uint64(1):
                    if basis[bit] == 0:
                        basis[bit] = v
                        r += 1
                        break
                    v ^= basis[bit]
    return r


@njit
def _pairwise_union_rank_loop(bases, width):
    m = bases.shape[0]
    out = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        for j in range(i, m):
            r = _union_rank_loop(bases[i], bases[j], width)
            out[i, j] = r
            out[j, i] = r
    return out


def _pairwise_union_rank_numpy(bases, width):
    m, d = bases.shape
    ii, jj = np.triu_indices(m)
    vecs = np.concatenate([bases[ii], bases[jj]], axis=1)
    P = vecs.shape[0]
    basis = np.zeros((P, width), dtype=np.uint64)
    ranks = np.zeros(P, dtype=np.int64)
    rows = np.arange(P)
    one = np.uint64(1)
    for k in range(vecs.shape[1]):
        v = vecs[:, k].copy()
        active = np.ones(P, dtype=bool)
        for bit in range(width - 1, -1, -1):
            has = ((v >> np.uint64(bit)) & one).astype(bool) & active
            empty = basis[:, bit] == 0
            place = has & empty
            basis[rows[place], bit] = v[place]
            ranks += place
            active &= ~place
            clear = has & ~empty
            v[clear] ^= basis[clear, bit]
    out = np.zeros((m, m), dtype=np.int64)
    out[ii, jj] = ranks
    out[jj, ii] = ranks
    return out


def pairwise_union_rank(bases: np.ndarray, width: int) -> np.ndarray:
    """rank(B_i u B_j) for every pair of rows of a (m, d) uint64 basis array."""
    bases = np.ascontiguousarray(bases, dtype=np.uint64)
    if numba is None:
        return _pairwise_union_rank_numpy(bases, width)
    return _pairwise_union_rank_loop(bases, width)


# --- weight preservation counts ---------------------------------------------

@njit
def _preserve_count_loop(columns, t):
    count = 0
    for y in range(1 << t):
        img = np.uint64(0)
        for j in range(t):
            if (y >> j) & 1:
                img ^= columns[j]
        if _popcount(img) == _popcount(np.uint64(y)):
            count += 1
    return count


def _preserve_count_numpy(columns, t):
    ys = np.arange(1 << t, dtype=np.uint64)
    img = np.zeros_like(ys)
    for j in range(t):
        bit = (ys >> np.uint64(j)) & np.uint64(1)
        img ^= bit * columns[j]
    return int(np.count_nonzero(np.bitwise_count(img) == np.bitwise_count(ys)))


def preserve_count(columns, t: int) -> int:
    """|{y in F2^t : h(Oy) = h(y)}| for O given by its columns."""
    columns = np.asarray(columns, dtype=np.uint64)
    if numba is None:
        return _preserve_count_numpy(columns, t)
    return int(_preserve_count_loop(columns, t))


@njit
def _shift_count_loop(elements, shift):
    count = 0
    for k in range(elements.shape[0]):
        if _popcount(elements[k]) == _popcount(elements[k] ^ shift):
            count += 1
    return count


def _shift_count_numpy(elements, shift):
    return int(np.count_nonzero(np.bitwise_count(elements) == np.bitwise_count(elements ^ shift)))


def shift_count(elements, shift: int) -> int:
    """|{x in elements : h(x) = h(x + shift)}|."""
    elements = np.asarray(elements, dtype=np.uint64)
    if numba is None:
        return _shift_count_numpy(elements, np.uint64(shift))
    return int(_shift_count_loop(elements, np.uint64(shift)))


def span_array(basis, dtype=np.uint64) -> np.ndarray:
    """All 2^d elements of span(basis); entry i is the combination with coefficient bits i."""
    out = np.zeros(1, dtype=dtype)
    for b in basis:
        out = np.concatenate([out, out ^ dtype(b)])
    return out


def popcount_array(values) -> np.ndarray:
    return np.bitwise_count(np.asarray(values, dtype=np.uint64)).astype(np.int64)


# --- counter-based random streams (splitmix64) -------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1342543DE82EF95)


@njit
def _next(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return state, z ^ (z >> np.uint64(31))


@njit
def _stream(seed, index):
    """Initial state of the stream for one sample; depends only on (seed, index)."""
    _, v = _next(seed ^ (np.uint64(index) * _STREAM))
    return v


# --- packed Clifford tableaux, n <= 32 ---------------------------------------
# Row j (< n) is the image of X_j, row n + j the image of Z_j, each packed as
# x | (z << n); signs are the Hermitian sign bits.

_PHASES = np.array([1, 1j, -1, -1j], dtype=np.complex128)


@njit
def _symp(u, v, n):
    mask = (np.uint64(1) << np.uint64(n)) - np.uint64(1)
    nn = np.uint64(n)
    return _popcount(((u & mask) & (v >> nn)) ^ ((u >> nn) & (v & mask))) & 1


@njit
def _project(u, rows, j, n):
    """Project u onto the symplectic complement of the first j (X, Z) pairs."""
    for i in range(j):
        a = _symp(u, rows[n + i], n)
        b = _symp(u, rows[i], n)
        if a:
            u ^= rows[i]
        if b:
            u ^= rows[n + i]
    return u


@njit
def _sample_tableau(n, state, rows, signs):
    if 2 * n == 64:
        full = ~np.uint64(0)
    else:
        full = (np.uint64(1) << np.uint64(2 * n)) - np.uint64(1)
    for j in range(n):
        while True:
            state, u = _next(state)
            v = _project(u & full, rows, j, n)
            if v != 0:
                break
        while True:
            state, u = _next(state)
            w = _project(u & full, rows, j, n)
            if _symp(v, w, n) == 1:
                break
        rows[j] = v
        rows[n + j] = w
    state, bits = _next(state)
    for j in range(2 * n):
        signs[j] = (bits >> np.uint64(j)) & np.uint64(1)
    return state


@njit
def _pauli_apply(x, z, s, vec, out):
    base = _popcount(x & z) + 2 * s
    for a in range(vec.shape[0]):
        ph = (base + 2 * _popcount(z & np.uint64(a))) & 3
        out[np.uint64(a) ^ x] = _PHASES[ph] * vec[a]


@njit
def _tableau_unitary(n, rows, signs, cols):
    """cols[x, :] = U|x>, up to a global phase."""
    d = 1 << n
    mask = (np.uint64(1) << np.uint64(n)) - np.uint64(1)
    nn = np.uint64(n)
    psi = np.zeros(d, dtype=np.complex128)
    tmp = np.zeros(d, dtype=np.complex128)
    nrm = 0.0
    for b in range(d):
        psi[:] = 0
        psi[b] = 1
        for j in range(n):
            q = rows[n + j]
            _pauli_apply(q & mask, q >> nn, signs[n + j], psi, tmp)
            for a in range(d):
                psi[a] = 0.5 * (psi[a] + tmp[a])
        nrm = 0.0
        for a in range(d):
            nrm += psi[a].real ** 2 + psi[a].imag ** 2
        if nrm > 0.5 / d:
            break
    scale = 1.0 / np.sqrt(nrm)
    for a in range(d):
        cols[0, a] = psi[a] * scale
    for x in range(1, d):
        j = 0
        while not (x >> j) & 1:
            j += 1
        p = rows[j]
        _pauli_apply(p & mask, p >> nn, signs[j], cols[x & (x - 1)], cols[x])


@njit
def _random_clifford_unitary(n, state, rows, signs, cols, U):
    state = _sample_tableau(n, state, rows, signs)
    _tableau_unitary(n, rows, signs, cols)
    d = 1 << n
    for a in range(d):
        for b in range(d):
            U[a, b] = cols[b, a]
    return state


@njit
def _left_multiply(C, W, tmp):
    d = W.shape[0]
    for a in range(d):
        for b in range(d):
            acc = 0j
            for c in range(d):
                acc += C[a, c] * W[c, b]
            tmp[a, b] = acc
    W[:, :] = tmp


@njit
def _apply_site0(K, W):
    """W <- (K on qubit 0) W."""
    d = W.shape[0]
    for a in range(0, d, 2):
        for b in range(d):
            u0 = W[a, b]
            u1 = W[a + 1, b]
            W[a, b] = K[0, 0] * u0 + K[0, 1] * u1
            W[a + 1, b] = K[1, 0] * u0 + K[1, 1] * u1


@njit
def _trace_power(U, V, t):
    acc = 0j
    d = U.shape[0]
    for a in range(d):
        for b in range(d):
            acc += np.conj(U[a, b]) * V[a, b]
    return (acc.real ** 2 + acc.imag ** 2) ** t


@njit
def _pauli_averaged_power(U, V, t, W, buf):
    """Mean over all n-qubit Paulis P of |tr(U^dag P V)|^{2t}.

    For each X-part x the traces over all Z-parts are one Walsh-Hadamard
    transform of the shifted diagonal W[c ^ x, c] of W = V U^dag.
    """
    d = U.shape[0]
    for a in range(d):
        for b in range(d):
            acc = 0j
            for c in range(d):
                acc += V[a, c] * np.conj(U[b, c])
            W[a, b] = acc
    total = 0.0
    for x in range(d):
        for c in range(d):
            buf[c] = W[c ^ x, c]
        h = 1
        while h < d:
            for i in range(0, d, 2 * h):
                for j in range(i, i + h):
                    u = buf[j]
                    v = buf[j + h]
                    buf[j] = u + v
                    buf[j + h] = u - v
            h *= 2
        for c in range(d):
            total += (buf[c].real ** 2 + buf[c].imag ** 2) ** t
    return total / (d * d)


@njit
def _frame_potential_chain(n, t, k_max, gates, seed, start, pauli_average, out):
    """out[s, k] = |tr(U_k^dag V_k)|^{2t} for sample start + s.

    U_0, V_0 are independent uniform Cliffords; U_k = C K U_{k-1} with C a
    fresh uniform Clifford and K drawn uniformly from ``gates``.  With
    ``pauli_average`` each value is replaced by its mean over U_k -> P U_k,
    which has the same law because C absorbs any Pauli.
    """
    d = 1 << n
    m = gates.shape[0]
    rows = np.zeros(2 * n, dtype=np.uint64)
    signs = np.zeros(2 * n, dtype=np.uint64)
    cols = np.zeros((d, d), dtype=np.complex128)
    C = np.zeros((d, d), dtype=np.complex128)
    U = np.zeros((d, d), dtype=np.complex128)
    V = np.zeros((d, d), dtype=np.complex128)
    tmp = np.zeros((d, d), dtype=np.complex128)
    W = np.zeros((d, d), dtype=np.complex128)
    buf = np.zeros(d, dtype=np.complex128)
    for s in range(out.shape[0]):
        state = _stream(seed, start + s)
        state = _random_clifford_unitary(n, state, rows, signs, cols, U)
        state = _random_clifford_unitary(n, state, rows, signs, cols, V)
        if pauli_average:
            out[s, 0] = _pauli_averaged_power(U, V, t, W, buf)
        else:
            out[s, 0] = _trace_power(U, V, t)
        for k in range(1, k_max + 1):
            state, r = _next(state)
            _apply_site0(gates[r % np.uint64(m)], U)
            state = _random_clifford_unitary(n, state, rows, signs, cols, C)
            _left_multiply(C, U, tmp)
            state, r = _next(state)
            _apply_site0(gates[r % np.uint64(m)], V)
            state = _random_clifford_unitary(n, state, rows, signs, cols, C)
            _left_multiply(C, V, tmp)
            if pauli_average:
                out[s, k] = _pauli_averaged_power(U, V, t, W, buf)
            else:
                out[s, k] = _trace_power(U, V, t)


@njit
def _interleaved_chain(n, k_max, gates, state, rows, signs, cols, C, tmp, out):
    """out[k] = C_k K_k ... K_1 C_0 for k = 0..k_max."""
    m = gates.shape[0]
    state = _random_clifford_unitary(n, state, rows, signs, cols, out[0])
    for k in range(1, k_max + 1):
        out[k] = out[k - 1]
        state, r = _next(state)
        _apply_site0(gates[r % np.uint64(m)], out[k])
        state = _random_clifford_unitary(n, state, rows, signs, cols, C)
        _left_multiply(C, out[k], tmp)
    return state


@njit
def _frame_potential_blocks(n, t, k_max, gates, seed, first_block, block, pauli_average, out):
    """out[b, k]: mean of |tr(U_k^dag V_k)|^{2t} over all block x block pairs of block b.

    Block b owns samples b*block .. (b+1)*block - 1; sample i draws its U chain
    from stream 2i and its V chain from stream 2i + 1, so blocks are independent
    and every pair (U_i, V_j) is a pair of independent draws.
    """
    d = 1 << n
    rows = np.zeros(2 * n, dtype=np.uint64)
    signs = np.zeros(2 * n, dtype=np.uint64)
    cols = np.zeros((d, d), dtype=np.complex128)
    C = np.zeros((d, d), dtype=np.complex128)
    tmp = np.zeros((d, d), dtype=np.complex128)
    W = np.zeros((d, d), dtype=np.complex128)
    buf = np.zeros(d, dtype=np.complex128)
    Us = np.zeros((block, k_max + 1, d, d), dtype=np.complex128)
    Vs = np.zeros((block, k_max + 1, d, d), dtype=np.complex128)
    for b in range(out.shape[0]):
        base = (first_block + b) * block
        for i in range(block):
            _interleaved_chain(n, k_max, gates, _stream(seed, 2 * (base + i)),
                               rows, signs, cols, C, tmp, Us[i])
            _interleaved_chain(n, k_max, gates, _stream(seed, 2 * (base + i) + 1),
                               rows, signs, cols, C, tmp, Vs[i])
        for k in range(k_max + 1):
            acc = 0.0
            for i in range(block):
                for j in range(block):
                    if pauli_average:
                        acc += _pauli_averaged_power(Us[i, k], Vs[j, k], t, W, buf)
                    else:
                        acc += _trace_power(Us[i, k], Vs[j, k], t)
            out[b, k] = acc / (block * block)


@njit
def _sample_tableaux(n, count, seed, start, rows_out, signs_out):
    for s in range(count):
        state = _stream(seed, start + s)
        _sample_tableau(n, state, rows_out[s], signs_out[s])


# --- local walks on packed tableaux ------------------------------------------

@njit
def _tableau_key(n, rows, signs):
    key = np.uint64(0)
    w = np.uint64(2 * n)
    for r in range(2 * n):
        key |= rows[r] << (w * np.uint64(r))
    base = np.uint64(4 * n * n)
    for r in range(2 * n):
        key |= signs[r] << (base + np.uint64(r))
    return key


@njit
def _apply_local(n, rows, signs, table, arity, q0, q1):
    """Conjugate every row by a 1- or 2-qubit gate given by its Pauli table.

    table[p] = (image, flip) for local Pauli index p = x-bits | z-bits << arity.
    """
    nn = np.uint64(n)
    one = np.uint64(1)
    for r in range(2 * n):
        v = rows[r]
        x0 = (v >> np.uint64(q0)) & one
        z0 = (v >> (nn + np.uint64(q0))) & one
        if arity == 1:
            p = x0 | (z0 << one)
        else:
            x1 = (v >> np.uint64(q1)) & one
            z1 = (v >> (nn + np.uint64(q1))) & one
            p = x0 | (x1 << one) | (z0 << np.uint64(2)) | (z1 << np.uint64(3))
        img = np.uint64(table[p, 0])
        signs[r] ^= np.uint64(table[p, 1])
        v &= ~((one << np.uint64(q0)) | (one << (nn + np.uint64(q0))))
        if arity == 1:
            v |= (img & one) << np.uint64(q0)
            v |= ((img >> one) & one) << (nn + np.uint64(q0))
        else:
            v &= ~((one << np.uint64(q1)) | (one << (nn + np.uint64(q1))))
            v |= (img & one) << np.uint64(q0)
            v |= ((img >> one) & one) << np.uint64(q1)
            v |= ((img >> np.uint64(2)) & one) << (nn + np.uint64(q0))
            v |= ((img >> np.uint64(3)) & one) << (nn + np.uint64(q1))
        rows[r] = v


@njit
def _walk_census(n, tables, arities, steps, seed, counts):
    """Run one walk from the identity and count visits to each class after every step."""
    rows = np.zeros(2 * n, dtype=np.uint64)
    signs = np.zeros(2 * n, dtype=np.uint64)
    for j in range(n):
        rows[j] = np.uint64(1) << np.uint64(j)
        rows[n + j] = np.uint64(1) << np.uint64(n + j)
    state = _stream(seed, 0)
    g = tables.shape[0]
    for _ in range(steps):
        state, r = _next(state)
        gate = r % np.uint64(g)
        state, r = _next(state)
        site = r % np.uint64(n)
        _apply_local(n, rows, signs, tables[gate], arities[gate], site, (site + np.uint64(1)) % np.uint64(n))
        counts[_tableau_key(n, rows, signs)] += 1
    return rows, signs


# --- Pauli transfer matrices ---------------------------------------------------

def conjugate_paulis(x, z, s, table, arity, q0, q1=0):
    """Vectorized _apply_local on arrays of Hermitian Paulis (x, z bitmasks, sign bits)."""
    one = np.uint64(1)
    q0, q1 = np.uint64(q0), np.uint64(q1)
    x0 = (x >> q0) & one
    z0 = (z >> q0) & one
    if arity == 1:
        p = x0 | (z0 << one)
    else:
        x1 = (x >> q1) & one
        z1 = (z >> q1) & one
        p = x0 | (x1 << one) | (z0 << np.uint64(2)) | (z1 << np.uint64(3))
    p = p.astype(np.intp)
    img = table[p, 0].astype(np.uint64)
    s = s ^ table[p, 1].astype(np.uint64)
    x = x & ~(one << q0)
    z = z & ~(one << q0)
    if arity == 1:
        x = x | ((img & one) << q0)
        z = z | (((img >> one) & one) << q0)
    else:
        x = x & ~(one << q1)
        z = z & ~(one << q1)
        x = x | ((img & one) << q0) | (((img >> one) & one) << q1)
        z = z | (((img >> np.uint64(2)) & one) << q0) | (((img >> np.uint64(3)) & one) << q1)
    return x, z, s


# --- entry points with the numpy-or-loop switch -------------------------------

def _quiet(fn, *args):
    """Run a loop kernel; uncompiled, uint64 wraparound would otherwise warn."""
    if numba is None:
        with np.errstate(over="ignore"):
            return fn(*args)
    return fn(*args)


def frame_potential_chain(n: int, t: int, k_max: int, gates: np.ndarray, seed: int,
                          start: int, count: int, pauli_average: bool = True) -> np.ndarray:
    out = np.zeros((count, k_max + 1))
    gates = np.ascontiguousarray(gates, dtype=np.complex128)
    _quiet(_frame_potential_chain, n, t, k_max, gates, np.uint64(seed), start,
           bool(pauli_average), out)
    return out


def frame_potential_blocks(n: int, t: int, k_max: int, gates: np.ndarray, seed: int,
                           first_block: int, blocks: int, block: int,
                           pauli_average: bool = True) -> np.ndarray:
    out = np.zeros((blocks, k_max + 1))
    gates = np.ascontiguousarray(gates, dtype=np.complex128)
    _quiet(_frame_potential_blocks, n, t, k_max, gates, np.uint64(seed), first_block, block,
           bool(pauli_average), out)
    return out


def sample_tableaux(n: int, count: int, seed: int, start: int = 0):
    rows = np.zeros((count, 2 * n), dtype=np.uint64)
    signs = np.zeros((count, 2 * n), dtype=np.uint64)
    _quiet(_sample_tableaux, n, count, np.uint64(seed), start, rows, signs)
    return rows, signs


def tableau_unitary(n: int, rows, signs) -> np.ndarray:
    cols = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    _quiet(_tableau_unitary, n, np.asarray(rows, dtype=np.uint64),
           np.asarray(signs, dtype=np.uint64), cols)
    return cols.T.copy()


def tableau_keys(n: int, rows, signs) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.uint64)
    signs = np.asarray(signs, dtype=np.uint64)
    return np.array([_tableau_key(n, r, s) for r, s in zip(rows, signs)], dtype=np.uint64)


def walk_census(n: int, tables: np.ndarray, arities: np.ndarray, steps: int, seed: int) -> np.ndarray:
    counts = np.zeros(1 << (4 * n * n + 2 * n), dtype=np.int64)
    _quiet(_walk_census, n, np.ascontiguousarray(tables, dtype=np.int64),
           np.ascontiguousarray(arities, dtype=np.int64), steps, np.uint64(seed), counts)
    return counts
