"""Compiled tableau kernels.

Layout: ``x`` and ``z`` are ``(rows, W)`` uint64 planes, bit ``q & 63`` of
word ``q >> 6`` holding qubit ``q``; ``r`` is a ``(rows,)`` uint8 sign plane.
Every kernel acts on all rows of the arrays it is handed, so passing the
stabilizer half of a tableau simulates the stabilizer group only.

A program is an ``(G, 3)`` int32 array of ``(op, a, b)``: ``op < 24`` is a
single-qubit Clifford index on qubit ``a``; ``op == CNOT_OP`` is CNOT with
control ``a`` and target ``b``.  Fault codes: bits 0-1 are the Pauli on the
gate's first qubit, bits 2-3 on the second, each ``x | (z << 1)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CNOT_OP = 24
ZERO_EXPONENT = -1

_U1 = np.uint64(1)
_U0 = np.uint64(0)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)

_JIT = dict(nogil=True, cache=True)


@njit(**_JIT)
def popcount(v):
    v = v - ((v >> _U1) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return np.int64((v * _H01) >> np.uint64(56))


@njit(**_JIT)
def _row_product_phase(xh, zh, xi, zi):
    # exponent of i picked up by P_i * P_h, summed over qubits (mod 4)
    plus = _U0
    minus = _U0
    tot = 0
    for w in range(xh.shape[0]):
        x1 = xi[w]
        z1 = zi[w]
        x2 = xh[w]
        z2 = zh[w]
        nx1 = x1 ^ _ALL
        nz1 = z1 ^ _ALL
        nx2 = x2 ^ _ALL
        nz2 = z2 ^ _ALL
        plus = (x1 & nz1 & x2 & z2) | (x1 & z1 & nx2 & z2) | (nx1 & z1 & x2 & nz2)
        minus = (x1 & nz1 & nx2 & z2) | (x1 & z1 & x2 & nz2) | (nx1 & z1 & x2 & z2)
        tot += popcount(plus) - popcount(minus)
    return tot


@njit(**_JIT)
def rowsum(x, z, r, h, i):
    """Row ``h`` becomes ``P_i * P_h`` (Aaronson-Gottesman rowsum)."""
    tot = 2 * np.int64(r[h]) + 2 * np.int64(r[i]) + _row_product_phase(x[h], z[h], x[i], z[i])
    r[h] = np.uint8((tot % 4) >> 1)
    for w in range(x.shape[1]):
        x[h, w] ^= x[i, w]
        z[h, w] ^= z[i, w]


@njit(**_JIT)
def apply_h(x, z, r, q):
    w = q >> 6
    s = np.uint64(q & 63)
    for i in range(x.shape[0]):
        xb = (x[i, w] >> s) & _U1
        zb = (z[i, w] >> s) & _U1
        r[i] ^= np.uint8(xb & zb)
        if xb != zb:
            x[i, w] ^= _U1 << s
            z[i, w] ^= _U1 << s


@njit(**_JIT)
def apply_s(x, z, r, q):
    w = q >> 6
    s = np.uint64(q & 63)
    for i in range(x.shape[0]):
        xb = (x[i, w] >> s) & _U1
        zb = (z[i, w] >> s) & _U1
        r[i] ^= np.uint8(xb & zb)
        z[i, w] ^= xb << s


@njit(**_JIT)
def apply_cnot(x, z, r, c, t):
    wc = c >> 6
    sc = np.uint64(c & 63)
    wt = t >> 6
    st = np.uint64(t & 63)
    for i in range(x.shape[0]):
        xc = (x[i, wc] >> sc) & _U1
        zc = (z[i, wc] >> sc) & _U1
        xt = (x[i, wt] >> st) & _U1
        zt = (z[i, wt] >> st) & _U1
        r[i] ^= np.uint8(xc & zt & (xt ^ zc ^ _U1))
        x[i, wt] ^= xc << st
        z[i, wc] ^= zt << sc


@njit(**_JIT)
def apply_c1(x, z, r, q, index, table):
    w = q >> 6
    s = np.uint64(q & 63)
    mask = _U1 << s
    for i in range(x.shape[0]):
        code = ((x[i, w] >> s) & _U1) | (((z[i, w] >> s) & _U1) << _U1)
        if code == 0:
            continue
        new = np.uint64(table[index, code, 0])
        r[i] ^= table[index, code, 1]
        x[i, w] = (x[i, w] & ~mask) | ((new & _U1) << s)
        z[i, w] = (z[i, w] & ~mask) | (((new >> _U1) & _U1) << s)


@njit(**_JIT)
def apply_pauli_1q(x, z, r, q, code):
    """Conjugate by a single-qubit Pauli: flips signs of anticommuting rows."""
    w = q >> 6
    s = np.uint64(q & 63)
    px = np.uint64(code & 1)
    pz = np.uint64((code >> 1) & 1)
    for i in range(x.shape[0]):
        xb = (x[i, w] >> s) & _U1
        zb = (z[i, w] >> s) & _U1
        r[i] ^= np.uint8((xb & pz) ^ (zb & px))


@njit(**_JIT)
def apply_pauli_words(x, z, r, px, pz):
    for i in range(x.shape[0]):
        acc = _U0
        for w in range(x.shape[1]):
            acc ^= (x[i, w] & pz[w]) ^ (z[i, w] & px[w])
        r[i] ^= np.uint8(popcount(acc) & 1)


@njit(**_JIT)
def apply_op(x, z, r, op, a, b, table):
    if op == CNOT_OP:
        apply_cnot(x, z, r, a, b)
    elif op == 1:
        apply_h(x, z, r, a)
    elif op == 2:
        apply_s(x, z, r, a)
    elif op != 0:
        apply_c1(x, z, r, a, op, table)


@njit(**_JIT)
def apply_program(x, z, r, prog, table):
    for g in range(prog.shape[0]):
        apply_op(x, z, r, prog[g, 0], prog[g, 1], prog[g, 2], table)


@njit(**_JIT)
def apply_program_with_faults(x, z, r, prog, table, fault_gate, fault_code, lo, hi):
    """Apply ``prog``; after gate ``fault_gate[j]`` apply fault ``fault_code[j]``
    for ``lo <= j < hi`` (sorted by gate index)."""
    j = lo
    for g in range(prog.shape[0]):
        op = prog[g, 0]
        a = prog[g, 1]
        b = prog[g, 2]
        apply_op(x, z, r, op, a, b, table)
        while j < hi and fault_gate[j] == g:
            code = fault_code[j]
            if code & 3:
                apply_pauli_1q(x, z, r, a, code & 3)
            if op == CNOT_OP and (code >> 2) & 3:
                apply_pauli_1q(x, z, r, b, (code >> 2) & 3)
            j += 1


@njit(**_JIT)
def measure(x, z, r, n, q, coin, scratch_x, scratch_z):
    """Z measurement of qubit ``q`` on a full ``2n``-row tableau.

    ``coin`` is the outcome used when the result is random.  Returns
    ``outcome + 2 * was_random``.
    """
    w = q >> 6
    m = _U1 << np.uint64(q & 63)
    nw = x.shape[1]
    p = -1
    for i in range(n, 2 * n):
        if x[i, w] & m:
            p = i
            break
    if p >= 0:
        for i in range(2 * n):
            if i != p and (x[i, w] & m):
                rowsum(x, z, r, i, p)
        for v in range(nw):
            x[p - n, v] = x[p, v]
            z[p - n, v] = z[p, v]
            x[p, v] = _U0
            z[p, v] = _U0
        r[p - n] = r[p]
        z[p, w] = m
        r[p] = np.uint8(coin)
        return coin + 2
    for v in range(nw):
        scratch_x[v] = _U0
        scratch_z[v] = _U0
    tot = 0
    for i in range(n):
        if x[i, w] & m:
            h = i + n
            tot += 2 * np.int64(r[h]) + _row_product_phase(scratch_x, scratch_z, x[h], z[h])
            for v in range(nw):
                scratch_x[v] ^= x[h, v]
                scratch_z[v] ^= z[h, v]
    return np.int64((tot % 4) >> 1)


@njit(**_JIT)
def postselect_exponent(x, z, r, n, bits):
    """Sequentially post-select qubits on ``bits`` (destroys the tableau).

    Returns the number of random outcomes ``k`` or ``ZERO_EXPONENT``.
    """
    nw = x.shape[1]
    sx = np.zeros(nw, dtype=np.uint64)
    sz = np.zeros(nw, dtype=np.uint64)
    k = 0
    for q in range(n):
        want = bits[q]
        res = measure(x, z, r, n, q, want, sx, sz)
        if res >= 2:
            k += 1
        elif res != want:
            return ZERO_EXPONENT
    return k


@njit(**_JIT)
def _swap_rows(x, z, r, a, b):
    if a == b:
        return
    for w in range(x.shape[1]):
        t = x[a, w]
        x[a, w] = x[b, w]
        x[b, w] = t
        t = z[a, w]
        z[a, w] = z[b, w]
        z[b, w] = t
    t8 = r[a]
    r[a] = r[b]
    r[b] = t8


@njit(**_JIT)
def support(x, z, r, n, basis, offset, cons_z, cons_r):
    """Computational-basis support of the state stabilized by ``x, z, r``.

    Consumes the ``n`` stabilizer rows.  On return the support is the affine
    space ``offset + span(basis[:k])``; ``cons_z[:n-k], cons_r`` hold the
    parity constraints ``cons_z[j] . x == cons_r[j]`` cutting it out.
    Returns ``k``.
    """
    nw = x.shape[1]
    k = 0
    for q in range(n):
        w = q >> 6
        m = _U1 << np.uint64(q & 63)
        piv = -1
        for i in range(k, n):
            if x[i, w] & m:
                piv = i
                break
        if piv < 0:
            continue
        _swap_rows(x, z, r, piv, k)
        for i in range(n):
            if i != k and (x[i, w] & m):
                rowsum(x, z, r, i, k)
        k += 1
    for i in range(k):
        for v in range(nw):
            basis[i, v] = x[i, v]
    nc = n - k
    for j in range(nc):
        for v in range(nw):
            cons_z[j, v] = z[k + j, v]
        cons_r[j] = r[k + j]
    # reduced echelon form of the constraint system, in place on copies
    tz = cons_z[:nc].copy()
    tr = cons_r[:nc].copy()
    row = 0
    for q in range(n):
        if row == nc:
            break
        w = q >> 6
        m = _U1 << np.uint64(q & 63)
        piv = -1
        for i in range(row, nc):
            if tz[i, w] & m:
                piv = i
                break
        if piv < 0:
            continue
        if piv != row:
            for v in range(nw):
                t = tz[piv, v]
                tz[piv, v] = tz[row, v]
                tz[row, v] = t
            t8 = tr[piv]
            tr[piv] = tr[row]
            tr[row] = t8
        for i in range(nc):
            if i != row and (tz[i, w] & m):
                for v in range(nw):
                    tz[i, v] ^= tz[row, v]
                tr[i] ^= tr[row]
        row += 1
    for v in range(nw):
        offset[v] = _U0
    # pivot variable of each reduced row is its lowest set bit
    for i in range(nc):
        if tr[i]:
            for v in range(nw):
                if tz[i, v]:
                    word = tz[i, v]
                    low = word & (~word + _U1)
                    offset[v] ^= low
                    break
    return k


@njit(**_JIT)
def support_exponent(k, cons_z, cons_r, nc, bits_words):
    for j in range(nc):
        acc = _U0
        for v in range(bits_words.shape[0]):
            acc ^= cons_z[j, v] & bits_words[v]
        if np.uint8(popcount(acc) & 1) != cons_r[j]:
            return ZERO_EXPONENT
    return k


@njit(**_JIT)
def support_sample(k, basis, offset, rand_words, out):
    for v in range(out.shape[0]):
        out[v] = offset[v]
    for j in range(k):
        if (rand_words[j >> 6] >> np.uint64(j & 63)) & _U1:
            for v in range(out.shape[0]):
                out[v] ^= basis[j, v]


@njit(**_JIT)
def reset_stabilizers(x, z, r):
    """Stabilizer half of |0^n>: row ``j`` is ``+Z_j``."""
    n = x.shape[0]
    for i in range(n):
        for v in range(x.shape[1]):
            x[i, v] = _U0
            z[i, v] = _U0
        r[i] = 0
        z[i, i >> 6] = _U1 << np.uint64(i & 63)


# -- qubit-major kernels ------------------------------------------------------
#
# The engine stores the stabilizer rows transposed: ``cx[q]`` and ``cz[q]``
# are bitmasks over rows (bit ``i & 63`` of word ``i >> 6`` is row ``i``) and
# ``cr`` packs the row signs the same way.  A gate then updates whole words of
# rows at once.


@njit(**_JIT)
def col_reset(cx, cz, cr):
    """``|0^n>``: row ``j`` is ``+Z_j``."""
    for q in range(cx.shape[0]):
        for v in range(cx.shape[1]):
            cx[q, v] = _U0
            cz[q, v] = _U0
        cz[q, q >> 6] = _U1 << np.uint64(q & 63)
    for v in range(cr.shape[0]):
        cr[v] = _U0


@njit(**_JIT)
def col_pauli(cx, cz, cr, q, code):
    for v in range(cx.shape[1]):
        m = _U0
        if code & 1:
            m ^= cz[q, v]
        if code & 2:
            m ^= cx[q, v]
        cr[v] ^= m


@njit(**_JIT)
def col_run(cx, cz, cr, prog, masks, start, stop, fault_gate, fault_code, lo, hi):
    """Gates ``start:stop`` of ``prog``, with faults ``lo <= j < hi`` inserted
    after gate ``fault_gate[j]`` (sorted).

    ``masks[c]`` holds the images of X, Z, Y under Clifford ``c`` as all-ones
    or all-zeros words ``(x, z, sign)``.  The gate dispatch is written out in
    the loop body on purpose: routing it through a helper function made every
    gate several times slower.
    """
    j = lo
    nv = cx.shape[1]
    for g in range(start, stop):
        op = prog[g, 0]
        a = prog[g, 1]
        b = prog[g, 2]
        if op == CNOT_OP:
            for v in range(nv):
                xc = cx[a, v]
                zc = cz[a, v]
                xt = cx[b, v]
                zt = cz[b, v]
                cr[v] ^= xc & zt & (xt ^ zc ^ _ALL)
                cx[b, v] = xt ^ xc
                cz[a, v] = zc ^ zt
        elif op == 1:
            for v in range(nv):
                xa = cx[a, v]
                za = cz[a, v]
                cr[v] ^= xa & za
                cx[a, v] = za
                cz[a, v] = xa
        elif op == 2:
            for v in range(nv):
                xa = cx[a, v]
                cr[v] ^= xa & cz[a, v]
                cz[a, v] ^= xa
        elif op != 0:
            for v in range(nv):
                xa = cx[a, v]
                za = cz[a, v]
                mx = xa & ~za
                mz = za & ~xa
                my = xa & za
                cx[a, v] = (mx & masks[op, 0]) | (mz & masks[op, 3]) | (my & masks[op, 6])
                cz[a, v] = (mx & masks[op, 1]) | (mz & masks[op, 4]) | (my & masks[op, 7])
                cr[v] ^= (mx & masks[op, 2]) | (mz & masks[op, 5]) | (my & masks[op, 8])
        while j < hi and fault_gate[j] == g:
            code = fault_code[j]
            if code & 3:
                col_pauli(cx, cz, cr, a, code & 3)
            if op == CNOT_OP and (code >> 2) & 3:
                col_pauli(cx, cz, cr, b, (code >> 2) & 3)
            j += 1


@njit(**_JIT)
def col_to_rows(cx, cz, cr, x, z, r):
    """Transpose qubit-major planes into row-major ``x, z, r``."""
    for i in range(x.shape[0]):
        for v in range(x.shape[1]):
            x[i, v] = _U0
            z[i, v] = _U0
        r[i] = np.uint8((cr[i >> 6] >> np.uint64(i & 63)) & _U1)
    for q in range(cx.shape[0]):
        qw = q >> 6
        qb = _U1 << np.uint64(q & 63)
        for v in range(cx.shape[1]):
            word = cx[q, v]
            while word:
                low = word & (~word + _U1)
                i = v * 64 + popcount(low - _U1)
                x[i, qw] |= qb
                word ^= low
            word = cz[q, v]
            while word:
                low = word & (~word + _U1)
                i = v * 64 + popcount(low - _U1)
                z[i, qw] |= qb
                word ^= low


@njit(**_JIT)
def run_shots(prog, masks, n, ideal_k, ideal_basis, ideal_offset, ideal_cons_z, ideal_cons_r,
              shot_ptr, fault_gate, fault_code, rand_words, flip_words, hist, resim_clean,
              snapshots, snap_every):
    """Shot loop of one circuit; ``hist[k]`` counts exponents, ``hist[n+1]`` zeros.

    ``snapshots[s]`` holds the ideal qubit-major state before gate
    ``s * snap_every``; a faulty shot restarts from the last snapshot before
    its first fault since the gates up to there are noiseless.
    """
    nw = ideal_offset.shape[0]
    cw = snapshots.shape[3]
    cx = np.zeros((n, cw), dtype=np.uint64)
    cz = np.zeros((n, cw), dtype=np.uint64)
    cr = np.zeros(cw, dtype=np.uint64)
    sx = np.zeros((n, nw), dtype=np.uint64)
    sz = np.zeros((n, nw), dtype=np.uint64)
    sr = np.zeros(n, dtype=np.uint8)
    basis = np.zeros((n, nw), dtype=np.uint64)
    offset = np.zeros(nw, dtype=np.uint64)
    cons_z = np.zeros((n, nw), dtype=np.uint64)
    cons_r = np.zeros(n, dtype=np.uint8)
    xs = np.zeros(nw, dtype=np.uint64)
    use_flips = flip_words.shape[0] > 0
    nc_ideal = n - ideal_k
    for shot in range(shot_ptr.shape[0] - 1):
        lo = shot_ptr[shot]
        hi = shot_ptr[shot + 1]
        if hi == lo and not resim_clean:
            support_sample(ideal_k, ideal_basis, ideal_offset, rand_words[shot], xs)
        else:
            if resim_clean:
                col_reset(cx, cz, cr)
                start = 0
            else:
                s = fault_gate[lo] // snap_every
                start = s * snap_every
                for q in range(n):
                    for v in range(cw):
                        cx[q, v] = snapshots[s, 0, q, v]
                        cz[q, v] = snapshots[s, 1, q, v]
                for v in range(cw):
                    cr[v] = snapshots[s, 2, 0, v]
            col_run(cx, cz, cr, prog, masks, start, prog.shape[0], fault_gate, fault_code, lo, hi)
            col_to_rows(cx, cz, cr, sx, sz, sr)
            kk = support(sx, sz, sr, n, basis, offset, cons_z, cons_r)
            support_sample(kk, basis, offset, rand_words[shot], xs)
        if use_flips:
            for v in range(nw):
                xs[v] ^= flip_words[shot, v]
        e = support_exponent(ideal_k, ideal_cons_z, ideal_cons_r, nc_ideal, xs)
        if e < 0:
            hist[n + 1] += 1
        else:
            hist[e] += 1


@njit(**_JIT)
def ideal_snapshots(prog, masks, n, snap_every):
    """Ideal qubit-major states before gates ``0, snap_every, 2*snap_every, ...``
    and at the end; layout ``[s, plane, qubit, word]`` with the signs in
    ``[s, 2, 0]``."""
    cw = (n + 63) >> 6
    g = prog.shape[0]
    count = g // snap_every + 1
    out = np.zeros((count + 1, 3, n, cw), dtype=np.uint64)
    cx = np.zeros((n, cw), dtype=np.uint64)
    cz = np.zeros((n, cw), dtype=np.uint64)
    cr = np.zeros(cw, dtype=np.uint64)
    no_faults = np.zeros(0, dtype=np.int64)
    col_reset(cx, cz, cr)
    for s in range(count + 1):
        if s > 0:
            lo = (s - 1) * snap_every
            hi = min(s * snap_every, g) if s < count else g
            col_run(cx, cz, cr, prog, masks, lo, hi, no_faults, no_faults, 0, 0)
        for q in range(n):
            for v in range(cw):
                out[s, 0, q, v] = cx[q, v]
                out[s, 1, q, v] = cz[q, v]
        for v in range(cw):
            out[s, 2, 0, v] = cr[v]
    return out
