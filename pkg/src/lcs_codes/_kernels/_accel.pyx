# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Reference semantics live in _pure.py; keep in lockstep."""

from libc.math cimport atanh, tanh
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


class NodeBudgetExceeded(RuntimeError):
    """Raised when a decode search exceeds its node budget."""


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


# ---------------------------------------------------------------------------
# elimination


def rref(cnp.ndarray[cnp.uint64_t, ndim=2] words, int ncols, aug=None):
    cdef Py_ssize_t rows = words.shape[0]
    cdef Py_ssize_t W = words.shape[1]
    cdef uint64_t[:, ::1] M = words
    cdef bint has_aug = aug is not None
    cdef uint64_t[:, ::1] A = M[:0] if not has_aug else aug
    cdef Py_ssize_t Wa = A.shape[1] if has_aug else 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pivots = np.empty(
        min(rows, ncols), dtype=np.int64
    )
    cdef Py_ssize_t npiv = 0, r, w, piv, col
    cdef int b
    cdef uint64_t mask, tmp
    for col in range(ncols):
        if npiv == rows:
            break
        w = col >> 6
        b = col & 63
        mask = (<uint64_t> 1) << b
        piv = -1
        for r in range(npiv, rows):
            if M[r, w] & mask:
                piv = r
                break
        if piv < 0:
            continue
        if piv != npiv:
            for r in range(W):
                tmp = M[piv, r]
                M[piv, r] = M[npiv, r]
                M[npiv, r] = tmp
            for r in range(Wa):
                tmp = A[piv, r]
                A[piv, r] = A[npiv, r]
                A[npiv, r] = tmp
        for r in range(rows):
            if r != npiv and (M[r, w] & mask):
                for b in range(W):
                    M[r, b] ^= M[npiv, b]
                for b in range(Wa):
                    A[r, b] ^= A[npiv, b]
        pivots[npiv] = col
        npiv += 1
    return pivots[:npiv].copy()


def solve(words, int ncols, aug):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pivots = rref(words, ncols, aug)
    cdef uint64_t[:, ::1] A = aug
    cdef Py_ssize_t rows = aug.shape[0]
    cdef Py_ssize_t npiv = pivots.shape[0]
    cdef Py_ssize_t r, i
    cdef int64_t col
    for r in range(npiv, rows):
        if A[r, 0] & 1:
            return None
    x = np.zeros(words.shape[1], dtype=np.uint64)
    cdef uint64_t[::1] xv = x
    for i in range(npiv):
        if A[i, 0] & 1:
            col = pivots[i]
            xv[col >> 6] |= (<uint64_t> 1) << (col & 63)
    return x


def nullspace(words, int ncols):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pivots = rref(words, ncols)
    cdef uint64_t[:, ::1] M = words
    cdef Py_ssize_t npiv = pivots.shape[0]
    cdef Py_ssize_t nfree = ncols - npiv
    basis = np.zeros((nfree, words.shape[1]), dtype=np.uint64)
    cdef uint64_t[:, ::1] B = basis
    cdef uint8_t[::1] is_piv = np.zeros(ncols, dtype=np.uint8)
    cdef Py_ssize_t i, f, bi = 0
    for i in range(npiv):
        is_piv[pivots[i]] = 1
    for f in range(ncols):
        if is_piv[f]:
            continue
        B[bi, f >> 6] |= (<uint64_t> 1) << (f & 63)
        for i in range(npiv):
            if M[i, f >> 6] & ((<uint64_t> 1) << (f & 63)):
                B[bi, pivots[i] >> 6] |= (<uint64_t> 1) << (pivots[i] & 63)
        bi += 1
    return basis


def reduce_by_rref(rwords, pivots, v):
    cdef uint64_t[:, ::1] R = rwords
    cdef int64_t[::1] piv = np.ascontiguousarray(pivots, dtype=np.int64)
    cdef uint64_t[::1] vv = v
    cdef Py_ssize_t i, w
    cdef int64_t p
    cdef Py_ssize_t W = R.shape[1] if R.shape[0] else vv.shape[0]
    for i in range(piv.shape[0]):
        p = piv[i]
        if vv[p >> 6] & ((<uint64_t> 1) << (p & 63)):
            for w in range(W):
                vv[w] ^= R[i, w]


# ---------------------------------------------------------------------------
# syndrome-decoding searches

cdef enum:
    MAXBRANCH = 256


cdef class SyndromePrep:
    cdef readonly Py_ssize_t n, m
    cdef readonly int sw, max_colwt
    cdef object keep
    cdef uint64_t* cols
    cdef int64_t* rptr
    cdef int32_t* rcol
    cdef int32_t* rmax
    cdef int32_t* sig_order


def syndrome_prep(col_words, row_ptr, row_col, row_maxcol, max_colwt):
    cdef SyndromePrep P = SyndromePrep()
    cw = np.ascontiguousarray(col_words, dtype=np.uint64)
    rp = np.ascontiguousarray(row_ptr, dtype=np.int64)
    rc = np.ascontiguousarray(row_col, dtype=np.int32)
    rm = np.ascontiguousarray(row_maxcol, dtype=np.int32)
    P.n = cw.shape[0]
    P.sw = cw.shape[1]
    P.m = rp.shape[0] - 1
    P.max_colwt = int(max_colwt)
    # branching iterates a row's candidate list on the C stack
    if rc.shape[0]:
        degs = np.diff(rp)
        if degs.size and int(degs.max()) > MAXBRANCH:
            raise ValueError("row degree exceeds search branch limit")
    # columns ordered by signature (integer order), ties by index
    keys = tuple(cw[:, w] for w in range(cw.shape[1]))
    order = np.lexsort((np.arange(P.n),) + keys).astype(np.int32)
    P.keep = (cw, rp, rc, rm, order)
    P.cols = <uint64_t*> cnp.PyArray_DATA(cw)
    P.rptr = <int64_t*> cnp.PyArray_DATA(rp)
    P.rcol = <int32_t*> cnp.PyArray_DATA(rc)
    P.rmax = <int32_t*> cnp.PyArray_DATA(rm)
    P.sig_order = <int32_t*> cnp.PyArray_DATA(order)
    return P


cdef inline int _pc(uint64_t* syn, int sw) nogil:
    cdef int w, s = 0
    for w in range(sw):
        s += __builtin_popcountll(syn[w])
    return s


cdef inline int _sig_cmp(SyndromePrep P, int32_t c, uint64_t* target) nogil:
    cdef int w
    cdef uint64_t a, b
    for w in range(P.sw - 1, -1, -1):
        a = P.cols[c * P.sw + w]
        b = target[w]
        if a < b:
            return -1
        if a > b:
            return 1
    return 0


cdef inline Py_ssize_t _sig_lower_bound(SyndromePrep P, uint64_t* target) nogil:
    cdef Py_ssize_t lo = 0, hi = P.n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if _sig_cmp(P, P.sig_order[mid], target) < 0:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef int _phase1(SyndromePrep P, uint64_t* syn, int budget, uint8_t* banned,
                 int32_t* out, uint64_t* synstack, int64_t* nodes):
    # returns support count, -1 infeasible at this budget, -2 node cap
    cdef int pc, w, b, cnt, best_cnt, sub, i, nban
    cdef Py_ssize_t r, c, k, best_row
    cdef uint64_t v
    cdef int32_t myban[MAXBRANCH]
    nodes[0] -= 1
    if nodes[0] < 0:
        return -2
    pc = _pc(syn, P.sw)
    if pc == 0:
        return 0
    if pc > budget * P.max_colwt:
        return -1
    if budget == 1:
        k = _sig_lower_bound(P, syn)
        while k < P.n:
            c = P.sig_order[k]
            if _sig_cmp(P, <int32_t> c, syn) != 0:
                break
            if not banned[c]:
                out[0] = <int32_t> c
                return 1
            k += 1
        return -1
    best_cnt = MAXBRANCH + 1
    best_row = -1
    for w in range(P.sw):
        v = syn[w]
        while v:
            b = __builtin_ctzll(v)
            v &= v - 1
            r = (w << 6) + b
            cnt = 0
            for i in range(<int> P.rptr[r], <int> P.rptr[r + 1]):
                if not banned[P.rcol[i]]:
                    cnt += 1
            if cnt == 0:
                return -1
            if cnt < best_cnt:
                best_cnt = cnt
                best_row = r
    nban = 0
    sub = -1
    cdef uint64_t* child = synstack
    for i in range(<int> P.rptr[best_row], <int> P.rptr[best_row + 1]):
        c = P.rcol[i]
        if banned[c]:
            continue
        # ban before descending: no repeats in the subtree, excluded for siblings
        banned[c] = 1
        myban[nban] = <int32_t> c
        nban += 1
        for w in range(P.sw):
            child[w] = syn[w] ^ P.cols[c * P.sw + w]
        sub = _phase1(P, child, budget - 1, banned, out, synstack + P.sw, nodes)
        if sub >= 0:
            out[sub] = <int32_t> c
            sub += 1
            break
        if sub == -2:
            break
        sub = -1
    for i in range(nban):
        banned[myban[i]] = 0
    if sub >= 0 or sub == -2:
        return sub
    return -1


cdef bint _accept_outside(uint64_t* excl_rows, int32_t* excl_piv, int excl_count,
                          int wn, uint64_t* vbuf, int32_t* support, int count) nogil:
    cdef int i, w
    cdef int32_t p
    for w in range(wn):
        vbuf[w] = 0
    for i in range(count):
        vbuf[support[i] >> 6] |= (<uint64_t> 1) << (support[i] & 63)
    for i in range(excl_count):
        p = excl_piv[i]
        if vbuf[p >> 6] & ((<uint64_t> 1) << (p & 63)):
            for w in range(wn):
                vbuf[w] ^= excl_rows[i * wn + w]
    for w in range(wn):
        if vbuf[w]:
            return True
    return False


cdef int _lex(SyndromePrep P, uint64_t* syn, Py_ssize_t last, int budget,
              int32_t* support, int depth, uint64_t* synstack,
              uint64_t* excl_rows, int32_t* excl_piv, int excl_count,
              int wn, uint64_t* vbuf, int64_t* nodes):
    # returns total support count, -1 dead end, -2 node cap
    cdef int pc, w, b, sub
    cdef Py_ssize_t r, c, k, reach
    cdef uint64_t v
    cdef bint has_excl = excl_count >= 0
    nodes[0] -= 1
    if nodes[0] < 0:
        return -2
    pc = _pc(syn, P.sw)
    if pc == 0:
        if not has_excl:
            return depth
        if depth > 0:
            if budget == 0 and _accept_outside(
                excl_rows, excl_piv, excl_count, wn, vbuf, support, depth
            ):
                return depth
            return -1
        # root of the kernel-vector search: branch below
    elif budget == 0:
        return -1
    reach = P.n - 1
    if pc:
        if pc > budget * P.max_colwt:
            return -1
        for w in range(P.sw):
            v = syn[w]
            while v:
                b = __builtin_ctzll(v)
                v &= v - 1
                r = (w << 6) + b
                if P.rmax[r] <= last:
                    return -1
                if P.rmax[r] < reach:
                    reach = P.rmax[r]
        if budget == 1:
            k = _sig_lower_bound(P, syn)
            while k < P.n:
                c = P.sig_order[k]
                if _sig_cmp(P, <int32_t> c, syn) != 0:
                    break
                if c > last:
                    support[depth] = <int32_t> c
                    if not has_excl:
                        return depth + 1
                    if _accept_outside(
                        excl_rows, excl_piv, excl_count, wn, vbuf, support, depth + 1
                    ):
                        return depth + 1
                k += 1
            return -1
    cdef uint64_t* child = synstack
    for c in range(last + 1, reach + 1):
        for w in range(P.sw):
            child[w] = syn[w] ^ P.cols[c * P.sw + w]
        support[depth] = <int32_t> c
        sub = _lex(P, child, c, budget - 1, support, depth + 1, synstack + P.sw,
                   excl_rows, excl_piv, excl_count, wn, vbuf, nodes)
        if sub != -1:
            return sub
    return -1


def min_weight_search(SyndromePrep P, syn_words, int w_cap, long long node_cap, bint lex_tie):
    syn = np.ascontiguousarray(syn_words, dtype=np.uint64)
    cdef uint64_t[::1] sv = syn
    cdef int pc = _pc(&sv[0], P.sw)
    if pc == 0:
        return 0, np.zeros(0, dtype=np.int64)
    cdef int64_t nodes = node_cap
    banned = np.zeros(P.n, dtype=np.uint8)
    out = np.empty(w_cap + 1, dtype=np.int32)
    synstack = np.empty((w_cap + 2) * P.sw, dtype=np.uint64)
    cdef uint8_t[::1] bv = banned
    cdef int32_t[::1] ov = out
    cdef uint64_t[::1] sk = synstack
    cdef int lb = pc // P.max_colwt if P.max_colwt else 1
    if P.max_colwt and pc % P.max_colwt:
        lb += 1
    if lb < 1:
        lb = 1
    cdef int w, res = -1
    for w in range(lb, w_cap + 1):
        res = _phase1(P, &sv[0], w, &bv[0], &ov[0], &sk[0], &nodes)
        if res == -2:
            raise NodeBudgetExceeded("decode search exceeded node budget")
        if res >= 0:
            break
        res = -1
    if res < 0:
        return 1, np.zeros(0, dtype=np.int64)
    cdef int count = res
    if lex_tie and count > 1:
        res = _lex(P, &sv[0], -1, count, &ov[0], 0, &sk[0],
                   NULL, NULL, -1, 0, NULL, &nodes)
        if res == -2:
            raise NodeBudgetExceeded("decode search exceeded node budget")
        count = res
    support = np.sort(np.asarray(out[:count], dtype=np.int64))
    return 0, support


def kernel_vector_search(SyndromePrep P, int w, excl_rows, excl_pivots, long long node_cap):
    er = np.ascontiguousarray(excl_rows, dtype=np.uint64)
    ep = np.ascontiguousarray(excl_pivots, dtype=np.int32)
    cdef int excl_count = er.shape[0]
    cdef int wn = er.shape[1]
    if wn == 0:
        wn = (P.n + 63) >> 6
        er = np.zeros((excl_count, wn), dtype=np.uint64)
    cdef uint64_t[:, ::1] erv = er
    cdef int32_t[::1] epv = ep
    syn = np.zeros(P.sw, dtype=np.uint64)
    out = np.empty(w + 1, dtype=np.int32)
    synstack = np.empty((w + 2) * P.sw, dtype=np.uint64)
    vbuf = np.empty(wn, dtype=np.uint64)
    cdef uint64_t[::1] sv = syn
    cdef int32_t[::1] ov = out
    cdef uint64_t[::1] sk = synstack
    cdef uint64_t[::1] vb = vbuf
    cdef int64_t nodes = node_cap
    cdef uint64_t* erp = &erv[0, 0] if excl_count else <uint64_t*> cnp.PyArray_DATA(er)
    cdef int32_t* epp = &epv[0] if excl_count else <int32_t*> cnp.PyArray_DATA(ep)
    cdef int res = _lex(P, &sv[0], -1, w, &ov[0], 0, &sk[0],
                        erp, epp, excl_count, wn, &vb[0], &nodes)
    if res == -2:
        raise NodeBudgetExceeded("distance search exceeded node budget")
    if res < 0:
        return None
    return np.asarray(out[:res], dtype=np.int64)


cdef double _wphase1(SyndromePrep P, uint64_t* syn, double* costs, double min_cost,
                     double best, double partial, uint8_t* banned,
                     uint64_t* synstack, int64_t* nodes, int* status):
    cdef int pc, w, b, cnt, best_cnt, i, nban
    cdef Py_ssize_t r, c, best_row
    cdef uint64_t v
    cdef double lb
    cdef int32_t myban[MAXBRANCH]
    nodes[0] -= 1
    if nodes[0] < 0:
        status[0] = -2
        return best
    pc = _pc(syn, P.sw)
    if pc == 0:
        return partial if partial < best else best
    if P.max_colwt == 0:
        return best
    lb = ((pc + P.max_colwt - 1) // P.max_colwt) * min_cost
    if partial + lb >= best - 1e-12:
        return best
    best_cnt = MAXBRANCH + 1
    best_row = -1
    for w in range(P.sw):
        v = syn[w]
        while v:
            b = __builtin_ctzll(v)
            v &= v - 1
            r = (w << 6) + b
            cnt = 0
            for i in range(<int> P.rptr[r], <int> P.rptr[r + 1]):
                if not banned[P.rcol[i]]:
                    cnt += 1
            if cnt == 0:
                return best
            if cnt < best_cnt:
                best_cnt = cnt
                best_row = r
    nban = 0
    cdef uint64_t* child = synstack
    for i in range(<int> P.rptr[best_row], <int> P.rptr[best_row + 1]):
        c = P.rcol[i]
        if banned[c]:
            continue
        banned[c] = 1
        myban[nban] = <int32_t> c
        nban += 1
        for w in range(P.sw):
            child[w] = syn[w] ^ P.cols[c * P.sw + w]
        best = _wphase1(P, child, costs, min_cost, best, partial + costs[c],
                        banned, synstack + P.sw, nodes, status)
        if status[0] == -2:
            break
    for i in range(nban):
        banned[myban[i]] = 0
    return best


cdef int _wlex(SyndromePrep P, uint64_t* syn, double* costs, double min_cost,
               double best, Py_ssize_t last, double partial, int32_t* support,
               int depth, uint64_t* synstack, int64_t* nodes):
    cdef int pc, w, b, sub
    cdef Py_ssize_t r, c, reach
    cdef uint64_t v
    cdef double lb
    nodes[0] -= 1
    if nodes[0] < 0:
        return -2
    pc = _pc(syn, P.sw)
    if pc == 0:
        return depth if partial <= best + 1e-9 else -1
    lb = ((pc + P.max_colwt - 1) // P.max_colwt) * min_cost
    if partial + lb > best + 1e-9:
        return -1
    reach = P.n - 1
    for w in range(P.sw):
        v = syn[w]
        while v:
            b = __builtin_ctzll(v)
            v &= v - 1
            r = (w << 6) + b
            if P.rmax[r] <= last:
                return -1
            if P.rmax[r] < reach:
                reach = P.rmax[r]
    cdef uint64_t* child = synstack
    for c in range(last + 1, reach + 1):
        for w in range(P.sw):
            child[w] = syn[w] ^ P.cols[c * P.sw + w]
        support[depth] = <int32_t> c
        sub = _wlex(P, child, costs, min_cost, best, c, partial + costs[c],
                    support, depth + 1, synstack + P.sw, nodes)
        if sub != -1:
            return sub
    return -1


def weighted_search(SyndromePrep P, syn_words, costs, long long node_cap):
    syn = np.ascontiguousarray(syn_words, dtype=np.uint64)
    cdef uint64_t[::1] sv = syn
    if _pc(&sv[0], P.sw) == 0:
        return 0, np.zeros(0, dtype=np.int64)
    cc = np.ascontiguousarray(costs, dtype=np.float64)
    cdef double[::1] cv = cc
    cdef double min_cost = float(cc.min())
    cdef int64_t nodes = node_cap
    banned = np.zeros(P.n, dtype=np.uint8)
    synstack = np.empty((P.n + 2) * P.sw, dtype=np.uint64)
    out = np.empty(P.n + 1, dtype=np.int32)
    cdef uint8_t[::1] bv = banned
    cdef uint64_t[::1] sk = synstack
    cdef int32_t[::1] ov = out
    cdef int status = 0
    cdef double best = _wphase1(P, &sv[0], &cv[0], min_cost, 1e300, 0.0,
                                &bv[0], &sk[0], &nodes, &status)
    if status == -2:
        raise NodeBudgetExceeded("decode search exceeded node budget")
    if best >= 1e299:
        return 1, np.zeros(0, dtype=np.int64)
    cdef int res = _wlex(P, &sv[0], &cv[0], min_cost, best, -1, 0.0,
                         &ov[0], 0, &sk[0], &nodes)
    if res == -2:
        raise NodeBudgetExceeded("decode search exceeded node budget")
    return 0, np.asarray(out[:res], dtype=np.int64)


# ---------------------------------------------------------------------------
# meet-in-the-middle minimum-weight search (single-word syndromes)

cdef uint64_t WIT_MASK = ((<uint64_t> 1) << 20) - 1


cdef inline Py_ssize_t _u64_lower_bound(uint64_t* keys, Py_ssize_t nkeys,
                                        uint64_t s) nogil:
    cdef Py_ssize_t lo = 0, hi = nkeys, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < s:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef int _mitm_lookup(uint64_t* keys, uint64_t* wits, Py_ssize_t nkeys,
                      uint64_t s, uint8_t* banned, int32_t* out) nogil:
    # first stored combination with syndrome s and no banned column; -1 if none
    cdef Py_ssize_t k = _u64_lower_bound(keys, nkeys, s)
    cdef uint64_t w
    cdef int cnt, j
    cdef int32_t c
    cdef int32_t cols[3]
    cdef bint ok
    while k < nkeys and keys[k] == s:
        w = wits[k]
        cnt = 0
        ok = True
        for j in range(3):
            c = <int32_t> ((w >> (20 * j)) & WIT_MASK)
            if c == <int32_t> WIT_MASK:
                break
            if banned[c]:
                ok = False
                break
            cols[cnt] = c
            cnt += 1
        if ok:
            for j in range(cnt):
                out[j] = cols[j]
            return cnt
        k += 1
    return -1


cdef int _mitm_dfs(SyndromePrep P, uint64_t syn, int rem, int kmax,
                   uint64_t* keys1, uint64_t* wits1, Py_ssize_t n1,
                   uint64_t* keys2, uint64_t* wits2, Py_ssize_t n2,
                   uint64_t* keys3, uint64_t* wits3, Py_ssize_t n3,
                   uint8_t* banned, int32_t* out, int64_t* nodes):
    # returns support count, -1 infeasible at this budget, -2 node cap
    cdef int cnt, best_cnt, sub, i, b, nban
    cdef Py_ssize_t r, c, best_row
    cdef uint64_t v
    cdef int32_t myban[MAXBRANCH]
    nodes[0] -= 1
    if nodes[0] < 0:
        return -2
    if syn == 0:
        return 0
    if rem <= kmax:
        # exactly rem columns must finish the residual: shorter completions
        # would have produced a solution in an earlier deepening round
        if rem == 1:
            return _mitm_lookup(keys1, wits1, n1, syn, banned, out)
        if rem == 2:
            return _mitm_lookup(keys2, wits2, n2, syn, banned, out)
        return _mitm_lookup(keys3, wits3, n3, syn, banned, out)
    if __builtin_popcountll(syn) > rem * P.max_colwt:
        return -1
    best_cnt = MAXBRANCH + 1
    best_row = -1
    v = syn
    while v:
        b = __builtin_ctzll(v)
        v &= v - 1
        r = b
        cnt = 0
        for i in range(<int> P.rptr[r], <int> P.rptr[r + 1]):
            if not banned[P.rcol[i]]:
                cnt += 1
        if cnt == 0:
            return -1
        if cnt < best_cnt:
            best_cnt = cnt
            best_row = r
    nban = 0
    sub = -1
    for i in range(<int> P.rptr[best_row], <int> P.rptr[best_row + 1]):
        c = P.rcol[i]
        if banned[c]:
            continue
        banned[c] = 1
        myban[nban] = <int32_t> c
        nban += 1
        sub = _mitm_dfs(P, syn ^ P.cols[c], rem - 1, kmax,
                        keys1, wits1, n1, keys2, wits2, n2, keys3, wits3, n3,
                        banned, out, nodes)
        if sub >= 0:
            out[sub] = <int32_t> c
            sub += 1
            break
        if sub == -2:
            break
        sub = -1
    for i in range(nban):
        banned[myban[i]] = 0
    if sub >= 0 or sub == -2:
        return sub
    return -1


def mitm_min_weight_search(SyndromePrep P, syn_words, keys1, wits1, keys2, wits2,
                           keys3, wits3, int kmax, int w_cap, long long node_cap):
    if P.sw != 1:
        raise ValueError("syndrome does not fit a single 64-bit word")
    syn_a = np.ascontiguousarray(syn_words, dtype=np.uint64)
    cdef uint64_t[::1] sv = syn_a
    cdef uint64_t syn = sv[0]
    if syn == 0:
        return 0, np.zeros(0, dtype=np.int64)
    k1 = np.ascontiguousarray(keys1, dtype=np.uint64)
    w1 = np.ascontiguousarray(wits1, dtype=np.uint64)
    k2 = np.ascontiguousarray(keys2, dtype=np.uint64)
    w2 = np.ascontiguousarray(wits2, dtype=np.uint64)
    k3 = np.ascontiguousarray(keys3, dtype=np.uint64)
    w3 = np.ascontiguousarray(wits3, dtype=np.uint64)
    cdef uint64_t* k1p = <uint64_t*> cnp.PyArray_DATA(k1)
    cdef uint64_t* w1p = <uint64_t*> cnp.PyArray_DATA(w1)
    cdef uint64_t* k2p = <uint64_t*> cnp.PyArray_DATA(k2)
    cdef uint64_t* w2p = <uint64_t*> cnp.PyArray_DATA(w2)
    cdef uint64_t* k3p = <uint64_t*> cnp.PyArray_DATA(k3)
    cdef uint64_t* w3p = <uint64_t*> cnp.PyArray_DATA(w3)
    cdef Py_ssize_t n1 = k1.shape[0], n2 = k2.shape[0], n3 = k3.shape[0]
    cdef int64_t nodes = node_cap
    banned = np.zeros(P.n, dtype=np.uint8)
    out = np.empty(w_cap + 1, dtype=np.int32)
    cdef uint8_t[::1] bv = banned
    cdef int32_t[::1] ov = out
    cdef int pc = __builtin_popcountll(syn)
    cdef int lb = pc // P.max_colwt if P.max_colwt else 1
    if P.max_colwt and pc % P.max_colwt:
        lb += 1
    if lb < 1:
        lb = 1
    cdef int w, kk, res = -1
    for w in range(lb, w_cap + 1):
        kk = kmax if kmax < w else w
        res = _mitm_dfs(P, syn, w, kk, k1p, w1p, n1, k2p, w2p, n2,
                        k3p, w3p, n3, &bv[0], &ov[0], &nodes)
        if res == -2:
            raise NodeBudgetExceeded("decode search exceeded node budget")
        if res >= 0:
            break
        res = -1
    if res < 0:
        return 1, np.zeros(0, dtype=np.int64)
    support = np.sort(np.asarray(out[:res], dtype=np.int64))
    return 0, support


# ---------------------------------------------------------------------------
# belief propagation (product-sum, log domain, flooding schedule)

cdef double TANH_LIM = 1.0 - 1e-12  # matches _pure._TANH_LIM bit for bit


cdef class BpPrep:
    cdef readonly Py_ssize_t m, n, ne
    cdef readonly Py_ssize_t max_deg
    cdef object keep
    cdef int64_t* cptr
    cdef int32_t* cq
    cdef int64_t* qptr
    cdef int32_t* qe


def bp_prep(m, n, check_ptr, check_qubit, qubit_ptr, qubit_edge):
    cdef BpPrep P = BpPrep()
    cp = np.ascontiguousarray(check_ptr, dtype=np.int64)
    cq = np.ascontiguousarray(check_qubit, dtype=np.int32)
    qp = np.ascontiguousarray(qubit_ptr, dtype=np.int64)
    qe = np.ascontiguousarray(qubit_edge, dtype=np.int32)
    P.m = int(m)
    P.n = int(n)
    P.ne = cq.shape[0]
    degs = np.diff(cp)
    P.max_deg = int(degs.max()) if degs.size else 0
    P.keep = (cp, cq, qp, qe)
    P.cptr = <int64_t*> cnp.PyArray_DATA(cp)
    P.cq = <int32_t*> cnp.PyArray_DATA(cq)
    P.qptr = <int64_t*> cnp.PyArray_DATA(qp)
    P.qe = <int32_t*> cnp.PyArray_DATA(qe)
    return P


def bp_run(BpPrep P, prior_llr, syndrome, int max_iter, double clamp):
    prior = np.ascontiguousarray(prior_llr, dtype=np.float64)
    syn = np.ascontiguousarray(syndrome, dtype=np.uint8)
    cdef double[::1] pr = prior
    cdef uint8_t[::1] sy = syn
    q2c_a = np.empty(P.ne, dtype=np.float64)
    c2q_a = np.zeros(P.ne, dtype=np.float64)
    t_a = np.empty(max(P.max_deg, 1), dtype=np.float64)
    post_a = np.array(prior, dtype=np.float64)
    hard_a = np.zeros(P.n, dtype=np.uint8)
    cdef double[::1] q2c = q2c_a
    cdef double[::1] c2q = c2q_a
    cdef double[::1] t = t_a
    cdef double[::1] post = post_a
    cdef uint8_t[::1] hard = hard_a
    cdef Py_ssize_t e, c, q, i, lo, hi, deg
    cdef int it, iters = 0, par
    cdef bint converged = False, ok
    cdef double suffix, prefix, sgn, v, msg, total
    for e in range(P.ne):
        q2c[e] = pr[P.cq[e]]
    for it in range(max_iter):
        iters = it + 1
        for c in range(P.m):
            lo = P.cptr[c]
            hi = P.cptr[c + 1]
            deg = hi - lo
            if deg == 0:
                continue
            for i in range(deg):
                t[i] = tanh(0.5 * q2c[lo + i])
            suffix = 1.0
            for i in range(deg - 1, -1, -1):
                c2q[lo + i] = suffix
                suffix *= t[i]
            sgn = -1.0 if sy[c] else 1.0
            prefix = sgn
            for i in range(deg):
                v = prefix * c2q[lo + i]
                prefix *= t[i]
                if v > TANH_LIM:
                    v = TANH_LIM
                elif v < -TANH_LIM:
                    v = -TANH_LIM
                msg = 2.0 * atanh(v)
                if msg > clamp:
                    msg = clamp
                elif msg < -clamp:
                    msg = -clamp
                c2q[lo + i] = msg
        for q in range(P.n):
            lo = P.qptr[q]
            hi = P.qptr[q + 1]
            total = pr[q]
            for i in range(lo, hi):
                total += c2q[P.qe[i]]
            post[q] = total
            hard[q] = 1 if total < 0.0 else 0
            for i in range(lo, hi):
                e = P.qe[i]
                msg = total - c2q[e]
                if msg > clamp:
                    msg = clamp
                elif msg < -clamp:
                    msg = -clamp
                q2c[e] = msg
        ok = True
        for c in range(P.m):
            par = 0
            for e in range(P.cptr[c], P.cptr[c + 1]):
                par ^= hard[P.cq[e]]
            if par != sy[c]:
                ok = False
                break
        if ok:
            converged = True
            break
    return hard_a, post_a, converged, iters
