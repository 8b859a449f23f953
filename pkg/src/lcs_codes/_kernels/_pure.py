"""Pure-Python kernels: GF(2) elimination, syndrome-decoding searches, BP.

Reference semantics for the compiled backend in ``_accel.pyx``. Integer
results (pivots, supports, estimates) are bit-identical across backends;
the BP loops mirror the compiled operation order so floating point output
agrees on a given host libm.

Packing convention everywhere: bit j of a row lives in word ``j >> 6`` at
position ``j & 63``; tail bits beyond the declared column count are zero.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"

_ONE = np.uint64(1)


class NodeBudgetExceeded(RuntimeError):
    """Raised when a decode search exceeds its node budget."""


# ---------------------------------------------------------------------------
# elimination


def rref(words, ncols, aug=None):
    """In-place reduced row echelon form; returns pivot columns (int64).

    Deterministic partial pivoting: scan columns left to right, take the
    first row at or below the current one with the bit set. ``aug`` is an
    optional packed block whose rows follow the same row operations.
    """
    rows = words.shape[0]
    npiv = 0
    pivots = []
    for col in range(ncols):
        if npiv == rows:
            break
        w = col >> 6
        mask = _ONE << np.uint64(col & 63)
        hits = np.nonzero(words[npiv:, w] & mask)[0]
        if hits.size == 0:
            continue
        piv = npiv + int(hits[0])
        if piv != npiv:
            words[[piv, npiv]] = words[[npiv, piv]]
            if aug is not None:
                aug[[piv, npiv]] = aug[[npiv, piv]]
        sel = (words[:, w] & mask).astype(bool)
        sel[npiv] = False
        if sel.any():
            words[sel] ^= words[npiv]
            if aug is not None:
                aug[sel] ^= aug[npiv]
        pivots.append(col)
        npiv += 1
    return np.asarray(pivots, dtype=np.int64)


def solve(words, ncols, aug):
    """Particular solution of the system held in (words | aug), or None.

    ``aug`` is a (rows, 1) block carrying the right-hand side in bit 0.
    Operates in place; callers pass copies. Free variables are zero.
    """
    pivots = rref(words, ncols, aug)
    npiv = len(pivots)
    if np.any(aug[npiv:, 0] & _ONE):
        return None
    x = np.zeros(words.shape[1], dtype=np.uint64)
    for i in range(npiv):
        if aug[i, 0] & _ONE:
            col = int(pivots[i])
            x[col >> 6] |= _ONE << np.uint64(col & 63)
    return x


def nullspace(words, ncols):
    """Kernel basis, one packed row per free column (ascending); in-place rref."""
    pivots = rref(words, ncols)
    pivot_set = set(int(p) for p in pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = np.zeros((len(free), words.shape[1]), dtype=np.uint64)
    for bi, f in enumerate(free):
        basis[bi, f >> 6] |= _ONE << np.uint64(f & 63)
        fw = f >> 6
        fmask = _ONE << np.uint64(f & 63)
        for i in range(len(pivots)):
            if words[i, fw] & fmask:
                p = int(pivots[i])
                basis[bi, p >> 6] |= _ONE << np.uint64(p & 63)
    return basis


def reduce_by_rref(rwords, pivots, v):
    """Reduce packed vector v (in place) against an RREF row block."""
    for i in range(len(pivots)):
        p = int(pivots[i])
        if v[p >> 6] & (_ONE << np.uint64(p & 63)):
            v ^= rwords[i]


# ---------------------------------------------------------------------------
# syndrome-decoding searches
#
# The prepared problem keeps columns as Python ints (arbitrary-precision
# bitmasks over the check bits); supports returned are ascending index lists.


class _SyndromePrep:
    __slots__ = ("n", "m", "cols", "row_cols", "row_maxcol", "max_colwt", "sig_index")

    def __init__(self, n, m, cols, row_cols, row_maxcol, max_colwt, sig_index):
        self.n = n
        self.m = m
        self.cols = cols
        self.row_cols = row_cols
        self.row_maxcol = row_maxcol
        self.max_colwt = max_colwt
        self.sig_index = sig_index


def _words_to_int(words):
    return int.from_bytes(np.ascontiguousarray(words).tobytes(), "little")


def syndrome_prep(col_words, row_ptr, row_col, row_maxcol, max_colwt):
    n = col_words.shape[0]
    m = len(row_ptr) - 1
    cols = [_words_to_int(col_words[c]) for c in range(n)]
    row_cols = [
        [int(c) for c in row_col[row_ptr[r] : row_ptr[r + 1]]] for r in range(m)
    ]
    sig_index: dict[int, list[int]] = {}
    for c, sig in enumerate(cols):
        sig_index.setdefault(sig, []).append(c)
    return _SyndromePrep(
        n, m, cols, row_cols, [int(x) for x in row_maxcol], int(max_colwt), sig_index
    )


class _Budget:
    __slots__ = ("left",)

    def __init__(self, cap):
        self.left = cap

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise NodeBudgetExceeded("decode search exceeded node budget")


def _iter_bits(s):
    while s:
        low = s & -s
        yield low.bit_length() - 1
        s ^= low


def _phase1_uniform(prep, syn, budget, banned, nodes):
    """Check-guided DFS at a fixed weight budget; None if infeasible."""
    nodes.spend()
    if syn == 0:
        return []
    if syn.bit_count() > budget * prep.max_colwt:
        return None
    if budget == 1:
        for c in prep.sig_index.get(syn, ()):
            if not banned[c]:
                return [c]
        return None
    # fail-first: branch on the unsatisfied check with fewest live candidates
    best_cands = None
    for r in _iter_bits(syn):
        cands = [c for c in prep.row_cols[r] if not banned[c]]
        if best_cands is None or len(cands) < len(best_cands):
            best_cands = cands
            if not cands:
                return None
    result = None
    newly = []
    for c in best_cands:
        # ban before descending: a column never repeats within its own
        # subtree, and stays excluded for later siblings
        banned[c] = 1
        newly.append(c)
        sub = _phase1_uniform(prep, syn ^ prep.cols[c], budget - 1, banned, nodes)
        if sub is not None:
            result = sub
            result.append(c)
            break
    for c in newly:
        banned[c] = 0
    return result


def _lex_uniform(prep, syn, last, budget, support, accept, nodes):
    """Lexicographic DFS; first solution found is the lex-smallest support.

    With ``accept`` set (kernel-vector search), solutions lighter than the
    full budget are dead ends: they decompose into vectors already rejected
    at smaller weights in the ascending-weight protocol.
    """
    nodes.spend()
    if syn == 0:
        if accept is None:
            return list(support)
        if support and budget == 0 and accept(support):
            return list(support)
        if support:
            return None
        # empty support at the root: fall through and branch
    elif budget == 0:
        return None
    if syn:
        if syn.bit_count() > budget * prep.max_colwt:
            return None
        reach = prep.n - 1
        for r in _iter_bits(syn):
            mc = prep.row_maxcol[r]
            if mc <= last:
                return None
            if mc < reach:
                reach = mc
        if budget == 1:
            for c in prep.sig_index.get(syn, ()):
                if c > last:
                    if accept is None:
                        return [*support, c]
                    if accept([*support, c]):
                        return [*support, c]
            return None
    else:
        reach = prep.n - 1
    # the smallest remaining column must not overshoot every uncovered check
    for c in range(last + 1, reach + 1):
        support.append(c)
        res = _lex_uniform(
            prep, syn ^ prep.cols[c], c, budget - 1, support, accept, nodes
        )
        support.pop()
        if res is not None:
            return res
    return None


def min_weight_search(prep, syn_words, w_cap, node_cap, lex_tie):
    """Minimum-weight solution of (columns · x = syndrome).

    Returns (status, support): status 0 found, 1 none within w_cap.
    With ``lex_tie`` the support is the lexicographically smallest among
    minimum-weight solutions; otherwise the first found deterministically.
    """
    syn = _words_to_int(syn_words)
    nodes = _Budget(node_cap)
    if syn == 0:
        return 0, np.zeros(0, dtype=np.int64)
    banned = bytearray(prep.n)
    lb = max(1, -(-syn.bit_count() // prep.max_colwt)) if prep.max_colwt else 1
    found = None
    for w in range(lb, w_cap + 1):
        found = _phase1_uniform(prep, syn, w, banned, nodes)
        if found is not None:
            break
    if found is None:
        return 1, np.zeros(0, dtype=np.int64)
    if lex_tie and len(found) > 1:
        found = _lex_uniform(prep, syn, -1, len(found), [], None, nodes)
    return 0, np.asarray(sorted(found), dtype=np.int64)


def kernel_vector_search(prep, w, excl_rows, excl_pivots, node_cap):
    """Lex-first weight-w kernel vector not in the span of the exclusion rows.

    ``excl_rows``/``excl_pivots``: RREF rows of the excluded space, packed as
    ints over the n columns with their pivot positions. Returns support or None.
    """
    excl = [(int(p), _words_to_int(r)) for p, r in zip(excl_pivots, excl_rows)]

    def accept(support):
        v = 0
        for c in support:
            v |= 1 << c
        for p, row in excl:
            if (v >> p) & 1:
                v ^= row
        return v != 0

    nodes = _Budget(node_cap)
    res = _lex_uniform(prep, 0, -1, w, [], accept, nodes)
    if res is None:
        return None
    return np.asarray(res, dtype=np.int64)


def _phase1_weighted(prep, syn, costs, min_cost, best, partial, banned, nodes):
    nodes.spend()
    if syn == 0:
        return min(best, partial)
    if prep.max_colwt == 0:
        return best
    lb = -(-syn.bit_count() // prep.max_colwt) * min_cost
    if partial + lb >= best - 1e-12:
        return best
    best_cands = None
    for r in _iter_bits(syn):
        cands = [c for c in prep.row_cols[r] if not banned[c]]
        if best_cands is None or len(cands) < len(best_cands):
            best_cands = cands
            if not cands:
                return best
    newly = []
    for c in best_cands:
        banned[c] = 1
        newly.append(c)
        best = _phase1_weighted(
            prep, syn ^ prep.cols[c], costs, min_cost, best, partial + costs[c], banned, nodes
        )
    for c in newly:
        banned[c] = 0
    return best


def _lex_weighted(prep, syn, costs, min_cost, best, last, partial, support, nodes):
    nodes.spend()
    if syn == 0:
        # the optimum is known from phase 1; reject costlier incidental solutions
        return list(support) if partial <= best + 1e-9 else None
    lb = -(-syn.bit_count() // prep.max_colwt) * min_cost
    if partial + lb > best + 1e-9:
        return None
    reach = prep.n - 1
    for r in _iter_bits(syn):
        mc = prep.row_maxcol[r]
        if mc <= last:
            return None
        if mc < reach:
            reach = mc
    for c in range(last + 1, reach + 1):
        support.append(c)
        res = _lex_weighted(
            prep, syn ^ prep.cols[c], costs, min_cost, best, c,
            partial + costs[c], support, nodes,
        )
        support.pop()
        if res is not None:
            return res
    return None


def weighted_search(prep, syn_words, costs, node_cap):
    """Minimum-cost solution with lex tie-break; costs strictly positive."""
    syn = _words_to_int(syn_words)
    if syn == 0:
        return 0, np.zeros(0, dtype=np.int64)
    costs = [float(x) for x in costs]
    min_cost = min(costs)
    nodes = _Budget(node_cap)
    banned = bytearray(prep.n)
    best = _phase1_weighted(prep, syn, costs, min_cost, math.inf, 0.0, banned, nodes)
    if not math.isfinite(best):
        return 1, np.zeros(0, dtype=np.int64)
    found = _lex_weighted(prep, syn, costs, min_cost, best, -1, 0.0, [], nodes)
    return 0, np.asarray(found, dtype=np.int64)


# ---------------------------------------------------------------------------
# meet-in-the-middle minimum-weight search (single-word syndromes)
#
# Deep uniform searches (space-time systems) get a precomputed table of every
# syndrome reachable by 1..kmax columns. The DFS then only descends to depth
# w-kmax: at remaining budget r <= kmax the residual is finished by a sorted
# binary-search lookup. Iterative deepening over w keeps the first hit minimal.

_WIT_NONE = (1 << 20) - 1


def _wit_cols(wit):
    out = []
    for shift in (0, 20, 40):
        c = (int(wit) >> shift) & _WIT_NONE
        if c != _WIT_NONE:
            out.append(c)
    return out


def _mitm_lookup(keys, wits, s, banned):
    """First stored combination with syndrome s and no banned column."""
    lo = int(np.searchsorted(keys, np.uint64(s), side="left"))
    while lo < len(keys) and int(keys[lo]) == s:
        cols = _wit_cols(wits[lo])
        if not any(banned[c] for c in cols):
            return cols
        lo += 1
    return None


def _mitm_dfs(prep, syn, rem, kmax, db, banned, nodes):
    nodes.spend()
    if syn == 0:
        return []
    if rem <= kmax:
        # exactly rem columns must finish the residual: shorter completions
        # would have produced a solution in an earlier deepening round
        keys, wits = db[rem - 1]
        return _mitm_lookup(keys, wits, syn, banned)
    if syn.bit_count() > rem * prep.max_colwt:
        return None
    best_cands = None
    for r in _iter_bits(syn):
        cands = [c for c in prep.row_cols[r] if not banned[c]]
        if best_cands is None or len(cands) < len(best_cands):
            best_cands = cands
            if not cands:
                return None
    result = None
    newly = []
    for c in best_cands:
        banned[c] = 1
        newly.append(c)
        sub = _mitm_dfs(prep, syn ^ prep.cols[c], rem - 1, kmax, db, banned, nodes)
        if sub is not None:
            result = sub
            result.append(c)
            break
    for c in newly:
        banned[c] = 0
    return result


def mitm_min_weight_search(prep, syn_words, keys1, wits1, keys2, wits2,
                           keys3, wits3, kmax, w_cap, node_cap):
    """Minimum-weight solution via table-completed DFS; m must fit one word.

    Returns (status, support): status 0 found, 1 none within w_cap. The
    support is the first found deterministically, not the lex-smallest.
    """
    if prep.m > 64:
        raise ValueError("syndrome does not fit a single 64-bit word")
    syn = _words_to_int(syn_words)
    if syn == 0:
        return 0, np.zeros(0, dtype=np.int64)
    nodes = _Budget(node_cap)
    banned = bytearray(prep.n)
    db = ((keys1, wits1), (keys2, wits2), (keys3, wits3))
    lb = max(1, -(-syn.bit_count() // prep.max_colwt)) if prep.max_colwt else 1
    for w in range(lb, w_cap + 1):
        found = _mitm_dfs(prep, syn, w, min(kmax, w), db, banned, nodes)
        if found is not None:
            return 0, np.asarray(sorted(found), dtype=np.int64)
    return 1, np.zeros(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# belief propagation (product-sum, log domain, flooding schedule)


class _BpPrep:
    __slots__ = ("m", "n", "check_ptr", "check_qubit", "qubit_ptr", "qubit_edge")

    def __init__(self, m, n, check_ptr, check_qubit, qubit_ptr, qubit_edge):
        self.m = m
        self.n = n
        self.check_ptr = [int(x) for x in check_ptr]
        self.check_qubit = [int(x) for x in check_qubit]
        self.qubit_ptr = [int(x) for x in qubit_ptr]
        self.qubit_edge = [int(x) for x in qubit_edge]


def bp_prep(m, n, check_ptr, check_qubit, qubit_ptr, qubit_edge):
    return _BpPrep(m, n, check_ptr, check_qubit, qubit_ptr, qubit_edge)


_TANH_LIM = 1.0 - 1e-12


def bp_run(prep, prior_llr, syndrome, max_iter, clamp):
    """Flooding product-sum BP. Returns (hard, posterior, converged, iters)."""
    m, n = prep.m, prep.n
    ne = len(prep.check_qubit)
    prior = [float(x) for x in prior_llr]
    syn = [int(x) for x in syndrome]
    q2c = [prior[prep.check_qubit[e]] for e in range(ne)]
    c2q = [0.0] * ne
    post = list(prior)
    hard = [0] * n
    converged = False
    iters = 0
    tanh = math.tanh
    atanh = math.atanh
    for it in range(max_iter):
        iters = it + 1
        # check update: leave-one-out tanh products via prefix/suffix scans
        for c in range(m):
            lo, hi = prep.check_ptr[c], prep.check_ptr[c + 1]
            deg = hi - lo
            if deg == 0:
                continue
            t = [tanh(0.5 * q2c[e]) for e in range(lo, hi)]
            suffix = 1.0
            for i in range(deg - 1, -1, -1):
                c2q[lo + i] = suffix
                suffix *= t[i]
            sgn = -1.0 if syn[c] else 1.0
            prefix = sgn
            for i in range(deg):
                v = prefix * c2q[lo + i]
                prefix *= t[i]
                if v > _TANH_LIM:
                    v = _TANH_LIM
                elif v < -_TANH_LIM:
                    v = -_TANH_LIM
                msg = 2.0 * atanh(v)
                if msg > clamp:
                    msg = clamp
                elif msg < -clamp:
                    msg = -clamp
                c2q[lo + i] = msg
        # qubit update and beliefs
        for q in range(n):
            lo, hi = prep.qubit_ptr[q], prep.qubit_ptr[q + 1]
            total = prior[q]
            for i in range(lo, hi):
                total += c2q[prep.qubit_edge[i]]
            post[q] = total
            hard[q] = 1 if total < 0.0 else 0
            for i in range(lo, hi):
                e = prep.qubit_edge[i]
                msg = total - c2q[e]
                if msg > clamp:
                    msg = clamp
                elif msg < -clamp:
                    msg = -clamp
                q2c[e] = msg
        # convergence: hard decision reproduces the syndrome
        ok = True
        for c in range(m):
            par = 0
            for e in range(prep.check_ptr[c], prep.check_ptr[c + 1]):
                par ^= hard[prep.check_qubit[e]]
            if par != syn[c]:
                ok = False
                break
        if ok:
            converged = True
            break
    return (
        np.asarray(hard, dtype=np.uint8),
        np.asarray(post, dtype=np.float64),
        converged,
        iters,
    )
