"""Parity and oracle tests for the search kernels.

The pure-Python and compiled backends must return identical results. The
search outputs themselves are checked against brute-force enumeration over
all column subsets on small instances.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from lcs_codes._kernels import get_backend
from lcs_codes.gf2 import BitMatrix, _pack

PURE = get_backend("pure")
ACCEL = get_backend("compiled")
BACKENDS = [PURE, ACCEL]


def build_prep(K, dense):
    dense = np.asarray(dense, dtype=np.uint8) & 1
    m, n = dense.shape
    col_words = _pack(np.ascontiguousarray(dense.T), m)
    row_cols = [np.nonzero(dense[i])[0] for i in range(m)]
    row_ptr = np.zeros(m + 1, dtype=np.int64)
    for i, rc in enumerate(row_cols):
        row_ptr[i + 1] = row_ptr[i] + len(rc)
    row_col = (
        np.concatenate(row_cols).astype(np.int64) if m else np.zeros(0, np.int64)
    )
    row_maxcol = np.array([rc[-1] if len(rc) else -1 for rc in row_cols], np.int64)
    max_colwt = int(dense.sum(axis=0).max()) if n else 0
    return K.syndrome_prep(col_words, row_ptr, row_col, row_maxcol, max_colwt)


def pack_syndrome(bits):
    bits = np.asarray(bits, dtype=np.uint8)
    return _pack(bits[None, :], len(bits))[0]


def brute_min_weight(dense, syn, w_cap):
    """All-subset oracle: (weight, lex-smallest support) or None."""
    dense = np.asarray(dense, dtype=np.uint8)
    n = dense.shape[1]
    syn = np.asarray(syn, dtype=np.uint8)
    for w in range(w_cap + 1):
        for combo in itertools.combinations(range(n), w):
            acc = dense[:, list(combo)].sum(axis=1) % 2 if combo else np.zeros_like(syn)
            if np.array_equal(acc, syn):
                return w, list(combo)
    return None


def brute_weighted(dense, syn, costs):
    dense = np.asarray(dense, dtype=np.uint8)
    n = dense.shape[1]
    best = None
    for w in range(n + 1):
        for combo in itertools.combinations(range(n), w):
            acc = dense[:, list(combo)].sum(axis=1) % 2 if combo else np.zeros(dense.shape[0], np.uint8)
            if np.array_equal(acc, np.asarray(syn, np.uint8)):
                cost = sum(costs[i] for i in combo)
                if best is None or cost < best[0] - 1e-9:
                    best = (cost, list(combo))
    return best


def random_instance(rng, m, n, density=0.4):
    while True:
        dense = (rng.random((m, n)) < density).astype(np.uint8)
        if dense.sum(axis=0).all():  # no empty columns
            return dense


def test_min_weight_search_matches_bruteforce():
    rng = np.random.default_rng(11)
    for trial in range(60):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(3, 12))
        dense = random_instance(rng, m, n)
        syn = (rng.random(m) < 0.5).astype(np.uint8)
        ref = brute_min_weight(dense, syn, n)
        for K in BACKENDS:
            prep = build_prep(K, dense)
            status, sup = K.min_weight_search(prep, pack_syndrome(syn), n, 10**7, True)
            if ref is None:
                assert status == 1
            else:
                assert status == 0
                assert list(sup) == ref[1], (trial, K.BACKEND)


def test_min_weight_search_zero_syndrome():
    dense = [[1, 1, 0], [0, 1, 1]]
    for K in BACKENDS:
        prep = build_prep(K, dense)
        status, sup = K.min_weight_search(prep, pack_syndrome([0, 0]), 3, 10**6, True)
        assert status == 0 and len(sup) == 0


def test_min_weight_w_cap_respected():
    # two checks jointly need two columns; cap of 1 must report failure
    dense = [[1, 0], [0, 1]]
    for K in BACKENDS:
        prep = build_prep(K, dense)
        status, _ = K.min_weight_search(prep, pack_syndrome([1, 1]), 1, 10**6, True)
        assert status == 1


def test_node_budget_exceeded():
    rng = np.random.default_rng(12)
    dense = random_instance(rng, 8, 24)
    syn = np.ones(8, dtype=np.uint8)
    for K in BACKENDS:
        prep = build_prep(K, dense)
        with pytest.raises(K.NodeBudgetExceeded):
            K.min_weight_search(prep, pack_syndrome(syn), 24, 2, True)


def test_kernel_vector_search_matches_bruteforce():
    rng = np.random.default_rng(13)
    for trial in range(40):
        m = int(rng.integers(2, 5))
        n = int(rng.integers(4, 11))
        dense = random_instance(rng, m, n)
        r = int(rng.integers(1, 4))
        excl = (rng.random((r, n)) < 0.4).astype(np.uint8)
        ref_by_w = {}
        for w in range(1, n + 1):
            for combo in itertools.combinations(range(n), w):
                v = np.zeros(n, np.uint8)
                v[list(combo)] = 1
                if ((dense @ v) % 2).any():
                    continue
                # outside the exclusion rowspace?
                aug = np.vstack([excl, v])
                ranks = (_gf2_rank(excl), _gf2_rank(aug))
                if ranks[1] > ranks[0]:
                    ref_by_w[w] = list(combo)
                    break
            if w in ref_by_w:
                break
        for K in BACKENDS:
            prep = build_prep(K, dense)
            ew = _pack(excl, n)
            piv = K.rref(ew, n)
            ew = ew[: len(piv)]
            found = None
            for w in range(1, n + 1):
                sup = K.kernel_vector_search(prep, w, ew, piv, 10**7)
                if sup is not None:
                    found = (w, list(sup))
                    break
            if ref_by_w:
                w_ref = min(ref_by_w)
                assert found is not None and found[0] == w_ref, (trial, K.BACKEND)
            else:
                assert found is None


def test_kernel_vector_search_multiword_exclusion():
    # exclusion rows spanning more than one 64-bit word must reduce as ints
    n = 70
    dense = np.zeros((2, n), dtype=np.uint8)
    excl = np.zeros((2, n), dtype=np.uint8)
    excl[0, 0] = 1
    excl[1, 65] = 1
    for K in BACKENDS:
        prep = build_prep(K, dense)
        ew = _pack(excl, n)
        piv = K.rref(ew, n)
        ew = ew[: len(piv)]
        sup = K.kernel_vector_search(prep, 1, ew, piv, 10**6)
        assert list(sup) == [1], K.BACKEND


def test_kernel_vector_search_backend_parity_wide():
    rng = np.random.default_rng(29)
    for trial in range(10):
        m = int(rng.integers(3, 6))
        n = int(rng.integers(66, 90))
        dense = (rng.random((m, n)) < 0.4).astype(np.uint8)
        empty = np.nonzero(dense.sum(axis=0) == 0)[0]
        dense[rng.integers(0, m, size=len(empty)), empty] = 1
        excl = (rng.random((3, n)) < 0.3).astype(np.uint8)
        results = []
        for K in BACKENDS:
            prep = build_prep(K, dense)
            ew = _pack(excl, n)
            piv = K.rref(ew, n)
            ew = ew[: len(piv)]
            found = None
            for w in range(1, 4):
                sup = K.kernel_vector_search(prep, w, ew, piv, 10**7)
                if sup is not None:
                    found = (w, list(sup))
                    break
            results.append(found)
        assert results[0] == results[1], trial


def _gf2_rank(a):
    a = (np.asarray(a, np.uint8) & 1).copy()
    r = 0
    for c in range(a.shape[1]):
        rows = np.nonzero(a[r:, c])[0]
        if not len(rows):
            continue
        a[[r, r + rows[0]]] = a[[r + rows[0], r]]
        for i in range(a.shape[0]):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
        if r == a.shape[0]:
            break
    return r


def test_weighted_search_matches_bruteforce():
    rng = np.random.default_rng(14)
    for trial in range(40):
        m = int(rng.integers(2, 5))
        n = int(rng.integers(3, 10))
        dense = random_instance(rng, m, n)
        syn = (rng.random(m) < 0.5).astype(np.uint8)
        costs = rng.uniform(0.2, 3.0, size=n)
        ref = brute_weighted(dense, syn, costs)
        for K in BACKENDS:
            prep = build_prep(K, dense)
            status, sup = K.weighted_search(prep, pack_syndrome(syn), costs, 10**7)
            if ref is None:
                assert status == 1
            else:
                assert status == 0
                got_cost = costs[list(sup)].sum()
                assert got_cost == pytest.approx(ref[0], abs=1e-9), (trial, K.BACKEND)


def test_weighted_search_lex_among_cost_ties():
    # columns 1 and 2 are identical with equal cost; lex picks column 1
    dense = [[1, 0, 0], [1, 1, 1]]
    costs = np.array([1.0, 0.7, 0.7])
    for K in BACKENDS:
        prep = build_prep(K, dense)
        status, sup = K.weighted_search(prep, pack_syndrome([0, 1]), costs, 10**6)
        assert status == 0 and list(sup) == [1]


def test_backend_parity_random_searches():
    rng = np.random.default_rng(15)
    for _ in range(30):
        m = int(rng.integers(3, 8))
        n = int(rng.integers(6, 18))
        dense = random_instance(rng, m, n)
        syn = (rng.random(m) < 0.5).astype(np.uint8)
        results = []
        for K in BACKENDS:
            prep = build_prep(K, dense)
            results.append(K.min_weight_search(prep, pack_syndrome(syn), n, 10**8, True))
        assert results[0][0] == results[1][0]
        assert list(results[0][1]) == list(results[1][1])


def test_rref_parity():
    rng = np.random.default_rng(16)
    for _ in range(25):
        r = int(rng.integers(1, 30))
        c = int(rng.integers(1, 100))
        dense = (rng.random((r, c)) < 0.5).astype(np.uint8)
        wp = _pack(dense, c)
        wa = wp.copy()
        pp = PURE.rref(wp, c)
        pa = ACCEL.rref(wa, c)
        assert np.array_equal(pp, pa)
        assert np.array_equal(wp, wa)


def build_bp_prep(K, dense):
    dense = np.asarray(dense, np.uint8)
    m, n = dense.shape
    check_cols = [np.nonzero(dense[i])[0] for i in range(m)]
    check_ptr = np.zeros(m + 1, np.int64)
    for i, cc in enumerate(check_cols):
        check_ptr[i + 1] = check_ptr[i] + len(cc)
    check_qubit = np.concatenate(check_cols).astype(np.int64)
    # edge index e enumerates (check, qubit) pairs in check order
    qubit_edges = [[] for _ in range(n)]
    e = 0
    for i in range(m):
        for q in check_cols[i]:
            qubit_edges[q].append(e)
            e += 1
    qubit_ptr = np.zeros(n + 1, np.int64)
    for q in range(n):
        qubit_ptr[q + 1] = qubit_ptr[q] + len(qubit_edges[q])
    qubit_edge = np.concatenate([np.array(x, np.int64) for x in qubit_edges])
    return K.bp_prep(m, n, check_ptr, check_qubit, qubit_ptr, qubit_edge)


def test_bp_parity_bit_identical():
    rng = np.random.default_rng(17)
    for _ in range(15):
        m = int(rng.integers(3, 9))
        n = int(rng.integers(5, 16))
        dense = random_instance(rng, m, n)
        syn = (rng.random(m) < 0.5).astype(np.uint8)
        prior = np.log((1 - 0.05) / 0.05) * np.ones(n)
        outs = []
        for K in BACKENDS:
            prep = build_bp_prep(K, dense)
            outs.append(K.bp_run(prep, prior, syn, 30, 30.0))
        hp, pp, cp, ip = outs[0]
        ha, pa, ca, ia = outs[1]
        assert np.array_equal(hp, ha)
        assert np.array_equal(pp, pa)  # same op order, same libm: bit identical
        assert cp == ca and ip == ia


def test_bp_decodes_single_error_on_repetition_checks():
    # parity checks of a length-6 cycle; a single flip must be recovered
    dense = np.zeros((6, 6), np.uint8)
    for i in range(6):
        dense[i, i] = dense[i, (i + 1) % 6] = 1
    err = np.zeros(6, np.uint8)
    err[2] = 1
    syn = (dense @ err) % 2
    prior = np.log((1 - 0.05) / 0.05) * np.ones(6)
    for K in BACKENDS:
        prep = build_bp_prep(K, dense)
        hard, post, conv, iters = K.bp_run(prep, prior, syn.astype(np.uint8), 30, 30.0)
        assert conv
        assert np.array_equal(hard, err)
