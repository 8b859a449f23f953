"""Decoder semantics against enumeration and reference-implementation oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from lcs_codes import codes, decoders
from lcs_codes.gf2 import BitMatrix, BitVector


def ref_bp(hd, priors, syn, max_iter, clamp=30.0, stop=True):
    """Straight transcription of flooding product-sum BP, kept independent of
    the kernels: dict-of-edges messages, explicit leave-one-out products."""
    m, n = hd.shape
    prior = np.log((1.0 - priors) / priors)
    q2c = {(c, q): prior[q] for c in range(m) for q in range(n) if hd[c, q]}
    c2q = {}
    post = prior.astype(float).copy()
    hard = np.zeros(n, dtype=np.uint8)
    lim = 1.0 - 1e-12
    converged = False
    iters = 0
    for it in range(max_iter):
        iters = it + 1
        for c in range(m):
            qs = [q for q in range(n) if hd[c, q]]
            for q in qs:
                v = -1.0 if syn[c] else 1.0
                for q2 in qs:
                    if q2 != q:
                        v *= math.tanh(0.5 * q2c[(c, q2)])
                v = min(max(v, -lim), lim)
                msg = 2.0 * math.atanh(v)
                c2q[(c, q)] = min(max(msg, -clamp), clamp)
        for q in range(n):
            cs = [c for c in range(m) if hd[c, q]]
            total = prior[q] + sum(c2q[(c, q)] for c in cs)
            post[q] = total
            hard[q] = 1 if total < 0.0 else 0
            for c in cs:
                q2c[(c, q)] = min(max(total - c2q[(c, q)], -clamp), clamp)
        if stop and (((hd @ hard) % 2) == syn).all():
            converged = True
            break
    return hard, post, converged, iters


def exact_posterior_llrs(hd, priors, syn):
    """Enumerate every error consistent with the syndrome; return the exact
    log P(e_q=0 | s) / P(e_q=1 | s) per bit."""
    m, n = hd.shape
    w0 = np.zeros(n)
    w1 = np.zeros(n)
    for bits in itertools.product((0, 1), repeat=n):
        e = np.asarray(bits, dtype=np.uint8)
        if (((hd @ e) % 2) != syn).any():
            continue
        pr = float(np.prod(np.where(e, priors, 1.0 - priors)))
        w0 += np.where(e, 0.0, pr)
        w1 += np.where(e, pr, 0.0)
    assert (w0 + w1).min() > 0
    return np.log(w0 / w1)


PATH_H = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
TREE_H = np.array(
    [[1, 1, 1, 0, 0], [0, 0, 1, 1, 0], [0, 0, 0, 1, 1]], dtype=np.uint8
)


class TestBp:
    def test_exact_marginals_on_trees(self):
        # cycle-free Tanner graphs: sum-product is exact once messages settle
        rng = np.random.default_rng(7)
        for hd in (PATH_H, TREE_H):
            m, n = hd.shape
            for _ in range(6):
                priors = rng.uniform(0.05, 0.3, size=n)
                err = (rng.random(n) < 0.4).astype(np.uint8)
                syn = (hd @ err) % 2
                _, post, _, _ = ref_bp(hd, priors, syn, 25, stop=False)
                np.testing.assert_allclose(
                    post, exact_posterior_llrs(hd, priors, syn), rtol=1e-7
                )

    def test_kernel_matches_reference(self):
        from lcs_codes._kernels import get_backend

        rng = np.random.default_rng(3)
        for trial in range(25):
            m = rng.integers(2, 6)
            n = rng.integers(m, 9)
            hd = (rng.random((m, n)) < 0.5).astype(np.uint8)
            hd[hd.sum(axis=1) == 0, 0] = 1
            priors = rng.uniform(0.03, 0.4, size=n)
            err = (rng.random(n) < 0.3).astype(np.uint8)
            syn = ((hd @ err) % 2).astype(np.uint8)
            want = ref_bp(hd, priors, syn, 8)
            for name in ("pure", "compiled"):
                K = get_backend(name)
                prep = decoders.build_bp_prep(K, BitMatrix.from_dense(hd))
                prior_llr = np.log((1.0 - priors) / priors)
                hard, post, conv, iters = K.bp_run(prep, prior_llr, syn, 8, 30.0)
                assert np.array_equal(hard, want[0])
                np.testing.assert_allclose(post, want[1], rtol=1e-9, atol=1e-12)
                assert bool(conv) == want[2]
                assert iters == want[3]

    def test_single_flip_on_repetition_chain(self):
        problem = decoders.DecodeProblem.uniform(
            BitMatrix.from_dense(PATH_H), 0.1, BitVector.from_bits([1, 0])
        )
        res = decoders.bp_decode(problem, max_iter=10)
        assert res.converged
        assert res.estimate.to_bits().tolist() == [1, 0, 0]
        assert res.method == "bp"

    def test_zero_syndrome_converges_immediately(self):
        h = codes.lcs_code(1, 3).hz
        problem = decoders.DecodeProblem.uniform(h, 0.05, BitVector.zeros(h.rows))
        res = decoders.bp_decode(problem, max_iter=30)
        assert res.converged
        assert res.estimate.is_zero()

    def test_max_iter_validation(self):
        with pytest.raises(ValueError):
            decoders.BpDecoder(BitMatrix.from_dense(PATH_H), np.full(3, 0.1), 0)


class TestMle:
    def test_estimate_reproduces_syndrome_and_is_minimal(self):
        code = codes.lcs_code(1, 3)
        hz = code.hz
        rng = np.random.default_rng(11)
        dec = decoders.MleDecoder(hz)
        hzd = hz.to_dense()
        for _ in range(40):
            err = (rng.random(code.n) < 0.12).astype(np.uint8)
            syn = (hzd @ err) % 2
            est = np.zeros(code.n, dtype=np.uint8)
            est[dec.decode_support(syn)] = 1
            assert (((hzd @ est) % 2) == syn).all()
            assert int(est.sum()) <= int(err.sum())

    def test_unsolvable_syndrome_raises(self):
        h = BitMatrix.from_dense(np.zeros((2, 3), dtype=np.uint8))
        dec = decoders.MleDecoder(h)
        with pytest.raises(ValueError, match="column space"):
            dec.decode_support(np.array([1, 0], dtype=np.uint8))

    def test_problem_validation(self):
        h = BitMatrix.from_dense(PATH_H)
        syn = BitVector.from_bits([1, 0])
        with pytest.raises(ValueError):
            decoders.DecodeProblem(h, np.full(3, 0.5), syn)  # prior at 1/2
        with pytest.raises(ValueError):
            decoders.DecodeProblem(h, np.full(2, 0.1), syn)  # wrong length
        with pytest.raises(ValueError):
            decoders.DecodeProblem(h, np.full(3, 0.1), BitVector.zeros(3))

    def test_weighted_prefers_cheap_columns(self):
        # two equal-weight explanations; the prior tilt must decide
        hd = np.array([[1, 1]], dtype=np.uint8)
        h = BitMatrix.from_dense(hd)
        syn = np.array([1], dtype=np.uint8)
        dec = decoders.MleDecoder(h, priors=np.array([0.01, 0.2]))
        assert dec.decode_support(syn).tolist() == [1]


class TestSpacetime:
    def test_lone_delta_flip_costs_one_mechanism(self):
        code = codes.lcs_code(1, 3)
        a, priors = codes_pheno(code, rounds=2, p=0.05, q=0.05)
        m = code.hz.rows
        delta = np.zeros(2 * m, dtype=np.uint8)
        delta[0] = 1
        delta[m] = 1  # a single round-0 measurement flip shows up in both diffs
        res = decoders.mle_decode_spacetime(a, delta, priors)
        sup = res.estimate.support()
        assert len(sup) == 1 and sup[0] == 2 * code.n + 0

    def test_persistent_data_error_decodes_to_one_column(self):
        code = codes.lcs_code(1, 3)
        hzd = code.hz.to_dense()
        q = int(np.argmax(hzd.sum(axis=0)))  # interior qubit, degree >= 2
        a, priors = codes_pheno(code, rounds=2, p=0.05, q=0.05)
        m = code.hz.rows
        delta = np.zeros(2 * m, dtype=np.uint8)
        delta[:m] = hzd[:, q]  # appears in round 0, persists (zero difference after)
        res = decoders.mle_decode_spacetime(a, delta, priors)
        assert list(res.estimate.support()) == [q]

    def test_size_guard(self):
        code = codes.lcs_code(2, 5)
        a, priors = codes_pheno(code, rounds=5, p=0.05, q=0.05)
        with pytest.raises(ValueError, match="too large"):
            decoders.mle_decode_spacetime(a, np.zeros(a.rows, np.uint8), priors)


def codes_pheno(code, rounds, p, q):
    from lcs_codes.sampling import build_pheno_matrix

    return build_pheno_matrix(code, rounds, p, q)


class TestMitm:
    def test_tables_are_sorted_and_keys_match_witnesses(self):
        rng = np.random.default_rng(5)
        hd = (rng.random((7, 12)) < 0.3).astype(np.uint8)
        h = BitMatrix.from_dense(hd)
        weights = 1 << np.arange(7, dtype=np.uint64)
        col_key = (hd.T.astype(np.uint64) * weights).sum(axis=1)
        tables = decoders.build_mitm_tables(h)
        assert tables[-1] == 3
        mask = (1 << 20) - 1
        for k, (keys, wits) in enumerate(zip(tables[0:6:2], tables[1:6:2]), 1):
            assert (np.diff(keys.astype(np.int64)) >= 0).all()
            assert (keys != 0).all()
            assert len(keys) == sum(
                1
                for combo in itertools.combinations(range(12), k)
                if np.bitwise_xor.reduce(col_key[list(combo)]) != 0
            )
            for key, wit in zip(keys, wits):
                cols = [
                    int(wit) >> s & mask
                    for s in (0, 20, 40)
                    if (int(wit) >> s & mask) != mask
                ]
                assert len(cols) == k and cols == sorted(cols)
                assert int(np.bitwise_xor.reduce(col_key[cols])) == int(key)

    def test_matches_plain_search_weight_on_both_backends(self):
        from lcs_codes._kernels import get_backend

        rng = np.random.default_rng(23)
        for _ in range(60):
            m = int(rng.integers(2, 16))
            n = int(rng.integers(m, 30))
            hd = (rng.random((m, n)) < 0.3).astype(np.uint8)
            h = BitMatrix.from_dense(hd)
            tables = decoders.build_mitm_tables(h)
            err = (rng.random(n) < 0.2).astype(np.uint8)
            syn = ((hd @ err) % 2).astype(np.uint8)
            words = BitVector.from_bits(syn).words
            sups = []
            for name in ("pure", "compiled"):
                K = get_backend(name)
                prep = decoders.build_syndrome_prep(K, h)
                status, sup = K.mitm_min_weight_search(
                    prep, words, *tables, n, 10**7
                )
                assert status == 0
                s2, plain = K.min_weight_search(prep, words, n, 10**7, False)
                assert s2 == 0 and len(sup) == len(plain)
                est = np.zeros(n, dtype=np.uint8)
                est[np.asarray(sup, dtype=np.int64)] = 1
                assert (((hd @ est) % 2) == syn).all()
                sups.append(list(sup))
            assert sups[0] == sups[1]

    def test_unsolvable_returns_status_one(self):
        from lcs_codes._kernels import get_backend

        hd = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]], dtype=np.uint8)
        h = BitMatrix.from_dense(hd)
        tables = decoders.build_mitm_tables(h)
        words = BitVector.from_bits(np.array([1, 0, 0], np.uint8)).words
        for name in ("pure", "compiled"):
            K = get_backend(name)
            prep = decoders.build_syndrome_prep(K, h)
            status, sup = K.mitm_min_weight_search(prep, words, *tables, 3, 10**6)
            assert status == 1 and len(sup) == 0

    def test_decoder_enables_tables_only_for_uniform_unordered(self):
        code = codes.lcs_code(1, 3)
        assert decoders.MleDecoder(code.hx).mitm is None  # lex tie-break
        assert decoders.MleDecoder(code.hx, lex_tie=False).mitm is not None
        tilted = np.linspace(0.01, 0.2, code.n)
        assert decoders.MleDecoder(code.hx, tilted, lex_tie=False).mitm is None

    def test_spacetime_decode_agrees_with_plain_search(self):
        from lcs_codes._kernels import backend as K

        code = codes.lcs_code(1, 3)
        a, _ = codes_pheno(code, rounds=3, p=0.05, q=0.05)
        dec = decoders.MleDecoder(a, lex_tie=False)
        assert dec.mitm is not None
        prep = decoders.build_syndrome_prep(K, a)
        ad = a.to_dense()
        rng = np.random.default_rng(9)
        for _ in range(25):
            err = (rng.random(a.cols) < 0.06).astype(np.uint8)
            syn = ((ad @ err) % 2).astype(np.uint8)
            sup = dec.decode_support(syn)
            words = BitVector.from_bits(syn).words
            _, plain = K.min_weight_search(prep, words, a.cols, 10**8, False)
            assert len(sup) == len(plain)
            est = np.zeros(a.cols, dtype=np.uint8)
            est[sup] = 1
            assert (((ad @ est) % 2) == syn).all()


class TestOsd:
    def test_square_invertible_is_exact(self):
        rng = np.random.default_rng(5)
        made = 0
        while made < 10:
            hd = (rng.random((6, 6)) < 0.5).astype(np.uint8)
            h = BitMatrix.from_dense(hd)
            if h.rank() < 6:
                continue
            made += 1
            err = (rng.random(6) < 0.4).astype(np.uint8)
            syn = BitVector.from_bits((hd @ err) % 2)
            problem = decoders.DecodeProblem.uniform(h, 0.1, syn)
            llrs = rng.uniform(-2, 4, size=6)
            for order in (0, 4):
                res = decoders.osd_postprocess(problem, llrs, order)
                assert np.array_equal(res.estimate.to_bits(), err)

    def test_solution_validity_and_order_monotonicity(self):
        code = codes.lcs_code(1, 3)
        hz = code.hz
        hzd = hz.to_dense()
        rng = np.random.default_rng(23)
        priors = np.full(code.n, 0.05)
        for _ in range(20):
            err = (rng.random(code.n) < 0.15).astype(np.uint8)
            syn = BitVector.from_bits((hzd @ err) % 2)
            problem = decoders.DecodeProblem(hz, priors, syn)
            llrs = rng.normal(2.0, 1.5, size=code.n)
            prev_cost = None
            for order in (0, 2, 6, 12):
                res = decoders.osd_postprocess(problem, llrs, order)
                bits = res.estimate.to_bits()
                assert (((hzd @ bits) % 2) == syn.to_bits()).all()
                cost = float(llrs @ bits)
                if prev_cost is not None:
                    assert cost <= prev_cost + 1e-9  # larger sweeps only improve
                prev_cost = cost

    def test_cost_never_beats_mle_on_uniform_priors(self):
        code = codes.lcs_code(1, 3)
        hzd = code.hz.to_dense()
        mle = decoders.MleDecoder(code.hz)
        rng = np.random.default_rng(31)
        for _ in range(15):
            err = (rng.random(code.n) < 0.1).astype(np.uint8)
            syn = (hzd @ err) % 2
            problem = decoders.DecodeProblem(
                code.hz, np.full(code.n, 0.05), BitVector.from_bits(syn)
            )
            res = decoders.osd_postprocess(problem, np.full(code.n, 2.0), 10)
            assert res.estimate.weight >= len(mle.decode_support(syn))

    def test_unsolvable_syndrome_raises(self):
        h = BitMatrix.from_dense(np.array([[1, 1], [1, 1]], dtype=np.uint8))
        problem = decoders.DecodeProblem(
            h, np.full(2, 0.1), BitVector.from_bits([1, 0])
        )
        with pytest.raises(ValueError, match="column space"):
            decoders.osd_postprocess(problem, np.full(2, 1.0), 0)


class TestBposd:
    def test_params_from_distance(self):
        p3 = decoders.BposdParams.for_distance(3)
        assert (p3.max_iter, p3.order) == (1, 9)
        p9 = decoders.BposdParams.for_distance(9)
        assert (p9.max_iter, p9.order) == (4, 60)
        p1 = decoders.BposdParams.for_distance(1)
        assert p1.max_iter == 1

    def test_corrects_all_single_errors_on_small_code(self):
        code = codes.lcs_code(1, 3)
        hzd = code.hz.to_dense()
        lzd = code.lz.to_dense()
        params = decoders.BposdParams.for_distance(3)
        dec = decoders.BposdDecoder(code.hz, np.full(code.n, 0.05), params)
        for q in range(code.n):
            err = np.zeros(code.n, dtype=np.uint8)
            err[q] = 1
            res = dec.decode((hzd @ err) % 2)
            residual = err ^ res.estimate.to_bits()
            assert not ((hzd @ residual) % 2).any()
            assert not ((lzd @ residual) % 2).any()

    def test_falls_back_to_osd_when_bp_stalls(self):
        code = codes.lcs_code(1, 3)
        hzd = code.hz.to_dense()
        params = decoders.BposdParams(max_iter=1, order=4)
        dec = decoders.BposdDecoder(code.hz, np.full(code.n, 0.05), params)
        rng = np.random.default_rng(2)
        seen_osd = False
        for _ in range(60):
            err = (rng.random(code.n) < 0.25).astype(np.uint8)
            syn = (hzd @ err) % 2
            res = dec.decode(syn)
            assert (((hzd @ res.estimate.to_bits()) % 2) == syn).all()
            if res.method != "bp":
                seen_osd = True
                assert res.method in ("bp+osd0", "bp+osd-cs")
        assert seen_osd
