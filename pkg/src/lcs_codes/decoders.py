"""Exact most-likely-error decoding and BP+OSD for binary syndrome problems.

The MLE decoder is a branch-and-bound search over error supports: ascending
weight for uniform priors, ascending total cost log((1-p)/p) otherwise, with
a lexicographic tie-break so results are reproducible. BP is log-domain
product-sum with a flooding schedule; OSD post-processing reorders columns
by reliability and sweeps low-weight patterns over the non-pivot block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._kernels import backend as _K
from .gf2 import BitMatrix, BitVector, _pack

DEFAULT_NODE_CAP = 10**9
LLR_CLAMP = 30.0

NodeBudgetExceeded = _K.NodeBudgetExceeded


# problem / result containers -----------------------------------------------------


@dataclass
class DecodeProblem:
    """Checks x mechanisms system h, per-mechanism priors, observed syndrome."""

    h: BitMatrix
    priors: np.ndarray
    syndrome: BitVector

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=np.float64)
        if self.priors.shape != (self.h.cols,):
            raise ValueError("priors length must equal the number of mechanisms")
        if np.any(self.priors <= 0.0) or np.any(self.priors >= 0.5):
            raise ValueError("priors must lie in (0, 0.5)")
        if self.syndrome.n != self.h.rows:
            raise ValueError("syndrome length must equal the number of checks")

    @classmethod
    def uniform(cls, h: BitMatrix, p: float, syndrome) -> "DecodeProblem":
        if not isinstance(syndrome, BitVector):
            syndrome = BitVector.from_bits(syndrome)
        return cls(h, np.full(h.cols, float(p)), syndrome)


@dataclass
class DecodeResult:
    estimate: BitVector
    converged: bool
    method: str
    soft: np.ndarray | None = None


# prep builders --------------------------------------------------------------------


def build_syndrome_prep(K, h: BitMatrix):
    """Column-packed search structure for the support-search kernels."""
    dense = h.to_dense()
    m, n = dense.shape
    col_words = _pack(np.ascontiguousarray(dense.T), m)
    row_ptr = np.zeros(m + 1, dtype=np.int64)
    supports = []
    for i in range(m):
        sup = np.nonzero(dense[i])[0]
        supports.append(sup)
        row_ptr[i + 1] = row_ptr[i] + len(sup)
    row_col = (
        np.concatenate(supports).astype(np.int64) if m else np.zeros(0, np.int64)
    )
    row_maxcol = np.array(
        [s[-1] if len(s) else -1 for s in supports], dtype=np.int64
    )
    max_colwt = int(dense.sum(axis=0).max()) if n else 0
    return K.syndrome_prep(col_words, row_ptr, row_col, row_maxcol, max_colwt)


def build_bp_prep(K, h: BitMatrix):
    """Edge-indexed Tanner graph structure for belief propagation."""
    dense = h.to_dense()
    m, n = dense.shape
    check_cols = [np.nonzero(dense[i])[0] for i in range(m)]
    check_ptr = np.zeros(m + 1, np.int64)
    for i, cc in enumerate(check_cols):
        check_ptr[i + 1] = check_ptr[i] + len(cc)
    check_qubit = (
        np.concatenate(check_cols).astype(np.int64) if m else np.zeros(0, np.int64)
    )
    qubit_edges: list[list[int]] = [[] for _ in range(n)]
    e = 0
    for i in range(m):
        for q in check_cols[i]:
            qubit_edges[q].append(e)
            e += 1
    qubit_ptr = np.zeros(n + 1, np.int64)
    for q in range(n):
        qubit_ptr[q + 1] = qubit_ptr[q] + len(qubit_edges[q])
    qubit_edge = (
        np.concatenate([np.asarray(x, np.int64) for x in qubit_edges])
        if n and e
        else np.zeros(0, np.int64)
    )
    return K.bp_prep(m, n, check_ptr, check_qubit, qubit_ptr, qubit_edge)


MITM_MAX_CHECKS = 64
MITM_MAX_TRIPLES = 4_000_000
_WIT_NONE = np.uint64((1 << 20) - 1)


def build_mitm_tables(h: BitMatrix):
    """Sorted syndrome tables for all 1..kmax column combinations.

    Keys are syndromes packed into one 64-bit word; witnesses pack the column
    indices (20 bits each, all-ones when absent). Equal keys keep ascending
    combination order so lookups are deterministic across backends. Returns
    (keys1, wits1, keys2, wits2, keys3, wits3, kmax).
    """
    dense = h.to_dense()
    m, n = dense.shape
    if m > MITM_MAX_CHECKS:
        raise ValueError("syndrome does not fit a single 64-bit word")
    weights = np.uint64(1) << np.arange(m, dtype=np.uint64)
    cols = (dense.T.astype(np.uint64) * weights[None, :]).sum(
        axis=1, dtype=np.uint64
    )

    def sort_table(keys, wits):
        keep = keys != 0
        keys, wits = keys[keep], wits[keep]
        order = np.argsort(keys, kind="stable")
        return np.ascontiguousarray(keys[order]), np.ascontiguousarray(wits[order])

    idx = np.arange(n, dtype=np.uint64)
    keys1, wits1 = sort_table(cols, idx | (_WIT_NONE << 20) | (_WIT_NONE << 40))
    i2, j2 = np.triu_indices(n, 1)
    i2u, j2u = i2.astype(np.uint64), j2.astype(np.uint64)
    pair_keys = cols[i2] ^ cols[j2]
    keys2, wits2 = sort_table(
        pair_keys.copy(), i2u | (j2u << 20) | (_WIT_NONE << 40)
    )
    kmax = 3 if math.comb(n, 3) <= MITM_MAX_TRIPLES else 2
    if kmax == 3 and n >= 3:
        part_keys, part_wits = [], []
        for a in range(n - 2):
            start = int(np.searchsorted(i2, a, side="right"))
            part_keys.append(cols[a] ^ pair_keys[start:])
            part_wits.append(
                np.uint64(a) | (i2u[start:] << 20) | (j2u[start:] << 40)
            )
        keys3, wits3 = sort_table(
            np.concatenate(part_keys), np.concatenate(part_wits)
        )
    else:
        keys3 = np.zeros(0, dtype=np.uint64)
        wits3 = np.zeros(0, dtype=np.uint64)
    return keys1, wits1, keys2, wits2, keys3, wits3, kmax


def _pack_syndrome(syndrome) -> np.ndarray:
    if isinstance(syndrome, BitVector):
        return syndrome.words.copy()
    bits = np.asarray(syndrome, dtype=np.uint8)
    return _pack(bits[None, :], bits.shape[0])[0]


def _support_vector(n: int, support: Iterable[int]) -> BitVector:
    return BitVector.from_support(n, [int(c) for c in support])


# MLE ------------------------------------------------------------------------------


class MleDecoder:
    """Reusable exact decoder; precomputes the search structure once."""

    def __init__(self, h: BitMatrix, priors: np.ndarray | None = None,
                 node_cap: int = DEFAULT_NODE_CAP, lex_tie: bool = True):
        self.h = h
        self.node_cap = int(node_cap)
        self.lex_tie = lex_tie
        self.prep = build_syndrome_prep(_K, h)
        if priors is None:
            self.costs = None
        else:
            priors = np.asarray(priors, dtype=np.float64)
            if np.allclose(priors, priors[0]):
                self.costs = None
            else:
                self.costs = np.log((1.0 - priors) / priors)
        # deep uniform searches without the lex pass can trade memory for
        # speed: tabulate every <=3-column syndrome and meet in the middle
        self.mitm = None
        if self.costs is None and not lex_tie and h.rows <= MITM_MAX_CHECKS:
            self.mitm = build_mitm_tables(h)

    def decode_support(self, syndrome) -> np.ndarray:
        """Mechanism indices of the minimum-cost solution."""
        words = _pack_syndrome(syndrome)
        if self.mitm is not None:
            status, sup = _K.mitm_min_weight_search(
                self.prep, words, *self.mitm, self.h.cols, self.node_cap
            )
        elif self.costs is None:
            status, sup = _K.min_weight_search(
                self.prep, words, self.h.cols, self.node_cap, self.lex_tie
            )
        else:
            status, sup = _K.weighted_search(
                self.prep, words, self.costs, self.node_cap
            )
        if status != 0:
            raise ValueError("syndrome is not in the column space of h")
        return np.asarray(sup, dtype=np.int64)

    def decode(self, syndrome) -> BitVector:
        return _support_vector(self.h.cols, self.decode_support(syndrome))


def mle_decode(problem: DecodeProblem, node_cap: int = DEFAULT_NODE_CAP) -> DecodeResult:
    """Minimum-cost estimate; lexicographically smallest support among ties."""
    dec = MleDecoder(problem.h, problem.priors, node_cap=node_cap)
    est = dec.decode(problem.syndrome)
    return DecodeResult(estimate=est, converged=True, method="mle", soft=None)


def mle_decode_spacetime(a: BitMatrix, delta_s, priors: np.ndarray | None = None,
                         node_cap: int = DEFAULT_NODE_CAP,
                         max_data_cols: int = 250) -> DecodeResult:
    """Minimum-weight space-time solution of a (delta-syndrome) system.

    The data-column count (a.cols - a.rows) is guarded: exact search stays
    desk-feasible only for n*rounds up to a few hundred.
    """
    if a.cols - a.rows > max_data_cols:
        raise ValueError(
            f"space-time system too large for exact search: "
            f"{a.cols - a.rows} data columns > {max_data_cols}"
        )
    if not isinstance(delta_s, BitVector):
        delta_s = BitVector.from_bits(delta_s)
    dec = MleDecoder(a, priors, node_cap=node_cap, lex_tie=False)
    est = dec.decode(delta_s)
    return DecodeResult(estimate=est, converged=True, method="mle", soft=None)


# degeneracy-aware ML --------------------------------------------------------------


class ExactMlDecoder:
    """True maximum-likelihood decoder over logical classes.

    A minimum-weight estimate is only the most likely *single* error; summing
    the likelihood of every error in each logical coset and returning a
    representative of the heaviest coset is strictly better whenever classes
    are degenerate. The sum is exact: each connected component of the graph
    binding qubits through shared check or logical rows is enumerated in
    full, so components are capped at max_component qubits and the per-
    component table needs 2^(checks+logicals) entries.
    """

    _CHUNK = 1 << 18
    _MAX_TABLE = 1 << 26

    def __init__(self, hx: BitMatrix, lx: BitMatrix, p: float,
                 max_component: int = 22):
        if hx.cols != lx.cols:
            raise ValueError("hx and lx must act on the same qubits")
        if not (0.0 < p < 1.0):
            raise ValueError("p must lie in (0, 1)")
        n = hx.cols
        hxd = hx.to_dense().astype(np.uint8)
        lxd = lx.to_dense().astype(np.uint8)
        self.n = n
        self.m = hxd.shape[0]
        self._zero_rows = np.flatnonzero(~hxd.any(axis=1))
        self._components = []
        for cols in self._connected_columns(hxd, lxd):
            if len(cols) > max_component:
                raise ValueError(
                    f"component of {len(cols)} qubits exceeds the exact "
                    f"enumeration cap ({max_component})"
                )
            self._components.append(self._build_component(hxd, lxd, cols, p))

    @staticmethod
    def _connected_columns(hxd: np.ndarray, lxd: np.ndarray) -> list[np.ndarray]:
        n = hxd.shape[1]
        parent = list(range(n))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for row in np.vstack([hxd, lxd]):
            sup = np.flatnonzero(row)
            for c in sup[1:]:
                parent[find(int(c))] = find(int(sup[0]))
        roots: dict[int, list[int]] = {}
        for c in range(n):
            roots.setdefault(find(c), []).append(c)
        return [np.asarray(v, dtype=np.int64) for v in roots.values()]

    def _build_component(self, hxd, lxd, cols, p):
        rows = np.flatnonzero(hxd[:, cols].any(axis=1))
        lrows = np.flatnonzero(lxd[:, cols].any(axis=1))
        h_c = hxd[np.ix_(rows, cols)]
        l_c = lxd[np.ix_(lrows, cols)]
        n_c, m_c, k_c = len(cols), len(rows), len(lrows)
        if (1 << m_c) * (1 << k_c) > self._MAX_TABLE:
            raise ValueError(
                f"class table of 2^{m_c + k_c} entries exceeds the exact "
                f"enumeration cap"
            )
        x = p / (1.0 - p)
        pows = x ** np.arange(n_c + 1, dtype=np.float64)
        shifts = np.arange(n_c, dtype=np.int64)
        syn_pows = (1 << np.arange(m_c, dtype=np.int64))
        mask_pows = (1 << np.arange(k_c, dtype=np.int64))
        shape = (1 << m_c, 1 << k_c)
        class_x = np.zeros(shape, dtype=np.float64)
        rep_w = np.full(shape, n_c + 1, dtype=np.int64)
        rep = np.zeros(shape, dtype=np.int64)
        for lo in range(0, 1 << n_c, self._CHUNK):
            idx = np.arange(lo, min(lo + self._CHUNK, 1 << n_c), dtype=np.int64)
            bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
            w = bits.sum(axis=1, dtype=np.int64)
            s = ((bits @ h_c.T) & 1).astype(np.int64) @ syn_pows
            mk = ((bits @ l_c.T) & 1).astype(np.int64) @ mask_pows
            np.add.at(class_x, (s, mk), pows[w])
            np.minimum.at(rep_w, (s, mk), w)
        # second sweep: any pattern matching the class minimum is a valid
        # representative; last write wins, which is deterministic
        for lo in range(0, 1 << n_c, self._CHUNK):
            idx = np.arange(lo, min(lo + self._CHUNK, 1 << n_c), dtype=np.int64)
            bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
            w = bits.sum(axis=1, dtype=np.int64)
            s = ((bits @ h_c.T) & 1).astype(np.int64) @ syn_pows
            mk = ((bits @ l_c.T) & 1).astype(np.int64) @ mask_pows
            sel = w == rep_w[s, mk]
            rep[s[sel], mk[sel]] = idx[sel]
        best = np.argmax(class_x, axis=1)
        arange = np.arange(shape[0])
        return {
            "cols": cols,
            "rows": rows,
            "syn_pows": syn_pows,
            "shifts": shifts,
            "rep": rep[arange, best],
            "valid": class_x[arange, best] > 0.0,
        }

    @property
    def component_sizes(self) -> list[int]:
        return sorted(len(c["cols"]) for c in self._components)

    def decode_dense(self, syndrome) -> np.ndarray:
        syn = np.asarray(syndrome, dtype=np.int64) & 1
        if syn.shape != (self.m,):
            raise ValueError(f"syndrome must have {self.m} bits")
        if syn[self._zero_rows].any():
            raise ValueError("syndrome is not in the column space of hx")
        est = np.zeros(self.n, dtype=np.uint8)
        for comp in self._components:
            s_idx = int(syn[comp["rows"]] @ comp["syn_pows"])
            if not comp["valid"][s_idx]:
                raise ValueError("syndrome is not in the column space of hx")
            est[comp["cols"]] = (comp["rep"][s_idx] >> comp["shifts"]) & 1
        return est

    def decode(self, syndrome) -> BitVector:
        return BitVector.from_bits(self.decode_dense(syndrome))


# BP -------------------------------------------------------------------------------


class BpDecoder:
    """Reusable product-sum BP; precomputes the Tanner structure once."""

    def __init__(self, h: BitMatrix, priors: np.ndarray, max_iter: int,
                 clamp: float = LLR_CLAMP):
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        self.h = h
        self.max_iter = int(max_iter)
        self.clamp = float(clamp)
        self.prep = build_bp_prep(_K, h)
        priors = np.asarray(priors, dtype=np.float64)
        self.prior_llr = np.log((1.0 - priors) / priors)

    def run(self, syndrome):
        if isinstance(syndrome, BitVector):
            syndrome = syndrome.to_bits()
        syndrome = np.ascontiguousarray(syndrome, dtype=np.uint8)
        return _K.bp_run(self.prep, self.prior_llr, syndrome, self.max_iter, self.clamp)


def bp_decode(problem: DecodeProblem, max_iter: int,
              clamp: float = LLR_CLAMP) -> DecodeResult:
    """Flooding product-sum BP; estimate satisfies the syndrome iff converged."""
    dec = BpDecoder(problem.h, problem.priors, max_iter, clamp)
    hard, post, converged, _ = dec.run(problem.syndrome)
    return DecodeResult(
        estimate=BitVector.from_bits(hard),
        converged=bool(converged),
        method="bp",
        soft=post,
    )


# OSD ------------------------------------------------------------------------------


def _osd_candidates(nn: int, order: int):
    """Sweep patterns over the non-pivot block: weight 1 anywhere, weight 2
    within the first `order` positions."""
    yield ()
    for a in range(nn):
        yield (a,)
    lim = min(order, nn)
    for a in range(lim):
        for b in range(a + 1, lim):
            yield (a, b)


def osd_postprocess(problem: DecodeProblem, llrs: np.ndarray,
                    order: int) -> DecodeResult:
    """Ordered-statistics solve in reliability order with combination sweep.

    Columns sort by ascending LLR (least reliable first, ties by index); the
    RREF pivot scan in that order is the greedy independent set. Every
    candidate satisfies the syndrome; the cheapest by soft cost wins.
    """
    h, syndrome = problem.h, problem.syndrome
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape != (h.cols,):
        raise ValueError("llrs length must equal the number of mechanisms")
    perm = np.lexsort((np.arange(h.cols), llrs))
    dense = h.to_dense()[:, perm]
    syn_bits = syndrome.to_bits()
    aug = np.concatenate([dense, syn_bits[:, None]], axis=1).astype(np.uint8)
    words = _pack(aug, h.cols + 1)
    pivots = _K.rref(words, h.cols + 1)
    pivots = list(pivots)
    if pivots and pivots[-1] == h.cols:
        raise ValueError("syndrome is not in the column space of h")
    r = len(pivots)
    red = BitMatrix(r, h.cols + 1, words[:r]).to_dense()
    xr0 = red[:, h.cols].copy()
    nonpivots = np.setdiff1d(np.arange(h.cols), pivots, assume_unique=False)
    cols_np = red[:, nonpivots] if len(nonpivots) else np.zeros((r, 0), np.uint8)
    llr_perm = llrs[perm]
    piv_llr = llr_perm[pivots] if r else np.zeros(0)
    best_cost = None
    best = None
    for t in _osd_candidates(len(nonpivots), order):
        xr = xr0.copy()
        for a in t:
            xr ^= cols_np[:, a]
        cost = float(piv_llr @ xr) + float(llr_perm[nonpivots[list(t)]].sum())
        if best_cost is None or cost < best_cost - 1e-12:
            best_cost = cost
            best = (xr, t)
    xr, t = best
    est = np.zeros(h.cols, dtype=np.uint8)
    for i in np.nonzero(xr)[0]:
        est[perm[pivots[i]]] = 1
    for a in t:
        est[perm[nonpivots[a]]] = 1
    method = "bp+osd0" if order == 0 else "bp+osd-cs"
    return DecodeResult(
        estimate=BitVector.from_bits(est), converged=True, method=method, soft=llrs
    )


@dataclass(frozen=True)
class BposdParams:
    max_iter: int
    order: int
    clamp: float = LLR_CLAMP

    @classmethod
    def for_distance(cls, d: int) -> "BposdParams":
        return cls(max_iter=max(1, d // 2), order=min(d * d, 60))


class BposdDecoder:
    """BP with OSD fallback, reusing preps across shots."""

    def __init__(self, h: BitMatrix, priors: np.ndarray, params: BposdParams):
        self.h = h
        self.priors = np.asarray(priors, dtype=np.float64)
        self.params = params
        self.bp = BpDecoder(h, self.priors, params.max_iter, params.clamp)

    def decode(self, syndrome) -> DecodeResult:
        hard, post, converged, _ = self.bp.run(syndrome)
        if converged:
            return DecodeResult(
                estimate=BitVector.from_bits(hard),
                converged=True,
                method="bp",
                soft=post,
            )
        if not isinstance(syndrome, BitVector):
            syndrome = BitVector.from_bits(syndrome)
        problem = DecodeProblem(self.h, self.priors, syndrome)
        return osd_postprocess(problem, post, self.params.order)


def bposd_decode(problem: DecodeProblem, params: BposdParams) -> DecodeResult:
    """BP first; on non-convergence, OSD over the BP posteriors."""
    dec = BposdDecoder(problem.h, problem.priors, params)
    return dec.decode(problem.syndrome)
