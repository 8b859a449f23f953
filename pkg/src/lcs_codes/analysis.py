"""Dimension, logical bases, and minimum distance for CSS codes.

Distances are found by ascending-weight search for kernel vectors outside
the opposing stabilizer rowspace, so the first hit is exact. A randomized
information-set bound covers instances too large for the exact search.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from . import codes as codes_mod
from . import gf2
from ._kernels import backend as _K
from .decoders import build_syndrome_prep
from .gf2 import BitMatrix, BitVector

DEFAULT_NODE_CAP = 10**9


class LogicalBasis(NamedTuple):
    lx: BitMatrix
    lz: BitMatrix


def dimension(hx: BitMatrix, hz: BitMatrix) -> int:
    """n - rank(hx) - rank(hz)."""
    if hx.cols != hz.cols:
        raise ValueError("hx and hz must act on the same qubits")
    if hx.rows and hz.rows and not (hz @ hx.T).is_zero():
        raise ValueError("CSS condition violated: hz @ hx.T != 0")
    return hx.cols - hx.rank() - hz.rank()


def _complete_logicals(kernel: list[BitVector], stab: BitMatrix, k: int, n: int) -> BitMatrix:
    """Pick k kernel vectors extending the stabilizer rowspace."""
    rows = stab.words.copy()
    pivots = _K.rref(rows, n)
    rows = rows[: len(pivots)]
    picked = []
    for v in kernel:
        vv = v.words.copy()
        _K.reduce_by_rref(rows, pivots, vv)
        if vv.any():
            picked.append(BitVector(n, vv.copy()))
            rows = np.vstack([rows, vv[None, :]])
            pivots = _K.rref(rows, n)
            rows = rows[: len(pivots)]
            if len(picked) == k:
                break
    if len(picked) != k:
        raise RuntimeError("failed to complete a logical basis")
    return BitMatrix.from_rows(picked)


def _gf2_inverse(m: BitMatrix) -> BitMatrix:
    aug = gf2.hstack([m, BitMatrix.identity(m.rows)])
    red, piv = aug.rref()
    if list(piv[: m.rows]) != list(range(m.rows)):
        raise ValueError("matrix is singular over GF(2)")
    dense = red.to_dense()[:, m.rows :]
    return BitMatrix.from_dense(dense)


def symplectic_logical_basis(code, hz: BitMatrix | None = None) -> LogicalBasis:
    """Paired logical bases with lx @ lz.T = identity.

    Accepts a CssCode or an (hx, hz) pair of check matrices.
    """
    if hz is None:
        hx, hz = code.hx, code.hz
    else:
        hx = code
    n = hx.cols
    k = dimension(hx, hz)
    if k == 0:
        empty = BitMatrix.zeros(0, n)
        return LogicalBasis(empty, empty)
    lx_cand = _complete_logicals(hz.nullspace_basis(), hx, k, n)
    lz_cand = _complete_logicals(hx.nullspace_basis(), hz, k, n)
    pairing = lx_cand @ lz_cand.T
    # lz <- (pairing^-1)^T lz_cand makes the pairing exactly the identity
    lz = _gf2_inverse(pairing).T @ lz_cand
    return LogicalBasis(lx_cand, lz)


def lcs_canonical_logicals(l: int, L: int, j: int = 1) -> LogicalBasis:
    """Diagonal logical representatives, one per copy, weight 2l+1.

    Row s places a one on copy (s + i*j) mod L of diagonal column (i,i) in
    the left block (i = 0..l) and the right block (i = 0..l-1). The same
    matrix serves as lx and lz: supports coincide, pairs overlap on 2l+1
    qubits (odd) and distinct rows are disjoint.
    """
    if l < 1 or L < 1:
        raise ValueError("need l >= 1 and L >= 1")
    n = ((l + 1) ** 2 + l * l) * L
    right_offset = (l + 1) ** 2 * L
    rows = []
    for s in range(L):
        v = BitVector.zeros(n)
        for i in range(l + 1):
            copy = (s + i * j) % L
            v.set((i * (l + 1) + i) * L + copy, 1)
        for i in range(l):
            copy = (s + i * j) % L
            v.set(right_offset + (i * l + i) * L + copy, 1)
        rows.append(v)
    m = BitMatrix.from_rows(rows)
    return LogicalBasis(m, m.copy())


# distance ------------------------------------------------------------------


def _distance_prep(code, pauli: str):
    """Kernel matrix and exclusion rowspace for one Pauli type."""
    if pauli == "Z":
        return code.hx, code.hz
    if pauli == "X":
        return code.hz, code.hx
    raise ValueError("pauli must be 'X' or 'Z'")


def exact_distance(code, pauli: str = "Z", w_cap: int | None = None,
                   node_cap: int = DEFAULT_NODE_CAP):
    """Minimum weight of a Pauli-type logical, searched by ascending weight.

    d_Z = min{|v| : hx v = 0, v outside rowspace(hz)} and symmetrically for
    d_X. Returns the integer distance, or the string "> {w_cap}" when no
    logical exists at weight <= w_cap.
    """
    kernel_of, excl = _distance_prep(code, pauli)
    if w_cap is None:
        l = code.meta.get("l")
        w_cap = 2 * l + 2 if l is not None else code.n
    prep = build_syndrome_prep(_K, kernel_of)
    ew = excl.words.copy()
    piv = _K.rref(ew, excl.cols)
    ew = ew[: len(piv)]
    for w in range(1, w_cap + 1):
        sup = _K.kernel_vector_search(prep, w, ew, piv, node_cap)
        if sup is not None:
            return w
    return f"> {w_cap}"


def distance_upper_bound(code, pauli: str = "Z", trials: int = 1000,
                         seed: int = 0) -> int:
    """Randomized information-set bound on the distance.

    Each trial permutes qubits, reduces the kernel basis to RREF, and keeps
    the lightest row that is not a stabilizer. Monotone non-increasing in
    trials; equals the distance with high probability for enough trials.
    """
    kernel_of, excl = _distance_prep(code, pauli)
    n = code.n
    kernel = kernel_of.nullspace_basis()
    if not kernel:
        raise ValueError("trivial kernel: no logical operators")
    kmat = BitMatrix.from_rows(kernel)
    ew = excl.words.copy()
    epiv = _K.rref(ew, n)
    ew = ew[: len(epiv)]
    rng = np.random.default_rng(seed)
    best = n + 1
    kdense = kmat.to_dense()
    for _ in range(trials):
        perm = rng.permutation(n)
        words = gf2._pack(kdense[:, perm], n)
        piv = _K.rref(words, n)
        rows = BitMatrix(len(piv), n, words[: len(piv)])
        weights = rows.row_weights()
        for i in np.argsort(weights):
            if weights[i] >= best:
                break
            # undo the permutation, then discard stabilizer rows
            sup = perm[rows.row_support(int(i))]
            vv = BitVector.from_support(n, sup.tolist()).words
            _K.reduce_by_rref(ew, epiv, vv)
            if vv.any():
                best = int(weights[i])
    if best > n:
        raise RuntimeError("no non-stabilizer kernel row found")
    return best


def verify_distance_conjecture(l_max: int, L_max: int,
                               pairs: Sequence[tuple[int, int]] | None = None,
                               node_cap: int = DEFAULT_NODE_CAP) -> list[dict]:
    """Check d = min(L, 2l+1) over a parameter grid.

    Returns one row per (l, L): both measured distances, the predicted
    value, and whether they match.
    """
    if pairs is None:
        pairs = [(l, L) for l in range(1, l_max + 1) for L in range(2, L_max + 1)]
    report = []
    for l, L in pairs:
        code = codes_mod.lcs_code(l, L)
        predicted = min(L, 2 * l + 1)
        cap = predicted + 1
        dz = exact_distance(code, "Z", w_cap=cap, node_cap=node_cap)
        dx = exact_distance(code, "X", w_cap=cap, node_cap=node_cap)
        report.append(
            {
                "l": l,
                "L": L,
                "d_X": dx,
                "d_Z": dz,
                "predicted": predicted,
                "match": dx == predicted and dz == predicted,
            }
        )
    return report
