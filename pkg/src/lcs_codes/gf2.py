"""Bit-packed GF(2) vectors and matrices.

Bit j of a row lives in 64-bit word j >> 6 at position j & 63 (little
endian). Tail bits past the declared length stay zero, so word-wise XOR
and popcount need no masking. Elimination runs through the kernel backend
(compiled when available, pure otherwise) with deterministic first-set-bit
pivoting.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from ._kernels import backend as _K

__all__ = [
    "BitVector",
    "BitMatrix",
    "rank",
    "solve",
    "nullspace_basis",
    "rowspace_contains",
    "kron",
]


def _nwords(nbits: int) -> int:
    return (nbits + 63) >> 6


def _pack(dense: np.ndarray, nbits: int) -> np.ndarray:
    """Pack a (rows, nbits) 0/1 array into (rows, nwords) uint64."""
    dense = np.asarray(dense, dtype=np.uint8) & 1
    rows = dense.shape[0]
    W = _nwords(nbits)
    if nbits == 0:
        return np.zeros((rows, 0), dtype=np.uint64)
    nbytes = W * 8
    packed = np.packbits(dense, axis=1, bitorder="little")
    if packed.shape[1] < nbytes:
        pad = np.zeros((rows, nbytes - packed.shape[1]), dtype=np.uint8)
        packed = np.concatenate([packed, pad], axis=1)
    return np.ascontiguousarray(packed).view("<u8").reshape(rows, W)


def _unpack(words: np.ndarray, nbits: int) -> np.ndarray:
    rows = words.shape[0]
    if nbits == 0:
        return np.zeros((rows, 0), dtype=np.uint8)
    bytes_ = np.ascontiguousarray(words).view(np.uint8).reshape(rows, -1)
    bits = np.unpackbits(bytes_, axis=1, bitorder="little")
    return bits[:, :nbits]


class BitVector:
    """Length-n bit vector; all arithmetic is mod 2."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray | None = None):
        self.n = int(n)
        if words is None:
            self.words = np.zeros(_nwords(self.n), dtype=np.uint64)
        else:
            self.words = words

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        arr = np.atleast_1d(arr).astype(np.uint8) & 1
        return cls(arr.shape[0], _pack(arr[None, :], arr.shape[0])[0])

    @classmethod
    def from_support(cls, n: int, support: Iterable[int]) -> "BitVector":
        v = cls(n)
        for i in support:
            v.words[i >> 6] ^= np.uint64(1) << np.uint64(i & 63)
        return v

    def to_bits(self) -> np.ndarray:
        return _unpack(self.words[None, :], self.n)[0]

    def get(self, i: int) -> int:
        return int(self.words[i >> 6] >> np.uint64(i & 63)) & 1

    def set(self, i: int, value: int) -> None:
        mask = np.uint64(1) << np.uint64(i & 63)
        if value & 1:
            self.words[i >> 6] |= mask
        else:
            self.words[i >> 6] &= ~mask

    @property
    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def support(self) -> list[int]:
        return np.nonzero(self.to_bits())[0].tolist()

    def dot(self, other: "BitVector") -> int:
        """Mod-2 inner product."""
        return int(np.bitwise_count(self.words & other.words).sum()) & 1

    def copy(self) -> "BitVector":
        return BitVector(self.n, self.words.copy())

    def is_zero(self) -> bool:
        return not self.words.any()

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError("length mismatch")
        return BitVector(self.n, self.words ^ other.words)

    def __and__(self, other: "BitVector") -> "BitVector":
        return BitVector(self.n, self.words & other.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.n == other.n
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        bits = "".join(str(b) for b in self.to_bits()[:80])
        tail = "..." if self.n > 80 else ""
        return f"BitVector({bits}{tail})"


class BitMatrix:
    """rows x cols matrix over GF(2), rows packed into 64-bit words."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        self.rows = int(rows)
        self.cols = int(cols)
        if words is None:
            self.words = np.zeros((self.rows, _nwords(self.cols)), dtype=np.uint64)
        else:
            self.words = words

    # construction ----------------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        m = cls(n, n)
        for i in range(n):
            m.words[i, i >> 6] = np.uint64(1) << np.uint64(i & 63)
        return m

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        arr = np.atleast_2d(np.asarray(dense, dtype=np.uint8)) & 1
        return cls(arr.shape[0], arr.shape[1], _pack(arr, arr.shape[1]))

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector]) -> "BitMatrix":
        if not rows:
            raise ValueError("need at least one row")
        n = rows[0].n
        m = cls(len(rows), n)
        for i, r in enumerate(rows):
            if r.n != n:
                raise ValueError("row length mismatch")
            m.words[i] = r.words
        return m

    def to_dense(self) -> np.ndarray:
        return _unpack(self.words, self.cols)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    # access ----------------------------------------------------------------

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.words[i].copy())

    def row_support(self, i: int) -> list[int]:
        return np.nonzero(_unpack(self.words[i : i + 1], self.cols)[0])[0].tolist()

    def get(self, i: int, j: int) -> int:
        return int(self.words[i, j >> 6] >> np.uint64(j & 63)) & 1

    def set(self, i: int, j: int, value: int) -> None:
        mask = np.uint64(1) << np.uint64(j & 63)
        if value & 1:
            self.words[i, j >> 6] |= mask
        else:
            self.words[i, j >> 6] &= ~mask

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def col_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0, dtype=np.int64)

    # algebra ----------------------------------------------------------------

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    @property
    def T(self) -> "BitMatrix":
        return self.transpose()

    def __matmul__(self, other):
        if isinstance(other, BitVector):
            if other.n != self.cols:
                raise ValueError("dimension mismatch")
            par = np.bitwise_count(self.words & other.words[None, :]).sum(axis=1)
            bits = (par & 1).astype(np.uint8)
            return BitVector(self.rows, _pack(bits[None, :], self.rows)[0])
        if isinstance(other, BitMatrix):
            if other.rows != self.cols:
                raise ValueError("dimension mismatch")
            bt = other.transpose()
            par = np.bitwise_count(
                self.words[:, None, :] & bt.words[None, :, :]
            ).sum(axis=2)
            return BitMatrix.from_dense((par & 1).astype(np.uint8))
        return NotImplemented

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.words ^ other.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def is_zero(self) -> bool:
        return not self.words.any()

    def permute_columns(self, perm) -> "BitMatrix":
        """Column gather: result[:, j] = self[:, perm[j]]."""
        perm = np.asarray(perm, dtype=np.int64)
        return BitMatrix.from_dense(self.to_dense()[:, perm])

    # elimination -------------------------------------------------------------

    def rref(self) -> tuple["BitMatrix", np.ndarray]:
        """Reduced row echelon form and pivot columns."""
        words = self.words.copy()
        pivots = _K.rref(words, self.cols)
        return BitMatrix(self.rows, self.cols, words), pivots

    def rank(self) -> int:
        words = self.words.copy()
        return int(len(_K.rref(words, self.cols)))

    def solve(self, b: BitVector) -> BitVector | None:
        """Any x with self @ x = b, or None; free variables are zero."""
        if b.n != self.rows:
            raise ValueError("dimension mismatch")
        words = self.words.copy()
        bits = b.to_bits().astype(np.uint64)
        aug = bits[:, None]
        x = _K.solve(words, self.cols, aug)
        if x is None:
            return None
        return BitVector(self.cols, x)

    def nullspace_basis(self) -> list[BitVector]:
        words = self.words.copy()
        basis = _K.nullspace(words, self.cols)
        return [BitVector(self.cols, basis[i].copy()) for i in range(basis.shape[0])]

    def rowspace_contains(self, v: BitVector) -> bool:
        if v.n != self.cols:
            raise ValueError("dimension mismatch")
        words = self.words.copy()
        pivots = _K.rref(words, self.cols)
        vv = v.words.copy()
        _K.reduce_by_rref(words[: len(pivots)], pivots, vv)
        return not vv.any()

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


# module-level forms -----------------------------------------------------------


def rank(m: BitMatrix) -> int:
    return m.rank()


def solve(m: BitMatrix, b: BitVector) -> BitVector | None:
    return m.solve(b)


def nullspace_basis(m: BitMatrix) -> list[BitVector]:
    return m.nullspace_basis()


def rowspace_contains(m: BitMatrix, v: BitVector) -> bool:
    return m.rowspace_contains(v)


def kron(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    return BitMatrix.from_dense(np.kron(a.to_dense(), b.to_dense()))


def hstack(blocks: Sequence[BitMatrix]) -> BitMatrix:
    return BitMatrix.from_dense(np.hstack([b.to_dense() for b in blocks]))


def vstack(blocks: Sequence[BitMatrix]) -> BitMatrix:
    return BitMatrix.from_dense(np.vstack([b.to_dense() for b in blocks]))
