"""Circulant-ring matrices, the lift, hypergraph products, and the LCS family.

A circulant over lift size L is a mod-2 sum of cyclic right shifts P^(i) of
the LxL identity; these commute, so the hypergraph product taken over the
ring of circulants still yields a valid CSS pair after replacing every entry
by its binary representation (the lift).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import gf2
from .gf2 import BitMatrix


class DegenerateShiftError(ValueError):
    """Shift choices that collapse the interconnection structure."""


class CirculantPoly:
    """Sum of cyclic shifts sum_i P^(i) over a fixed lift size L."""

    __slots__ = ("L", "exponents")

    def __init__(self, L: int, exponents: Sequence[int] = ()):
        if L < 1:
            raise ValueError("lift size must be >= 1")
        self.L = int(L)
        self.exponents = frozenset(e % self.L for e in exponents)

    @classmethod
    def zero(cls, L: int) -> "CirculantPoly":
        return cls(L)

    @classmethod
    def identity(cls, L: int) -> "CirculantPoly":
        return cls(L, (0,))

    @classmethod
    def shift(cls, L: int, i: int) -> "CirculantPoly":
        return cls(L, (i,))

    def is_zero(self) -> bool:
        return not self.exponents

    def transpose(self) -> "CirculantPoly":
        """P^(i) transposed is the left shift P^(L-i)."""
        return CirculantPoly(self.L, ((self.L - e) % self.L for e in self.exponents))

    def __add__(self, other: "CirculantPoly") -> "CirculantPoly":
        self._check(other)
        return CirculantPoly(self.L, self.exponents ^ other.exponents)

    def __mul__(self, other: "CirculantPoly") -> "CirculantPoly":
        self._check(other)
        acc: set[int] = set()
        for a in self.exponents:
            for b in other.exponents:
                acc ^= {(a + b) % self.L}
        return CirculantPoly(self.L, acc)

    def _check(self, other: "CirculantPoly") -> None:
        if not isinstance(other, CirculantPoly) or other.L != self.L:
            raise ValueError("circulants must share the lift size")

    def dense(self) -> np.ndarray:
        """Binary representation: row r has ones at columns (r + i) mod L."""
        out = np.zeros((self.L, self.L), dtype=np.uint8)
        r = np.arange(self.L)
        for e in self.exponents:
            out[r, (r + e) % self.L] ^= 1
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CirculantPoly)
            and self.L == other.L
            and self.exponents == other.exponents
        )

    def __hash__(self) -> int:
        return hash((self.L, self.exponents))

    def __repr__(self) -> str:
        if not self.exponents:
            return "0"
        terms = ["I" if e == 0 else f"P^{e}" for e in sorted(self.exponents)]
        return "+".join(terms)


class CirculantMatrix:
    """Grid of circulants sharing one lift size."""

    __slots__ = ("rows", "cols", "L", "entries")

    def __init__(self, entries: Sequence[Sequence[CirculantPoly]]):
        if not entries or not entries[0]:
            raise ValueError("need a non-empty grid")
        self.rows = len(entries)
        self.cols = len(entries[0])
        self.L = entries[0][0].L
        for row in entries:
            if len(row) != self.cols:
                raise ValueError("ragged grid")
            for e in row:
                if e.L != self.L:
                    raise ValueError("circulants must share the lift size")
        self.entries = [list(row) for row in entries]

    @classmethod
    def zeros(cls, rows: int, cols: int, L: int) -> "CirculantMatrix":
        z = CirculantPoly.zero(L)
        return cls([[z] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, n: int, L: int) -> "CirculantMatrix":
        z = CirculantPoly.zero(L)
        one = CirculantPoly.identity(L)
        return cls([[one if i == j else z for j in range(n)] for i in range(n)])

    def get(self, i: int, j: int) -> CirculantPoly:
        return self.entries[i][j]

    def transpose(self) -> "CirculantMatrix":
        return CirculantMatrix(
            [
                [self.entries[i][j].transpose() for i in range(self.rows)]
                for j in range(self.cols)
            ]
        )

    @property
    def T(self) -> "CirculantMatrix":
        return self.transpose()

    def __add__(self, other: "CirculantMatrix") -> "CirculantMatrix":
        if (self.rows, self.cols, self.L) != (other.rows, other.cols, other.L):
            raise ValueError("shape or lift mismatch")
        return CirculantMatrix(
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __matmul__(self, other: "CirculantMatrix") -> "CirculantMatrix":
        if other.rows != self.cols or other.L != self.L:
            raise ValueError("shape or lift mismatch")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = CirculantPoly.zero(self.L)
                for t in range(self.cols):
                    acc = acc + self.entries[i][t] * other.entries[t][j]
                row.append(acc)
            out.append(row)
        return CirculantMatrix(out)

    def kron(self, other: "CirculantMatrix") -> "CirculantMatrix":
        if other.L != self.L:
            raise ValueError("lift mismatch")
        out = []
        for i1 in range(self.rows):
            for i2 in range(other.rows):
                row = []
                for j1 in range(self.cols):
                    for j2 in range(other.cols):
                        row.append(self.entries[i1][j1] * other.entries[i2][j2])
                out.append(row)
        return CirculantMatrix(out)

    def hstack(self, other: "CirculantMatrix") -> "CirculantMatrix":
        if other.rows != self.rows or other.L != self.L:
            raise ValueError("shape or lift mismatch")
        return CirculantMatrix(
            [self.entries[i] + other.entries[i] for i in range(self.rows)]
        )

    def lift(self) -> BitMatrix:
        """Replace every circulant by its LxL binary representation."""
        L = self.L
        dense = np.zeros((self.rows * L, self.cols * L), dtype=np.uint8)
        r = np.arange(L)
        for i in range(self.rows):
            for j in range(self.cols):
                for e in self.entries[i][j].exponents:
                    dense[i * L + r, j * L + (r + e) % L] ^= 1
        return BitMatrix.from_dense(dense)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CirculantMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"CirculantMatrix({self.rows}x{self.cols}, L={self.L})"


def lift(m: CirculantMatrix) -> BitMatrix:
    return m.lift()


def circ_transpose(m: CirculantMatrix) -> CirculantMatrix:
    return m.transpose()


# hypergraph product ------------------------------------------------------------


def hgp(h1, h2):
    """CSS pair HX = (1 (x) H2 | H1^T (x) 1), HZ = (H1 (x) 1 | 1 (x) H2^T).

    Binary inputs give binary outputs; circulant inputs stay over the ring
    (lift afterwards to reach the binary code).
    """
    if isinstance(h1, BitMatrix) and isinstance(h2, BitMatrix):
        m1, n1 = h1.rows, h1.cols
        m2, n2 = h2.rows, h2.cols
        hx = gf2.hstack(
            [gf2.kron(BitMatrix.identity(n1), h2), gf2.kron(h1.T, BitMatrix.identity(m2))]
        )
        hz = gf2.hstack(
            [gf2.kron(h1, BitMatrix.identity(n2)), gf2.kron(BitMatrix.identity(m1), h2.T)]
        )
        return hx, hz
    if isinstance(h1, CirculantMatrix) and isinstance(h2, CirculantMatrix):
        if h1.L != h2.L:
            raise ValueError("circulant inputs must share the lift size")
        L = h1.L
        m1, n1 = h1.rows, h1.cols
        m2, n2 = h2.rows, h2.cols
        hx = CirculantMatrix.identity(n1, L).kron(h2).hstack(
            h1.transpose().kron(CirculantMatrix.identity(m2, L))
        )
        hz = h1.kron(CirculantMatrix.identity(n2, L)).hstack(
            CirculantMatrix.identity(m1, L).kron(h2.transpose())
        )
        return hx, hz
    raise ValueError("inputs must both be BitMatrix or both CirculantMatrix")


# base matrices ------------------------------------------------------------------


def repetition_base(l: int) -> BitMatrix:
    """l x (l+1) staircase parity checks of the length-(l+1) repetition code."""
    if l < 1:
        raise ValueError("need l >= 1")
    dense = np.zeros((l, l + 1), dtype=np.uint8)
    for i in range(l):
        dense[i, i] = dense[i, i + 1] = 1
    return BitMatrix.from_dense(dense)


def lcs_base(l: int, L: int, j: int = 1) -> CirculantMatrix:
    """Staircase over the ring: I on the diagonal, I+P^(j) on the superdiagonal."""
    if l < 1:
        raise ValueError("need l >= 1")
    if L < 2:
        raise ValueError("need L >= 2")
    j = j % L
    if j == 0:
        raise ValueError("shift must be nonzero mod L; zero leaves disjoint copies")
    if L > 2 and (2 * j) % L == 0:
        raise DegenerateShiftError(
            f"shift {j} = L/2 makes both interconnections of a check land on the "
            f"same copy; the code decouples into {L // 2} disjoint pieces of distance 2"
        )
    z = CirculantPoly.zero(L)
    one = CirculantPoly.identity(L)
    conn = CirculantPoly(L, (0, j))
    grid = [
        [one if c == r else conn if c == r + 1 else z for c in range(l + 1)]
        for r in range(l)
    ]
    return CirculantMatrix(grid)


def _surface_base(l: int, L: int) -> CirculantMatrix:
    """Identity-only staircase: the lift yields L disjoint surface codes."""
    z = CirculantPoly.zero(L)
    one = CirculantPoly.identity(L)
    grid = [
        [one if c in (r, r + 1) else z for c in range(l + 1)] for r in range(l)
    ]
    return CirculantMatrix(grid)


# code container -------------------------------------------------------------------


@dataclass
class CssCode:
    """CSS code with lazily derived logical bases.

    Qubit order: (l+1)^2 "vertex" qubits then l^2 "face" qubits for product
    codes, each block ordered by (i1*dim2 + i2)*L + copy.
    """

    hx: BitMatrix
    hz: BitMatrix
    n: int
    k: int
    meta: dict = field(default_factory=dict)
    _lx: BitMatrix | None = None
    _lz: BitMatrix | None = None

    @classmethod
    def from_checks(cls, hx: BitMatrix, hz: BitMatrix, meta: dict | None = None) -> "CssCode":
        if hx.cols != hz.cols:
            raise ValueError("hx and hz must act on the same qubits")
        if not (hz @ hx.T).is_zero():
            raise ValueError("CSS condition violated: hz @ hx.T != 0")
        n = hx.cols
        k = n - hx.rank() - hz.rank()
        return cls(hx=hx, hz=hz, n=n, k=k, meta=dict(meta or {}))

    @property
    def lx(self) -> BitMatrix:
        if self._lx is None:
            self._attach_logicals()
        return self._lx

    @property
    def lz(self) -> BitMatrix:
        if self._lz is None:
            self._attach_logicals()
        return self._lz

    def _attach_logicals(self) -> None:
        from . import analysis

        meta = self.meta
        if (
            meta.get("family") in ("lcs", "surface")
            and self.k == meta.get("L")
        ):
            lx, lz = analysis.lcs_canonical_logicals(
                meta["l"], meta["L"], meta.get("j", 0)
            )
            self._lx, self._lz = lx, lz
        else:
            self._lx, self._lz = analysis.symplectic_logical_basis(self.hx, self.hz)

    def params(self) -> tuple[int, int]:
        return self.n, self.k

    def name(self) -> str:
        fam = self.meta.get("family")
        if fam in ("lcs", "surface"):
            return f"{fam}-{self.meta['l']}-{self.meta['L']}"
        return f"css-{self.n}-{self.k}"

    # text persistence --------------------------------------------------------

    def dump_text(self) -> str:
        out = io.StringIO()
        out.write(f"{self.n} {self.k}\n\n")
        for block in (self.hx, self.hz, self.lx, self.lz):
            for i in range(block.rows):
                out.write("".join(str(b) for b in block.to_dense()[i]) + "\n")
            out.write("\n")
        return out.getvalue()

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.dump_text())

    @classmethod
    def load(cls, path: str) -> "CssCode":
        with open(path) as fh:
            text = fh.read()
        chunks = [c for c in text.split("\n\n") if c.strip()]
        if len(chunks) != 5:
            raise ValueError("expected header plus four blocks (hx, hz, lx, lz)")
        n, k = (int(x) for x in chunks[0].split())
        mats = []
        for chunk in chunks[1:]:
            rows = [[int(ch) for ch in line.strip()] for line in chunk.splitlines() if line.strip()]
            m = BitMatrix.from_dense(np.array(rows, dtype=np.uint8))
            if m.cols != n:
                raise ValueError("block width does not match header n")
            mats.append(m)
        hx, hz, lx, lz = mats
        if lx.rows != k or lz.rows != k:
            raise ValueError("logical block height does not match header k")
        code = cls(hx=hx, hz=hz, n=n, k=k, meta={})
        code._lx, code._lz = lx, lz
        return code

    def tanner_text(self) -> str:
        """Adjacency list, one line per check: check id then qubit ids."""
        lines = []
        for i in range(self.hx.rows):
            lines.append(" ".join(["X%d" % i] + [str(q) for q in self.hx.row_support(i)]))
        for i in range(self.hz.rows):
            lines.append(" ".join(["Z%d" % i] + [str(q) for q in self.hz.row_support(i)]))
        return "\n".join(lines) + "\n"

    def tanner_components(self) -> int:
        """Connected components of the joint Tanner graph."""
        n_nodes = self.n + self.hx.rows + self.hz.rows
        parent = list(range(n_nodes))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a: int, b: int) -> None:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for i in range(self.hx.rows):
            for q in self.hx.row_support(i):
                union(self.n + i, q)
        for i in range(self.hz.rows):
            for q in self.hz.row_support(i):
                union(self.n + self.hx.rows + i, q)
        return len({find(a) for a in range(n_nodes)})


# curated families ------------------------------------------------------------------


def lcs_code(l: int, L: int, j: int = 1) -> CssCode:
    """Lift-connected surface code on ((l+1)^2 + l^2) * L qubits."""
    base = lcs_base(l, L, j)
    tx, tz = hgp(base, base)
    code = CssCode.from_checks(
        tx.lift(), tz.lift(), meta={"family": "lcs", "l": l, "L": L, "j": j % L}
    )
    return code


def disjoint_surface_code(l: int, L: int) -> CssCode:
    """L disconnected distance-(l+1) surface code patches as one CSS block."""
    if l < 1 or L < 1:
        raise ValueError("need l >= 1 and L >= 1")
    base = _surface_base(l, L)
    tx, tz = hgp(base, base)
    return CssCode.from_checks(
        tx.lift(), tz.lift(), meta={"family": "surface", "l": l, "L": L, "j": 0}
    )


@dataclass(frozen=True)
class CodeDescriptor:
    """One family member: construction parameters plus expected [[n,k,d]]."""

    family: int
    kind: str  # "lcs" or "surface"
    l: int
    L: int
    n: int
    k: int
    d: int

    def build(self) -> CssCode:
        if self.kind == "lcs":
            return lcs_code(self.l, self.L)
        return disjoint_surface_code(self.l, self.L)


def family_members(family: int, L_list: Sequence[int]) -> list[CodeDescriptor]:
    """Curated scaling families.

    1: l = L-1, one LCS member [[(2L^2-2L+1)L, L, L]] per L.
    2: l = (L-1)/2 (odd L), highest-rate LCS members [[(L^2+1)L/2, L, L]].
    3: the family-2 LCS members paired with equal-size disjoint surface
       comparators [[(L^2+1)L/2, L, (L+1)/2]].
    """
    out: list[CodeDescriptor] = []
    for L in L_list:
        if family == 1:
            if L < 2:
                raise ValueError("family 1 needs L >= 2")
            l = L - 1
            out.append(
                CodeDescriptor(1, "lcs", l, L, (2 * L * L - 2 * L + 1) * L, L, L)
            )
        elif family in (2, 3):
            if L < 3 or L % 2 == 0:
                raise ValueError("families 2 and 3 need odd L >= 3")
            l = (L - 1) // 2
            n = (L * L + 1) * L // 2
            out.append(CodeDescriptor(family, "lcs", l, L, n, L, L))
            if family == 3:
                out.append(CodeDescriptor(3, "surface", l, L, n, L, (L + 1) // 2))
        else:
            raise ValueError("family must be 1, 2 or 3")
    return out
