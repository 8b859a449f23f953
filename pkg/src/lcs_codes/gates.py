"""Fold-transversal Clifford gates for the narrowest lift-connected codes.

For l = 1 the five cell blocks of the qubit layout relate the X and Z
sectors by a plain swap: exchanging the second and third blocks carries
every X check onto a Z check and back, while the diagonal logical
representatives sit on the fixed blocks and do not move. That involution
tau enables fold-transversal gates: a global Hadamard built from SWAPs
along the fold plus transversal H, and a phase gate built from S on one
half of the fixed qubits, S-dagger on the other half, and CZ across the
fold. The A/B split must balance every X check so the +-i factors that S
and S-dagger put on X-type Paulis cancel.

Paulis are tracked as i^phase * X^x * Z^z with the exponent mod 4. Nothing
is assumed: gate constructors verify stabilizer-group preservation (with a
witness on failure) and the symplectic form, and the logical action is
established by conjugating canonical representatives and comparing cosets
modulo the stabilizer rowspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import lcs_canonical_logicals
from .gf2 import BitMatrix, BitVector

# Pauli algebra ----------------------------------------------------------------------


@dataclass(frozen=True)
class PauliOperator:
    """i^phase * X^x * Z^z with X factors written before Z factors."""

    x: BitVector
    z: BitVector
    phase: int = 0

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(BitVector.zeros(n), BitVector.zeros(n), 0)

    @classmethod
    def x_type(cls, n: int, support) -> "PauliOperator":
        return cls(BitVector.from_support(n, support), BitVector.zeros(n), 0)

    @classmethod
    def z_type(cls, n: int, support) -> "PauliOperator":
        return cls(BitVector.zeros(n), BitVector.from_support(n, support), 0)

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        # moving Z^z1 across X^x2 costs (-1)^(z1.x2)
        phase = (self.phase + other.phase + 2 * self.z.dot(other.x)) % 4
        return PauliOperator(self.x ^ other.x, self.z ^ other.z, phase)

    def commutes_with(self, other: "PauliOperator") -> bool:
        return (self.x.dot(other.z) ^ self.z.dot(other.x)) == 0


@dataclass
class CliffordMap:
    """Conjugation action given by the images of the X_q and Z_q generators."""

    n: int
    x_images: list[PauliOperator]
    z_images: list[PauliOperator]
    name: str = ""

    def conjugate(self, p: PauliOperator) -> PauliOperator:
        """Image of p; exact since conjugation is a group homomorphism."""
        out = PauliOperator(BitVector.zeros(self.n), BitVector.zeros(self.n),
                            p.phase)
        for q in p.x.support():
            out = out * self.x_images[q]
        for q in p.z.support():
            out = out * self.z_images[q]
        return out

    def verify_symplectic(self) -> None:
        """Images must reproduce the generator commutation table exactly."""
        gens = self.x_images + self.z_images
        for a in range(2 * self.n):
            for b in range(a + 1, 2 * self.n):
                want = b == a + self.n
                ia, ib = gens[a], gens[b]
                got = bool(ia.x.dot(ib.z) ^ ia.z.dot(ib.x))
                if got != want:
                    raise ValueError(
                        f"{self.name or 'map'} breaks the symplectic form "
                        f"between generators {a} and {b}"
                    )


# duality and partition --------------------------------------------------------------


def zx_duality(L: int) -> np.ndarray:
    """Involution on 5L qubits swapping the second and third cell blocks.

    Column-permuting the X checks of an l=1 code by this map lands in the
    rowspace of the Z checks and vice versa, while the diagonal logicals
    live on the fixed blocks.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    tau = np.arange(5 * L, dtype=np.int64)
    tau[L:2 * L] = np.arange(2 * L, 3 * L)
    tau[2 * L:3 * L] = np.arange(L, 2 * L)
    return tau


def _require_l1(code) -> int:
    if code.meta.get("l") != 1:
        raise ValueError("fold gates are defined for l = 1 codes")
    return code.meta["L"]


def partition_AB(code, tau) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split the tau-fixed qubits so every X check balances between A and B.

    Backtracks over the fixed qubits in ascending order trying B before A,
    so the returned A-indicator string is the lexicographically smallest
    valid one. Raises when some check overlaps the fixed set oddly or no
    balanced assignment exists.
    """
    fixed = [q for q in range(code.n) if int(tau[q]) == q]
    pos = {q: i for i, q in enumerate(fixed)}
    hxd = code.hx.to_dense()
    rows = []
    for r in range(hxd.shape[0]):
        overlap = [pos[q] for q in np.nonzero(hxd[r])[0] if int(q) in pos]
        if len(overlap) % 2:
            raise ValueError(
                f"X check {r} overlaps the fixed qubits on {len(overlap)} "
                "positions; no balanced split exists"
            )
        if overlap:
            rows.append((overlap, len(overlap) // 2))
    rows_at = [[] for _ in fixed]
    for ri, (overlap, _) in enumerate(rows):
        for i in overlap:
            rows_at[i].append(ri)
    in_a = [0] * len(fixed)
    count_a = [0] * len(rows)
    remaining = [len(overlap) for overlap, _ in rows]

    def feasible(ri):
        need = rows[ri][1]
        return count_a[ri] <= need <= count_a[ri] + remaining[ri]

    def assign(i):
        if i == len(fixed):
            return True
        for choice in (0, 1):
            in_a[i] = choice
            ok = True
            for ri in rows_at[i]:
                count_a[ri] += choice
                remaining[ri] -= 1
                if not feasible(ri):
                    ok = False
            if ok and assign(i + 1):
                return True
            for ri in rows_at[i]:
                count_a[ri] -= choice
                remaining[ri] += 1
        in_a[i] = 0
        return False

    if not assign(0):
        raise ValueError("no balanced split of the fixed qubits exists")
    a = tuple(q for i, q in enumerate(fixed) if in_a[i])
    b = tuple(q for i, q in enumerate(fixed) if not in_a[i])
    return a, b


# gate constructors ------------------------------------------------------------------


def _check_stabilizer_preservation(cmap, hx: BitMatrix, hz: BitMatrix) -> None:
    """Every check generator must land back in the stabilizer group.

    A CSS stabilizer element is exactly +1 * X^a Z^b with a in the X
    rowspace and b in the Z rowspace, so the test is phase + two
    memberships.
    """
    n = hx.cols
    for kind, h in (("X", hx), ("Z", hz)):
        make = PauliOperator.x_type if kind == "X" else PauliOperator.z_type
        for r in range(h.rows):
            img = cmap.conjugate(make(n, h.row_support(r)))
            if (img.phase != 0 or not hx.rowspace_contains(img.x)
                    or not hz.rowspace_contains(img.z)):
                raise ValueError(
                    f"{cmap.name} maps {kind} stabilizer {r} outside the "
                    f"stabilizer group (phase exponent {img.phase})"
                )


def fold_hadamard(code, tau=None) -> CliffordMap:
    """SWAP along the fold then transversal H: X_q -> Z_tau(q), Z_q -> X_tau(q)."""
    L = _require_l1(code)
    if tau is None:
        tau = zx_duality(L)
    n = code.n
    cmap = CliffordMap(
        n,
        [PauliOperator.z_type(n, [int(tau[q])]) for q in range(n)],
        [PauliOperator.x_type(n, [int(tau[q])]) for q in range(n)],
        name="fold_hadamard",
    )
    cmap.verify_symplectic()
    _check_stabilizer_preservation(cmap, code.hx, code.hz)
    return cmap


def fold_phase(code, tau=None, A=None, B=None) -> CliffordMap:
    """S on A, S-dagger on B, CZ across the fold.

    On the fold, CZ gives X_q -> X_q Z_tau(q); on fixed qubits S gives
    X_q -> i X_q Z_q and S-dagger the -i counterpart, so a balanced A/B
    split cancels the phases on every X check. Z images are untouched.
    """
    L = _require_l1(code)
    if tau is None:
        tau = zx_duality(L)
    if A is None or B is None:
        A, B = partition_AB(code, tau)
    n = code.n
    a_set, b_set = set(A), set(B)
    x_images = []
    for q in range(n):
        t = int(tau[q])
        if t != q:
            x_images.append(PauliOperator(
                BitVector.from_support(n, [q]),
                BitVector.from_support(n, [t]), 0))
        elif q in a_set:
            x_images.append(PauliOperator(
                BitVector.from_support(n, [q]),
                BitVector.from_support(n, [q]), 1))
        elif q in b_set:
            x_images.append(PauliOperator(
                BitVector.from_support(n, [q]),
                BitVector.from_support(n, [q]), 3))
        else:
            raise ValueError(f"fixed qubit {q} missing from the partition")
    cmap = CliffordMap(
        n, x_images,
        [PauliOperator.z_type(n, [q]) for q in range(n)],
        name="fold_phase",
    )
    cmap.verify_symplectic()
    _check_stabilizer_preservation(cmap, code.hx, code.hz)
    return cmap


def transversal_cnot(code) -> CliffordMap:
    """CX from every qubit of one code block to its twin in a second block."""
    n = code.n
    N = 2 * n
    x_images = [PauliOperator.x_type(N, [q, q + n]) for q in range(n)]
    x_images += [PauliOperator.x_type(N, [q + n]) for q in range(n)]
    z_images = [PauliOperator.z_type(N, [q]) for q in range(n)]
    z_images += [PauliOperator.z_type(N, [q, q + n]) for q in range(n)]
    cmap = CliffordMap(N, x_images, z_images, name="transversal_cnot")
    cmap.verify_symplectic()
    _check_stabilizer_preservation(cmap, _doubled(code.hx), _doubled(code.hz))
    return cmap


def _doubled(h: BitMatrix) -> BitMatrix:
    dense = h.to_dense()
    m, n = dense.shape
    out = np.zeros((2 * m, 2 * n), dtype=np.uint8)
    out[:m, :n] = dense
    out[m:, n:] = dense
    return BitMatrix.from_dense(out)


# logical-action reports -------------------------------------------------------------


@dataclass
class GateCheck:
    name: str
    passed: bool
    details: str = ""


def _same_coset(v: BitVector, w: BitVector, h: BitMatrix) -> bool:
    return h.rowspace_contains(v ^ w)


def _logical_paulis(code):
    basis = lcs_canonical_logicals(code.meta["l"], code.meta["L"],
                                   code.meta.get("j", 1))
    n = code.n
    xbars = [PauliOperator(basis.lx.row(i), BitVector.zeros(n), 0)
             for i in range(code.k)]
    zbars = [PauliOperator(BitVector.zeros(n), basis.lz.row(i), 0)
             for i in range(code.k)]
    return basis, xbars, zbars


def verify_fold_gates(l: int, L: int, j: int = 1) -> list[GateCheck]:
    """Run every gate verification for one l=1 family member.

    Returns one GateCheck per claim; constructor or coset failures are
    reported with their message instead of raising.
    """
    from . import codes as _codes

    code = _codes.lcs_code(l, L, j)
    if l != 1:
        msg = "fold gates are defined for l = 1 codes"
        return [GateCheck(name, False, msg) for name in
                ("zx_duality", "partition_AB", "fold_hadamard",
                 "fold_phase", "transversal_cnot")]
    tau = zx_duality(L)
    checks: list[GateCheck] = []

    perm_ok = bool(np.all(tau[tau] == np.arange(code.n)))
    dual_ok = all(
        code.hz.rowspace_contains(
            BitVector.from_support(code.n, [int(tau[q]) for q in
                                            code.hx.row_support(r)]))
        for r in range(code.hx.rows)
    ) and all(
        code.hx.rowspace_contains(
            BitVector.from_support(code.n, [int(tau[q]) for q in
                                            code.hz.row_support(r)]))
        for r in range(code.hz.rows)
    )
    checks.append(GateCheck(
        "zx_duality", perm_ok and dual_ok,
        "involution and rowspace exchange" if perm_ok and dual_ok
        else f"involution={perm_ok} rowspace exchange={dual_ok}"))

    try:
        A, B = partition_AB(code, tau)
        fixed = {q for q in range(code.n) if int(tau[q]) == q}
        cover = set(A) | set(B) == fixed and not set(A) & set(B)
        hxd = code.hx.to_dense()
        balanced = all(
            sum(1 for q in np.nonzero(row)[0] if int(q) in A)
            == sum(1 for q in np.nonzero(row)[0] if int(q) in B)
            for row in hxd
        )
        checks.append(GateCheck(
            "partition_AB", cover and balanced,
            f"|A|={len(A)} |B|={len(B)}"))
    except ValueError as err:
        checks.append(GateCheck("partition_AB", False, str(err)))
        A = B = None

    basis, xbars, zbars = _logical_paulis(code)

    try:
        h = fold_hadamard(code, tau)
        ok = True
        notes = []
        for i in range(code.k):
            ix = h.conjugate(xbars[i])
            iz = h.conjugate(zbars[i])
            back = h.conjugate(h.conjugate(xbars[i]))
            if not (ix.phase == 0 and code.hx.rowspace_contains(ix.x)
                    and _same_coset(ix.z, basis.lz.row(i), code.hz)):
                ok = False
                notes.append(f"X logical {i} image off")
            if not (iz.phase == 0 and code.hz.rowspace_contains(iz.z)
                    and _same_coset(iz.x, basis.lx.row(i), code.hx)):
                ok = False
                notes.append(f"Z logical {i} image off")
            if not (_same_coset(back.x, basis.lx.row(i), code.hx)
                    and code.hz.rowspace_contains(back.z)):
                ok = False
                notes.append(f"double application moves logical {i}")
        checks.append(GateCheck(
            "fold_hadamard", ok,
            "swaps every X and Z logical pair" if ok else "; ".join(notes)))
    except ValueError as err:
        checks.append(GateCheck("fold_hadamard", False, str(err)))

    if A is None:
        checks.append(GateCheck("fold_phase", False, "no partition"))
        return checks
    try:
        s = fold_phase(code, tau, A, B)
        s_rev = fold_phase(code, tau, B, A)
        ok = True
        notes = []
        phases = []
        for i in range(code.k):
            ix = s.conjugate(xbars[i])
            iz = s.conjugate(zbars[i])
            rev = s_rev.conjugate(xbars[i])
            phases.append(ix.phase)
            if not (ix.phase % 2 == 1
                    and _same_coset(ix.x, basis.lx.row(i), code.hx)
                    and _same_coset(ix.z, basis.lz.row(i), code.hz)):
                ok = False
                notes.append(f"X logical {i} not sent to its XZ product")
            if iz != zbars[i]:
                ok = False
                notes.append(f"Z logical {i} moved")
            if rev.phase != (4 - ix.phase) % 4:
                ok = False
                notes.append(f"swapped partition phase mismatch on {i}")
        checks.append(GateCheck(
            "fold_phase", ok,
            f"logical phase exponents {phases}" if ok else "; ".join(notes)))
    except ValueError as err:
        checks.append(GateCheck("fold_phase", False, str(err)))

    try:
        cx = transversal_cnot(code)
        n = code.n
        hx2, hz2 = _doubled(code.hx), _doubled(code.hz)
        ok = True
        notes = []
        for i in range(code.k):
            lx = basis.lx.row(i).support()
            lz = basis.lz.row(i).support()
            img = cx.conjugate(PauliOperator.x_type(2 * n, lx))
            want = BitVector.from_support(2 * n, lx + [q + n for q in lx])
            if not (img.phase == 0 and _same_coset(img.x, want, hx2)
                    and hz2.rowspace_contains(img.z)):
                ok = False
                notes.append(f"control X logical {i} fans out wrong")
            img = cx.conjugate(PauliOperator.z_type(2 * n,
                                                    [q + n for q in lz]))
            want = BitVector.from_support(2 * n, lz + [q + n for q in lz])
            if not (img.phase == 0 and _same_coset(img.z, want, hz2)
                    and hx2.rowspace_contains(img.x)):
                ok = False
                notes.append(f"target Z logical {i} fans out wrong")
        checks.append(GateCheck(
            "transversal_cnot", ok,
            "copies X forward and Z back" if ok else "; ".join(notes)))
    except ValueError as err:
        checks.append(GateCheck("transversal_cnot", False, str(err)))
    return checks
