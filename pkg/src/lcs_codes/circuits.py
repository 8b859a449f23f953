"""Coloration syndrome-extraction circuits, noise, and detector error models.

Stabilizer measurement is scheduled from an edge coloring of each Tanner
graph: peel greedy maximal matchings (edge-index order) until no edges
remain, then run one CX layer per color. A cycle measures all Z stabilizers
first, then all X stabilizers; data qubits idle in layers that skip them,
ancillas idle only between their own preparation and measurement.

All noise is Pauli and the ideal circuit is Clifford with deterministic
detector outcomes, so faults are simulated as Pauli frames instead of full
tableaus. A Y fault just sets both the X and Z frame bits; propagation is
linear, so its flip signature is the XOR of the X and Z contributions. The
detector error model is built in one backward sweep that accumulates, per
qubit and time point, the detector/observable signature a frame bit placed
there would cause.

The circuit's only one-qubit operations are preparations and measurements;
their noise is the basis flip with probability p (after preparation, before
measurement). CX noise is one of the fifteen non-identity two-qubit Paulis
at p/15 each; idles depolarize at p_idle = p/10, i.e. X, Y, Z at p/30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .decoders import BposdDecoder, BposdParams, MleDecoder
from .gf2 import BitMatrix
from .sampling import SampleResult, _shot_rng, code_distance

MAX_LCS_COLORS = 6

# noise case: (probability, x-frame mask, z-frame mask); before=True cases
# strike before the operation executes (measurement flips)
Channel = tuple[tuple[float, int, int], ...]


@dataclass(frozen=True)
class Operation:
    name: str  # prep_z | prep_x | cx | meas_z | meas_x | idle
    qubits: tuple[int, ...]
    midx: int | None = None  # measurement record index
    noise: Channel = ()

    def __post_init__(self):
        if self.name == "cx" and self.qubits[0] == self.qubits[1]:
            raise ValueError("CX endpoints must be distinct")


@dataclass
class StabilizerCircuit:
    """Layered Clifford circuit with measurement, detector and observable maps.

    Detectors are XOR sets of measurement indices whose ideal outcome is
    deterministic; observables are the measured-basis logical operators
    evaluated on the final data readout.
    """

    n_qubits: int
    roles: list[str]  # data | ancilla_z | ancilla_x per qubit
    layers: list[list[Operation]]
    n_meas: int = 0
    detectors: list[tuple[int, ...]] = field(default_factory=list)
    observables: list[tuple[int, ...]] = field(default_factory=list)
    cycle_layers: list[int] = field(default_factory=list)  # first layer per cycle
    meta: dict = field(default_factory=dict)

    def ops(self):
        for layer in self.layers:
            yield from layer

    @property
    def p(self) -> float:
        return self.meta.get("p", 0.0)

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on violation."""
        seen_meas = set()
        # bare syndrome circuits act on unencoded data; only ancillas must
        # be explicitly prepared before they touch anything
        prepared = [role == "data" for role in self.roles]
        for layer in self.layers:
            touched: set[int] = set()
            for op in layer:
                for q in op.qubits:
                    if q in touched:
                        raise ValueError(f"qubit {q} touched twice in one layer")
                    touched.add(q)
                if op.name.startswith("prep"):
                    prepared[op.qubits[0]] = True
                if op.name == "cx":
                    for q in op.qubits:
                        if not prepared[q]:
                            raise ValueError(f"qubit {q} used before preparation")
                if op.midx is not None:
                    if op.midx in seen_meas:
                        raise ValueError(f"measurement index {op.midx} reused")
                    seen_meas.add(op.midx)
        if seen_meas != set(range(self.n_meas)):
            raise ValueError("measurement indices are not contiguous")
        for det in self.detectors:
            for m in det:
                if not 0 <= m < self.n_meas:
                    raise ValueError(f"detector references measurement {m}")

    def to_text(self) -> str:
        """Line-oriented export: one op per line, TICK between layers."""
        lines = []
        for li, layer in enumerate(self.layers):
            if li:
                lines.append("TICK")
            for op in layer:
                lines.append(
                    " ".join([op.name.upper(), *(str(q) for q in op.qubits)])
                )
        for det in self.detectors:
            lines.append("DETECTOR " + " ".join(f"m{m}" for m in det))
        for k, obs in enumerate(self.observables):
            lines.append(f"OBSERVABLE {k} " + " ".join(f"m{m}" for m in obs))
        return "\n".join(lines) + "\n"


# edge coloring ---------------------------------------------------------------------


def color_tanner_edges(code, pauli: str) -> list[list[tuple[int, int]]]:
    """Partition the X- or Z-Tanner graph's edges into matchings.

    Greedy peeling: repeatedly take the maximal matching found by scanning
    the remaining edges in (check, qubit) order. Deterministic, and for the
    lift-connected family (degree <= 6) the count must not exceed 6.
    """
    if pauli not in ("X", "Z"):
        raise ValueError("pauli must be 'X' or 'Z'")
    h = code.hx if pauli == "X" else code.hz
    dense = h.to_dense()
    edges = [(int(r), int(q)) for r, q in zip(*np.nonzero(dense))]
    colors: list[list[tuple[int, int]]] = []
    while edges:
        used_check: set[int] = set()
        used_qubit: set[int] = set()
        matching = []
        rest = []
        for r, q in edges:
            if r in used_check or q in used_qubit:
                rest.append((r, q))
            else:
                matching.append((r, q))
                used_check.add(r)
                used_qubit.add(q)
        colors.append(matching)
        edges = rest
    if code.meta.get("family") == "lcs" and len(colors) > MAX_LCS_COLORS:
        raise ValueError(
            f"{pauli}-graph needed {len(colors)} colors; "
            f"lift-connected codes schedule in at most {MAX_LCS_COLORS}"
        )
    return colors


# circuit construction --------------------------------------------------------------


def _ancilla_layout(code):
    mz, mx = code.hz.rows, code.hx.rows
    if (code.n - code.k) % 2 or mz != (code.n - code.k) // 2 or mx != mz:
        raise ValueError("need full-rank checks split evenly between X and Z")
    return mz, mx


def _cycle(code, colors_z, colors_x, anc_z, anc_x, next_meas):
    """One syndrome cycle: Z block then X block, idles filled per layer."""
    n = code.n
    mz, mx = len(anc_z), len(anc_x)
    layers: list[list[Operation]] = []

    def fill_idle(layer, active):
        touched = {q for op in layer for q in op.qubits}
        layer.extend(Operation("idle", (q,)) for q in active if q not in touched)
        return layer

    data = list(range(n))
    layers.append(fill_idle([Operation("prep_z", (a,)) for a in anc_z], data))
    for matching in colors_z:
        layer = [Operation("cx", (q, anc_z[r])) for r, q in matching]
        layers.append(fill_idle(layer, data + anc_z))
    meas = [
        Operation("meas_z", (a,), midx=next_meas + i) for i, a in enumerate(anc_z)
    ]
    next_meas += mz
    layers.append(fill_idle(meas, data))
    layers.append(fill_idle([Operation("prep_x", (a,)) for a in anc_x], data))
    for matching in colors_x:
        layer = [Operation("cx", (anc_x[r], q)) for r, q in matching]
        layers.append(fill_idle(layer, data + anc_x))
    meas = [
        Operation("meas_x", (a,), midx=next_meas + i) for i, a in enumerate(anc_x)
    ]
    next_meas += mx
    layers.append(fill_idle(meas, data))
    return layers, next_meas


def build_coloration_circuit(code, cycles: int) -> StabilizerCircuit:
    """Bare repeated syndrome extraction, no encoding or readout layers."""
    if cycles < 1:
        raise ValueError("need cycles >= 1")
    mz, mx = _ancilla_layout(code)
    n = code.n
    anc_z = [n + i for i in range(mz)]
    anc_x = [n + mz + i for i in range(mx)]
    colors_z = color_tanner_edges(code, "Z")
    colors_x = color_tanner_edges(code, "X")
    layers: list[list[Operation]] = []
    cycle_layers = []
    next_meas = 0
    for _ in range(cycles):
        cycle_layers.append(len(layers))
        block, next_meas = _cycle(code, colors_z, colors_x, anc_z, anc_x, next_meas)
        layers.extend(block)
    roles = ["data"] * n + ["ancilla_z"] * mz + ["ancilla_x"] * mx
    circ = StabilizerCircuit(
        n_qubits=n + mz + mx, roles=roles, layers=layers, n_meas=next_meas,
        cycle_layers=cycle_layers,
        meta={"code": code.name(), "cycles": cycles, "colors_z": len(colors_z),
              "colors_x": len(colors_x)},
    )
    circ.validate()
    return circ


def memory_experiment(code, basis: str, cycles: int, p: float) -> StabilizerCircuit:
    """Noisy transversal init, `cycles` syndrome cycles, noisy readout.

    Z-basis memory: data prepared in |0>, Z-stabilizer outcomes deterministic
    from the first round; detectors compare consecutive Z-ancilla readings,
    the first against 0 and the last against the final data readout. X-basis
    mirrors with |+> and the X stabilizers. The other sector's outcomes are
    random in the first round and carry no detectors.
    """
    if basis not in ("Z", "X"):
        raise ValueError("basis must be 'Z' or 'X'")
    core = build_coloration_circuit(code, cycles)
    n = code.n
    mz, mx = code.hz.rows, code.hx.rows
    prep = "prep_z" if basis == "Z" else "prep_x"
    meas = "meas_z" if basis == "Z" else "meas_x"
    init = [Operation(prep, (q,)) for q in range(n)]
    readout = [
        Operation(meas, (q,), midx=core.n_meas + q) for q in range(n)
    ]
    layers = [init] + core.layers + [readout]
    data_midx = [core.n_meas + q for q in range(n)]

    def anc_midx(t, i):
        off = 0 if basis == "Z" else mz
        return t * (mz + mx) + off + i

    h = code.hz if basis == "Z" else code.hx
    logicals = code.lz if basis == "Z" else code.lx
    hd = h.to_dense()
    m_checks = mz if basis == "Z" else mx
    detectors: list[tuple[int, ...]] = []
    for i in range(m_checks):
        detectors.append((anc_midx(0, i),))
    for t in range(1, cycles):
        for i in range(m_checks):
            detectors.append((anc_midx(t - 1, i), anc_midx(t, i)))
    for i in range(m_checks):
        final = [anc_midx(cycles - 1, i)]
        final.extend(data_midx[q] for q in np.nonzero(hd[i])[0])
        detectors.append(tuple(final))
    observables = [
        tuple(data_midx[q] for q in np.nonzero(row)[0])
        for row in logicals.to_dense()
    ]
    try:
        dist = code_distance(code)
    except ValueError:
        dist = None
    circ = StabilizerCircuit(
        n_qubits=core.n_qubits, roles=core.roles, layers=layers,
        n_meas=core.n_meas + n, detectors=detectors, observables=observables,
        cycle_layers=[c + 1 for c in core.cycle_layers],
        meta=dict(core.meta, basis=basis, distance=dist),
    )
    circ.validate()
    return annotate_noise(circ, p)


# noise annotation ------------------------------------------------------------------

_PAULI_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_TWO_QUBIT_CASES = [
    (a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")
]


def _op_channel(op: Operation, p: float) -> Channel:
    if p == 0.0:
        return ()
    q = op.qubits[0]
    if op.name == "prep_z" or op.name == "meas_z":
        return ((p, 1 << q, 0),)
    if op.name == "prep_x" or op.name == "meas_x":
        return ((p, 0, 1 << q),)
    if op.name == "cx":
        c, t = op.qubits
        cases = []
        for a, b in _TWO_QUBIT_CASES:
            xa, za = _PAULI_XZ[a]
            xb, zb = _PAULI_XZ[b]
            cases.append((p / 15.0, xa << c | xb << t, za << c | zb << t))
        return tuple(cases)
    if op.name == "idle":
        p_idle = p / 10.0
        return tuple(
            (p_idle / 3.0, x << q, z << q)
            for x, z in ((1, 0), (1, 1), (0, 1))
        )
    raise ValueError(f"unknown operation {op.name!r}")


def annotate_noise(circuit: StabilizerCircuit, p: float) -> StabilizerCircuit:
    """Attach the fault channel of every operation; p=0 clears all noise."""
    if not 0.0 <= p < 0.5:
        raise ValueError("p must lie in [0, 0.5)")
    layers = [
        [replace(op, noise=_op_channel(op, p)) for op in layer]
        for layer in circuit.layers
    ]
    return StabilizerCircuit(
        n_qubits=circuit.n_qubits, roles=circuit.roles, layers=layers,
        n_meas=circuit.n_meas, detectors=circuit.detectors,
        observables=circuit.observables, cycle_layers=circuit.cycle_layers,
        meta=dict(circuit.meta, p=p),
    )


# detector error model --------------------------------------------------------------


@dataclass
class DetectorErrorModel:
    """Independent error mechanisms with their detector/observable flip sets.

    Masks are integers: bit i of det_masks[j] means mechanism j flips
    detector i; obs_masks likewise over the observables.
    """

    probs: np.ndarray
    det_masks: list[int]
    obs_masks: list[int]
    n_detectors: int
    n_observables: int

    def __len__(self) -> int:
        return len(self.det_masks)

    def to_matrices(self) -> tuple[BitMatrix, BitMatrix]:
        """(detector x mechanism, observable x mechanism) check matrices."""
        nm = len(self.det_masks)
        det = np.zeros((self.n_detectors, nm), dtype=np.uint8)
        obs = np.zeros((self.n_observables, nm), dtype=np.uint8)
        for j, (dm, om) in enumerate(zip(self.det_masks, self.obs_masks)):
            for i in range(self.n_detectors):
                det[i, j] = (dm >> i) & 1
            for i in range(self.n_observables):
                obs[i, j] = (om >> i) & 1
        return BitMatrix.from_dense(det), BitMatrix.from_dense(obs)

    def to_text(self) -> str:
        lines = []
        for prob, dm, om in zip(self.probs, self.det_masks, self.obs_masks):
            parts = [f"error({prob:.8g})"]
            parts.extend(f"D{i}" for i in range(self.n_detectors) if dm >> i & 1)
            parts.extend(f"L{i}" for i in range(self.n_observables) if om >> i & 1)
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


def extract_dem(circuit: StabilizerCircuit) -> DetectorErrorModel:
    """Propagate every elementary fault to its detector/observable signature.

    One backward sweep computes, for each qubit and time point, the combined
    signature an X or Z frame placed there would produce; each fault case is
    then the XOR of those per-qubit signatures. Identical signatures merge
    with probability p1(1-p2) + p2(1-p1); trivial signatures are dropped.
    """
    nd = len(circuit.detectors)
    sig_of_meas = [0] * circuit.n_meas
    for i, det in enumerate(circuit.detectors):
        for m in det:
            sig_of_meas[m] ^= 1 << i
    for i, obs in enumerate(circuit.observables):
        for m in obs:
            sig_of_meas[m] ^= 1 << (nd + i)
    mx = [0] * circuit.n_qubits  # signature of an X frame on q, here and later
    mz = [0] * circuit.n_qubits
    found: list[tuple[float, int]] = []
    def case_sig(op):
        out = []
        for prob, xa, za in op.noise:
            sig = 0
            for q in op.qubits:
                if xa >> q & 1:
                    sig ^= mx[q]
                if za >> q & 1:
                    sig ^= mz[q]
            out.append((prob, sig))
        return out

    for layer in reversed(circuit.layers):
        for op in reversed(layer):
            before = op.name.startswith("meas")
            if not before and op.noise:
                # fault strikes after the op: current masks already apply
                found.extend(case_sig(op))
            if op.name == "cx":
                c, t = op.qubits
                mx[c] ^= mx[t]
                mz[t] ^= mz[c]
            elif op.name in ("prep_z", "prep_x"):
                mx[op.qubits[0]] = 0
                mz[op.qubits[0]] = 0
            elif op.name == "meas_z":
                mx[op.qubits[0]] ^= sig_of_meas[op.midx]
            elif op.name == "meas_x":
                mz[op.qubits[0]] ^= sig_of_meas[op.midx]
            if before and op.noise:
                # measurement flips strike before the op, which the sweep
                # has just folded into the masks
                found.extend(case_sig(op))
    found.reverse()
    merged: dict[int, float] = {}
    order: list[int] = []
    for prob, sig in found:
        if sig == 0:
            continue
        if sig in merged:
            p1 = merged[sig]
            merged[sig] = p1 * (1.0 - prob) + prob * (1.0 - p1)
        else:
            merged[sig] = prob
            order.append(sig)
    obs_div = 1 << nd
    return DetectorErrorModel(
        probs=np.array([merged[s] for s in order], dtype=np.float64),
        det_masks=[s % obs_div for s in order],
        obs_masks=[s // obs_div for s in order],
        n_detectors=nd,
        n_observables=len(circuit.observables),
    )


# fault distance --------------------------------------------------------------------


def fault_distance(circuit, w_max: int = 4, max_pairs: int = 5 * 10**6):
    """Smallest number of mechanisms that flip an observable but no detector.

    Ascending combination size with meet-in-the-middle over detector
    signatures: singles, then pairs against singles, then pairs against
    pairs. Returns the count, or None if every combination up to w_max is
    detectable.
    """
    dem = circuit if isinstance(circuit, DetectorErrorModel) else extract_dem(circuit)
    det, obs = dem.det_masks, dem.obs_masks
    nm = len(det)
    if w_max >= 1:
        for i in range(nm):
            if det[i] == 0 and obs[i]:
                return 1
    singles: dict[int, list[int]] = {}
    for i in range(nm):
        singles.setdefault(det[i], []).append(i)
    if w_max >= 2:
        for idxs in singles.values():
            for a in range(len(idxs)):
                for b in range(a + 1, len(idxs)):
                    if obs[idxs[a]] ^ obs[idxs[b]]:
                        return 2
    if w_max >= 3:
        if math.comb(nm, 2) > max_pairs:
            raise ValueError(
                f"{math.comb(nm, 2)} mechanism pairs exceed the search guard"
            )
        for j in range(nm):
            for k in range(j + 1, nm):
                key = det[j] ^ det[k]
                ob = obs[j] ^ obs[k]
                for i in singles.get(key, ()):
                    if i != j and i != k and (ob ^ obs[i]):
                        return 3
    if w_max >= 4:
        pairs: dict[int, list[tuple[int, int, int]]] = {}
        for j in range(nm):
            for k in range(j + 1, nm):
                key = det[j] ^ det[k]
                ob = obs[j] ^ obs[k]
                for a, b, ob2 in pairs.get(key, ()):
                    if a != j and a != k and b != j and b != k and (ob ^ ob2):
                        return 4
                pairs.setdefault(key, []).append((j, k, ob))
    if w_max >= 5:
        raise ValueError("fault-distance search supports w_max <= 4")
    return None


# sampling --------------------------------------------------------------------------


def sample_circuit_level(circuit: StabilizerCircuit, shots: int, seed: int,
                         decoder: str = "bposd") -> SampleResult:
    """Pauli-frame Monte Carlo over the detector error model.

    Per shot: trigger each mechanism independently, XOR the detector and
    observable signatures, decode the detector vector against the mechanism
    matrix, and compare predicted with actual observable flips.
    """
    dem = extract_dem(circuit)
    cycles = circuit.meta.get("cycles", 1)
    result = SampleResult(
        code=circuit.meta.get("code", "?"), noise_kind="circuit_level",
        p=circuit.p, q=0.0, rounds=cycles, shots=shots, failures=0,
        seed=seed, decoder=decoder,
    )
    if len(dem) == 0:
        result.mask_counts = {0: shots}
        return result
    hdet, hobs = dem.to_matrices()
    hobs_d = hobs.to_dense()
    d = circuit.meta.get("distance") or cycles
    if decoder == "bposd":
        dec = BposdDecoder(hdet, dem.probs, BposdParams.for_distance(d))

        def run(bits):
            return dec.decode(bits).estimate.to_bits()

    elif decoder == "mle":
        mdec = MleDecoder(hdet, dem.probs)

        def run(bits):
            est = np.zeros(len(dem), dtype=np.uint8)
            est[mdec.decode_support(bits)] = 1
            return est

    else:
        raise ValueError("circuit-level decoding supports 'mle' or 'bposd'")
    nd = dem.n_detectors
    failures = 0
    mask_counts: dict[int, int] = {}
    for shot in range(shots):
        rng = _shot_rng(seed, shot)
        trig = np.nonzero(rng.random(len(dem)) < dem.probs)[0]
        dmask = 0
        omask = 0
        for j in trig:
            dmask ^= dem.det_masks[j]
            omask ^= dem.obs_masks[j]
        bits = np.array([(dmask >> i) & 1 for i in range(nd)], dtype=np.uint8)
        est = run(bits)
        pred = 0
        for i, bit in enumerate((hobs_d @ est) % 2):
            pred |= int(bit) << i
        mask = pred ^ omask
        mask_counts[mask] = mask_counts.get(mask, 0) + 1
        if mask:
            failures += 1
    result.failures = failures
    result.mask_counts = mask_counts
    return result
