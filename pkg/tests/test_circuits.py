"""Coloration circuits, noise channels, and detector error models.

The production DEM extraction runs one backward sweep over the circuit; the
tests check it against an independent oracle that forward-propagates every
fault case one at a time through the Pauli frame.
"""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest

from lcs_codes import codes
from lcs_codes.analysis import exact_distance
from lcs_codes.circuits import (
    MAX_LCS_COLORS,
    DetectorErrorModel,
    Operation,
    StabilizerCircuit,
    annotate_noise,
    build_coloration_circuit,
    color_tanner_edges,
    extract_dem,
    fault_distance,
    memory_experiment,
    sample_circuit_level,
)
from lcs_codes.gf2 import BitMatrix

# forward-propagation oracle ---------------------------------------------------------


def flat_ops(circ):
    return [op for layer in circ.layers for op in layer]


def meas_signatures(circ):
    """Detector/observable signature of flipping each measurement outcome."""
    nd = len(circ.detectors)
    sig = [0] * circ.n_meas
    for i, det in enumerate(circ.detectors):
        for m in det:
            sig[m] ^= 1 << i
    for i, obs in enumerate(circ.observables):
        for m in obs:
            sig[m] ^= 1 << (nd + i)
    return sig


def propagate(circ, flat, faults, sig_of_meas=None):
    """Forward Pauli-frame walk with faults injected at (index, x, z, before).

    Returns the combined signature: detector bits low, observable bits above
    them. Within a layer qubits are disjoint, so sequential order is exact.
    """
    if sig_of_meas is None:
        sig_of_meas = meas_signatures(circ)
    fx = [0] * circ.n_qubits
    fz = [0] * circ.n_qubits
    before: dict[int, list] = {}
    after: dict[int, list] = {}
    first = len(flat)
    for t, xa, za, pre in faults:
        (before if pre else after).setdefault(t, []).append((xa, za))
        first = min(first, t)

    def inject(xa, za):
        while xa:
            fx[(xa & -xa).bit_length() - 1] ^= 1
            xa &= xa - 1
        while za:
            fz[(za & -za).bit_length() - 1] ^= 1
            za &= za - 1

    sig = 0
    for t in range(first, len(flat)):
        op = flat[t]
        for xa, za in before.get(t, ()):
            inject(xa, za)
        if op.name == "cx":
            c, tq = op.qubits
            fx[tq] ^= fx[c]
            fz[c] ^= fz[tq]
        elif op.name in ("prep_z", "prep_x"):
            fx[op.qubits[0]] = 0
            fz[op.qubits[0]] = 0
        elif op.name == "meas_z":
            if fx[op.qubits[0]]:
                sig ^= sig_of_meas[op.midx]
        elif op.name == "meas_x":
            if fz[op.qubits[0]]:
                sig ^= sig_of_meas[op.midx]
        for xa, za in after.get(t, ()):
            inject(xa, za)
    return sig


def oracle_dem(circ):
    """Signature -> probability map built fault by fault."""
    flat = flat_ops(circ)
    sigm = meas_signatures(circ)
    merged: dict[int, float] = {}
    for t, op in enumerate(flat):
        pre = op.name.startswith("meas")
        for prob, xa, za in op.noise:
            sig = propagate(circ, flat, [(t, xa, za, pre)], sigm)
            if sig == 0:
                continue
            p1 = merged.get(sig, 0.0)
            merged[sig] = p1 * (1.0 - prob) + prob * (1.0 - p1)
    return merged


def dem_as_dict(dem):
    return {
        (om << dem.n_detectors) | dm: float(p)
        for p, dm, om in zip(dem.probs, dem.det_masks, dem.obs_masks)
    }


_CACHE: dict = {}


def memory_15(cycles, p=0.01):
    key = (cycles, p)
    if key not in _CACHE:
        _CACHE[key] = memory_experiment(codes.lcs_code(1, 3), "Z", cycles, p)
    return _CACHE[key]


def graph_shim(h):
    return SimpleNamespace(hx=h, hz=h, meta={})


# edge coloring ----------------------------------------------------------------------


class TestColoring:
    def test_path_graph_uses_two_colors(self):
        h = BitMatrix.from_dense(np.array([[1, 0], [1, 1]], dtype=np.uint8))
        colors = color_tanner_edges(graph_shim(h), "X")
        assert len(colors) == 2
        assert sorted(e for c in colors for e in c) == [(0, 0), (1, 0), (1, 1)]

    def test_15_3_3_uses_exactly_six_colors(self):
        code = codes.lcs_code(1, 3)
        assert len(color_tanner_edges(code, "X")) == 6
        assert len(color_tanner_edges(code, "Z")) == 6

    def test_classes_are_matchings_covering_all_edges(self):
        for code in (codes.lcs_code(1, 3), codes.lcs_code(1, 4)):
            for pauli in ("X", "Z"):
                colors = color_tanner_edges(code, pauli)
                assert len(colors) <= MAX_LCS_COLORS
                h = code.hx if pauli == "X" else code.hz
                all_edges = [
                    (int(r), int(q)) for r, q in zip(*np.nonzero(h.to_dense()))
                ]
                seen = []
                for matching in colors:
                    checks = [r for r, _ in matching]
                    qubits = [q for _, q in matching]
                    assert len(set(checks)) == len(checks)
                    assert len(set(qubits)) == len(qubits)
                    seen.extend(matching)
                assert sorted(seen) == sorted(all_edges)

    def test_surface_code_within_four_colors(self):
        surf = codes.disjoint_surface_code(1, 2)
        assert len(color_tanner_edges(surf, "X")) <= 4
        assert len(color_tanner_edges(surf, "Z")) <= 4

    def test_rejects_unknown_pauli(self):
        with pytest.raises(ValueError, match="pauli"):
            color_tanner_edges(codes.lcs_code(1, 3), "Y")


# circuit construction ---------------------------------------------------------------


class TestCircuitStructure:
    def test_single_cycle_layout(self):
        code = codes.lcs_code(1, 3)
        circ = build_coloration_circuit(code, 1)
        assert circ.n_qubits == 27
        assert circ.roles.count("data") == 15
        assert circ.roles.count("ancilla_z") == 6
        assert circ.roles.count("ancilla_x") == 6
        assert circ.n_meas == 12
        cx_layers = [
            layer for layer in circ.layers
            if any(op.name == "cx" for op in layer)
        ]
        assert len(cx_layers) == 12
        for layer in cx_layers[:6]:
            for op in layer:
                if op.name == "cx":
                    assert circ.roles[op.qubits[1]] == "ancilla_z"
        for layer in cx_layers[6:]:
            for op in layer:
                if op.name == "cx":
                    assert circ.roles[op.qubits[0]] == "ancilla_x"

    def test_measurements_ordered_z_then_x(self):
        circ = build_coloration_circuit(codes.lcs_code(1, 3), 1)
        by_midx = {op.midx: op.name for op in circ.ops() if op.midx is not None}
        assert all(by_midx[i] == "meas_z" for i in range(6))
        assert all(by_midx[i] == "meas_x" for i in range(6, 12))

    def test_repeated_cycles(self):
        circ = build_coloration_circuit(codes.lcs_code(1, 3), 3)
        per = len(circ.layers) // 3
        assert circ.cycle_layers == [0, per, 2 * per]
        assert circ.n_meas == 36
        circ.validate()

    def test_data_qubits_touched_every_layer(self):
        circ = build_coloration_circuit(codes.lcs_code(1, 3), 1)
        data = set(range(15))
        for layer in circ.layers:
            touched = {q for op in layer for q in op.qubits}
            assert data <= touched

    def test_rejects_zero_cycles(self):
        with pytest.raises(ValueError, match="cycles"):
            build_coloration_circuit(codes.lcs_code(1, 3), 0)

    def test_rejects_uneven_check_split(self):
        code = codes.lcs_code(1, 3)
        hz = code.hz.to_dense()
        padded = codes.CssCode.from_checks(
            code.hx, BitMatrix.from_dense(np.vstack([hz, hz[:1]]))
        )
        with pytest.raises(ValueError, match="split evenly"):
            build_coloration_circuit(padded, 1)


class TestValidation:
    def test_double_touch_rejected(self):
        circ = StabilizerCircuit(
            n_qubits=2, roles=["data", "data"],
            layers=[[Operation("cx", (0, 1)), Operation("idle", (1,))]],
        )
        with pytest.raises(ValueError, match="touched twice"):
            circ.validate()

    def test_ancilla_used_before_preparation(self):
        circ = StabilizerCircuit(
            n_qubits=2, roles=["data", "ancilla_z"],
            layers=[[Operation("cx", (0, 1))]],
        )
        with pytest.raises(ValueError, match="before preparation"):
            circ.validate()

    def test_duplicate_measurement_index(self):
        circ = StabilizerCircuit(
            n_qubits=1, roles=["data"],
            layers=[[Operation("meas_z", (0,), midx=0)],
                    [Operation("meas_z", (0,), midx=0)]],
            n_meas=1,
        )
        with pytest.raises(ValueError, match="reused"):
            circ.validate()

    def test_noncontiguous_measurement_indices(self):
        circ = StabilizerCircuit(
            n_qubits=1, roles=["data"],
            layers=[[Operation("meas_z", (0,), midx=1)]],
            n_meas=2,
        )
        with pytest.raises(ValueError, match="contiguous"):
            circ.validate()

    def test_detector_reference_out_of_range(self):
        circ = StabilizerCircuit(
            n_qubits=1, roles=["data"],
            layers=[[Operation("meas_z", (0,), midx=0)]],
            n_meas=1, detectors=[(0, 1)],
        )
        with pytest.raises(ValueError, match="detector references"):
            circ.validate()

    def test_cx_endpoints_must_differ(self):
        with pytest.raises(ValueError, match="distinct"):
            Operation("cx", (2, 2))

    def test_to_text_layout(self):
        circ = StabilizerCircuit(
            n_qubits=2, roles=["data", "ancilla_z"],
            layers=[[Operation("prep_z", (1,))],
                    [Operation("cx", (0, 1))],
                    [Operation("meas_z", (1,), midx=0)]],
            n_meas=1, detectors=[(0,)], observables=[(0,)],
        )
        lines = circ.to_text().splitlines()
        assert lines[0] == "PREP_Z 1"
        assert lines[1] == "TICK"
        assert lines[2] == "CX 0 1"
        assert lines.count("TICK") == 2
        assert "DETECTOR m0" in lines
        assert "OBSERVABLE 0 m0" in lines


# noise channels ---------------------------------------------------------------------


class TestNoiseChannels:
    def test_cx_channel_has_fifteen_cases(self):
        p = 0.15
        circ = memory_experiment(codes.lcs_code(1, 3), "Z", 1, p)
        op = next(o for o in circ.ops() if o.name == "cx")
        assert len(op.noise) == 15
        c, t = op.qubits
        cases = {(xa, za) for _, xa, za in op.noise}
        assert len(cases) == 15
        assert (0, 0) not in cases
        for prob, xa, za in op.noise:
            assert prob == pytest.approx(p / 15)
            assert xa | za | (1 << c) | (1 << t) == (1 << c) | (1 << t)

    def test_prep_and_meas_flip_in_their_basis(self):
        p = 0.07
        circ = memory_experiment(codes.lcs_code(1, 3), "Z", 1, p)
        prep = next(o for o in circ.ops() if o.name == "prep_z")
        assert prep.noise == ((p, 1 << prep.qubits[0], 0),)
        mx = next(o for o in circ.ops() if o.name == "meas_x")
        assert mx.noise == ((p, 0, 1 << mx.qubits[0]),)
        px = next(o for o in circ.ops() if o.name == "prep_x")
        assert px.noise == ((p, 0, 1 << px.qubits[0]),)

    def test_idle_channel_is_tenth_strength(self):
        p = 0.3
        circ = memory_experiment(codes.lcs_code(1, 3), "Z", 1, p)
        idle = next(o for o in circ.ops() if o.name == "idle")
        assert len(idle.noise) == 3
        total = sum(prob for prob, _, _ in idle.noise)
        assert total == pytest.approx(p / 10)
        q = idle.qubits[0]
        assert {(xa, za) for _, xa, za in idle.noise} == {
            (1 << q, 0), (1 << q, 1 << q), (0, 1 << q)
        }

    def test_zero_noise_clears_channels(self):
        core = build_coloration_circuit(codes.lcs_code(1, 3), 1)
        noisy = annotate_noise(core, 0.0)
        assert all(op.noise == () for op in noisy.ops())

    def test_probability_bounds(self):
        core = build_coloration_circuit(codes.lcs_code(1, 3), 1)
        with pytest.raises(ValueError, match="p must lie"):
            annotate_noise(core, 0.5)
        with pytest.raises(ValueError, match="p must lie"):
            annotate_noise(core, -0.01)


# memory experiments -----------------------------------------------------------------


class TestMemoryExperiment:
    def test_detector_and_observable_counts(self):
        code = codes.lcs_code(1, 3)
        for cycles in (1, 2, 3):
            circ = memory_experiment(code, "Z", cycles, 0.01)
            assert len(circ.detectors) == (cycles + 1) * (code.n - code.k) // 2
            assert len(circ.observables) == code.k
        xmem = memory_experiment(code, "X", 2, 0.01)
        assert len(xmem.detectors) == 18
        assert len(xmem.observables) == 3

    def test_x_basis_reads_x_ancillas(self):
        code = codes.lcs_code(1, 3)
        circ = memory_experiment(code, "X", 2, 0.01)
        by_midx = {op.midx: op.name for op in circ.ops() if op.midx is not None}
        for det in circ.detectors:
            for m in det:
                assert by_midx[m] in ("meas_x",)
        assert circ.meta["basis"] == "X"
        assert circ.meta["distance"] == 3

    def test_rejects_unknown_basis(self):
        with pytest.raises(ValueError, match="basis"):
            memory_experiment(codes.lcs_code(1, 3), "Y", 1, 0.01)


# detector error model ---------------------------------------------------------------


class TestDetectorErrorModel:
    def test_matches_forward_oracle_z_memory(self):
        circ = memory_15(2)
        oracle = oracle_dem(circ)
        ours = dem_as_dict(extract_dem(circ))
        assert set(ours) == set(oracle)
        for sig, prob in oracle.items():
            assert ours[sig] == pytest.approx(prob, rel=1e-9)

    def test_matches_forward_oracle_x_memory(self):
        surf = codes.disjoint_surface_code(1, 2)
        circ = memory_experiment(surf, "X", 2, 0.02)
        oracle = oracle_dem(circ)
        ours = dem_as_dict(extract_dem(circ))
        assert set(ours) == set(oracle)
        for sig, prob in oracle.items():
            assert ours[sig] == pytest.approx(prob, rel=1e-9)

    def test_three_cycle_mechanism_count(self):
        circ = memory_15(3)
        dem = extract_dem(circ)
        assert len(dem) == len(oracle_dem(circ)) == 141

    def test_zero_noise_gives_empty_model(self):
        circ = memory_experiment(codes.lcs_code(1, 3), "Z", 2, 0.0)
        assert len(extract_dem(circ)) == 0

    def test_probabilities_bounded_and_signatures_unique(self):
        dem = extract_dem(memory_15(3))
        assert np.all(dem.probs > 0.0)
        assert np.all(dem.probs < 0.5)
        sigs = list(zip(dem.det_masks, dem.obs_masks))
        assert len(set(sigs)) == len(sigs)
        assert dem.n_observables == 3

    def test_merge_probability_formula(self):
        # two idles between prep and meas: six fault cases hit the one
        # detector, the rest are invisible
        p = 0.1
        toy = StabilizerCircuit(
            n_qubits=1, roles=["ancilla_z"],
            layers=[[Operation("prep_z", (0,))], [Operation("idle", (0,))],
                    [Operation("idle", (0,))],
                    [Operation("meas_z", (0,), midx=0)]],
            n_meas=1, detectors=[(0,)],
        )
        toy.validate()
        dem = extract_dem(annotate_noise(toy, p))
        expect = 0.0
        for prob in (p, p / 30, p / 30, p / 30, p / 30, p):
            expect = expect * (1 - prob) + prob * (1 - expect)
        assert len(dem) == 1
        assert dem.det_masks == [1]
        assert dem.obs_masks == [0]
        assert dem.probs[0] == pytest.approx(expect, rel=1e-12)

    def test_single_x_fault_flips_adjacent_z_comparisons(self):
        # a data X between cycles 1 and 2 flips, for every adjacent Z check,
        # the comparison of those two rounds; the final detectors cancel
        # against the flipped data readout
        code = codes.lcs_code(1, 3)
        circ = memory_15(3)
        flat = flat_ops(circ)
        start = sum(len(l) for l in circ.layers[: circ.cycle_layers[1]])
        hzd = code.hz.to_dense()
        lzd = code.lz.to_dense()
        nd = len(circ.detectors)
        mz = code.hz.rows
        for q in (0, 9, 14):
            sig = propagate(circ, flat, [(start, 1 << q, 0, True)])
            det, obs = sig & ((1 << nd) - 1), sig >> nd
            adj = np.nonzero(hzd[:, q])[0]
            assert det == sum(1 << (mz + int(i)) for i in adj)
            assert obs == sum(1 << r for r in range(3) if lzd[r, q])

    def test_mid_cycle_x_fault_splits_between_rounds(self):
        # injected between CX layers, each adjacent check catches the flip in
        # exactly one of the two surrounding comparison rounds
        code = codes.lcs_code(1, 3)
        circ = memory_15(3)
        flat = flat_ops(circ)
        mid = sum(len(l) for l in circ.layers[: circ.cycle_layers[1] + 4])
        hzd = code.hz.to_dense()
        nd = len(circ.detectors)
        mz = code.hz.rows
        for q in (9, 14):
            sig = propagate(circ, flat, [(mid, 1 << q, 0, True)])
            det = sig & ((1 << nd) - 1)
            flipped = [i for i in range(nd) if det >> i & 1]
            adj = set(int(i) for i in np.nonzero(hzd[:, q])[0])
            assert set(flipped) <= {mz + i for i in adj} | {2 * mz + i for i in adj}
            assert sorted(f % mz for f in flipped) == sorted(adj)

    def test_measurement_flip_hits_its_comparing_detectors(self):
        code = codes.lcs_code(1, 3)
        circ = memory_15(3)
        flat = flat_ops(circ)
        nd = len(circ.detectors)
        midx = 1 * 12 + 2  # Z ancilla 2, middle round
        t = next(i for i, op in enumerate(flat) if op.midx == midx)
        aq = flat[t].qubits[0]
        sig = propagate(circ, flat, [(t, 1 << aq, 0, True)])
        det, obs = sig & ((1 << nd) - 1), sig >> nd
        containing = [d for d, ms in enumerate(circ.detectors) if midx in ms]
        assert len(containing) == 2
        assert det == sum(1 << d for d in containing)
        assert obs == 0

    def test_data_readout_flip_hits_final_detectors(self):
        code = codes.lcs_code(1, 3)
        circ = memory_15(3)
        flat = flat_ops(circ)
        nd = len(circ.detectors)
        q = 9
        midx = 36 + q
        t = next(i for i, op in enumerate(flat) if op.midx == midx)
        sig = propagate(circ, flat, [(t, 1 << q, 0, True)])
        det, obs = sig & ((1 << nd) - 1), sig >> nd
        containing = [d for d, ms in enumerate(circ.detectors) if midx in ms]
        assert det == sum(1 << d for d in containing)
        assert all(d >= 18 for d in containing)
        lzd = codes.lcs_code(1, 3).lz.to_dense()
        assert obs == sum(1 << r for r in range(3) if lzd[r, q])

    def test_pauli_propagation_is_linear(self):
        circ = memory_15(2)
        flat = flat_ops(circ)
        sigm = meas_signatures(circ)
        cases = [
            (t, xa, za, op.name.startswith("meas"))
            for t, op in enumerate(flat)
            for _, xa, za in op.noise
        ]
        rng = np.random.default_rng(5)
        for _ in range(30):
            a, b = rng.integers(0, len(cases), size=2)
            s1 = propagate(circ, flat, [cases[a]], sigm)
            s2 = propagate(circ, flat, [cases[b]], sigm)
            joint = propagate(circ, flat, [cases[a], cases[b]], sigm)
            assert s1 ^ s2 == joint

    def test_matrix_and_text_export(self):
        dem = extract_dem(memory_15(2))
        hdet, hobs = dem.to_matrices()
        assert (hdet.rows, hdet.cols) == (dem.n_detectors, len(dem))
        assert (hobs.rows, hobs.cols) == (3, len(dem))
        j = next(i for i, m in enumerate(dem.det_masks) if m)
        col = [hdet.get(r, j) for r in range(hdet.rows)]
        assert sum(b << r for r, b in enumerate(col)) == dem.det_masks[j]
        lines = dem.to_text().strip().splitlines()
        assert len(lines) == len(dem)
        assert lines[0].startswith("error(")
        assert any(" D" in line for line in lines)
        assert any(" L" in line for line in lines)


# fault distance ---------------------------------------------------------------------


class TestFaultDistance:
    def test_distance_preserved_for_both_codes(self):
        for code in (codes.lcs_code(1, 3), codes.lcs_code(1, 4)):
            circ = memory_experiment(code, "Z", 3, 0.01)
            assert fault_distance(circ) == 3 == exact_distance(code, "Z")
            assert fault_distance(circ, w_max=2) is None

    def test_surface_memory_matches_static_distance(self):
        surf = codes.disjoint_surface_code(1, 2)
        circ = memory_experiment(surf, "Z", 2, 0.01)
        fd = fault_distance(circ)
        assert fd <= exact_distance(surf, "Z")
        assert fd == 2

    def test_direct_model_inputs(self):
        undetectable = DetectorErrorModel(
            probs=np.array([0.1]), det_masks=[0], obs_masks=[1],
            n_detectors=2, n_observables=1,
        )
        assert fault_distance(undetectable) == 1
        pair = DetectorErrorModel(
            probs=np.array([0.1, 0.1]), det_masks=[3, 3], obs_masks=[1, 0],
            n_detectors=2, n_observables=1,
        )
        assert fault_distance(pair) == 2
        assert fault_distance(pair, w_max=1) is None
        detectable = DetectorErrorModel(
            probs=np.array([0.1, 0.1]), det_masks=[1, 2], obs_masks=[1, 1],
            n_detectors=2, n_observables=1,
        )
        assert fault_distance(detectable) is None

    def test_guards(self):
        many = DetectorErrorModel(
            probs=np.full(6, 0.01), det_masks=[1 << i for i in range(6)],
            obs_masks=[1] * 6, n_detectors=6, n_observables=1,
        )
        with pytest.raises(ValueError, match="guard"):
            fault_distance(many, w_max=3, max_pairs=10)
        with pytest.raises(ValueError, match="w_max"):
            fault_distance(many, w_max=5)


# sampling ---------------------------------------------------------------------------


class TestCircuitSampling:
    def test_zero_noise_never_fails(self):
        circ = memory_experiment(codes.lcs_code(1, 3), "Z", 2, 0.0)
        res = sample_circuit_level(circ, 30, seed=1)
        assert res.failures == 0
        assert res.mask_counts == {0: 30}

    def test_reproducible_and_seed_sensitive(self):
        circ = memory_15(3, p=0.004)
        r1 = sample_circuit_level(circ, 150, seed=3)
        r2 = sample_circuit_level(circ, 150, seed=3)
        r3 = sample_circuit_level(circ, 150, seed=4)
        assert r1.failures == r2.failures == 6
        assert r1.mask_counts == r2.mask_counts
        assert r3.failures == 11

    def test_result_metadata(self):
        circ = memory_15(3, p=0.004)
        res = sample_circuit_level(circ, 50, seed=7)
        assert res.noise_kind == "circuit_level"
        assert res.rounds == 3
        assert res.p == 0.004
        assert res.shots == 50
        expected = 1.0 - (1.0 - res.p_L) ** (1.0 / 3.0)
        assert res.per_cycle_p_L == pytest.approx(expected)

    def test_mle_decoder_runs(self):
        circ = memory_15(3, p=0.004)
        res = sample_circuit_level(circ, 100, seed=3, decoder="mle")
        assert res.failures == 0
        assert sum(res.mask_counts.values()) == 100

    def test_unknown_decoder_rejected(self):
        circ = memory_15(3, p=0.004)
        with pytest.raises(ValueError, match="decoder"):
            sample_circuit_level(circ, 10, seed=1, decoder="union_find")
