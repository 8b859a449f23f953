"""Declarative Monte Carlo runs, curve persistence, and threshold fits.

An experiment is a code, a noise channel, a decoder, and a grid of physical
error rates; running it produces one failure-rate point per grid value.
Results stream to a CSV file (plus a JSON sidecar holding the full config)
as they complete, so long runs survive interruption with partial output.

Pseudo-thresholds are read off as the crossing of a quadratic fit in
log-log coordinates with the unencoded failure rate 1 - (1-p)^k; family
crossing points average the pairwise fit crossings of several curves.
The power-law regime is linear in log-log, which keeps the local quadratic
honest near the crossing.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import circuits, codes, sampling
from .sampling import SampleResult, unencoded_failure

CSV_HEADER = "code,noise_kind,p,q,rounds,shots,failures,p_L,stderr,per_cycle_p_L"

NOISE_KINDS = ("code_capacity", "phenomenological", "circuit_level")


# result rows -----------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    """One Monte Carlo point on a logical-failure curve."""

    p: float
    shots: int
    failures: int
    p_L: float
    stderr: float
    per_cycle_p_L: float | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("need shots >= 1")
        if not 0 <= self.failures <= self.shots:
            raise ValueError("failures must lie in [0, shots]")
        want_pl = self.failures / self.shots
        want_se = math.sqrt(want_pl * (1.0 - want_pl) / self.shots)
        if not math.isclose(self.p_L, want_pl, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("p_L must equal failures / shots")
        if not math.isclose(self.stderr, want_se, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("stderr must equal sqrt(p_L (1-p_L) / shots)")

    @classmethod
    def from_counts(cls, p: float, shots: int, failures: int,
                    per_cycle_p_L: float | None = None) -> "CurvePoint":
        if shots < 1:
            raise ValueError("need shots >= 1")
        if not 0 <= failures <= shots:
            raise ValueError("failures must lie in [0, shots]")
        p_L = failures / shots
        stderr = math.sqrt(p_L * (1.0 - p_L) / shots)
        return cls(p, shots, failures, p_L, stderr, per_cycle_p_L)

    @classmethod
    def from_result(cls, res: SampleResult) -> "CurvePoint":
        per_cycle = res.per_cycle_p_L if res.rounds > 1 else None
        return cls(res.p, res.shots, res.failures, res.p_L, res.stderr,
                   per_cycle)


@dataclass(frozen=True)
class Estimate:
    """Fitted value with a one-sigma style uncertainty."""

    value: float
    sigma: float

    def __str__(self) -> str:
        return f"{self.value:.6g} +/- {self.sigma:.2g}"


# experiment configuration ----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One declarative Monte Carlo job.

    `grid` must be strictly increasing. `q` and `rounds` apply to the
    phenomenological channel (both default from p and the code distance),
    `cycles` and `basis` to circuit-level memory experiments.
    """

    kind: str = "lcs"
    l: int = 1
    L: int = 3
    j: int = 1
    noise: str = "code_capacity"
    decoder: str = "mle"
    grid: tuple[float, ...] = ()
    shots: int = 1
    seed: int = 0
    q: float | None = None
    rounds: int | None = None
    cycles: int | None = None
    basis: str = "Z"
    output: str | None = None

    def __post_init__(self):
        if self.kind not in ("lcs", "surface"):
            raise ValueError("kind must be 'lcs' or 'surface'")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}")
        if self.decoder not in ("mle", "exact-ml", "bposd"):
            raise ValueError("decoder must be 'mle', 'exact-ml', or 'bposd'")
        if self.decoder == "exact-ml" and self.noise != "code_capacity":
            raise ValueError("exact-ml decodes code-capacity noise only")
        if self.shots < 1:
            raise ValueError("need shots >= 1")
        object.__setattr__(self, "grid", tuple(float(p) for p in self.grid))
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")

    def build_code(self) -> codes.CssCode:
        if self.kind == "lcs":
            return codes.lcs_code(self.l, self.L, self.j)
        return codes.disjoint_surface_code(self.l, self.L)


_INT_KEYS = {"l", "L", "j", "shots", "seed", "rounds", "cycles"}
_STR_KEYS = {"kind", "noise", "decoder", "basis", "output"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key = value experiment format.

    One assignment per line, `#` starts a comment, blank lines are skipped.
    Keys are the ExperimentConfig field names; `grid` takes whitespace- or
    comma-separated probabilities, everything else a single token.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key '{key}'")
        if key == "grid":
            values[key] = tuple(float(t) for t in val.replace(",", " ").split())
        elif key in _INT_KEYS:
            values[key] = int(val)
        elif key == "q":
            values[key] = float(val)
        elif key in _STR_KEYS:
            values[key] = val
        else:
            raise ValueError(f"line {lineno}: unknown key '{key}'")
    return ExperimentConfig(**values)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# persistence -----------------------------------------------------------------------


def result_csv_row(res: SampleResult) -> str:
    """Format one result row; floats use repr so parsing loses nothing."""
    return ",".join([
        res.code, res.noise_kind, repr(res.p), repr(res.q), str(res.rounds),
        str(res.shots), str(res.failures), repr(res.p_L), repr(res.stderr),
        repr(res.per_cycle_p_L),
    ])


def parse_curve_csv(text: str) -> list[SampleResult]:
    """Parse rows written by result_csv_row back into SampleResult values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("missing or unexpected CSV header")
    out = []
    for ln in lines[1:]:
        f = ln.split(",")
        if len(f) != 10:
            raise ValueError(f"expected 10 columns, got {len(f)}")
        res = SampleResult(code=f[0], noise_kind=f[1], p=float(f[2]),
                           q=float(f[3]), rounds=int(f[4]), shots=int(f[5]),
                           failures=int(f[6]))
        for col, derived in ((7, res.p_L), (8, res.stderr),
                             (9, res.per_cycle_p_L)):
            if not math.isclose(float(f[col]), derived,
                                rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError("derived columns disagree with counts")
        out.append(res)
    return out


def read_curve(path: str) -> list[CurvePoint]:
    with open(path, "r", encoding="utf-8") as fh:
        return [CurvePoint.from_result(r) for r in parse_curve_csv(fh.read())]


def _write_sidecar(config: ExperimentConfig, code: codes.CssCode) -> None:
    payload = {
        "config": asdict(config),
        "code": {"name": code.name(), "n": code.n, "k": code.k,
                 "meta": {k: v for k, v in code.meta.items()
                          if isinstance(v, (str, int, float))}},
    }
    with open(config.output + ".json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# runner ----------------------------------------------------------------------------


def _sample_point(code, config: ExperimentConfig, p: float,
                  seed: int) -> SampleResult:
    if config.noise == "code_capacity":
        return sampling.sample_code_capacity(
            code, p, config.shots, seed, decoder=config.decoder)
    if config.noise == "phenomenological":
        return sampling.sample_phenomenological(
            code, p, config.shots, seed, q=config.q, rounds=config.rounds,
            decoder=config.decoder)
    cycles = config.cycles or sampling.code_distance(code)
    circuit = circuits.memory_experiment(code, config.basis, cycles, p)
    return circuits.sample_circuit_level(
        circuit, config.shots, seed, decoder=config.decoder)


def run_experiment(config: ExperimentConfig,
                   progress: Callable[[SampleResult], None] | None = None,
                   ) -> list[CurvePoint]:
    """Run one job; point i uses seed + i so reruns are reproducible.

    When config.output is set, the sidecar and CSV header are written up
    front and each row is flushed as soon as its point finishes.
    """
    code = config.build_code()
    fh = None
    if config.output:
        parent = os.path.dirname(config.output)
        if parent:
            os.makedirs(parent, exist_ok=True)
        _write_sidecar(config, code)
        fh = open(config.output, "w", encoding="utf-8")
        fh.write(CSV_HEADER + "\n")
        fh.flush()
    points: list[CurvePoint] = []
    try:
        for i, p in enumerate(config.grid):
            try:
                res = _sample_point(code, config, p, config.seed + i)
            except Exception as err:
                raise RuntimeError(
                    f"point p={p:g} (grid index {i}) failed: {err}") from err
            points.append(CurvePoint.from_result(res))
            if fh is not None:
                fh.write(result_csv_row(res) + "\n")
                fh.flush()
            if progress is not None:
                progress(res)
    finally:
        if fh is not None:
            fh.close()
    return points


# threshold fits --------------------------------------------------------------------


def _positive_points(curve: Sequence[CurvePoint]) -> list[CurvePoint]:
    # zero-failure points carry no information on a log scale
    pts = sorted((t for t in curve if t.failures > 0), key=lambda t: t.p)
    if len(pts) < 3:
        raise ValueError("need at least 3 points with observed failures")
    return pts


def _fit(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.polyfit(xs, ys, min(2, len(xs) - 1))


def _window_indices(n: int, lo: int, hi: int, window: int) -> list[int]:
    idx = list(range(lo, hi + 1))
    while len(idx) < min(window, n):
        if idx[0] > 0:
            idx.insert(0, idx[0] - 1)
        if len(idx) < min(window, n) and idx[-1] < n - 1:
            idx.append(idx[-1] + 1)
    return idx


def _per_cycle_values(pts: Sequence[CurvePoint]) -> tuple[np.ndarray, np.ndarray]:
    ys = []
    sig = []
    for t in pts:
        if t.per_cycle_p_L is None or t.per_cycle_p_L <= 0.0:
            raise ValueError("curve has no per-cycle rates")
        # recover the round count the rescaling divided by
        n = round(math.log1p(-t.p_L) / math.log1p(-t.per_cycle_p_L))
        ys.append(t.per_cycle_p_L)
        sig.append(t.stderr * (1.0 - t.p_L) ** (1.0 / n - 1.0) / n)
    return np.array(ys), np.array(sig)


def pseudo_threshold(curve: Sequence[CurvePoint], k: int, window: int = 5,
                     per_cycle: bool = False) -> Estimate:
    """Crossing of the fitted curve with the unencoded rate 1 - (1-p)^k.

    A quadratic is fitted through the `window` log-log points nearest the
    bracketing grid interval. The uncertainty is the crossing shift under
    refitting with every point moved up or down by one standard error.
    With per_cycle the per-cycle rates are fitted instead, with the error
    bars propagated through the rescaling.
    """
    pts = _positive_points(curve)
    ps = np.array([t.p for t in pts])
    if per_cycle:
        pls, sig = _per_cycle_values(pts)
    else:
        pls = np.array([t.p_L for t in pts])
        sig = np.array([t.stderr for t in pts])
    diff = pls - np.array([unencoded_failure(k, p) for p in ps])
    bracket = next((i for i in range(len(pts) - 1)
                    if diff[i] == 0.0 or diff[i] * diff[i + 1] < 0.0), None)
    if bracket is None:
        raise ValueError(
            "curve does not bracket a crossing with the unencoded rate")
    idx = _window_indices(len(pts), bracket, bracket + 1, window)
    xs = np.log(ps[idx])

    def solve(log_pl: np.ndarray) -> float:
        coeff = _fit(xs, log_pl[idx])

        def g(x: float) -> float:
            return float(np.polyval(coeff, x)) - math.log(
                unencoded_failure(k, math.exp(x)))

        for a, b in ((math.log(ps[bracket]), math.log(ps[bracket + 1])),
                     (xs[0], xs[-1])):
            if g(a) == 0.0:
                return math.exp(a)
            if g(b) == 0.0:
                return math.exp(b)
            if g(a) * g(b) < 0.0:
                return math.exp(brentq(g, a, b))
        raise ValueError(
            "fitted curve does not cross the unencoded rate in the window")

    # one-sigma shifts mapped to log scale via sigma / p_L
    center = solve(np.log(pls))
    up = solve(np.log(pls) + sig / pls)
    down = solve(np.log(pls) - sig / pls)
    return Estimate(center, max(abs(up - center), abs(down - center)))


def _pair_crossing(ca: np.ndarray, cb: np.ndarray,
                   xlo: float, xhi: float) -> float:
    d = np.polysub(ca, cb)
    roots = [float(r.real) for r in np.roots(d)
             if abs(r.imag) < 1e-9 and xlo - 1e-9 <= r.real <= xhi + 1e-9]
    if not roots:
        raise ValueError("curves do not cross in the overlapping range")
    # prefer the transversal crossing when the quadratics touch twice
    slope = np.polyder(d)
    return max(roots, key=lambda r: abs(float(np.polyval(slope, r))))


def crossing_point(curves: Sequence[Sequence[CurvePoint]]) -> Estimate:
    """Average pairwise crossing of per-curve log-log quadratic fits.

    The quoted uncertainty combines the spread over curve pairs with the
    shift under one-standard-error refits, mirroring how a crossing is
    read off a plot with error bars.
    """
    if len(curves) < 2:
        raise ValueError("need at least two curves")
    prepared = [_positive_points(c) for c in curves]
    xlo = math.log(max(c[0].p for c in prepared))
    xhi = math.log(min(c[-1].p for c in prepared))
    if not xlo < xhi:
        raise ValueError("curve grids do not overlap")
    fits = []
    for pts in prepared:
        inside = [t for t in pts
                  if xlo - 1e-12 <= math.log(t.p) <= xhi + 1e-12]
        if len(inside) < 3:
            raise ValueError(
                "need at least 3 points inside the overlapping range")
        xs = np.log([t.p for t in inside])
        ys = np.log([t.p_L for t in inside])
        shift = np.array([t.stderr / t.p_L for t in inside])
        fits.append((_fit(xs, ys), _fit(xs, ys + shift), _fit(xs, ys - shift)))
    nominal: list[float] = []
    spread: list[float] = []
    for a in range(len(fits)):
        for b in range(a + 1, len(fits)):
            x0 = _pair_crossing(fits[a][0], fits[b][0], xlo, xhi)
            nominal.append(math.exp(x0))
            spread.append(math.exp(x0))
            for ia, ib in ((1, 2), (2, 1)):  # opposite one-sigma shifts
                try:
                    spread.append(math.exp(
                        _pair_crossing(fits[a][ia], fits[b][ib], xlo, xhi)))
                except ValueError:
                    pass
    value = float(np.mean(nominal))
    sigma = (max(spread) - min(spread)) / 2.0
    return Estimate(value, sigma)
