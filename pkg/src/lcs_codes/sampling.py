"""Monte Carlo estimation of logical failure rates.

Bit-flip sector only: flip errors with syndromes read from hx and logical
action read off against lx. For the symmetric-base products built here the
two check sectors are column shuffles of each other; hx is the sector whose
exhaustive low-weight failure counts are calibrated in the tests. Success
never compares the correction to the injected error; only the residual's
syndrome and its commutators with the logicals matter, so degenerate
corrections count as success.

Every shot draws from its own counter-based stream keyed by (seed, shot),
which makes runs reproducible bit-for-bit regardless of batching.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .decoders import BposdDecoder, BposdParams, ExactMlDecoder, MleDecoder
from .gf2 import BitMatrix

CSV_HEADER = "code,noise_kind,p,q,rounds,shots,failures,p_L,stderr,per_cycle_p_L"


@dataclass(frozen=True)
class NoiseSpec:
    """Channel parameters for one sampling run."""

    kind: str  # code_capacity | phenomenological | circuit_level
    p: float
    q: float | None = None
    p_idle: float | None = None

    def __post_init__(self):
        if self.kind not in ("code_capacity", "phenomenological", "circuit_level"):
            raise ValueError(f"unknown noise kind: {self.kind}")
        for val in (self.p, self.q, self.p_idle):
            if val is not None and not (0.0 <= val < 1.0):
                raise ValueError("probabilities must lie in [0, 1)")
        if self.kind == "phenomenological" and self.q is None:
            object.__setattr__(self, "q", self.p)


@dataclass(frozen=True)
class ShotOutcome:
    success: bool
    residual_logical_mask: int


@dataclass
class SampleResult:
    """Failure statistics for one (code, channel, decoder) point."""

    code: str
    noise_kind: str
    p: float
    q: float
    rounds: int
    shots: int
    failures: int
    mask_counts: dict = field(default_factory=dict)
    seed: int = 0
    decoder: str = "mle"

    @property
    def p_L(self) -> float:
        return self.failures / self.shots

    @property
    def stderr(self) -> float:
        ph = self.p_L
        return math.sqrt(ph * (1.0 - ph) / self.shots)

    @property
    def per_cycle_p_L(self) -> float:
        return per_cycle_rate(self.p_L, self.rounds)

    def csv_row(self) -> str:
        return (
            f"{self.code},{self.noise_kind},{self.p:.6g},{self.q:.6g},"
            f"{self.rounds},{self.shots},{self.failures},{self.p_L:.8g},"
            f"{self.stderr:.8g},{self.per_cycle_p_L:.8g}"
        )


# closed-form helpers --------------------------------------------------------------


def unencoded_failure(k: int, p: float) -> float:
    """Failure probability of k bare qubits: 1 - (1-p)^k."""
    if k < 1:
        raise ValueError("need k >= 1")
    return 1.0 - (1.0 - p) ** k


def rescale_copies(p_L1: float, k: int) -> float:
    """Block failure rate of k independent copies: 1 - (1 - p_L1)^k."""
    return 1.0 - (1.0 - p_L1) ** k


def per_cycle_rate(p_L_total: float, n_sc: int) -> float:
    """Lower bound on the per-cycle rate: 1 - (1 - p_L)^(1/n_sc)."""
    if n_sc < 1:
        raise ValueError("need n_sc >= 1")
    if n_sc == 1:
        return p_L_total
    return 1.0 - (1.0 - p_L_total) ** (1.0 / n_sc)


def _shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, shot]))


def code_distance(code) -> int:
    """Conjectured distance from construction metadata."""
    meta = code.meta
    if meta.get("family") == "lcs":
        return min(meta["L"], 2 * meta["l"] + 1)
    if meta.get("family") == "surface":
        return meta["l"] + 1
    raise ValueError("code metadata does not determine a distance; pass it explicitly")


def _make_static_decoder(code, p: float, decoder: str, d: int | None):
    """Callable syndrome-bits -> dense estimate over the bit-flip sector."""
    if decoder == "mle":
        dec = MleDecoder(code.hx)

        def run(syn: np.ndarray) -> np.ndarray:
            est = np.zeros(code.n, dtype=np.uint8)
            est[dec.decode_support(syn)] = 1
            return est

        return run
    if decoder == "exact-ml":
        dec = ExactMlDecoder(code.hx, code.lx, p)
        return dec.decode_dense
    if decoder == "bposd":
        dd = d if d is not None else code_distance(code)
        bd = BposdDecoder(code.hx, np.full(code.n, p), BposdParams.for_distance(dd))

        def run(syn: np.ndarray) -> np.ndarray:
            return bd.decode(syn).estimate.to_bits()

        return run
    raise ValueError("decoder must be 'mle', 'exact-ml', or 'bposd'")


# code capacity --------------------------------------------------------------------


def sample_code_capacity(code, p: float, shots: int, seed: int,
                         decoder: str = "mle") -> SampleResult:
    """Iid bit-flip channel with perfect syndrome extraction.

    Per shot: error E, syndrome hx E, decode to E*, success iff the residual
    E+E* clears every check and commutes with every lx row. The joint
    distribution of logical masks is recorded for correlation analysis.
    """
    if not (0.0 <= p < 1.0):
        raise ValueError("p must lie in [0, 1)")
    hxd = code.hx.to_dense()
    lxd = code.lx.to_dense()
    run = _make_static_decoder(code, max(p, 1e-9), decoder, None)
    failures = 0
    mask_counts: dict[int, int] = {}
    for shot in range(shots):
        rng = _shot_rng(seed, shot)
        err = (rng.random(code.n) < p).astype(np.uint8)
        syn = (hxd @ err) % 2
        est = run(syn)
        residual = err ^ est
        ok = not ((hxd @ residual) % 2).any()
        mask = 0
        if ok:
            bits = (lxd @ residual) % 2
            for i in range(code.k):
                mask |= int(bits[i]) << i
        else:
            mask = -1  # invalid correction, counted as failure
        mask_counts[mask] = mask_counts.get(mask, 0) + 1
        if not ok or mask != 0:
            failures += 1
    return SampleResult(
        code=code.name(), noise_kind="code_capacity", p=p, q=0.0, rounds=1,
        shots=shots, failures=failures, mask_counts=mask_counts, seed=seed,
        decoder=decoder,
    )


# phenomenological -----------------------------------------------------------------


def build_pheno_matrix(code, rounds: int, p: float = 0.01,
                       q: float | None = None) -> tuple[BitMatrix, np.ndarray]:
    """Space-time system [blockdiag(H) | measurement-error ladder].

    Row block t encodes H x_t + s~_t + s~_{t-1} = ds_t. Columns are rounds*n
    data mechanisms (prior p) followed by rounds*n_c syndrome mechanisms
    (prior q).
    """
    if rounds < 1:
        raise ValueError("need rounds >= 1")
    if q is None:
        q = p
    hxd = code.hx.to_dense()
    m, n = hxd.shape
    rows = rounds * m
    cols = rounds * n + rounds * m
    dense = np.zeros((rows, cols), dtype=np.uint8)
    for t in range(rounds):
        dense[t * m : (t + 1) * m, t * n : (t + 1) * n] = hxd
        off = rounds * n + t * m
        dense[t * m : (t + 1) * m, off : off + m] = np.eye(m, dtype=np.uint8)
        if t + 1 < rounds:
            dense[(t + 1) * m : (t + 2) * m, off : off + m] = np.eye(m, dtype=np.uint8)
    priors = np.concatenate([np.full(rounds * n, p), np.full(rounds * m, q)])
    return BitMatrix.from_dense(dense), priors


def sample_phenomenological(code, p: float, shots: int, seed: int,
                            q: float | None = None, rounds: int | None = None,
                            decoder: str = "mle") -> SampleResult:
    """Noisy syndrome rounds, then one perfect round.

    Per shot: accumulate fresh data errors over `rounds` rounds, flip each
    observed syndrome with probability q, decode the syndrome differences on
    the space-time system, apply the summed data correction, then decode the
    remaining perfect-round syndrome with the matching static decoder.
    """
    if q is None:
        q = p
    if rounds is None:
        rounds = code_distance(code)
    hxd = code.hx.to_dense()
    lxd = code.lx.to_dense()
    m, n = hxd.shape
    a, priors = build_pheno_matrix(code, rounds, max(p, 1e-9), max(q, 1e-9))
    d_meta = code_distance(code) if code.meta.get("family") else None
    if decoder == "mle":
        # ties broken by search order, not lexicographically: the lex pass is
        # what makes deep space-time decodes explode, and any minimum-weight
        # solution is equally valid here
        st_dec = MleDecoder(a, priors, lex_tie=False)

        def run_st(delta: np.ndarray) -> np.ndarray:
            return np.asarray(st_dec.decode_support(delta), dtype=np.int64)

    elif decoder == "bposd":
        bd = BposdDecoder(a, priors, BposdParams.for_distance(d_meta or rounds))

        def run_st(delta: np.ndarray) -> np.ndarray:
            bits = bd.decode(delta).estimate.to_bits()
            return np.nonzero(bits)[0].astype(np.int64)

    else:
        # exact-ml is a code-capacity decoder: the space-time coset sum is
        # not enumerable
        raise ValueError("space-time decoding supports 'mle' or 'bposd'")
    run_static = _make_static_decoder(code, max(p, 1e-9), decoder, d_meta)
    failures = 0
    mask_counts: dict[int, int] = {}
    for shot in range(shots):
        rng = _shot_rng(seed, shot)
        cum = np.zeros(n, dtype=np.uint8)
        prev_obs = np.zeros(m, dtype=np.uint8)
        deltas = np.zeros(rounds * m, dtype=np.uint8)
        for t in range(rounds):
            cum ^= (rng.random(n) < p).astype(np.uint8)
            obs = ((hxd @ cum) % 2).astype(np.uint8) ^ (rng.random(m) < q)
            deltas[t * m : (t + 1) * m] = obs ^ prev_obs
            prev_obs = obs
        support = run_st(deltas)
        corr = np.zeros(n, dtype=np.uint8)
        for c in support:
            if c < rounds * n:
                corr[c % n] ^= 1
        stage1 = cum ^ corr
        s_star = ((hxd @ stage1) % 2).astype(np.uint8)
        est2 = run_static(s_star)
        residual = stage1 ^ est2
        ok = not ((hxd @ residual) % 2).any()
        mask = 0
        if ok:
            bits = (lxd @ residual) % 2
            for i in range(code.k):
                mask |= int(bits[i]) << i
        else:
            mask = -1
        mask_counts[mask] = mask_counts.get(mask, 0) + 1
        if not ok or mask != 0:
            failures += 1
    return SampleResult(
        code=code.name(), noise_kind="phenomenological", p=p, q=q, rounds=rounds,
        shots=shots, failures=failures, mask_counts=mask_counts, seed=seed,
        decoder=decoder,
    )


# exhaustive low-weight counting ----------------------------------------------------


def count_failure_configs(code, w: int, decoder: str = "mle",
                          max_configs: int = 10**7) -> int:
    """Decode every weight-w bit-flip pattern; count logical failures."""
    n = code.n
    total = math.comb(n, w)
    if total > max_configs:
        raise ValueError(
            f"{total} weight-{w} configurations exceed the enumeration guard "
            f"({max_configs})"
        )
    hxd = code.hx.to_dense()
    lxd = code.lx.to_dense()
    run = _make_static_decoder(code, 1e-3, decoder, None)
    failures = 0
    err = np.zeros(n, dtype=np.uint8)
    for sup in itertools.combinations(range(n), w):
        err[:] = 0
        err[list(sup)] = 1
        syn = (hxd @ err) % 2
        est = run(syn)
        residual = err ^ est
        if ((hxd @ residual) % 2).any() or ((lxd @ residual) % 2).any():
            failures += 1
    return failures
