"""Event-level simulation of the honest protocol.

Pulses are processed in fixed blocks of ``BLOCK`` pulses. Block ``b`` draws
from a generator keyed by ``(seed, b)``, so the result does not depend on how
blocks are scheduled across threads.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import ChannelModel, ObservedStats
from .protocol import ProtocolParams

BLOCK = 1 << 18
THREADS_ENV = "MLQKD_THREADS"
Z_PASS = 4.0

_COUNT_KEYS = ("pulses", "detected", "conclusive", "conclusive_errors",
               "mirrored_conclusive", "mirrored_errors")
LOG_COLUMNS = ("pulse_index", "a", "j", "n_sent", "n_arrived", "theta_prime_index",
               "d1", "d2", "detected", "conclusive", "b", "error")


@dataclass(frozen=True)
class SimConfig:
    """``offset`` shifts every angle (Alice's and Bob's) by ``offset * pi / M``."""

    params: ProtocolParams
    mu: float
    channel: ChannelModel
    pulses: int
    seed: int = 0
    offset: int = 0

    def __post_init__(self):
        if self.pulses < 1:
            raise ValueError("pulses must be >= 1")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {"M": self.params.M, "L": self.params.L, "double_even": self.params.double_even,
                "mu": self.mu, "eta": self.channel.eta, "eps": self.channel.eps,
                "pulses": self.pulses, "seed": self.seed, "offset": self.offset}


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    pulses: int
    detected: int
    conclusive: int
    conclusive_errors: int
    mirrored_conclusive: int | None = None
    mirrored_errors: int | None = None
    std_errors: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.conclusive_errors <= self.conclusive <= self.detected <= self.pulses:
            raise ValueError("counts must nest")

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def eta_d_hat(self) -> float:
        return self.detected / self.pulses

    @property
    def r_con_hat(self) -> float:
        return self.conclusive / self.detected if self.detected else math.nan

    @property
    def r_bit_hat(self) -> float:
        return self.conclusive_errors / self.detected if self.detected else math.nan

    @property
    def r_con_mirrored_hat(self) -> float | None:
        if self.mirrored_conclusive is None:
            return None
        return self.mirrored_conclusive / self.detected if self.detected else math.nan

    def frequencies(self) -> dict:
        out = {"eta_d": self.eta_d_hat, "r_con": self.r_con_hat, "r_bit": self.r_bit_hat}
        if self.mirrored_conclusive is not None:
            out["r_con_mirrored"] = self.r_con_mirrored_hat
        return out

    def counts(self) -> dict:
        return {k: getattr(self, k) for k in _COUNT_KEYS if getattr(self, k) is not None}

    def to_json(self, **kw) -> str:
        doc = {"config": self.config.to_dict(), "counts": self.counts(),
               "frequencies": self.frequencies(), "std_errors": self.std_errors}
        return json.dumps(doc, **kw)


def _binom_se(k: int, n: int) -> float:
    if n == 0:
        return math.nan
    p = k / n
    return math.sqrt(p * (1 - p) / n)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _block(config: SimConfig, index: int, size: int, want_log: bool):
    M, L = config.params.M, config.params.L
    Theta = config.params.theta
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(index,)))
    a = rng.integers(0, 2, size)
    j = rng.integers(0, M, size)
    bob = rng.integers(0, M, size)
    n_sent = rng.poisson(config.mu, size)
    n_arr = rng.binomial(n_sent, config.channel.eta)
    rotate = rng.random(size) < config.channel.eps
    delta = np.where(rotate, rng.random(size) * np.pi, 0.0)
    shift = config.offset * np.pi / M
    pol = a * Theta + np.pi * j / M + shift + delta
    analyzer = np.pi * bob / M + shift
    d1 = rng.binomial(n_arr, np.cos(pol - analyzer) ** 2)
    d2 = n_arr - d1
    detected = n_arr == 1

    b = np.full(size, -1)
    b[bob == (L + j) % M] = 0
    b[bob == j] = 1
    conclusive = detected & (d2 == 1) & (b >= 0)
    error = conclusive & (b != a)
    out = {"pulses": size, "detected": int(detected.sum()), "conclusive": int(conclusive.sum()),
           "conclusive_errors": int(error.sum())}
    if config.params.double_even:
        h = M // 2
        bm = np.full(size, -1)
        bm[bob == (L + j + h) % M] = 0
        bm[bob == (j + h) % M] = 1
        mirrored = detected & (d1 == 1) & (bm >= 0)
        out["mirrored_conclusive"] = int(mirrored.sum())
        out["mirrored_errors"] = int((mirrored & (bm != a)).sum())
    log = None
    if want_log:
        start = index * BLOCK
        log = np.column_stack([np.arange(start, start + size), a, j, n_sent, n_arr, bob, d1, d2,
                               detected, conclusive, b, error]).astype(np.int64)
    return out, log


def simulate(config: SimConfig, event_log: str | os.PathLike | None = None) -> SimResult:
    """Run the simulation; optionally write every pulse to a CSV event log."""
    n_blocks = -(-config.pulses // BLOCK)
    sizes = [min(BLOCK, config.pulses - b * BLOCK) for b in range(n_blocks)]
    want_log = event_log is not None
    job = lambda b: _block(config, b, sizes[b], want_log)
    threads = _threads()
    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(job, range(n_blocks)))
    else:
        parts = [job(b) for b in range(n_blocks)]

    totals = {k: 0 for k in parts[0][0]}
    for counts, _ in parts:
        for k, v in counts.items():
            totals[k] += v
    if want_log:
        with open(event_log, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LOG_COLUMNS)
            for _, log in parts:
                w.writerows(log.tolist())

    det = totals["detected"]
    se = {"eta_d": _binom_se(det, totals["pulses"]),
          "r_con": _binom_se(totals["conclusive"], det),
          "r_bit": _binom_se(totals["conclusive_errors"], det)}
    if "mirrored_conclusive" in totals:
        se["r_con_mirrored"] = _binom_se(totals["mirrored_conclusive"], det)
    return SimResult(config, std_errors=se, **totals)


@dataclass(frozen=True)
class CompareReport:
    z: dict
    passed: bool
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _z(hat: float, p: float, n: int) -> float:
    se = math.sqrt(p * (1 - p) / n)
    if se == 0:
        return 0.0 if hat == p else math.inf
    return (hat - p) / se


def compare(sim: SimResult, analytic: ObservedStats) -> CompareReport:
    """z-scores of the empirical frequencies, using the analytic standard errors."""
    if sim.detected == 0:
        return CompareReport({}, False, True)
    z = {"eta_d": _z(sim.eta_d_hat, analytic.eta_d, sim.pulses),
         "r_con": _z(sim.r_con_hat, analytic.r_con, sim.detected),
         "r_bit": _z(sim.r_bit_hat, analytic.r_bit, sim.detected)}
    if sim.mirrored_conclusive is not None:
        z["r_con_mirrored"] = _z(sim.r_con_mirrored_hat, analytic.r_con, sim.detected)
    return CompareReport(z, all(abs(v) <= Z_PASS for v in z.values()))


def two_sample_z(k1: int, n1: int, k2: int, n2: int) -> float:
    """Pooled two-proportion z statistic."""
    p = (k1 + k2) / (n1 + n2)
    se = math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0
    return (k1 / n1 - k2 / n2) / se
