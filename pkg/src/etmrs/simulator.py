"""Block-level Monte Carlo simulation of the relay network.

Each block every relay looks at its battery: below its threshold it harvests
``eta P H / 2`` from the source (floored to a whole level in discrete mode,
clipped at the capacity); at or above it spends the circuit cost, and if
``P H / N0 >= v`` it also spends its forwarding energy and joins the
decoding set. The decoding set beamforms coherently, so the destination SNR
is ``(sum sqrt(2 beta_u) |g_u|)^2 / N0``.

Randomness: the run is split into ``streams`` independent replicas of the
network, each warmed up separately. Stream ``s`` draws from
``SeedSequence(seed, spawn_key=(s,))`` (identical to the ``s``-th child of
``SeedSequence(seed).spawn``), so results do not depend on how many worker
threads execute the streams.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .analysis import NetworkScenario, Relay
from .battery import BatterySpec
from .channel import RadioParams

CHUNK = 1 << 16
MAX_SUBSET_RELAYS = 16
Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimConfig:
    blocks: int = 1_000_000
    seed: int = 0
    battery_mode: str = "discrete"  # or "continuous"
    warmup: int = 10_000
    streams: int | None = None  # defaults to min(8, blocks)
    initial: str = "empty"  # or "full"

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError(f"blocks must be >= 1, got {self.blocks}")
        if not 0 <= self.warmup < self.blocks:
            raise ValueError(f"warmup must lie in [0, blocks), got {self.warmup}")
        if self.battery_mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown battery mode {self.battery_mode!r}")
        if self.initial not in ("empty", "full"):
            raise ValueError(f"unknown initial battery state {self.initial!r}")
        if self.streams is not None and not 1 <= self.streams <= self.blocks:
            raise ValueError(f"streams must lie in [1, blocks], got {self.streams}")

    @property
    def n_streams(self) -> int:
        return self.streams if self.streams is not None else min(8, self.blocks)


@dataclass
class SimReport:
    blocks: int
    outage_count: int
    empty_count: int
    if_rate: np.ndarray
    level_hist: np.ndarray | None  # (N, L+1) occupancy, discrete mode only
    subset_freq: dict[int, float] = field(default_factory=dict)
    energy_in: np.ndarray | None = None  # credited to the battery, all blocks
    energy_raw_in: np.ndarray | None = None  # harvested before the capacity clip
    energy_out: np.ndarray | None = None
    energy_start: np.ndarray | None = None
    energy_end: np.ndarray | None = None

    @property
    def outage_rate(self) -> float:
        return self.outage_count / self.blocks

    @property
    def empty_set_rate(self) -> float:
        return self.empty_count / self.blocks

    @property
    def std_err(self) -> float:
        p = self.outage_rate
        return math.sqrt(p * (1.0 - p) / self.blocks)

    @property
    def ci95(self) -> tuple[float, float]:
        h = Z95 * self.std_err
        return max(0.0, self.outage_rate - h), min(1.0, self.outage_rate + h)


@numba.njit(cache=True, nogil=True)
def _run_chunk(H, G, r, discrete, unit, cap, alpha, beta, chi, amp_w, harvest_scale,
               dec_thr, inv_n0, v, start, warmup, counts, if_counts, level_hist,
               subset_counts, e_in, e_raw, e_out):
    T, N = H.shape
    track_subsets = subset_counts.shape[0] > 1
    for t in range(T):
        counting = start + t >= warmup
        mask = 0
        amp = 0.0
        for u in range(N):
            if counting and discrete:
                level_hist[u, int(r[u])] += 1
            if r[u] >= chi[u]:
                spent = alpha
                if H[t, u] >= dec_thr:
                    spent += beta[u]
                    mask |= 1 << u
                    amp += amp_w[u] * G[t, u]
                r[u] -= spent
                e_out[u] += spent
                if counting:
                    if_counts[u] += 1
            else:
                e = harvest_scale * H[t, u]
                if discrete:
                    e = math.floor(e / unit)
                new = min(r[u] + e, cap)
                e_raw[u] += e
                e_in[u] += new - r[u]
                r[u] = new
        if counting:
            if mask == 0:
                counts[0] += 1
                counts[1] += 1
            else:
                if amp * amp * inv_n0 < v:
                    counts[1] += 1
                if track_subsets:
                    subset_counts[mask] += 1


def _setup(relays, radio: RadioParams, spec: BatterySpec, mode: str):
    """Kernel parameters in battery units (levels or joules)."""
    n = len(relays)
    if mode == "discrete":
        unit = spec.epsilon1
        cap = float(spec.L)
        alpha = float(spec.alpha_index)
        beta = np.array([r.policy.beta_index for r in relays], dtype=float)
    else:
        unit = 1.0
        cap = spec.C
        alpha = spec.alpha_raw
        beta = np.array([r.policy.beta for r in relays], dtype=float)
    chi = alpha + beta
    amp_w = np.array([math.sqrt(2.0 * r.policy.beta) for r in relays])
    harvest_scale = 0.5 * radio.eta * radio.P
    dec_thr = math.inf if radio.P == 0 else radio.v * radio.N0 / radio.P
    m = np.array([r.sr.m for r in relays])
    scale = np.array([r.sr.lam / r.sr.m for r in relays])
    sigma = np.array([r.rd.sigma for r in relays])
    return dict(n=n, unit=unit, cap=cap, alpha=alpha, beta=beta, chi=chi, amp_w=amp_w,
                harvest_scale=harvest_scale, dec_thr=dec_thr, m=m, scale=scale, sigma=sigma)


def _stream_sizes(cfg: SimConfig) -> list[int]:
    s = cfg.n_streams
    base, extra = divmod(cfg.blocks, s)
    return [base + (1 if i < extra else 0) for i in range(s)]


def _run_stream(idx: int, n_count: int, p, radio: RadioParams, spec: BatterySpec, cfg: SimConfig, L: int):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(idx,)))
    n = p["n"]
    discrete = cfg.battery_mode == "discrete"
    r = np.full(n, p["cap"] if cfg.initial == "full" else 0.0)
    r0 = r.copy()
    counts = np.zeros(2, dtype=np.int64)
    if_counts = np.zeros(n, dtype=np.int64)
    level_hist = np.zeros((n, L + 1) if discrete else (1, 1), dtype=np.int64)
    subset_counts = np.zeros((1 << n) if n <= MAX_SUBSET_RELAYS else 1, dtype=np.int64)
    e_in, e_raw, e_out = np.zeros(n), np.zeros(n), np.zeros(n)

    total = cfg.warmup + n_count
    done = 0
    while done < total:
        t = min(CHUNK, total - done)
        H = rng.gamma(p["m"], p["scale"], size=(t, n))
        G = rng.rayleigh(p["sigma"], size=(t, n))
        _run_chunk(H, G, r, discrete, p["unit"], p["cap"], p["alpha"], p["beta"], p["chi"],
                   p["amp_w"], p["harvest_scale"], p["dec_thr"], 1.0 / radio.N0, radio.v,
                   done, cfg.warmup, counts, if_counts, level_hist, subset_counts,
                   e_in, e_raw, e_out)
        done += t
    return counts, if_counts, level_hist, subset_counts, e_in, e_raw, e_out, r0, r


def _simulate(relays, radio: RadioParams, spec: BatterySpec, cfg: SimConfig, threads: int = 1) -> SimReport:
    p = _setup(relays, radio, spec, cfg.battery_mode)
    sizes = _stream_sizes(cfg)
    jobs = [(i, sz) for i, sz in enumerate(sizes) if sz > 0]

    def work(job):
        return _run_stream(job[0], job[1], p, radio, spec, cfg, spec.L)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    n = p["n"]
    counts = sum(res[0] for res in results)
    if_counts = sum(res[1] for res in results)
    hist = sum(res[2] for res in results)
    subsets = sum(res[3] for res in results)
    sums = [np.sum([res[k] for res in results], axis=0) for k in range(4, 9)]
    counted = sum(sizes)

    subset_freq = {}
    if n <= MAX_SUBSET_RELAYS:
        subset_freq = {int(mk): c / counted for mk, c in enumerate(subsets) if c}
        subset_freq[0] = counts[0] / counted
    level_hist = None
    if cfg.battery_mode == "discrete":
        level_hist = hist / hist.sum(axis=1, keepdims=True)
    return SimReport(
        blocks=counted,
        outage_count=int(counts[1]),
        empty_count=int(counts[0]),
        if_rate=if_counts / counted,
        level_hist=level_hist,
        subset_freq=subset_freq,
        energy_in=sums[0],
        energy_raw_in=sums[1],
        energy_out=sums[2],
        energy_start=sums[3],
        energy_end=sums[4],
    )


def simulate(scenario: NetworkScenario, cfg: SimConfig, threads: int = 1) -> SimReport:
    """Monte Carlo estimate of outage and decoding-set statistics."""
    return _simulate(scenario.relays, scenario.radio, scenario.spec, cfg, threads)


def simulate_chain_occupancy(relay: Relay, radio: RadioParams, spec: BatterySpec, cfg: SimConfig,
                             threads: int = 1) -> np.ndarray:
    """Empirical battery-level occupancy of a single relay (discrete mode)."""
    if cfg.battery_mode != "discrete":
        raise ValueError("occupancy is defined on the discrete battery only")
    rep = _simulate((relay,), radio, spec, cfg, threads)
    return rep.level_hist[0]

