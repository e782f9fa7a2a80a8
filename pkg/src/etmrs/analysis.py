"""Analytical system outage probability of the threshold-based relay selection.

Outage happens when the decoding set is empty or when the beamformed SNR of
the decoding set falls below ``v``. Every relay is an independent chain, so
the probability of a given decoding set factorizes over relays; the SNR of a
k-member set is approximated by a gamma law with integer shape k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from .battery import (
    BatterySpec,
    RelayEnergyPolicy,
    StationaryDistribution,
    build_transition_matrix,
    mode_probabilities,
    stationary_distribution,
)
from .channel import NakagamiLink, RadioParams, RayleighLink, Topology, decode_failure_prob
from .errors import TooManyRelays

MAX_RELAYS = 20


@dataclass(frozen=True)
class Relay:
    sr: NakagamiLink
    rd: RayleighLink
    policy: RelayEnergyPolicy


@dataclass(frozen=True)
class NetworkScenario:
    relays: tuple[Relay, ...]
    radio: RadioParams
    spec: BatterySpec

    def __post_init__(self):
        object.__setattr__(self, "relays", tuple(self.relays))
        if not self.relays:
            raise ValueError("scenario needs at least one relay")
        for u, r in enumerate(self.relays):
            p = r.policy
            if p.alpha_index != self.spec.alpha_index or p.chi_index > self.spec.L:
                raise ValueError(f"relay {u}: policy does not fit the battery lattice")

    @property
    def N(self) -> int:
        return len(self.relays)

    @classmethod
    def from_topology(
        cls,
        topology: Topology,
        radio: RadioParams,
        spec: BatterySpec,
        chi: float | Sequence[float],
        rounding: str = "exact",
    ) -> NetworkScenario:
        """Build a scenario from distances and thresholds given in joules."""
        links = topology.links()
        chis = [chi] * len(links) if np.isscalar(chi) else list(chi)
        if len(chis) != len(links):
            raise ValueError(f"{len(chis)} thresholds for {len(links)} relays")
        relays = [
            Relay(sr, rd, RelayEnergyPolicy.from_chi(spec, c, rounding))
            for (sr, rd), c in zip(links, chis)
        ]
        return cls(tuple(relays), radio, spec)

    def with_chi_indices(self, chi_indices: Sequence[int]) -> NetworkScenario:
        relays = tuple(
            Relay(r.sr, r.rd, RelayEnergyPolicy.from_chi_index(self.spec, c))
            for r, c in zip(self.relays, chi_indices, strict=True)
        )
        return NetworkScenario(relays, self.radio, self.spec)

    @property
    def chi_indices(self) -> tuple[int, ...]:
        return tuple(r.policy.chi_index for r in self.relays)

    def is_homogeneous(self) -> bool:
        first = self.relays[0]
        return all(r == first for r in self.relays[1:])


def relay_stationary(relay: Relay, radio: RadioParams, spec: BatterySpec) -> StationaryDistribution:
    return stationary_distribution(build_transition_matrix(relay.sr, radio, spec, relay.policy))


def solve_stationaries(scenario: NetworkScenario) -> list[StationaryDistribution]:
    cache: dict[Relay, StationaryDistribution] = {}
    out = []
    for r in scenario.relays:
        if r not in cache:
            cache[r] = relay_stationary(r, scenario.radio, scenario.spec)
        out.append(cache[r])
    return out


def relay_terms(scenario: NetworkScenario, stationaries) -> tuple[np.ndarray, np.ndarray]:
    """Per relay: probability of being in the decoding set, and of staying out."""
    s = np.empty(scenario.N)
    e = np.empty(scenario.N)
    for u, (r, pi) in enumerate(zip(scenario.relays, stationaries, strict=True)):
        pf = decode_failure_prob(r.sr, scenario.radio)
        p_eh, p_if = mode_probabilities(pi, r.policy)
        s[u] = (1.0 - pf) * p_if
        e[u] = pf * p_if + p_eh
    return s, e


def forwarding_weights(scenario: NetworkScenario) -> np.ndarray:
    """``beta_u * sigma_u^2`` for every relay."""
    return np.array([r.policy.beta * r.rd.sigma2 for r in scenario.relays])


# -- gamma CDF with integer shape -------------------------------------------

def gamma_cdf_int(k, x):
    """Regularized lower incomplete gamma ``P(k, x)`` for integer ``k >= 1``.

    Uses the finite series ``1 - exp(-x) sum_{i<k} x^i / i!``; for ``x < k``
    the complementary tail ``exp(-x) sum_{i>=k} x^i / i!`` is summed instead
    so that tiny probabilities keep their relative accuracy.
    """
    k_arr = np.asarray(k, dtype=np.int64)
    x_arr = np.asarray(x, dtype=float)
    k_arr, x_arr = np.broadcast_arrays(k_arr, x_arr)
    if np.any(k_arr < 1):
        raise ValueError("shape must be a positive integer")
    out = np.zeros(x_arr.shape)

    pos = x_arr > 0
    tail = pos & (x_arr < k_arr)
    head = pos & ~tail

    if np.any(head):
        kh, xh = k_arr[head], x_arr[head]
        term = np.exp(-xh)
        acc = np.zeros_like(xh)
        for i in range(int(kh.max())):
            acc += np.where(i < kh, term, 0.0)
            term = term * xh / (i + 1)
        out[head] = 1.0 - acc

    if np.any(tail):
        kt, xt = k_arr[tail], x_arr[tail]
        term = np.exp(kt * np.log(xt) - gammaln(kt + 1.0) - xt)
        acc = term.copy()
        j = 1
        while True:
            term = term * xt / (kt + j)
            acc += term
            if np.all(term <= 1e-17 * acc):
                break
            j += 1
        out[tail] = acc

    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


# -- decoding subsets --------------------------------------------------------

@dataclass(frozen=True)
class DecodingSubset:
    """A non-empty decoding set as a bitmask over relays."""

    mask: int
    k: int
    a: float

    @classmethod
    def of(cls, scenario: NetworkScenario, members: int | Iterable[int]) -> DecodingSubset:
        mask = members if isinstance(members, int) else sum(1 << u for u in set(members))
        if mask <= 0 or mask >> scenario.N:
            raise ValueError(f"mask {mask:#b} is not a non-empty subset of {scenario.N} relays")
        w = forwarding_weights(scenario)
        idx = [u for u in range(scenario.N) if mask >> u & 1]
        wsum = math.fsum(w[idx])
        return cls(mask, len(idx), scenario.radio.N0 / (4.0 * wsum))

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(u for u in range(self.mask.bit_length()) if self.mask >> u & 1)


def empty_set_probability(scenario: NetworkScenario, stationaries) -> float:
    _, e = relay_terms(scenario, stationaries)
    return float(np.prod(e))


def subset_probability(scenario: NetworkScenario, stationaries, subset) -> float:
    mask = subset.mask if isinstance(subset, DecodingSubset) else DecodingSubset.of(scenario, subset).mask
    s, e = relay_terms(scenario, stationaries)
    inside = np.array([(mask >> u) & 1 for u in range(scenario.N)], dtype=bool)
    return float(np.prod(np.where(inside, s, e)))


def conditional_outage(subset: DecodingSubset, radio: RadioParams) -> float:
    """Gamma-approximated probability that the set's SNR falls below ``v``."""
    return gamma_cdf_int(subset.k, subset.a * radio.v)


# -- reports -----------------------------------------------------------------

class SubsetTerm(NamedTuple):
    members: tuple[int, ...] | None  # None for a size class of the i.i.d. path
    k: int
    prob: float
    cond: float


@dataclass(frozen=True)
class OutageReport:
    p_out: float
    p_empty: float
    per_subset: tuple[SubsetTerm, ...]
    method: str

    @property
    def partition_sum(self) -> float:
        return math.fsum([self.p_empty] + [t.prob for t in self.per_subset])


@lru_cache(maxsize=None)
def subset_bits(n: int) -> np.ndarray:
    """Membership matrix of every non-empty subset, row ``mask - 1``."""
    if n > MAX_RELAYS:
        raise TooManyRelays(f"{n} relays exceed the enumeration bound of {MAX_RELAYS}")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    bits.flags.writeable = False
    return bits


def _expand(s, e, w, radio: RadioParams):
    bits = subset_bits(len(s))
    probs = np.where(bits, s, e).prod(axis=1)
    k = bits.sum(axis=1)
    wsum = np.where(bits, w, 0.0).sum(axis=1)
    cond = np.atleast_1d(gamma_cdf_int(k, radio.N0 * radio.v / (4.0 * wsum)))
    p_empty = float(np.prod(e))
    p_out = min(math.fsum([p_empty, *(probs * cond)]), 1.0)
    return bits, k, probs, cond, p_empty, p_out


def outage_probability(s, e, w, radio: RadioParams) -> float:
    """Just the outage number of :func:`outage_from_terms`, bit-identical to it."""
    return _expand(np.asarray(s, float), np.asarray(e, float), np.asarray(w, float), radio)[-1]


def outage_from_terms(s, e, w, radio: RadioParams, method: str = "general") -> OutageReport:
    """Full-probability expansion over all ``2^N`` decoding sets.

    ``s[u]`` / ``e[u]`` are the probabilities that relay ``u`` is inside /
    outside the decoding set and ``w[u] = beta_u sigma_u^2``.
    """
    bits, k, probs, cond, p_empty, p_out = _expand(
        np.asarray(s, float), np.asarray(e, float), np.asarray(w, float), radio
    )
    terms = tuple(
        SubsetTerm(tuple(np.flatnonzero(b).tolist()), int(kk), float(p), float(c))
        for b, kk, p, c in zip(bits, k, probs, cond)
    )
    return OutageReport(p_out, p_empty, terms, method)


def iid_outage_from_terms(n: int, s: float, e: float, w: float, radio: RadioParams, method: str = "iid") -> OutageReport:
    """Binomial collapse of :func:`outage_from_terms` for identical relays."""
    ks = np.arange(1, n + 1)
    binom = np.array([math.comb(n, int(k)) for k in ks], dtype=float)
    probs = binom * s**ks * e ** (n - ks)
    cond = np.atleast_1d(gamma_cdf_int(ks, radio.N0 * radio.v / (4.0 * ks * w)))
    p_empty = e**n
    p_out = min(math.fsum([p_empty, *(probs * cond)]), 1.0)
    terms = tuple(SubsetTerm(None, int(k), float(p), float(c)) for k, p, c in zip(ks, probs, cond))
    return OutageReport(p_out, float(p_empty), terms, method)


def system_outage(scenario: NetworkScenario, stationaries=None) -> OutageReport:
    if scenario.N > MAX_RELAYS:
        raise TooManyRelays(f"{scenario.N} relays exceed the enumeration bound of {MAX_RELAYS}")
    if stationaries is None:
        stationaries = solve_stationaries(scenario)
    s, e = relay_terms(scenario, stationaries)
    return outage_from_terms(s, e, forwarding_weights(scenario), scenario.radio)


def system_outage_iid(
    n: int,
    sr: NakagamiLink,
    rd: RayleighLink,
    policy: RelayEnergyPolicy,
    radio: RadioParams,
    spec: BatterySpec,
    pi: StationaryDistribution | None = None,
) -> OutageReport:
    """Outage for ``n`` identical relays sharing one threshold."""
    if pi is None:
        pi = stationary_distribution(build_transition_matrix(sr, radio, spec, policy))
    pf = decode_failure_prob(sr, radio)
    p_eh, p_if = mode_probabilities(pi, policy)
    s = (1.0 - pf) * p_if
    e = pf * p_if + p_eh
    return iid_outage_from_terms(n, s, e, policy.beta * rd.sigma2, radio)
