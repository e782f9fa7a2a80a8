"""Energy-threshold search: 1-D (identical relays), exhaustive N-D, and the
single-factor heuristic that scales every relay's forwarding energy by its
first-hop / second-hop gain ratio.

A relay's stationary distribution only depends on its own threshold, so all
searches memoize the per-relay chain solution on ``(relay, threshold index)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import NetworkScenario, Relay, outage_probability, system_outage_iid
from .battery import (
    BatterySpec,
    RelayEnergyPolicy,
    _snap,
    build_transition_matrix,
    mode_probabilities,
    stationary_distribution,
)
from .channel import NakagamiLink, RadioParams, RayleighLink, decode_failure_prob
from .errors import SearchSpaceTooLarge

MAX_EVALUATIONS = 10_000_000


@dataclass(frozen=True)
class ThresholdSearchResult:
    best_policies: tuple[RelayEnergyPolicy, ...]
    best_outage: float
    evaluations: int
    method: str
    best_z: float | None = None
    curve: list[tuple] = field(default_factory=list, repr=False, compare=False)

    @property
    def chi_indices(self) -> tuple[int, ...]:
        return tuple(p.chi_index for p in self.best_policies)


@dataclass(frozen=True)
class HeuristicGrid:
    """Grid of the scalar factor ``z``: multiples of ``eps_1 / lambda_max``."""

    epsilon1: float
    L: int
    lambda_max: float
    lambda_min: float

    @property
    def step(self) -> float:
        return self.epsilon1 / self.lambda_max

    @property
    def size(self) -> int:
        """Number of grid points needed to reach ``eps_L / lambda_min``."""
        return int(math.ceil(_snap(self.L * self.lambda_max / self.lambda_min)))

    def z(self, j: int) -> float:
        return j * self.step


class _RelayMemo:
    """Per-relay ``(in-set, out-of-set)`` probabilities keyed by threshold index."""

    def __init__(self, relay: Relay, radio: RadioParams, spec: BatterySpec):
        self.relay = relay
        self.radio = radio
        self.spec = spec
        self.pf = decode_failure_prob(relay.sr, radio)
        self._cache: dict[int, tuple[float, float]] = {}

    def terms(self, chi_index: int) -> tuple[float, float]:
        hit = self._cache.get(chi_index)
        if hit is None:
            policy = RelayEnergyPolicy.from_chi_index(self.spec, chi_index)
            pi = stationary_distribution(build_transition_matrix(self.relay.sr, self.radio, self.spec, policy))
            p_eh, p_if = mode_probabilities(pi, policy)
            hit = ((1.0 - self.pf) * p_if, self.pf * p_if + p_eh)
            self._cache[chi_index] = hit
        return hit

    def weight(self, chi_index: int) -> float:
        beta = (chi_index - self.spec.alpha_index) * self.spec.epsilon1
        return beta * self.relay.rd.sigma2

    @property
    def solves(self) -> int:
        return len(self._cache)


class _Evaluator:
    def __init__(self, scenario: NetworkScenario):
        self.scenario = scenario
        self.memos = [_RelayMemo(r, scenario.radio, scenario.spec) for r in scenario.relays]
        self.evaluations = 0

    def __call__(self, chis) -> float:
        self.evaluations += 1
        se = [m.terms(c) for m, c in zip(self.memos, chis)]
        s = np.array([t[0] for t in se])
        e = np.array([t[1] for t in se])
        w = np.array([m.weight(c) for m, c in zip(self.memos, chis)])
        return outage_probability(s, e, w, self.scenario.radio)


def search_iid(
    n: int,
    sr: NakagamiLink,
    rd: RayleighLink,
    radio: RadioParams,
    spec: BatterySpec,
) -> ThresholdSearchResult:
    """Best common threshold for ``n`` identical relays (ties: smallest threshold)."""
    best = None
    curve = []
    for c in spec.chi_indices:
        policy = RelayEnergyPolicy.from_chi_index(spec, c)
        p = system_outage_iid(n, sr, rd, policy, radio, spec).p_out
        curve.append((c, p))
        if best is None or p < best[1]:
            best = (policy, p)
    return ThresholdSearchResult((best[0],) * n, best[1], len(curve), "iid_exhaustive", curve=curve)


def search_full(scenario: NetworkScenario, max_evaluations: int = MAX_EVALUATIONS) -> ThresholdSearchResult:
    """Exhaustive search over the threshold lattice of every relay.

    Candidates are visited in lexicographic order and only a strict
    improvement replaces the incumbent, so ties resolve to the
    lexicographically smallest threshold vector.
    """
    spec = scenario.spec
    levels = spec.chi_indices
    size = len(levels) ** scenario.N
    if size > max_evaluations:
        raise SearchSpaceTooLarge(
            f"{len(levels)}^{scenario.N} = {size} candidates exceed the guard of {max_evaluations}"
        )
    ev = _Evaluator(scenario)
    best_chis, best_p = None, math.inf
    for chis in itertools.product(levels, repeat=scenario.N):
        p = ev(chis)
        if p < best_p:
            best_chis, best_p = chis, p
    policies = tuple(RelayEnergyPolicy.from_chi_index(spec, c) for c in best_chis)
    return ThresholdSearchResult(policies, best_p, ev.evaluations, "full_exhaustive")


def heuristic_grid(scenario: NetworkScenario) -> HeuristicGrid:
    ratios = [r.sr.lam / r.rd.lam for r in scenario.relays]
    return HeuristicGrid(scenario.spec.epsilon1, scenario.spec.L, max(ratios), min(ratios))


def heuristic_chi_indices(scenario: NetworkScenario, j: int) -> tuple[int, ...]:
    """Threshold indices induced by the ``j``-th grid value of ``z``.

    ``beta_u = eps_1 * ceil(z * ratio_u / eps_1)`` clamped to ``C - alpha``,
    where ``z * ratio_u / eps_1 = j * ratio_u / lambda_max``.
    """
    grid = heuristic_grid(scenario)
    a = scenario.spec.alpha_index
    cap = scenario.spec.L - a
    out = []
    for r in scenario.relays:
        b = math.ceil(_snap(j * (r.sr.lam / r.rd.lam) / grid.lambda_max))
        out.append(a + min(max(b, 1), cap))
    return tuple(out)


def search_heuristic(scenario: NetworkScenario) -> ThresholdSearchResult:
    """1-D search over ``z``; each distinct induced threshold vector is evaluated once."""
    grid = heuristic_grid(scenario)
    ev = _Evaluator(scenario)
    seen: dict[tuple[int, ...], float] = {}
    best_j, best_chis, best_p = None, None, math.inf
    curve = []
    for j in range(1, grid.size + 1):
        chis = heuristic_chi_indices(scenario, j)
        if chis not in seen:
            seen[chis] = ev(chis)
        p = seen[chis]
        curve.append((grid.z(j), chis, p))
        if p < best_p:
            best_j, best_chis, best_p = j, chis, p
    policies = tuple(RelayEnergyPolicy.from_chi_index(scenario.spec, c) for c in best_chis)
    return ThresholdSearchResult(policies, best_p, ev.evaluations, "heuristic_z", grid.z(best_j), curve)
