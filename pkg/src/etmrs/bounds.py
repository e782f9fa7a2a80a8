"""Infinite-battery upper bound on performance (lower bound on outage).

With no overflow, the long-run harvested energy of each relay equals the
energy it spends, which pins down the probability ``q_u`` that the relay is
in the decoding set. Relays are then independent Bernoulli members and the
conditional outage of each set is unchanged from the finite-battery case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import (
    NetworkScenario,
    OutageReport,
    forwarding_weights,
    iid_outage_from_terms,
    outage_from_terms,
)
from .battery import RelayEnergyPolicy
from .channel import NakagamiLink, RadioParams, RayleighLink, decode_failure_prob


@dataclass(frozen=True)
class FlowConservationResult:
    q: np.ndarray
    p_eh: np.ndarray
    p_out_ub: float
    report: OutageReport


def decoding_probability_infinite(link: NakagamiLink, radio: RadioParams, policy: RelayEnergyPolicy) -> float:
    """Probability ``q_u`` that a relay with an unbounded battery is in the decoding set.

    Returns 0 when the relay can never decode (the limit of the closed form).
    """
    pf = decode_failure_prob(link, radio)
    ok = 1.0 - pf
    if ok <= 0.0 or radio.P == 0:
        return 0.0
    alpha = policy.alpha_index * policy.epsilon1
    return 1.0 / (1.0 / ok + (2.0 * alpha + 2.0 * policy.beta * ok) / (radio.eta * radio.P * link.lam * ok))


def eh_probability_infinite(q: float, link: NakagamiLink, radio: RadioParams) -> float:
    """EH-mode probability recovered from ``q = (1 - p) (1 - Pr{fail})``."""
    ok = 1.0 - decode_failure_prob(link, radio)
    return 1.0 if ok <= 0.0 else 1.0 - q / ok


def upper_bound_outage(scenario: NetworkScenario) -> FlowConservationResult:
    radio = scenario.radio
    q = np.array([decoding_probability_infinite(r.sr, radio, r.policy) for r in scenario.relays])
    p_eh = np.array([eh_probability_infinite(qu, r.sr, radio) for qu, r in zip(q, scenario.relays)])
    report = outage_from_terms(q, 1.0 - q, forwarding_weights(scenario), radio, method="bound")
    return FlowConservationResult(q, p_eh, report.p_out, report)


def upper_bound_outage_iid(
    n: int,
    sr: NakagamiLink,
    rd: RayleighLink,
    policy: RelayEnergyPolicy,
    radio: RadioParams,
) -> FlowConservationResult:
    q = decoding_probability_infinite(sr, radio, policy)
    report = iid_outage_from_terms(n, q, 1.0 - q, policy.beta * rd.sigma2, radio, method="bound_iid")
    p_eh = eh_probability_infinite(q, sr, radio)
    return FlowConservationResult(np.full(n, q), np.full(n, p_eh), report.p_out, report)
