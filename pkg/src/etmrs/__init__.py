"""Outage analysis, threshold optimization and Monte Carlo simulation of
wireless-powered decode-and-forward relay networks with energy-threshold
relay selection."""

from .analysis import (
    DecodingSubset,
    NetworkScenario,
    OutageReport,
    Relay,
    conditional_outage,
    empty_set_probability,
    subset_probability,
    system_outage,
    system_outage_iid,
)
from .battery import (
    BatterySpec,
    RelayEnergyPolicy,
    StationaryDistribution,
    TransitionMatrix,
    build_transition_matrix,
    discretize_alpha,
    discretize_harvest,
    mode_probabilities,
    stationary_distribution,
)
from .bounds import (
    FlowConservationResult,
    decoding_probability_infinite,
    upper_bound_outage,
    upper_bound_outage_iid,
)
from .channel import (
    NakagamiLink,
    RadioParams,
    RayleighLink,
    Topology,
    dbm_to_watts,
    decode_failure_prob,
    nakagami_cdf,
    path_loss_gain,
)
from .errors import (
    AlphaExceedsCapacity,
    ConfigError,
    EtmrsError,
    SearchSpaceTooLarge,
    SingularSystem,
    TooManyRelays,
)
from .optimizer import ThresholdSearchResult, search_full, search_heuristic, search_iid
from .simulator import SimConfig, SimReport, simulate, simulate_chain_occupancy

__version__ = "0.1.0"
