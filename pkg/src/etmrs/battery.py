"""Discrete battery model of one relay and its stationary distribution.

A battery of capacity ``C`` has ``L + 1`` levels ``eps_i = i C / L``. All
energies that enter the chain (circuit cost, forwarding energy, threshold)
are kept as integer level indices so the index arithmetic is exact; joule
values are derived on demand.

A relay below its threshold harvests (EH mode) and never discharges; at or
above the threshold it spends the circuit cost, and if it decodes it also
spends its forwarding energy (IF mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .channel import NakagamiLink, RadioParams, decode_failure_prob, nakagami_cdf, nakagami_sf
from .errors import AlphaExceedsCapacity, SingularSystem

_SNAP = 1e-9


def _snap(x: float) -> float:
    """Round ``x`` to the nearest integer when it is within float noise of one."""
    r = round(x)
    return float(r) if abs(x - r) <= _SNAP * max(1.0, abs(x)) else x


def discretize_harvest(e_raw, C: float, L: int):
    """Level index credited for ``e_raw`` joules: largest level not above it."""
    j = np.floor(np.asarray(e_raw, dtype=float) * L / C)
    j = np.clip(j, 0, L).astype(np.int64)
    return int(j) if j.ndim == 0 else j


def discretize_alpha(alpha_raw: float, C: float, L: int) -> int:
    """Smallest level index whose energy covers ``alpha_raw``."""
    if alpha_raw < 0:
        raise ValueError(f"circuit cost must be >= 0, got {alpha_raw}")
    if alpha_raw > C:
        raise AlphaExceedsCapacity(
            f"circuit cost {alpha_raw:g} J exceeds battery capacity {C:g} J"
        )
    return int(math.ceil(_snap(alpha_raw * L / C)))


@dataclass(frozen=True)
class BatterySpec:
    """Capacity ``C`` (J), ``L`` non-empty levels and raw circuit cost ``alpha_raw`` (J)."""

    C: float
    L: int
    alpha_raw: float = 0.0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"capacity must be positive, got {self.C}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"level count must be a positive integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        a = discretize_alpha(self.alpha_raw, self.C, self.L)
        if a >= self.L:
            raise AlphaExceedsCapacity(
                f"discretized circuit cost reaches the full battery (level {a} of {self.L})"
            )

    @property
    def epsilon1(self) -> float:
        return self.C / self.L

    def epsilon(self, i):
        return np.asarray(i) * self.C / self.L

    @property
    def alpha_index(self) -> int:
        return discretize_alpha(self.alpha_raw, self.C, self.L)

    @property
    def alpha(self) -> float:
        return self.alpha_index * self.epsilon1

    @property
    def chi_indices(self) -> range:
        """Every admissible threshold index, ``alpha + eps_1`` up to ``eps_L``."""
        return range(self.alpha_index + 1, self.L + 1)

    def level_of(self, energy: float, rounding: str = "exact") -> int:
        """Convert joules to a level index.

        ``rounding`` is ``"exact"`` (must already be on the lattice), ``"up"``,
        ``"down"`` or ``"nearest"``.
        """
        x = _snap(energy / self.epsilon1)
        if rounding == "exact":
            if x != int(x):
                lo = math.floor(x) * self.epsilon1
                hi = math.ceil(x) * self.epsilon1
                raise ValueError(
                    f"{energy:g} J is not a multiple of the level energy "
                    f"{self.epsilon1:g} J (nearest valid: {lo:g} J, {hi:g} J)"
                )
            return int(x)
        if rounding == "up":
            return int(math.ceil(x))
        if rounding == "down":
            return int(math.floor(x))
        if rounding == "nearest":
            return int(math.floor(x + 0.5))
        raise ValueError(f"unknown rounding mode {rounding!r}")


@dataclass(frozen=True)
class RelayEnergyPolicy:
    """Forwarding energy of one relay as a level index; threshold = alpha + beta."""

    beta_index: int
    alpha_index: int
    epsilon1: float

    def __post_init__(self):
        if self.beta_index < 1:
            raise ValueError(f"forwarding energy must be at least one level, got {self.beta_index}")

    @classmethod
    def from_chi_index(cls, spec: BatterySpec, chi_index: int) -> RelayEnergyPolicy:
        chi_index = int(chi_index)
        a = spec.alpha_index
        if not a + 1 <= chi_index <= spec.L:
            raise ValueError(
                f"threshold index {chi_index} outside [{a + 1}, {spec.L}]"
            )
        return cls(chi_index - a, a, spec.epsilon1)

    @classmethod
    def from_chi(cls, spec: BatterySpec, chi: float, rounding: str = "exact") -> RelayEnergyPolicy:
        """Policy for a threshold given in joules.

        With ``rounding="up"`` the forwarding energy ``chi - alpha_raw`` is
        rounded up to the next level and clamped at ``C - alpha``, the same
        rule used for the heuristic thresholds.
        """
        if rounding == "up":
            beta_raw = chi - spec.alpha_raw
            b = max(spec.level_of(beta_raw, "up"), 1)
            b = min(b, spec.L - spec.alpha_index)
            return cls(b, spec.alpha_index, spec.epsilon1)
        return cls.from_chi_index(spec, spec.level_of(chi, rounding))

    @property
    def chi_index(self) -> int:
        return self.alpha_index + self.beta_index

    @property
    def beta(self) -> float:
        return self.beta_index * self.epsilon1

    @property
    def chi(self) -> float:
        return self.chi_index * self.epsilon1


@dataclass(frozen=True)
class TransitionMatrix:
    Z: np.ndarray
    chi_index: int
    alpha_index: int
    tag: str = ""

    @property
    def L(self) -> int:
        return self.Z.shape[0] - 1


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray

    def __len__(self):
        return len(self.pi)


def _level_increments(link: NakagamiLink, radio: RadioParams, spec: BatterySpec):
    """Probabilities of harvesting exactly ``d`` levels (d < L) and the tails.

    Returns ``(inc, sf)`` where ``inc[d] = Pr{d levels}`` for ``d = 0..L-1`` and
    ``sf[k] = Pr{at least k levels}`` for ``k = 0..L``.
    """
    L = spec.L
    k = np.arange(L + 1, dtype=float)
    if radio.P == 0:
        x = np.where(k == 0, 0.0, np.inf)
    else:
        x = k * (2.0 * spec.C / (radio.eta * radio.P * L))
    cdf = np.asarray(nakagami_cdf(link, x), dtype=float)
    sf = np.asarray(nakagami_sf(link, x), dtype=float)
    # differencing whichever tail is small keeps relative accuracy
    inc = np.where(cdf[1:] <= 0.5, cdf[1:] - cdf[:-1], sf[:-1] - sf[1:])
    return np.clip(inc, 0.0, 1.0), sf


def build_transition_matrix(
    link: NakagamiLink,
    radio: RadioParams,
    spec: BatterySpec,
    policy: RelayEnergyPolicy,
    tag: str = "",
) -> TransitionMatrix:
    """Row-stochastic ``(L+1) x (L+1)`` transition matrix of one relay battery."""
    L = spec.L
    a = spec.alpha_index
    c = policy.chi_index
    if policy.alpha_index != a or not a < c <= L:
        raise ValueError(f"policy (alpha={policy.alpha_index}, chi={c}) inconsistent with battery")

    Z = np.zeros((L + 1, L + 1))
    inc, sf = _level_increments(link, radio, spec)
    for i in range(c):
        Z[i, i:L] = inc[: L - i]
        Z[i, L] = sf[L - i]

    pf = decode_failure_prob(link, radio)
    rows = np.arange(c, L + 1)
    Z[rows, rows - a] = pf
    Z[rows, rows - c] = 1.0 - pf
    return TransitionMatrix(Z, c, a, tag)


def _closed_classes(Z: np.ndarray) -> int:
    """Number of closed communicating classes of the transition graph."""
    n_comp, labels = connected_components(csr_matrix(Z > 0), directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    src, dst = np.nonzero(Z > 0)
    leaves[labels[src][labels[src] != labels[dst]]] = False
    return int(leaves.sum())


def _gth(Z: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination.

    Works only with off-diagonal mass, so it stays accurate when the chain
    is nearly decomposable and ``1 - Z[i, i]`` is lost to rounding. When the
    mass leading to the remaining states underflows, those states get zero
    probability.
    """
    A = np.array(Z, dtype=float)
    n = A.shape[0]
    for k in range(n - 1):
        scale = A[k, k + 1 :].sum()
        if scale <= 0.0:
            n = k + 1
            break
        A[k + 1 :, k] /= scale
        A[k + 1 :, k + 1 :] += np.outer(A[k + 1 :, k], A[k, k + 1 :])
    x = np.zeros(A.shape[0])
    x[n - 1] = 1.0
    for k in range(n - 2, -1, -1):
        x[k] = x[k + 1 : n] @ A[k + 1 : n, k]
        if x[k] > 1e200:  # levels can differ by more than the float range
            x /= x[k]
    return x / math.fsum(x)


def _balance_residual(Z: np.ndarray, pi: np.ndarray) -> float:
    r = float(np.max(np.abs(Z.T @ pi - pi)))
    return r if math.isfinite(r) else math.inf


# below this leave-rate the diagonal 1 - rate keeps too few digits for a direct solve
_NEAR_DECOMPOSABLE = 1e-6


def stationary_distribution(T: TransitionMatrix | np.ndarray) -> StationaryDistribution:
    """Solve ``pi = Z^T pi`` with ``sum(pi) = 1`` via ``(Z^T - I + B) pi = 1``.

    Uses GTH elimination instead when some level is left with probability
    below ``1e-6`` per block, or when the direct solve fails its checks.
    """
    Z = T.Z if isinstance(T, TransitionMatrix) else np.asarray(T, dtype=float)
    n = Z.shape[0]
    leave = Z.sum(axis=1) - np.diag(Z)
    pi = None
    if leave.min() >= _NEAR_DECOMPOSABLE:
        try:
            pi = np.linalg.solve(Z.T - np.eye(n) + 1.0, np.ones(n))
        except np.linalg.LinAlgError:
            pass
    if pi is not None and np.all(np.isfinite(pi)) and pi.min() >= -1e-9:
        pi = np.clip(pi, 0.0, None)
        pi /= math.fsum(pi)
        if _balance_residual(Z, pi) <= 1e-10:
            return StationaryDistribution(pi)
    if _closed_classes(Z) != 1:
        raise SingularSystem("battery chain has more than one closed class; no unique stationary law")
    pi = _gth(Z)
    if not _balance_residual(Z, pi) <= 1e-10:
        raise SingularSystem("stationary solve failed its balance check")
    return StationaryDistribution(pi)


def mode_probabilities(
    pi: StationaryDistribution | np.ndarray, policy: RelayEnergyPolicy | int
) -> tuple[float, float]:
    """``(p_EH, p_IF)``: mass strictly below the threshold level and at/above it."""
    p = pi.pi if isinstance(pi, StationaryDistribution) else np.asarray(pi)
    c = policy.chi_index if isinstance(policy, RelayEnergyPolicy) else int(policy)
    p_eh = math.fsum(p[:c])
    p_if = math.fsum(p[c:])
    if p_eh <= p_if:
        return p_eh, 1.0 - p_eh
    return 1.0 - p_if, p_if
