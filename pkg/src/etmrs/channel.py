"""Fading statistics, radio parameters and the path-loss/topology model.

The first hop (source to relay) is Nakagami-m, handled through its power gain
``H = |h|^2`` which is gamma distributed with shape ``m`` and mean ``lambda``.
The second hop (relay to destination) is Rayleigh; the simulator only needs
the amplitude ``|g|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

REFERENCE_GAIN = 1e-3  # 30 dB attenuation at 1 m


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class NakagamiLink:
    """Source-to-relay link. ``lam`` is the average power gain."""

    m: float
    lam: float

    def __post_init__(self):
        if not self.m >= 0.5:
            raise ValueError(f"Nakagami shape m must be >= 0.5, got {self.m}")
        if not self.lam > 0:
            raise ValueError(f"average power gain must be positive, got {self.lam}")

    @property
    def b(self) -> float:
        """Rate parameter of the power-gain gamma distribution."""
        return self.m / self.lam


@dataclass(frozen=True)
class RayleighLink:
    """Relay-to-destination link with average power gain ``lam``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"average power gain must be positive, got {self.lam}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.lam / 2.0)

    @property
    def sigma2(self) -> float:
        return self.lam / 2.0


@dataclass(frozen=True)
class RadioParams:
    """Source power ``P`` and noise ``N0`` in watts, rate ``kappa`` in bit/s/Hz.

    ``P = 0`` is accepted so the degenerate no-power case can be simulated;
    every analytical quantity treats it as the limit ``P -> 0``.
    """

    P: float
    N0: float
    kappa: float
    eta: float = 0.5

    def __post_init__(self):
        if not self.P >= 0:
            raise ValueError(f"source power must be >= 0, got {self.P}")
        if not self.N0 > 0:
            raise ValueError(f"noise power must be positive, got {self.N0}")
        if not self.kappa > 0:
            raise ValueError(f"rate kappa must be positive, got {self.kappa}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")

    @property
    def v(self) -> float:
        """SNR outage threshold 2^(2 kappa) - 1."""
        return 2.0 ** (2.0 * self.kappa) - 1.0


@dataclass(frozen=True)
class Topology:
    """Linear deployment: relays on the segment between source and destination."""

    d_sd: float
    d_sr: tuple[float, ...]
    omega: float = 3.0
    m: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "d_sr", tuple(float(d) for d in self.d_sr))
        if not self.d_sr:
            raise ValueError("topology needs at least one relay")
        if not 2 <= self.omega <= 5:
            raise ValueError(f"path-loss exponent must lie in [2, 5], got {self.omega}")
        for u, d in enumerate(self.d_sr):
            if not 0 < d < self.d_sd:
                raise ValueError(
                    f"relay {u}: distance {d} outside (0, d_sd={self.d_sd})"
                )

    def links(self) -> list[tuple[NakagamiLink, RayleighLink]]:
        out = []
        for d in self.d_sr:
            lam_sr = path_loss_gain(d, self.omega)
            lam_rd = path_loss_gain(self.d_sd - d, self.omega)
            out.append((NakagamiLink(self.m, lam_sr), RayleighLink(lam_rd)))
        return out


def path_loss_gain(d: float, omega: float) -> float:
    """Average power gain ``1e-3 / (1 + d**omega)``."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return REFERENCE_GAIN / (1.0 + d**omega)


def nakagami_cdf(link: NakagamiLink, x):
    """CDF of the power gain, the regularized lower incomplete gamma P(m, b x).

    Accepts scalars or arrays; ``x = inf`` maps to 1.
    """
    x = np.asarray(x, dtype=float)
    out = special.gammainc(link.m, link.b * x)
    return float(out) if out.ndim == 0 else out


def nakagami_sf(link: NakagamiLink, x):
    """Complementary CDF, accurate where the CDF is close to one."""
    x = np.asarray(x, dtype=float)
    out = special.gammaincc(link.m, link.b * x)
    return float(out) if out.ndim == 0 else out


def nakagami_pdf(link: NakagamiLink, x):
    x = np.asarray(x, dtype=float)
    b, m = link.b, link.m
    with np.errstate(divide="ignore"):
        logpdf = m * math.log(b) + (m - 1) * np.log(x) - b * x - special.gammaln(m)
    out = np.exp(logpdf)
    return float(out) if out.ndim == 0 else out


def nakagami_power_sample(link: NakagamiLink, rng: np.random.Generator, size=None):
    """Draw the power gain H: gamma with shape m and scale lambda/m."""
    return rng.gamma(link.m, link.lam / link.m, size=size)


def rayleigh_amplitude_sample(link: RayleighLink, rng: np.random.Generator, size=None):
    """Draw |g| with E[|g|^2] = lambda."""
    return rng.rayleigh(link.sigma, size=size)


def decode_failure_prob(link: NakagamiLink, radio: RadioParams) -> float:
    """Probability that the relay cannot decode at rate kappa: F_H(v N0 / P)."""
    if radio.P == 0:
        return 1.0
    return nakagami_cdf(link, radio.v * radio.N0 / radio.P)
