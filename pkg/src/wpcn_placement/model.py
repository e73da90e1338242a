"""Channel and energy models for a wireless powered communication network.

Devices (WDs) harvest RF power broadcast by energy nodes (ENs) and spend it
on circuit power plus an uplink transmit power that grows polynomially with
the distance to the serving information access point (AP). Every algorithm
in the package evaluates physics through the functions in this module.

Points are plain ``numpy`` arrays: a single point has shape ``(2,)`` and a
set of points has shape ``(n, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 3e8

# Euler-Mascheroni constant, used by the E1 series.
_EULER_GAMMA = 0.5772156649015329


class InvalidParameterError(ValueError):
    """Raised when a model input violates its documented precondition."""


Point2 = np.ndarray


def as_points(points) -> np.ndarray:
    """Coerce a point or a sequence of points into an ``(n, 2)`` float array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidParameterError(f"expected points of shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError("point coordinates must be finite")
    return arr


def distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix between point sets ``a`` (n, 2) and ``b`` (m, 2)."""
    diff = a[:, None, :] - b[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class Region:
    """Axis-aligned deployment box ``lo <= p <= hi``."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if not all(math.isfinite(v) for v in lo + hi):
            raise InvalidParameterError("region bounds must be finite")
        if lo[0] > hi[0] or lo[1] > hi[1]:
            raise InvalidParameterError(f"region lo {lo} exceeds hi {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def square(cls, side: float) -> "Region":
        return cls((0.0, 0.0), (float(side), float(side)))

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2

    @property
    def diameter(self) -> float:
        return math.hypot(self.hi[0] - self.lo[0], self.hi[1] - self.lo[1])

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)

    def clip(self, points) -> np.ndarray:
        return np.clip(points, self.lo, self.hi)


@dataclass(frozen=True)
class Device:
    """A wireless device at a fixed location.

    ``circuit_power`` is the constant consumption a1 in watts; ``tx_coeff``
    is a2, the transmit power per meter**d_U needed to reach an AP.
    """

    x: float
    y: float
    circuit_power: float = 50e-6
    tx_coeff: float = 1.4e-6

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidParameterError("device location must be finite")
        if not self.circuit_power >= 0:
            raise InvalidParameterError("circuit_power must be >= 0")
        if not self.tx_coeff > 0:
            raise InvalidParameterError("tx_coeff must be > 0")

    @property
    def location(self) -> np.ndarray:
        return np.array([self.x, self.y])


def compute_beta(antenna_gain_dl: float, carrier_freq_dl: float, dl_exponent: float) -> float:
    """Mean-channel-gain constant ``A_d * (c / (4 pi f))**d_D``."""
    if not (antenna_gain_dl > 0 and carrier_freq_dl > 0):
        raise InvalidParameterError("antenna gain and carrier frequency must be positive")
    if not dl_exponent >= 2:
        raise InvalidParameterError("downlink path-loss exponent must be >= 2")
    return antenna_gain_dl * (SPEED_OF_LIGHT / (4 * math.pi * carrier_freq_dl)) ** dl_exponent


@dataclass(frozen=True)
class ChannelParams:
    """Downlink/uplink channel constants. Defaults follow a 915 MHz setup."""

    p0: float = 1.0
    eta: float = 0.51
    antenna_gain_dl: float = 10 ** 0.3
    carrier_freq_dl: float = 915e6
    dl_exponent: float = 2.2
    ul_exponent: float = 2.5
    min_distance: float = 0.5

    def __post_init__(self):
        if not self.p0 > 0:
            raise InvalidParameterError("p0 must be > 0")
        if not 0 < self.eta <= 1:
            raise InvalidParameterError("eta must lie in (0, 1]")
        if not self.ul_exponent >= 2:
            raise InvalidParameterError("uplink path-loss exponent must be >= 2")
        if not self.min_distance >= 0:
            raise InvalidParameterError("min_distance must be >= 0")
        # validates gain, frequency and the downlink exponent
        compute_beta(self.antenna_gain_dl, self.carrier_freq_dl, self.dl_exponent)

    @property
    def beta(self) -> float:
        return compute_beta(self.antenna_gain_dl, self.carrier_freq_dl, self.dl_exponent)

    @property
    def phi(self) -> float:
        return self.eta * self.beta * self.p0


@dataclass(frozen=True)
class Costs:
    """Unit prices of an EN (c1), an AP (c2) and a hybrid AP (c3)."""

    c1: float = 0.7
    c2: float = 1.0
    c3: float = 1.4


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance."""

    devices: tuple[Device, ...]
    channel: ChannelParams = field(default_factory=ChannelParams)
    region: Region = field(default_factory=lambda: Region.square(24.0))
    gamma: float = 0.0
    costs: Costs = field(default_factory=Costs)

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        if not self.devices:
            raise InvalidParameterError("a scenario needs at least one device")
        if not math.isfinite(self.gamma):
            raise InvalidParameterError("gamma must be finite")
        if not np.all(self.region.contains(self.positions, tol=1e-9)):
            raise InvalidParameterError("all devices must lie inside the region")

    @property
    def k(self) -> int:
        return len(self.devices)

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([[d.x, d.y] for d in self.devices], dtype=float)

    @cached_property
    def a1(self) -> np.ndarray:
        return np.array([d.circuit_power for d in self.devices], dtype=float)

    @cached_property
    def a2(self) -> np.ndarray:
        return np.array([d.tx_coeff for d in self.devices], dtype=float)

    def with_gamma(self, gamma: float) -> "Scenario":
        return replace(self, gamma=gamma)


def random_scenario(
    k: int = 60,
    box: float = 24.0,
    seed: int = 0,
    *,
    circuit_power: float = 50e-6,
    tx_coeff: float = 1.4e-6,
    channel: ChannelParams | None = None,
    gamma: float = 0.0,
    costs: Costs | None = None,
) -> Scenario:
    """``k`` devices drawn uniformly in a ``box`` x ``box`` square."""
    if k < 1 or not box > 0:
        raise InvalidParameterError("need k >= 1 and a positive box side")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, box, size=(k, 2))
    devices = tuple(Device(float(x), float(y), circuit_power, tx_coeff) for x, y in xy)
    return Scenario(
        devices=devices,
        channel=channel or ChannelParams(),
        region=Region.square(box),
        gamma=gamma,
        costs=costs or Costs(),
    )


# --- per-device rates ------------------------------------------------------


def harvest_rates(en_locations, device_locations, channel: ChannelParams) -> np.ndarray:
    """Average harvested power at each device from all ENs, in watts."""
    ens = as_points(en_locations)
    devs = as_points(device_locations)
    if len(ens) == 0:
        raise InvalidParameterError("at least one EN is required")
    d = np.maximum(distances(devs, ens), channel.min_distance)
    return channel.phi * np.sum(d ** (-channel.dl_exponent), axis=1)


def harvest_rate(en_locations, device_location, channel: ChannelParams) -> float:
    ens = np.asarray(en_locations, dtype=float)
    if ens.size == 0:
        raise InvalidParameterError("at least one EN is required")
    return float(harvest_rates(ens, device_location, channel)[0])


def nearest_index(sites, device_location) -> int:
    """Index of the nearest site; ties go to the lowest index."""
    pts = np.asarray(sites, dtype=float)
    if pts.size == 0:
        raise InvalidParameterError("site list is empty")
    return int(np.argmin(distances(as_points(device_location), as_points(pts))[0]))


def tx_power(dist, a1, a2, ul_exponent: float):
    """Consumption ``a1 + a2 * dist**d_U``; monotone in ``dist``."""
    return a1 + a2 * np.asarray(dist, dtype=float) ** ul_exponent


def consumption_rate(ap_location, device: Device, ul_exponent: float) -> float:
    d = float(distances(as_points(ap_location), as_points(device.location))[0, 0])
    return float(tx_power(d, device.circuit_power, device.tx_coeff, ul_exponent))


def consumption_rates(ap_locations, scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Consumption of every device when it talks to its nearest AP.

    Returns ``(mu, associations)``.
    """
    aps = as_points(ap_locations)
    if len(aps) == 0:
        raise InvalidParameterError("at least one AP is required")
    d = distances(scenario.positions, aps)
    assoc = np.argmin(d, axis=1)
    dmin = d[np.arange(len(d)), assoc]
    return tx_power(dmin, scenario.a1, scenario.a2, scenario.channel.ul_exponent), assoc


# --- placements and metrics -----------------------------------------------


@dataclass(frozen=True, eq=False)
class Placement:
    """EN and AP coordinates plus the derived nearest-AP associations.

    For hybrid APs (HAPs) ``en_locations`` and ``ap_locations`` hold the same
    coordinates and ``hap`` is set.
    """

    en_locations: np.ndarray
    ap_locations: np.ndarray
    associations: np.ndarray
    hap: bool = False

    @classmethod
    def build(cls, en_locations, ap_locations, scenario: Scenario) -> "Placement":
        ens = as_points(en_locations).copy()
        aps = as_points(ap_locations).copy()
        if len(ens) == 0 or len(aps) == 0:
            raise InvalidParameterError("placement needs at least one EN and one AP")
        assoc = np.argmin(distances(scenario.positions, aps), axis=1)
        return cls(ens, aps, assoc)

    @classmethod
    def build_hap(cls, hap_locations, scenario: Scenario) -> "Placement":
        p = cls.build(hap_locations, hap_locations, scenario)
        return cls(p.en_locations, p.en_locations.copy(), p.associations, hap=True)

    @property
    def m(self) -> int:
        return len(self.en_locations)

    @property
    def n(self) -> int:
        return len(self.ap_locations)

    def same_as(self, other: "Placement") -> bool:
        return (
            self.hap == other.hap
            and np.array_equal(self.en_locations, other.en_locations)
            and np.array_equal(self.ap_locations, other.ap_locations)
            and np.array_equal(self.associations, other.associations)
        )


@dataclass(frozen=True, eq=False)
class Metrics:
    """Per-device harvested (``lam``), consumed (``mu``) and net (``omega``) power."""

    lam: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    p_r: float
    associations: np.ndarray


def evaluate(placement: Placement, scenario: Scenario) -> Metrics:
    """Recompute all per-device rates for a placement.

    Associations are always re-derived from the AP coordinates, so a stale
    ``placement.associations`` cannot leak into the metrics.
    """
    if len(placement.en_locations) == 0 or len(placement.ap_locations) == 0:
        raise InvalidParameterError("placement needs at least one EN and one AP")
    lam = harvest_rates(placement.en_locations, scenario.positions, scenario.channel)
    mu, assoc = consumption_rates(placement.ap_locations, scenario)
    omega = lam - mu
    return Metrics(lam=lam, mu=mu, omega=omega, p_r=float(np.min(omega)), associations=assoc)


def lifetime(omega: float, battery: float) -> float:
    """Seconds until a battery of ``battery`` joules drains at net rate ``omega``."""
    if not battery > 0:
        raise InvalidParameterError("battery capacity must be positive")
    if omega >= 0:
        return math.inf
    return -battery / omega


# --- uplink transmit-power coefficient -------------------------------------


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) for x > 0, relative error below 1e-8.

    Power series for x <= 1, modified Lentz continued fraction otherwise.
    """
    if not x > 0:
        raise InvalidParameterError("E1 is defined here for x > 0 only")
    if x <= 1.0:
        total = 0.0
        term = 1.0
        n = 1
        while True:
            term *= -x / n
            contrib = -term / n
            total += contrib
            if abs(contrib) < 1e-17 * max(abs(total), 1e-300):
                break
            n += 1
        return -_EULER_GAMMA - math.log(x) + total
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)


def derive_a2(
    rx_power_target: float,
    outage: float,
    antenna_gain_ul: float,
    carrier_freq_ul: float,
    ul_exponent: float,
) -> float:
    """Transmit-power coefficient a2 of truncated channel inversion in Rayleigh fading.

    The mean transmit power needed at distance ``d`` is ``a2 * d**ul_exponent``.
    """
    if not 0 < outage < 1:
        raise InvalidParameterError("outage probability must lie in (0, 1)")
    if not (rx_power_target > 0 and antenna_gain_ul > 0 and carrier_freq_ul > 0):
        raise InvalidParameterError("rx power, gain and frequency must be positive")
    cutoff = math.log(1.0 / (1.0 - outage))
    path = (4 * math.pi * carrier_freq_ul / SPEED_OF_LIGHT) ** ul_exponent
    return rx_power_target / antenna_gain_ul * path * exp_integral_e1(cutoff)


def dbm_to_watts(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def db_to_linear(db: float) -> float:
    return 10 ** (db / 10)


def points_list(points: Sequence) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in np.asarray(points, dtype=float).reshape(-1, 2)]
