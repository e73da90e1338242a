"""Sampled block fading, used to cross-check the analytic rate models.

Downlink: per block every EN-device channel gets an independent power gain
whose mean is the deterministic path gain, so the empirical harvested power
must converge to :func:`wpcn_placement.model.harvest_rates`.

Uplink: truncated channel inversion. The device inverts the fading gain when
it exceeds a cutoff chosen so that the outage probability is ``outage`` and
stays silent otherwise; the mean transmit power must converge to
``derive_a2(...) * d**d_U``.

Blocks are processed in fixed-size shards with seeds spawned from one
``SeedSequence``, so results depend only on ``(seed, blocks)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .model import (
    SPEED_OF_LIGHT,
    InvalidParameterError,
    Placement,
    Scenario,
    derive_a2,
    distances,
)

SHARD_BLOCKS = 65536

# fading(rng, mean_gain, blocks) -> gains of shape (blocks, *mean_gain.shape)
FadingModel = Callable[[np.random.Generator, np.ndarray, int], np.ndarray]


def rayleigh(rng: np.random.Generator, mean_gain: np.ndarray, blocks: int) -> np.ndarray:
    # Rayleigh amplitude means an exponential power gain
    return rng.exponential(1.0, size=(blocks, *mean_gain.shape)) * mean_gain


def deterministic(rng: np.random.Generator, mean_gain: np.ndarray, blocks: int) -> np.ndarray:
    return np.broadcast_to(mean_gain, (blocks, *mean_gain.shape))


_FADING = {"rayleigh": rayleigh, "deterministic": deterministic}


def _fading(fading) -> FadingModel:
    if callable(fading):
        return fading
    try:
        return _FADING[fading]
    except KeyError:
        raise InvalidParameterError(f"unknown fading model {fading!r}") from None


def _shards(blocks: int, seed: int):
    if blocks < 1:
        raise InvalidParameterError("blocks must be >= 1")
    count = -(-blocks // SHARD_BLOCKS)
    seqs = np.random.SeedSequence(seed).spawn(count)
    for i, ss in enumerate(seqs):
        yield min(SHARD_BLOCKS, blocks - i * SHARD_BLOCKS), np.random.default_rng(ss)


class _Moments:
    """Running mean and centered sum of squares, merged shard by shard."""

    def __init__(self, shape=()):
        self.n = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def add(self, x: np.ndarray) -> None:
        # pairwise update of Chan et al.; avoids the cancellation of E[x^2] - E[x]^2
        nb = x.shape[0]
        mb = x.mean(axis=0)
        m2b = ((x - mb) ** 2).sum(axis=0)
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta**2 * (self.n * nb / n)
        self.n = n

    def stderr(self) -> np.ndarray:
        return np.sqrt(self.m2 / max(self.n - 1, 1) / self.n)


@dataclass(frozen=True)
class FadingSample:
    """Channel power gains ``gains[i, k]`` from EN ``i`` to device ``k`` in one block."""

    gains: np.ndarray
    block_index: int


@dataclass(frozen=True, eq=False)
class HarvestEstimate:
    mean: np.ndarray
    stderr: np.ndarray
    blocks: int


def mean_path_gain(placement: Placement, scenario: Scenario) -> np.ndarray:
    """Mean DL power gain ``beta * max(d, d_min)**-d_D``, shape (M, K)."""
    ch = scenario.channel
    d = distances(placement.en_locations, scenario.positions)
    return ch.beta * np.maximum(d, ch.min_distance) ** (-ch.dl_exponent)


def fading_samples(
    placement: Placement, scenario: Scenario, blocks: int, seed: int = 0, fading="rayleigh"
) -> Iterator[FadingSample]:
    """Per-block gains; the same stream :func:`simulate_harvest` consumes."""
    model = _fading(fading)
    mean = mean_path_gain(placement, scenario)
    b = 0
    for size, rng in _shards(blocks, seed):
        for g in model(rng, mean, size):
            yield FadingSample(g, b)
            b += 1


def simulate_harvest(
    placement: Placement, scenario: Scenario, blocks: int, seed: int = 0, fading="rayleigh"
) -> HarvestEstimate:
    """Empirical mean harvested power per device over ``blocks`` fading blocks.

    ``stderr`` is the sample standard deviation over blocks divided by
    ``sqrt(blocks)``.
    """
    model = _fading(fading)
    ch = scenario.channel
    mean = mean_path_gain(placement, scenario)
    scale = ch.eta * ch.p0
    acc = _Moments(scenario.k)
    for size, rng in _shards(blocks, seed):
        per_block = np.asarray(model(rng, mean, size)).sum(axis=1)
        if np.any(per_block < 0):
            raise InvalidParameterError("fading model produced negative gains")
        acc.add(per_block)
    return HarvestEstimate(scale * acc.mean, scale * acc.stderr(), blocks)


@dataclass(frozen=True)
class UplinkPolicy:
    """Truncated channel inversion: received power target ``rx_power`` (W),
    outage probability, uplink antenna gain, carrier frequency (Hz) and path
    loss exponent."""

    rx_power: float = 1e-10
    outage: float = 0.05
    gain_ul: float = 10**0.3
    freq_ul: float = 915e6
    ul_exponent: float = 2.5

    def __post_init__(self):
        if not 0 < self.outage < 1:
            raise InvalidParameterError("outage probability must lie in (0, 1)")
        if not (self.rx_power > 0 and self.gain_ul > 0 and self.freq_ul > 0):
            raise InvalidParameterError("rx power, gain and frequency must be positive")

    @property
    def cutoff(self) -> float:
        """Unit-mean gain below which the device stays silent."""
        return math.log(1.0 / (1.0 - self.outage))

    def a2(self) -> float:
        return derive_a2(self.rx_power, self.outage, self.gain_ul, self.freq_ul, self.ul_exponent)

    def path_gain(self, distance: float) -> float:
        wavelength = SPEED_OF_LIGHT / (4 * math.pi * self.freq_ul)
        return self.gain_ul * wavelength**self.ul_exponent * distance ** (-self.ul_exponent)


@dataclass(frozen=True)
class UplinkEstimate:
    mean_power: float
    stderr: float
    outage: float
    blocks: int


def simulate_uplink_power(distance: float, policy: UplinkPolicy, blocks: int, seed: int = 0) -> UplinkEstimate:
    """Empirical mean transmit power (W) and outage fraction at ``distance`` m."""
    if not distance > 0:
        raise InvalidParameterError("distance must be positive")
    path = policy.path_gain(distance)
    cutoff = policy.cutoff
    acc = _Moments()
    silent = 0
    for size, rng in _shards(blocks, seed):
        g = rng.exponential(1.0, size)
        on = g >= cutoff
        p = np.zeros(size)
        p[on] = policy.rx_power / (g[on] * path)
        acc.add(p)
        silent += int(size - on.sum())
    return UplinkEstimate(float(acc.mean), float(acc.stderr()), silent / blocks, blocks)
