"""Greedy placement of hybrid access points (co-located EN + AP).

A new HAP both powers devices and may become their uplink receiver, so each
device's consumption depends on the new location through
``mu_i = min(mu_{i-1}, a1 + a2 * |u - w|**d_U)``. Per device we assume
whether it keeps its old HAP (``a``) or moves to the new one (``b``); under a
fixed assumption every constraint becomes a disk (or drops out), the target is
found by bisection, and violated assumptions are flipped until consistent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .clustering import Clustering, kmeans
from .geometry import bisect_max, intersect_disks, root_theta
from .model import (
    InvalidParameterError,
    Placement,
    Scenario,
    as_points,
    distances,
    evaluate,
    harvest_rates,
    tx_power,
)
from .separated import MAX_ROUNDS, SIGMA, AssociationCyclingError, SolveReport

log = logging.getLogger(__name__)

KEEP, SWITCH = "a", "b"


@dataclass(frozen=True, eq=False)
class HapState:
    """HAPs placed so far and what every device gets from them.

    ``mu_prev`` is ``+inf`` before the first HAP exists.
    """

    placed: np.ndarray
    lambda_prev: np.ndarray
    mu_prev: np.ndarray

    @classmethod
    def empty(cls, k: int) -> "HapState":
        return cls(np.empty((0, 2)), np.zeros(k), np.full(k, np.inf))

    def add(self, location, scenario: Scenario) -> "HapState":
        u = as_points(location)
        lam = self.lambda_prev + harvest_rates(u, scenario.positions, scenario.channel)
        d = distances(scenario.positions, u)[:, 0]
        mu_new = tx_power(d, scenario.a1, scenario.a2, scenario.channel.ul_exponent)
        return HapState(np.vstack([self.placed, u]), lam, np.minimum(self.mu_prev, mu_new))


def constraint_radii(t: float, switch, idx, state: HapState, scenario: Scenario):
    """Disk radius and case number (1-4) of each device constraint at target ``t``.

    ``switch`` is a boolean array over ``idx``: True for assumption ``b``.
    Case 2 constraints are dropped and carry an infinite radius.
    """
    ch = scenario.channel
    switch = np.asarray(switch, dtype=bool)
    lam = state.lambda_prev[idx]
    mu = state.mu_prev[idx]
    a1, a2 = scenario.a1[idx], scenario.a2[idx]
    radius = np.full(len(idx), np.inf)
    case = np.zeros(len(idx), dtype=int)

    keep = ~switch
    with np.errstate(invalid="ignore"):
        head = t + mu - lam
    c1 = keep & (head > 0)
    radius[c1] = (ch.phi / head[c1]) ** (1.0 / ch.dl_exponent)
    case[c1] = 1
    case[keep & ~c1] = 2

    coeff = (t + a1 - lam) / a2
    case[switch & (coeff >= 0)] = 3
    case[switch & (coeff < 0)] = 4
    if np.any(switch):
        radius[switch] = root_theta(
            coeff[switch], ch.phi / a2[switch], ch.ul_exponent, ch.dl_exponent
        )
    return radius, case


def constraint_to_disk(k: int, assumption: str, t: float, state: HapState, scenario: Scenario):
    """``(case, radius)`` for one device; ``radius`` is ``None`` when dropped."""
    if assumption not in (KEEP, SWITCH):
        raise InvalidParameterError("assumption must be 'a' or 'b'")
    r, case = constraint_radii(t, np.array([assumption == SWITCH]), np.array([k]), state, scenario)
    return int(case[0]), (None if not np.isfinite(r[0]) else float(r[0]))


@dataclass
class HapStep:
    location: np.ndarray
    t_star: float
    switch: np.ndarray
    rounds: int
    t_rounds: list[float] = field(default_factory=list)


def search_bound(scenario: Scenario, m: int) -> float:
    """Half-width of the bisection bracket; every attainable target lies inside."""
    ch = scenario.channel
    return float(
        m * ch.p0
        + np.max(scenario.a1)
        + np.max(scenario.a2) * scenario.region.diameter**ch.ul_exponent
    )


def place_single_hap(
    scenario: Scenario,
    state: HapState,
    considered,
    newest=None,
    delta: float | None = None,
    sigma: float = SIGMA,
    max_rounds: int = MAX_ROUNDS,
) -> HapStep:
    """Locate the next HAP serving the devices in ``considered``.

    Devices in ``newest`` start with assumption ``b`` and the rest with ``a``;
    before any HAP exists everyone must switch. Only strictly violated
    assumptions flip, so exact ties keep their current assumption.

    A wrong assumption only overstates a device's consumption (its true value
    is the smaller of the two), so every round's location meets its ``t``.
    If an assumption set repeats, the rounds would cycle among equally good
    locations; the best round is returned at that point.
    """
    idx = np.asarray(considered, dtype=int)
    if len(idx) == 0:
        raise InvalidParameterError("no devices to serve")
    newest = idx if newest is None else np.asarray(newest, dtype=int)
    mu_prev = state.mu_prev[idx]
    first = ~np.isfinite(mu_prev)
    switch = np.isin(idx, newest) | first
    delta = search_bound(scenario, max(len(state.placed) + 1, 1)) if delta is None else delta
    centers = scenario.positions[idx]
    ch = scenario.channel
    t_rounds = []
    seen = set()
    best = None
    for rnd in range(1, max_rounds + 1):
        seen.add(switch.tobytes())
        sw = switch.copy()

        def probe(t):
            r, _ = constraint_radii(t, sw, idx, state, scenario)
            keep = np.isfinite(r)
            return intersect_disks(centers[keep], r[keep], scenario.region)

        res = bisect_max(probe, -delta, delta, sigma)
        t_rounds.append(res.t)
        if best is None or res.t >= best.t_star:
            best = HapStep(res.witness, res.t, switch, rnd, t_rounds)
        d = distances(centers, res.witness.reshape(1, 2))[:, 0]
        mu_new = tx_power(d, scenario.a1[idx], scenario.a2[idx], ch.ul_exponent)
        violated = np.where(switch, mu_prev < mu_new, mu_prev > mu_new) & ~first
        if not np.any(violated):
            return HapStep(res.witness, res.t, switch, rnd, t_rounds)
        switch = switch ^ violated
        if switch.tobytes() in seen:
            log.debug("assumption set repeats after round %d; keeping round %d", rnd, best.rounds)
            return HapStep(best.location, best.t_star, best.switch, rnd, t_rounds)
    raise AssociationCyclingError(f"HAP association assumptions still changing after {max_rounds} rounds")


def greedy_hap_placement(
    scenario: Scenario,
    m: int,
    seed: int = 0,
    clustering: Clustering | None = None,
    sigma: float = SIGMA,
) -> tuple[np.ndarray, SolveReport]:
    """Place ``m`` HAPs one at a time over a growing set of device clusters."""
    if not 1 <= m <= scenario.k:
        raise InvalidParameterError(f"HAP count {m} must lie in [1, {scenario.k}]")
    clusters = clustering or kmeans(scenario.positions, m, seed)
    if clusters.m != m:
        raise InvalidParameterError("clustering must have exactly m clusters")
    delta = search_bound(scenario, m)
    state = HapState.empty(scenario.k)
    report = SolveReport(t_star=float("nan"))
    rounds = 0
    for i in range(m):
        considered = clusters.covered(i + 1)
        newest = clusters.members(clusters.order[i])
        step = place_single_hap(scenario, state, considered, newest, delta=delta, sigma=sigma)
        state = state.add(step.location, scenario)
        rounds += step.rounds
        report.history.append((i + 1, "hap", step.t_star))
        log.debug("HAP %d placed after %d assumption rounds, t = %.6e", i + 1, step.rounds, step.t_star)
    report.iterations = {"hap_placed": m, "assumption_rounds": rounds}
    report.t_star = evaluate(Placement.build_hap(state.placed, scenario), scenario).p_r
    return state.placed, report


def final_state(haps, scenario: Scenario) -> HapState:
    """State after adding ``haps`` in order; used to check the incremental recursion."""
    state = HapState.empty(scenario.k)
    for u in as_points(haps):
        state = state.add(u, scenario)
    return state
