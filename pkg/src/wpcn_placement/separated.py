"""Placement of separately located energy nodes and access points.

* :func:`place_single_en` -- optimal single EN by bisection on the target rate.
* :func:`greedy_en_placement` -- cluster-based greedy EN placement, APs fixed.
* :func:`solve_ap_subproblem` / :func:`trial_and_error_ap` -- AP placement
  with ENs fixed, iterating assumed device-to-AP associations.
* :func:`alternating_joint` -- alternate the two and keep the best round.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .clustering import Clustering, kmeans
from .geometry import bisect_max, disk_radius_dl, disk_radius_ul, intersect_disks
from .model import (
    InvalidParameterError,
    Placement,
    Scenario,
    as_points,
    consumption_rates,
    distances,
    evaluate,
    harvest_rates,
)

log = logging.getLogger(__name__)

SIGMA = 1e-8
EPS_REPORT = 1e-8
MAX_ROUNDS = 50


class AssociationCyclingError(RuntimeError):
    """Raised when an association fixed point is not reached within the round cap."""


@dataclass
class SolveReport:
    """Outcome of a placement run.

    ``t_star`` is the minimum net rate of the returned placement, re-evaluated
    from scratch. ``history`` holds ``(iteration, phase, value)`` rows.
    """

    t_star: float
    iterations: dict[str, int] = field(default_factory=dict)
    history: list[tuple[int, str, float]] = field(default_factory=list)


def place_single_en(
    scenario: Scenario,
    mu_fixed,
    extra_lambda=None,
    devices=None,
    upper: float | None = None,
    sigma: float = SIGMA,
    trace: list | None = None,
) -> tuple[np.ndarray, float]:
    """Best location of one extra EN for the devices in ``devices``.

    Maximizes ``min_k(extra_lambda_k + phi * |u - w_k|**-d_D - mu_k)`` over the
    region by bisection on the target. ``mu_fixed`` and ``extra_lambda`` are
    indexed like the scenario's devices; ``devices`` selects the subset that
    must be served (all by default). ``upper`` defaults to the EN power P0.
    """
    idx = np.arange(scenario.k) if devices is None else np.asarray(devices, dtype=int)
    if len(idx) == 0:
        raise InvalidParameterError("no devices to serve")
    ch = scenario.channel
    mu = np.asarray(mu_fixed, dtype=float)[idx]
    extra = np.zeros(len(idx)) if extra_lambda is None else np.asarray(extra_lambda, dtype=float)[idx]
    mu_eff = mu - extra
    centers = scenario.positions[idx]
    lower = float(np.min(-mu_eff))
    upper = ch.p0 if upper is None else float(upper)
    if upper <= lower:
        upper = lower + sigma

    def probe(t):
        r = disk_radius_dl(t, mu_eff, ch.phi, ch.dl_exponent)
        keep = np.isfinite(r)
        return intersect_disks(centers[keep], r[keep], scenario.region)

    res = bisect_max(probe, lower, upper, sigma, record=trace is not None)
    if trace is not None:
        trace.extend(res.trace)
    return res.witness, res.t


def greedy_en_placement(
    scenario: Scenario,
    ap_locations,
    m: int,
    seed: int = 0,
    clustering: Clustering | None = None,
    sigma: float = SIGMA,
) -> tuple[np.ndarray, SolveReport]:
    """Place ``m`` ENs one by one for fixed APs.

    EN ``i`` serves the devices of the first ``i`` clusters, counting the
    power already delivered by ENs ``1..i-1``.
    """
    if not 1 <= m <= scenario.k:
        raise InvalidParameterError(f"EN count {m} must lie in [1, {scenario.k}]")
    mu, _ = consumption_rates(ap_locations, scenario)
    clusters = clustering or kmeans(scenario.positions, m, seed)
    if clusters.m != m:
        raise InvalidParameterError("clustering must have exactly m clusters")
    lam_prev = np.zeros(scenario.k)
    ens = np.empty((m, 2))
    report = SolveReport(t_star=float("nan"))
    for i in range(m):
        served = clusters.covered(i + 1)
        ens[i], t_i = place_single_en(
            scenario, mu, lam_prev, served, upper=m * scenario.channel.p0, sigma=sigma
        )
        lam_prev = lam_prev + harvest_rates(ens[i], scenario.positions, scenario.channel)
        report.history.append((i + 1, "en", t_i))
    report.iterations["en_placed"] = m
    report.t_star = evaluate(Placement.build(ens, ap_locations, scenario), scenario).p_r
    return ens, report


class ApSolution(NamedTuple):
    locations: np.ndarray
    t_star: float
    per_ap: np.ndarray


def solve_ap_subproblem(
    associations,
    lam,
    scenario: Scenario,
    n: int,
    sigma: float = SIGMA,
) -> ApSolution:
    """Optimal APs for fixed device-to-AP associations and harvested power.

    With associations fixed the problem splits into one planar problem per AP:
    maximize ``min_k(lam_k - a1_k - a2_k |v - w_k|**d_U)`` over its devices.
    APs with no devices sit at the region center and get ``t = +inf``. The
    search floor ``min_k(lam_k - a1_k - a2_k * diam**d_U)`` is feasible
    anywhere in the region, so ``t_star`` is always finite.
    """
    assoc = np.asarray(associations, dtype=int)
    lam = np.asarray(lam, dtype=float)
    if assoc.shape != (scenario.k,) or np.any((assoc < 0) | (assoc >= n)):
        raise InvalidParameterError("every device needs an AP index in [0, n)")
    ch = scenario.channel
    diam = scenario.region.diameter
    aps = np.tile(scenario.region.center, (n, 1))
    per_ap = np.full(n, np.inf)
    for j in range(n):
        idx = np.flatnonzero(assoc == j)
        if len(idx) == 0:
            continue
        head = lam[idx] - scenario.a1[idx]
        a2 = scenario.a2[idx]
        centers = scenario.positions[idx]
        floor = float(np.min(head - a2 * diam**ch.ul_exponent))
        upper = float(np.min(head)) + sigma

        def probe(t, head=head, a2=a2, centers=centers):
            r = disk_radius_ul(t, head, 0.0, a2, ch.ul_exponent)
            return intersect_disks(centers, r, scenario.region)

        res = bisect_max(probe, floor, upper, sigma)
        aps[j], per_ap[j] = res.witness, res.t
    return ApSolution(aps, float(np.min(per_ap)), per_ap)


def trial_and_error_ap(
    scenario: Scenario,
    en_locations,
    n: int,
    seed: int = 0,
    initial_aps=None,
    max_rounds: int = MAX_ROUNDS,
    sigma: float = SIGMA,
) -> tuple[np.ndarray, SolveReport]:
    """Place ``n`` APs for fixed ENs by iterating association assumptions.

    Starts from the nearest-AP associations of ``initial_aps`` (``n`` k-means
    centers by default). After each solve, only devices that are strictly
    closer to another AP switch, so the round optimum never decreases. A
    device served by a nearer AP than assumed only consumes less, so every
    round's placement meets its ``t``; if an association set repeats, the
    best round is returned instead of cycling.
    """
    if not 1 <= n <= scenario.k:
        raise InvalidParameterError(f"AP count {n} must lie in [1, {scenario.k}]")
    lam = harvest_rates(en_locations, scenario.positions, scenario.channel)
    if initial_aps is None:
        initial_aps = kmeans(scenario.positions, n, seed).centers
    init = as_points(initial_aps)
    if len(init) != n:
        raise InvalidParameterError("initial_aps must hold n points")
    rows = np.arange(scenario.k)
    assumed = np.argmin(distances(scenario.positions, init), axis=1)
    report = SolveReport(t_star=float("nan"))
    seen = set()
    best = None
    for rnd in range(1, max_rounds + 1):
        seen.add(assumed.tobytes())
        sol = solve_ap_subproblem(assumed, lam, scenario, n, sigma)
        report.history.append((rnd, "ap", sol.t_star))
        if best is None or sol.t_star >= best.t_star:
            best = sol
        d = distances(scenario.positions, sol.locations)
        nearest = np.argmin(d, axis=1)
        switch = d[rows, assumed] > d[rows, nearest]
        if np.any(switch):
            assumed = np.where(switch, nearest, assumed)
            if assumed.tobytes() not in seen:
                continue
            log.debug("associations repeat after round %d", rnd)
            sol = best
        report.iterations["association_rounds"] = rnd
        report.t_star = evaluate(Placement.build(en_locations, sol.locations, scenario), scenario).p_r
        return sol.locations, report
    raise AssociationCyclingError(f"associations still changing after {max_rounds} rounds")


def alternating_joint(
    scenario: Scenario,
    m: int,
    n: int,
    l: int,
    seed: int = 0,
    first_phase: str = "en",
    sigma: float = SIGMA,
) -> tuple[Placement, SolveReport]:
    """Alternate greedy EN placement and trial-and-error AP placement.

    APs start at ``n`` k-means centers (ENs at ``m`` centers if the first
    phase is ``"ap"``). Each AP phase warm-starts from the current APs. The
    best of the ``l`` recorded placements is returned.
    """
    if l < 1:
        raise InvalidParameterError("iteration budget l must be >= 1")
    if first_phase not in ("en", "ap"):
        raise InvalidParameterError("first_phase must be 'en' or 'ap'")
    if not (1 <= m <= scenario.k and 1 <= n <= scenario.k):
        raise InvalidParameterError("node counts must lie in [1, K]")
    en_clusters = kmeans(scenario.positions, m, seed)
    aps = kmeans(scenario.positions, n, seed).centers
    ens = en_clusters.centers
    history: list[tuple[int, str, float]] = []
    snapshots: list[Placement] = []
    rounds = 0
    for it in range(1, l + 1):
        en_phase = (it % 2 == 1) == (first_phase == "en")
        if en_phase:
            ens, _ = greedy_en_placement(scenario, aps, m, seed, clustering=en_clusters, sigma=sigma)
            phase = "en"
        else:
            aps, rep = trial_and_error_ap(scenario, ens, n, seed, initial_aps=aps, sigma=sigma)
            rounds += rep.iterations["association_rounds"]
            phase = "ap"
        placement = Placement.build(ens, aps, scenario)
        z = evaluate(placement, scenario).p_r
        history.append((it, phase, z))
        snapshots.append(placement)
        log.debug("alternating iteration %d (%s): z = %.6e", it, phase, z)
    best = int(np.argmax([h[2] for h in history]))
    report = SolveReport(
        t_star=history[best][2],
        iterations={"alternations": l, "association_rounds": rounds, "best_iteration": best + 1},
        history=history,
    )
    return snapshots[best], report
