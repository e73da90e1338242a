"""Minimum-cost deployment search over node counts.

For fixed counts the placement heuristics return the best minimum net rate
``t*`` they can find; a count is feasible when ``t* >= gamma``. The search
walks candidate counts in increasing cost and stops at the first feasible
cost level. ``t*`` is not monotone in the counts for heuristic solvers, so
nothing is pruned.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .baselines import cluster_center_placement
from .hap import greedy_hap_placement
from .model import Placement, Scenario, evaluate
from .separated import alternating_joint

log = logging.getLogger(__name__)


@dataclass(eq=False)
class DeploymentPlan:
    mode: str
    m: int
    n: int | None
    cost: float
    t_star: float
    placement: Placement
    feasible: bool
    history: list[tuple[int, str, float]] = field(default_factory=list)


def separated_cost(scenario: Scenario, m: int, n: int) -> float:
    # rounded so that equal-cost pairs compare equal despite float noise
    return round(scenario.costs.c1 * m + scenario.costs.c2 * n, 9)


def candidate_pairs(scenario: Scenario, max_m: int, max_n: int) -> list[tuple[int, int]]:
    """All ``(M, N)`` within the caps, cheapest first, ties broken by smaller M."""
    pairs = [(m, n) for m in range(1, max_m + 1) for n in range(1, max_n + 1)]
    return sorted(pairs, key=lambda p: (separated_cost(scenario, *p), p[0]))


def _plan(mode, m, n, cost, placement, scenario, history) -> DeploymentPlan:
    # feasibility always comes from a fresh evaluation, never from solver bookkeeping
    t = evaluate(placement, scenario).p_r
    return DeploymentPlan(mode, m, n, cost, t, placement, t >= scenario.gamma, history)


def _run_separated(args) -> DeploymentPlan:
    scenario, m, n, l, seed, solver = args
    if solver == "cc":
        placement, history = cluster_center_placement(scenario, m, n, seed), []
    else:
        placement, report = alternating_joint(scenario, m, n, l, seed)
        history = report.history
    return _plan("separated", m, n, separated_cost(scenario, m, n), placement, scenario, history)


def _pick(plans: list[DeploymentPlan]) -> DeploymentPlan | None:
    feasible = [p for p in plans if p.feasible]
    if not feasible:
        return None
    cheapest = min(p.cost for p in feasible)
    tied = [p for p in feasible if p.cost == cheapest]
    return max(tied, key=lambda p: p.t_star)


def min_cost_separated(
    scenario: Scenario,
    caps: tuple[int, int] = (30, 30),
    l: int = 10,
    seed: int = 0,
    solver: str = "alternating",
    workers: int = 1,
    record: list | None = None,
) -> DeploymentPlan | None:
    """Cheapest ``(M, N)`` whose placement meets ``scenario.gamma``.

    ``solver`` is ``"alternating"`` (the joint method with budget ``l``) or
    ``"cc"`` (cluster centers). Every evaluated plan is appended to
    ``record`` when given. Candidates are evaluated in cost order, in batches
    of ``workers`` processes; the answer does not depend on ``workers``.
    """
    max_m, max_n = caps
    max_m, max_n = min(max_m, scenario.k), min(max_n, scenario.k)
    pairs = candidate_pairs(scenario, max_m, max_n)
    done: list[DeploymentPlan] = []
    run: Callable = _run_separated
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        i = 0
        while i < len(pairs):
            # pairs a batch evaluates past the first feasible level never change the pick
            batch = pairs[i : i + max(workers, 1)]
            jobs = [(scenario, m, n, l, seed, solver) for m, n in batch]
            plans = list(pool.map(run, jobs)) if pool else [run(j) for j in jobs]
            for p in plans:
                log.info("M=%d N=%d cost=%.3f t*=%.6e feasible=%s", p.m, p.n, p.cost, p.t_star, p.feasible)
            done.extend(plans)
            i += len(batch)
            best = _pick(done)
            if best is not None:
                # finish the tied cost level so equal-cost ties go to the larger t*
                while i < len(pairs) and separated_cost(scenario, *pairs[i]) <= best.cost:
                    done.append(run((scenario, *pairs[i], l, seed, solver)))
                    i += 1
                break
    finally:
        if pool:
            pool.shutdown()
    if record is not None:
        record.extend(done)
    return _pick(done)


def min_cost_hap(
    scenario: Scenario,
    cap: int = 30,
    seed: int = 0,
    solver: str = "greedy",
    record: list | None = None,
) -> DeploymentPlan | None:
    """Smallest number of hybrid APs whose placement meets ``scenario.gamma``."""
    for m in range(1, min(cap, scenario.k) + 1):
        if solver == "cc":
            placement, history = cluster_center_placement(scenario, m, None, seed), []
        else:
            haps, report = greedy_hap_placement(scenario, m, seed)
            placement, history = Placement.build_hap(haps, scenario), report.history
        plan = _plan("hap", m, None, round(scenario.costs.c3 * m, 9), placement, scenario, history)
        log.info("M=%d cost=%.3f t*=%.6e feasible=%s", m, plan.cost, plan.t_star, plan.feasible)
        if record is not None:
            record.append(plan)
        if plan.feasible:
            return plan
    return None
