"""Reference placements: cluster centers and a simulated-annealing local search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clustering import kmeans
from .model import InvalidParameterError, Placement, Scenario, distances, tx_power


def cluster_center_placement(scenario: Scenario, m: int, n: int | None = None, seed: int = 0) -> Placement:
    """ENs at ``m`` k-means centers and APs at ``n`` k-means centers.

    With ``n=None`` the ``m`` centers host hybrid APs instead.
    """
    if not 1 <= m <= scenario.k or (n is not None and not 1 <= n <= scenario.k):
        raise InvalidParameterError("node counts must lie in [1, K]")
    ens = kmeans(scenario.positions, m, seed).centers
    if n is None:
        return Placement.build_hap(ens, scenario)
    aps = kmeans(scenario.positions, n, seed).centers
    return Placement.build(ens, aps, scenario)


@dataclass(frozen=True)
class SaConfig:
    """Annealing schedule. ``sigma3`` bounds the total squared move per step (m^2).

    ``None`` fields are sized from the instance by :func:`default_config`.
    """

    sigma3: float | None = None
    initial_temp: float = 1e-4
    cooling: float = 0.995
    steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.sigma3 is not None and not self.sigma3 > 0:
            raise InvalidParameterError("sigma3 must be positive")
        if not 0 < self.cooling < 1:
            raise InvalidParameterError("cooling must lie in (0, 1)")
        if self.steps is not None and self.steps < 0:
            raise InvalidParameterError("steps must be >= 0")


def default_config(scenario: Scenario, nodes: int, **overrides) -> SaConfig:
    """Default schedule for ``nodes`` movable nodes (M + N, or M for HAPs)."""
    base = SaConfig(**overrides)
    sigma3 = base.sigma3
    if sigma3 is None:
        sigma3 = (0.02 * scenario.region.diameter) ** 2 * nodes
    steps = 5000 * nodes if base.steps is None else base.steps
    return SaConfig(sigma3, base.initial_temp, base.cooling, steps, base.seed)


def _p_r(ens, aps, pos, a1, a2, phi, d_dl, d_ul, dmin):
    lam = phi * np.sum(np.maximum(distances(pos, ens), dmin) ** (-d_dl), axis=1)
    mu = tx_power(np.min(distances(pos, aps), axis=1), a1, a2, d_ul)
    return float(np.min(lam - mu))


def simulated_annealing(
    scenario: Scenario,
    init: Placement,
    config: SaConfig | None = None,
) -> tuple[Placement, float]:
    """Maximize the minimum net rate by annealed joint random moves.

    Every step perturbs all nodes at once with a Gaussian move whose total
    squared length is below ``sigma3`` (resampled otherwise), clipped to the
    region. Improvements are always accepted, a loss ``delta`` with
    probability ``exp(delta / T)``. Returns the best placement seen.
    """
    hap = init.hap
    nodes = init.m if hap else init.m + init.n
    cfg = default_config(
        scenario,
        nodes,
        sigma3=config.sigma3 if config else None,
        initial_temp=config.initial_temp if config else 1e-4,
        cooling=config.cooling if config else 0.995,
        steps=config.steps if config else None,
        seed=config.seed if config else 0,
    )
    ch = scenario.channel
    args = (scenario.positions, scenario.a1, scenario.a2, ch.phi, ch.dl_exponent, ch.ul_exponent, ch.min_distance)
    lo, hi = np.asarray(scenario.region.lo), np.asarray(scenario.region.hi)
    rng = np.random.default_rng(cfg.seed)

    cur = init.en_locations.copy() if hap else np.vstack([init.en_locations, init.ap_locations])
    m = init.m

    def split(x):
        return (x, x) if hap else (x[:m], x[m:])

    cur_val = _p_r(*split(cur), *args)
    best, best_val = cur.copy(), cur_val
    scale = math.sqrt(cfg.sigma3 / (4 * nodes))
    temp = cfg.initial_temp
    for _ in range(cfg.steps):
        while True:
            step = rng.normal(0.0, scale, size=cur.shape)
            if np.sum(step**2) < cfg.sigma3:
                break
        cand = np.clip(cur + step, lo, hi)
        val = _p_r(*split(cand), *args)
        delta = val - cur_val
        if delta >= 0 or (temp > 0 and rng.random() < math.exp(delta / temp)):
            cur, cur_val = cand, val
            if val > best_val:
                best, best_val = cand.copy(), val
        temp *= cfg.cooling
    ens, aps = split(best)
    out = Placement.build_hap(ens, scenario) if hap else Placement.build(ens, aps, scenario)
    return out, best_val
