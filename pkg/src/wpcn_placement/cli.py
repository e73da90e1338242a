"""Command-line entry point.

Every placement command reads a scenario JSON file and writes
``placement.json``, ``metrics.csv``, ``history.csv`` (when the solver has
one) and ``run.json`` into ``--out-dir``. Outputs depend only on the
command, the scenario and the seed, so reruns are byte-identical; wall time
goes to the log instead.

Exit codes: 0 ok, 2 malformed input, 3 no feasible plan within the caps,
4 association cycling guard.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import serialization as ser
from .baselines import SaConfig, cluster_center_placement, simulated_annealing
from .clustering import kmeans
from .hap import greedy_hap_placement
from .model import InvalidParameterError, Placement, Scenario, evaluate, random_scenario
from .montecarlo import UplinkPolicy, simulate_harvest, simulate_uplink_power
from .planner import DeploymentPlan, min_cost_hap, min_cost_separated, separated_cost
from .separated import AssociationCyclingError, alternating_joint, greedy_en_placement, trial_and_error_ap

log = logging.getLogger("wpcn_placement")

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_CYCLING = 0, 2, 3, 4


@dataclass
class RunRecord:
    """Provenance of one command. ``wall_time`` is not part of the written record."""

    command: str
    scenario_digest: str
    seed: int
    wall_time: float = 0.0
    result: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "scenario_sha256": self.scenario_digest,
            "seed": self.seed,
            "result": self.result,
            "metrics": self.metrics,
            "history": [[int(i), p, float(z)] for i, p, z in self.history],
        }
        return json.dumps(doc, indent=2) + "\n"


def _default_seed() -> int:
    raw = os.environ.get("WPCN_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InvalidParameterError(f"WPCN_SEED must be an integer, got {raw!r}") from None


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="scenario.json", help="scenario JSON file (default: %(default)s)")
    common.add_argument("--out-dir", default=".", help="directory for output files (default: %(default)s)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $WPCN_SEED or 0)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="wpcn-place", description="EN/AP/HAP placement for wireless powered networks")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-scenario", parents=[common], help="write a random uniform scenario")
    g.add_argument("--k", type=_positive, default=60, help="number of devices")
    g.add_argument("--box", type=float, default=24.0, help="square side in meters")
    g.add_argument("--a1", type=float, default=50e-6, help="circuit power in W")
    g.add_argument("--a2", type=float, default=1.4e-6, help="transmit power coefficient")
    g.add_argument("--gamma", type=float, default=0.0, help="net rate target in W")

    e = sub.add_parser("place-en", parents=[common], help="greedy EN placement with fixed APs")
    e.add_argument("--m", type=_positive, required=True)
    e.add_argument("--n", type=_positive, help="APs at n k-means centers")
    e.add_argument("--fixed", help="placement.json whose APs are kept")

    a = sub.add_parser("place-ap", parents=[common], help="trial-and-error AP placement with fixed ENs")
    a.add_argument("--n", type=_positive, required=True)
    a.add_argument("--m", type=_positive, help="ENs at m k-means centers")
    a.add_argument("--fixed", help="placement.json whose ENs are kept")

    j = sub.add_parser("place-joint", parents=[common], help="alternating EN/AP optimization")
    j.add_argument("--m", type=_positive, required=True)
    j.add_argument("--n", type=_positive, required=True)
    j.add_argument("--l", type=_positive, default=10, help="alternation budget")
    j.add_argument("--first-phase", choices=("en", "ap"), default="en")

    h = sub.add_parser("place-hap", parents=[common], help="greedy hybrid AP placement")
    h.add_argument("--m", type=_positive, required=True)

    c = sub.add_parser("baseline-cc", parents=[common], help="nodes at k-means cluster centers")
    c.add_argument("--m", type=_positive, required=True)
    c.add_argument("--n", type=_positive, help="AP count; omit for HAPs")

    s = sub.add_parser("baseline-ls", parents=[common], help="simulated annealing from cluster centers")
    s.add_argument("--m", type=_positive, required=True)
    s.add_argument("--n", type=_positive, help="AP count; omit for HAPs")
    s.add_argument("--steps", type=int, help="annealing steps (default 5000 per node)")
    s.add_argument("--sigma3", type=float, help="bound on the total squared move, m^2")
    s.add_argument("--initial-temp", type=float, default=1e-4)
    s.add_argument("--cooling", type=float, default=0.995)

    mc = sub.add_parser("min-cost", parents=[common], help="cheapest node counts meeting gamma")
    mc.add_argument("--mode", choices=("separated", "hap"), required=True)
    mc.add_argument("--gamma", type=float, help="override the scenario target, W")
    mc.add_argument("--max-m", type=_positive, default=30)
    mc.add_argument("--max-n", type=_positive, default=30)
    mc.add_argument("--l", type=_positive, default=10)
    mc.add_argument("--solver", choices=("heuristic", "cc"), default="heuristic")
    mc.add_argument("--workers", type=_positive, default=1)

    v = sub.add_parser("validate", parents=[common], help="Monte Carlo check of the rate models")
    v.add_argument("--blocks", type=_positive, default=1_000_000)
    v.add_argument("--m", type=_positive, default=1, help="ENs at k-means centers when --placement is absent")
    v.add_argument("--placement", help="placement.json to validate")
    v.add_argument("--distance", type=float, default=10.0, help="uplink test distance, m")
    return p


# --- placement commands: each returns (placement, t_star, history) ---


def _load_fixed(path, scenario) -> Placement:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ser.ScenarioParseError(f"cannot read placement: {exc}", None, None, str(path)) from None
    return ser.placement_from_dict(doc, scenario)


def _cost(scenario: Scenario, placement: Placement) -> float:
    if placement.hap:
        return round(scenario.costs.c3 * placement.m, 9)
    return separated_cost(scenario, placement.m, placement.n)


def _place_en(args, sc, seed):
    if (args.n is None) == (args.fixed is None):
        raise InvalidParameterError("give exactly one of --n and --fixed")
    aps = kmeans(sc.positions, args.n, seed).centers if args.fixed is None else _load_fixed(args.fixed, sc).ap_locations
    ens, rep = greedy_en_placement(sc, aps, args.m, seed)
    return Placement.build(ens, aps, sc), rep.t_star, rep.history


def _place_ap(args, sc, seed):
    if (args.m is None) == (args.fixed is None):
        raise InvalidParameterError("give exactly one of --m and --fixed")
    ens = kmeans(sc.positions, args.m, seed).centers if args.fixed is None else _load_fixed(args.fixed, sc).en_locations
    aps, rep = trial_and_error_ap(sc, ens, args.n, seed)
    return Placement.build(ens, aps, sc), rep.t_star, rep.history


def _place_joint(args, sc, seed):
    placement, rep = alternating_joint(sc, args.m, args.n, args.l, seed, first_phase=args.first_phase)
    return placement, rep.t_star, rep.history


def _place_hap(args, sc, seed):
    haps, rep = greedy_hap_placement(sc, args.m, seed)
    return Placement.build_hap(haps, sc), rep.t_star, rep.history


def _baseline_cc(args, sc, seed):
    placement = cluster_center_placement(sc, args.m, args.n, seed)
    return placement, evaluate(placement, sc).p_r, []


def _baseline_ls(args, sc, seed):
    init = cluster_center_placement(sc, args.m, args.n, seed)
    cfg = SaConfig(args.sigma3, args.initial_temp, args.cooling, args.steps, seed)
    placement, best = simulated_annealing(sc, init, cfg)
    return placement, best, []


_PLACERS = {
    "place-en": _place_en,
    "place-ap": _place_ap,
    "place-joint": _place_joint,
    "place-hap": _place_hap,
    "baseline-cc": _baseline_cc,
    "baseline-ls": _baseline_ls,
}


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _emit(out: Path, sc: Scenario, record: RunRecord, placement: Placement, t_star: float, cost, history) -> None:
    metrics = evaluate(placement, sc)
    _write(out, "placement.json", json.dumps(ser.placement_to_dict(placement), indent=2) + "\n")
    _write(out, "metrics.csv", ser.metrics_csv(sc, metrics, t_star, cost))
    if history:
        _write(out, "history.csv", ser.history_csv(history))
    record.metrics = {"p_r_W": metrics.p_r, "t_star_W": float(t_star), "cost": cost}
    record.history = list(history)
    _write(out, "run.json", record.to_json())
    print(f"P_r = {metrics.p_r!r} W, t* = {float(t_star)!r} W" + ("" if cost is None else f", cost = {cost!r}"))


def _plan_dict(plan: DeploymentPlan) -> dict:
    return {"mode": plan.mode, "m": plan.m, "n": plan.n, "cost": plan.cost, "t_star_W": plan.t_star, "feasible": plan.feasible}


def _min_cost(args, sc: Scenario, seed: int, out: Path, record: RunRecord) -> int:
    if args.gamma is not None:
        sc = sc.with_gamma(args.gamma)
    tried: list[DeploymentPlan] = []
    if args.mode == "separated":
        solver = "alternating" if args.solver == "heuristic" else "cc"
        plan = min_cost_separated(sc, (args.max_m, args.max_n), args.l, seed, solver, args.workers, tried)
    else:
        solver = "greedy" if args.solver == "heuristic" else "cc"
        plan = min_cost_hap(sc, args.max_m, seed, solver, tried)
    status = EXIT_OK
    if plan is None:
        # report the closest miss: largest t*, then cheapest
        plan = max(tried, key=lambda p: (p.t_star, -p.cost))
        status = EXIT_INFEASIBLE
        log.error("no feasible plan within the caps; best infeasible plan reported")
    record.result = {"plan": _plan_dict(plan), "evaluated": [_plan_dict(p) for p in tried]}
    _emit(out, sc, record, plan.placement, plan.t_star, plan.cost, plan.history)
    print(f"{'feasible' if plan.feasible else 'INFEASIBLE'}: mode={plan.mode} M={plan.m}"
          + ("" if plan.n is None else f" N={plan.n}") + f" cost={plan.cost!r}")
    return status


def _validate(args, sc: Scenario, seed: int, out: Path, record: RunRecord) -> int:
    if args.placement:
        placement = _load_fixed(args.placement, sc)
    else:
        placement = cluster_center_placement(sc, args.m, args.m, seed)
    analytic = evaluate(placement, sc).lam
    est = simulate_harvest(placement, sc, args.blocks, seed)
    z = (est.mean - analytic) / est.stderr
    lines = ["device,lambda_W,lambda_hat_W,stderr_W,z,within_3sigma"]
    for k in range(sc.k):
        lines.append(f"{k},{analytic[k]!r},{est.mean[k]!r},{est.stderr[k]!r},{z[k]!r},{abs(z[k]) <= 3}")
    _write(out, "validate.csv", "\n".join(lines) + "\n")

    policy = UplinkPolicy(ul_exponent=sc.channel.ul_exponent)
    up = simulate_uplink_power(args.distance, policy, args.blocks, seed + 1)
    target = policy.a2() * args.distance**policy.ul_exponent
    rel = up.mean_power / target - 1
    record.result = {
        "harvest_within_3sigma": int(np.sum(np.abs(z) <= 3)),
        "devices": sc.k,
        "uplink": {"distance_m": args.distance, "mean_power_W": up.mean_power, "analytic_W": target,
                   "relative_error": rel, "outage": up.outage, "outage_target": policy.outage},
    }
    _write(out, "run.json", record.to_json())
    print(f"harvest: {int(np.sum(np.abs(z) <= 3))}/{sc.k} devices within 3 sigma (max |z| = {np.max(np.abs(z)):.2f})")
    print(f"uplink at {args.distance} m: mean {up.mean_power:.6e} W vs {target:.6e} W ({rel:+.3%}), outage {up.outage:.4f}")
    return EXIT_OK


_NEGATIVE = re.compile(r"^-(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def _join_negative(argv: list[str]) -> list[str]:
    # argparse mistakes values like -1e-4 for options; glue them to their flag
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative(list(sys.argv[1:] if argv is None else argv)))
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        seed = _default_seed() if args.seed is None else args.seed
        out = Path(args.out_dir)
        if args.command == "gen-scenario":
            sc = random_scenario(args.k, args.box, seed, circuit_power=args.a1, tx_coeff=args.a2, gamma=args.gamma)
            Path(args.scenario).parent.mkdir(parents=True, exist_ok=True)
            Path(args.scenario).write_text(ser.dump_scenario(sc))
            print(f"wrote {args.scenario} ({sc.k} devices)")
            return EXIT_OK
        sc = ser.load_scenario(args.scenario)
        start = time.perf_counter()
        record = RunRecord(args.command, ser.scenario_digest(sc), seed)
        if args.command == "min-cost":
            status = _min_cost(args, sc, seed, out, record)
        elif args.command == "validate":
            status = _validate(args, sc, seed, out, record)
        else:
            placement, t_star, history = _PLACERS[args.command](args, sc, seed)
            record.result = {"m": placement.m, "n": None if placement.hap else placement.n, "hap": placement.hap}
            _emit(out, sc, record, placement, t_star, _cost(sc, placement), history)
            status = EXIT_OK
        record.wall_time = time.perf_counter() - start
        log.info("%s finished in %.3f s", args.command, record.wall_time)
        return status
    except InvalidParameterError as exc:
        # scenario parse errors included
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except AssociationCyclingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CYCLING


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
