"""Command line entry point: ``entre run|optimize|compare|sweep``.

Set ``ENTRE_LOG_LEVEL`` (e.g. ``DEBUG``) for more output on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path as FsPath

from entre.baselines import with_splits
from entre.energy import recompute_state
from entre.fluid import CSV_COLUMNS, take_snapshot
from entre.model import Scenario
from entre.optimizer import (
    BudgetExceeded,
    NoFeasiblePoint,
    brute_force_solve,
    descent_solve,
    optimal_energy_plan,
    reference_energy,
)
from entre.reference import with_paths
from entre.scenario_io import ParseError, ValidationError, bundled_names, dump_scenario, load_bundled, parse_scenario
from entre.simulator import STRATEGIES, run, summarize

log = logging.getLogger("entre")

SUMMARY_COLUMNS = (
    "throughput_mbps",
    "total_energy_w",
    "energy_saving",
    "sleeping_frac",
    "excluded_frac",
    "iterations",
    "converged",
)


def load_scenario(ref: str) -> Scenario:
    """A scenario file path, or the name of a bundled scenario."""
    if not FsPath(ref).exists() and ref in bundled_names():
        return load_bundled(ref)
    return parse_scenario(ref)


def _write_csv(path: FsPath, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "-" if v is None else str(v).lower()
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _table(columns, rows) -> str:
    cells = [[_fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[j]) for row in cells)) for j, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _reference_energy(scenario: Scenario, grid_step: float):
    try:
        energy, _ = reference_energy(scenario, grid_step)
        return energy
    except (BudgetExceeded, NoFeasiblePoint) as exc:
        log.warning("no reference energy: %s", exc)
        return None


def _summary_row(result, ref_energy) -> dict:
    summary = summarize(result.trajectory, ref_energy or 0.0)
    row = summary.as_row()
    if ref_energy is None:
        row["energy_saving"] = None
    return row


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run(scenario, args.strategy)
    _write_csv(out / "trajectory.csv", CSV_COLUMNS, (s.csv_row() for s in result.trajectory))
    dump_scenario(scenario, out / "scenario.normalized.json")
    row = _summary_row(result, _reference_energy(scenario, args.grid_step))
    row = {"strategy": args.strategy, "scenario": scenario.name, **row}
    (out / "summary.json").write_text(json.dumps(row, indent=2) + "\n")
    print(_table(["strategy", *SUMMARY_COLUMNS], [row]))
    return 0


def cmd_optimize(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.method == "grid":
        splits, value = brute_force_solve(scenario, args.grid_step)
    else:
        splits, value = descent_solve(scenario, step_schedule=_schedule(args.grid_step))
    doc = {
        "scenario": scenario.name,
        "method": args.method,
        "grid_step": args.grid_step,
        "objective": value.value,
        "argmax_pair": value.argmax_pair,
        "feasible": value.feasible,
        "splits": {str(p.id): [float(x) for x in s.fractions] for p, s in zip(scenario.pairs, splits)},
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        out = FsPath(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "optimize.json").write_text(text + "\n")
    print(text)
    return 0


def _schedule(grid_step: float) -> tuple[float, ...]:
    steps = [s for s in (0.2, 0.1) if s > grid_step + 1e-12 and abs(round(s / grid_step) * grid_step - s) < 1e-9]
    return (*steps, grid_step)


def compare_rows(scenario: Scenario, grid_step: float = 0.05) -> list[dict]:
    plan = optimal_energy_plan(scenario, grid_step)
    rows = []
    for strategy in STRATEGIES:
        result = run(scenario, strategy)
        rows.append({"strategy": strategy, **_summary_row(result, plan.reference_energy)})
    routed = with_splits(scenario, plan.splits).with_synced_links()
    state = recompute_state(routed.topology, routed.pairs, routed.profile)
    snap = take_snapshot(routed, state, scenario.params.measure_period, 1, converged=True)
    rows.append(
        {
            "strategy": "optimal",
            "throughput_mbps": snap.throughput / 1e6,
            "total_energy_w": plan.optimal_energy,
            "energy_saving": plan.saving,
            "sleeping_frac": snap.sleeping_links_fraction,
            "excluded_frac": snap.excluded_routes_fraction,
            "iterations": None,
            "converged": None,
        }
    )
    return rows


def cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    rows = compare_rows(scenario, args.grid_step)
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "compare.csv", ["strategy", *SUMMARY_COLUMNS], rows)
    print(_table(["strategy", *SUMMARY_COLUMNS], rows))
    entre, optimal = rows[0]["energy_saving"], rows[-1]["energy_saving"]
    if optimal:
        print(f"\nentre / optimal energy saving: {entre / optimal:.3f}")
    return 0


SWEEP_COLUMNS = (
    "value",
    "entre_throughput_mbps",
    "ospf_throughput_mbps",
    "entre_energy_w",
    "ospf_energy_w",
    "entre_iterations",
    "entre_sleeping_frac",
    "entre_excluded_frac",
)


def swept(scenario: Scenario, param: str, value: float) -> Scenario:
    if param == "paths":
        return with_paths(scenario, int(value))
    if param == "demand":
        out = scenario.copy()
        out.pairs = [replace(p, demand=p.demand * value) for p in out.pairs]
        return out
    if param == "te":
        return replace(scenario, params=replace(scenario.params, energy_threshold=value))
    raise ValueError(f"unknown sweep parameter {param!r}")


def sweep_rows(scenario: Scenario, param: str, values) -> list[dict]:
    rows = []
    for value in values:
        sc = swept(scenario, param, value)
        entre = run(sc, "entre")
        ospf = run(sc, "ospf")
        rows.append(
            {
                "value": value,
                "entre_throughput_mbps": entre.final.throughput / 1e6,
                "ospf_throughput_mbps": ospf.final.throughput / 1e6,
                "entre_energy_w": entre.final.total_energy,
                "ospf_energy_w": ospf.final.total_energy,
                "entre_iterations": entre.iterations,
                "entre_sleeping_frac": entre.final.sleeping_links_fraction,
                "entre_excluded_frac": entre.final.excluded_routes_fraction,
            }
        )
    return rows


def _values(text: str, param: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"--values: expected a comma separated list of numbers, got {text!r}") from None
    if param == "paths":
        if any(v != int(v) or v < 1 for v in vals):
            raise ParseError("--values: path counts must be positive integers")
        return [int(v) for v in vals]
    return vals


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    rows = sweep_rows(scenario, args.param, _values(args.values, args.param))
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    print(_table(SWEEP_COLUMNS, rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entre", description="Energy-aware multipath traffic engineering.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one strategy and write its trajectory")
    p.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    p.add_argument("--strategy", choices=STRATEGIES, default="entre")
    p.add_argument("--out", required=True)
    p.add_argument("--grid-step", type=float, default=0.05, help="grid for the reference energy")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("optimize", help="minimize the min-max objective offline")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", choices=("grid", "descent"), default="grid")
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="entre, ospf, equal split and the optimum side by side")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="one summary row per parameter value")
    p.add_argument("--scenario", required=True)
    p.add_argument("--param", choices=("paths", "demand", "te"), required=True)
    p.add_argument("--values", required=True, help="comma separated, e.g. 1,2,3,4")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("ENTRE_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BudgetExceeded, NoFeasiblePoint, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
