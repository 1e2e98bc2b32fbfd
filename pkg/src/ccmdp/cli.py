"""Command line harness: generate instance suites, sweep solvers over a
(density, beta) grid, solve single instances, run the verification suite, and
dump peak-age histograms.

Commands
    generate   write a seeded instance suite + manifest.json to --out
    sweep      run {pull, push-always, push-never, aoi} over the suite's
               (instance, beta) grid; write results.csv (+ timings.csv)
    solve      one (instance, method, beta) cell; write policy + report JSON
    verify     re-derive the 5-state construction's claims and check the
               dominance/monotonicity properties on a desk-scale sweep
    aoi-hist   simulate one cell and write its peak-age PMFs as CSV

Settings resolve as defaults < --config JSON < explicit flags. Exit codes:
0 success, 1 a verification assertion failed, 2 invalid input.

results.csv is byte-stable: exact evaluation only, floats serialized via
repr, rows sorted by (instance, method, beta), and parallel workers never
touch the output order. Wall-clock timings go to the timings.csv sidecar so
the main grid stays diffable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baselines import solve_aoi_periodic
from .counterexample import build_counterexample, verify_counterexample
from .evaluation import simulate
from .exact import evaluate_joint_policy_exact
from .generator import REWARD_ALPHAS, GeneratorSpec, generate_suite
from .mdp import ConfigurationError, Mdp, SolveConfig, solve_full_observability
from .pull import solve_pull, solve_pull_path
from .push import is_push_equilibrium, solve_push_api

SCHEMA_VERSION = "1"
METHODS = ("pull", "push-always", "push-never", "aoi")

RESULT_COLUMNS = [
    "schema_version",
    "instance",
    "density",
    "alpha",
    "beta",
    "method",
    "init",
    "gamma",
    "t_max",
    "seed",
    "discounted_return",
    "per_step_avg_reward",
    "update_frequency",
    "discounted_comm_cost",
    "net_objective",
    "rounds",
    "error",
]

DESK_SCALE = {
    "num_states": 10,
    "num_densities": 5,
    "betas": [0.0, 0.5, 1.0, 1.5, 2.0],
    "t_max": 12,
    "gamma": 0.95,
    "seed": 0,
}
PAPER_SCALE = {
    "num_states": 30,
    "num_densities": 15,
    "betas": [round(0.1 * i, 10) for i in range(21)],
    "t_max": 12,
    "gamma": 0.95,
    "seed": 0,
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def _settings(args, base: dict) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(base)
    if getattr(args, "paper_scale", False):
        merged.update(PAPER_SCALE)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {config_path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config file is not valid JSON: {e}")
        unknown = sorted(set(loaded) - set(merged))
        if unknown:
            raise ConfigurationError(f"unknown config fields: {', '.join(unknown)}")
        merged.update(loaded)
    for flag, key in [
        ("seed", "seed"),
        ("gamma", "gamma"),
        ("tmax", "t_max"),
        ("jobs", "jobs"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    return merged


def _generator_spec(settings: dict) -> GeneratorSpec:
    return GeneratorSpec(
        num_states=int(settings["num_states"]),
        num_densities=int(settings["num_densities"]),
        seed=int(settings["seed"]),
        gamma=float(settings["gamma"]),
    )


def _density(m: Mdp) -> float:
    return float(np.count_nonzero(m.transitions)) / m.transitions.size


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    settings = _settings(args, DESK_SCALE)
    out = Path(args.out)
    spec = _generator_spec(settings)
    instances = generate_suite(spec)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "seed": spec.seed,
        "gamma": spec.gamma,
        "num_states": spec.num_states,
        "instances": [],
    }
    for inst in instances:
        fname = f"{inst.name}.json"
        inst.mdp.save(out / fname)
        manifest["instances"].append(
            {
                "name": inst.name,
                "file": fname,
                "style": inst.style,
                "alpha": REWARD_ALPHAS[inst.style],
                "width": inst.width,
                "density": _density(inst.mdp),
            }
        )
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(instances)} instances and manifest.json to {out}")
    return 0


# ------------------------------------------------------------------- sweep


def _solve_method(m: Mdp, method: str, cfg: SolveConfig):
    """Returns (policy, init label, rounds label) for one sweep cell."""
    if method == "pull":
        res = solve_pull(m, cfg)
        return res.policy, "multi", res.rounds
    if method == "push-always":
        res = solve_push_api(m, cfg, init="always")
        return res.policy, "always", len(res.rounds) - 1
    if method == "push-never":
        res = solve_push_api(m, cfg, init="never")
        return res.policy, "never", len(res.rounds) - 1
    if method == "aoi":
        res = solve_aoi_periodic(m, cfg)
        return res.policy, "", ""
    raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")


def _sweep_unit(payload: dict) -> tuple[list[dict], dict]:
    """All cost points of one (instance, method) pair. Pure: safe for worker
    processes.

    The pull method solves its whole ascending cost grid jointly (neighboring
    landings are traded so the update mass stays monotone in the cost), so the
    unit of parallel work is the (instance, method) pair, not the single cell.
    """
    started = time.perf_counter()
    m = Mdp.from_json_dict(payload["mdp"])
    if payload["gamma"] != m.gamma:
        m = Mdp(transitions=m.transitions, rewards=m.rewards, gamma=payload["gamma"])
    t_max = payload["t_max"]
    betas = payload["betas"]
    method = payload["method"]

    solved: list[tuple[float, object, str, object, str]] = []
    if method == "pull":
        try:
            cfg0 = SolveConfig(beta=0.0, t_max=t_max, horizon_cap=t_max)
            results = solve_pull_path(m, cfg0, betas)
            solved = [(b, r.policy, "multi", r.rounds, "") for b, r in zip(betas, results)]
        except Exception as e:  # noqa: BLE001 - failures land in the CSV
            solved = [(b, None, "", "", f"{type(e).__name__}: {e}") for b in betas]
    else:
        for b in betas:
            try:
                cfg = SolveConfig(beta=b, t_max=t_max, horizon_cap=t_max)
                policy, init, rounds = _solve_method(m, method, cfg)
                solved.append((b, policy, init, rounds, ""))
            except Exception as e:  # noqa: BLE001
                solved.append((b, None, "", "", f"{type(e).__name__}: {e}"))

    rows = []
    for b, policy, init, rounds, error in solved:
        row = {
            "schema_version": SCHEMA_VERSION,
            "instance": payload["name"],
            "density": payload["density"],
            "alpha": payload["alpha"],
            "beta": b,
            "method": method,
            "init": init,
            "gamma": payload["gamma"],
            "t_max": t_max,
            "seed": payload["seed"],
            "rounds": rounds,
            "error": error,
        }
        if not error:
            try:
                cfg = SolveConfig(beta=b, t_max=t_max, horizon_cap=t_max)
                report = evaluate_joint_policy_exact(m, policy, cfg)
                row.update(
                    discounted_return=report.discounted_return,
                    per_step_avg_reward=report.per_step_avg_reward,
                    update_frequency=report.update_frequency,
                    discounted_comm_cost=report.discounted_comm_cost,
                    net_objective=report.net_objective,
                )
            except Exception as e:  # noqa: BLE001
                row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    timing = {
        "schema_version": SCHEMA_VERSION,
        "instance": payload["name"],
        "method": method,
        "wall_time": time.perf_counter() - started,
    }
    return rows, timing


def _load_suite(suite_dir: Path) -> list[dict]:
    manifest_path = suite_dir / "manifest.json"
    if not manifest_path.exists():
        raise ConfigurationError(
            f"no manifest.json under {suite_dir}; run `ccmdp generate` first"
        )
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    entries = []
    for entry in manifest["instances"]:
        with open(suite_dir / entry["file"]) as fh:
            mdp_dict = json.load(fh)
        entries.append({**entry, "mdp": mdp_dict})
    return entries


def _sweep_rows(
    entries: list[dict],
    settings: dict,
    methods: tuple[str, ...],
    jobs: int,
) -> tuple[list[dict], list[dict]]:
    units = [
        {
            "name": entry["name"],
            "density": entry["density"],
            "alpha": entry["alpha"],
            "mdp": entry["mdp"],
            "method": method,
            "betas": sorted(float(b) for b in settings["betas"]),
            "gamma": float(settings["gamma"]),
            "t_max": int(settings["t_max"]),
            "seed": int(settings["seed"]),
        }
        for entry in entries
        for method in methods
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_unit, units))
    else:
        outcomes = [_sweep_unit(u) for u in units]
    rows = sorted(
        (r for unit_rows, _ in outcomes for r in unit_rows),
        key=lambda row: (row["instance"], row["method"], row["beta"]),
    )
    timings = sorted(
        (t for _, t in outcomes), key=lambda t: (t["instance"], t["method"])
    )
    return rows, timings


def cmd_sweep(args) -> int:
    settings = _settings(args, DESK_SCALE)
    jobs = int(settings.get("jobs", args.jobs or 1))
    entries = _load_suite(Path(args.suite))
    rows, timings = _sweep_rows(entries, settings, METHODS, jobs)
    out = Path(args.out)
    _write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    _write_csv(
        out / "timings.csv",
        ["schema_version", "instance", "method", "wall_time"],
        timings,
    )
    failed = sum(1 for r in rows if r["error"])
    print(f"wrote {len(rows)} rows to {out / 'results.csv'} ({failed} cell errors)")
    return 0


# ------------------------------------------------------------------- solve


def _resolve_instance(args, settings: dict) -> tuple[str, Mdp]:
    if args.instance == "counterexample":
        gamma = args.gamma if args.gamma is not None else 0.9
        inst = build_counterexample(gamma)
        return "counterexample", inst.mdp
    entries = _load_suite(Path(args.suite))
    for entry in entries:
        if entry["name"] == args.instance:
            m = Mdp.from_json_dict(entry["mdp"])
            if args.gamma is not None:
                m = Mdp(transitions=m.transitions, rewards=m.rewards, gamma=args.gamma)
            return entry["name"], m
    names = ", ".join(e["name"] for e in entries)
    raise ConfigurationError(f"no instance named {args.instance!r}; have: {names}")


def cmd_solve(args) -> int:
    settings = _settings(args, DESK_SCALE)
    name, m = _resolve_instance(args, settings)
    cfg = SolveConfig(
        beta=args.beta, t_max=int(settings["t_max"]), horizon_cap=int(settings["t_max"])
    )
    policy, init, rounds = _solve_method(m, args.method, cfg)
    report = evaluate_joint_policy_exact(m, policy, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{name}-{args.method}-beta{args.beta:g}"
    with open(out / f"{stem}-policy.json", "w") as fh:
        json.dump(policy.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "instance": name,
        "method": args.method,
        "init": init,
        "beta": args.beta,
        "gamma": m.gamma,
        "t_max": cfg.t_max,
        "rounds": rounds,
        "discounted_return": report.discounted_return,
        "per_step_avg_reward": report.per_step_avg_reward,
        "update_frequency": report.update_frequency,
        "discounted_comm_cost": report.discounted_comm_cost,
        "net_objective": report.net_objective,
    }
    with open(out / f"{stem}-report.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"net objective {report.net_objective:.6f}; files under {out}")
    return 0


# ------------------------------------------------------------------ verify


def _verify_sweep(settings: dict, failures: list[str]) -> None:
    """Desk-scale sweep assertions: scheduled-baseline dominance, push round
    monotonicity and equilibrium, and the free-communication limit."""
    spec = _generator_spec(settings)
    instances = generate_suite(spec)
    cfg_kwargs = dict(t_max=int(settings["t_max"]), horizon_cap=int(settings["t_max"]))

    for inst in instances:
        m = inst.mdp
        full_obs = None
        betas = sorted(float(b) for b in settings["betas"])
        pull_grid = solve_pull_path(m, SolveConfig(**cfg_kwargs), betas)
        for beta, pull_res in zip(betas, pull_grid):
            cfg = SolveConfig(beta=float(beta), **cfg_kwargs)
            aoi_res = solve_aoi_periodic(m, cfg)
            if pull_res.objective < aoi_res.objective - 1e-9:
                failures.append(
                    f"{inst.name} beta={beta}: pull {pull_res.objective:.9f} "
                    f"below scheduled baseline {aoi_res.objective:.9f}"
                )
            for init in ("always", "never"):
                push_res = solve_push_api(m, cfg, init=init)
                objs = [r.objective for r in push_res.rounds]
                if any(b < a - 1e-9 for a, b in zip(objs, objs[1:])):
                    failures.append(
                        f"{inst.name} beta={beta} push-{init}: objective not "
                        f"weakly increasing across rounds: {objs}"
                    )
                if not push_res.converged or len(push_res.rounds) - 1 > 50:
                    failures.append(
                        f"{inst.name} beta={beta} push-{init}: no convergence "
                        f"within 50 rounds"
                    )
                ne = is_push_equilibrium(m, push_res.policy, cfg)
                if not ne.is_equilibrium:
                    failures.append(
                        f"{inst.name} beta={beta} push-{init}: converged pair "
                        f"is not a mutual best response"
                    )
                if beta == 0.0 and init == "always":
                    if full_obs is None:
                        full_obs = solve_full_observability(m, cfg)[0]
                    push_obj = push_res.objective
                    if abs(push_obj - float(np.mean(full_obs))) > 1e-8:
                        failures.append(
                            f"{inst.name}: free-communication push objective "
                            f"differs from full observability"
                        )
            if beta == 0.0:
                if full_obs is None:
                    full_obs = solve_full_observability(m, cfg)[0]
                if abs(pull_res.objective - float(np.mean(full_obs))) > 1e-8:
                    failures.append(
                        f"{inst.name}: free-communication pull objective "
                        f"differs from full observability"
                    )


def cmd_verify(args) -> int:
    settings = _settings(args, DESK_SCALE)
    gamma = args.gamma if args.gamma is not None else 0.9
    t_max_ce = args.tmax if args.tmax is not None else 250
    failures: list[str] = []

    verdict = verify_counterexample(gamma=gamma, t_max=t_max_ce)
    for line in verdict.lines():
        print(line)
    if not verdict.passed:
        failures.append("counterexample verification failed")

    print("desk-scale sweep checks ...")
    _verify_sweep(settings, failures)

    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "verify-report.json", "w") as fh:
            json.dump(
                {
                    "counterexample": verdict.to_json_dict(),
                    "sweep_failures": failures,
                    "passed": not failures,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
    if failures:
        for f in failures:
            print(f"FAIL {f}")
        return 1
    print("all checks passed")
    return 0


# ---------------------------------------------------------------- aoi-hist


def cmd_aoi_hist(args) -> int:
    settings = _settings(args, DESK_SCALE)
    name, m = _resolve_instance(args, settings)
    cfg = SolveConfig(
        beta=args.beta, t_max=int(settings["t_max"]), horizon_cap=int(settings["t_max"])
    )
    policy, _, _ = _solve_method(m, args.method, cfg)
    seed = int(settings["seed"])
    report = simulate(m, policy, cfg, seed=seed, episodes=1, steps=args.steps)
    rows = []
    for peak, prob in sorted(report.peak_aoi_pmf_overall.items()):
        rows.append(
            {
                "schema_version": SCHEMA_VERSION,
                "scope": "overall",
                "state": "",
                "peak": peak,
                "probability": prob,
            }
        )
    for state in sorted(report.peak_aoi_pmf_per_state):
        for peak, prob in sorted(report.peak_aoi_pmf_per_state[state].items()):
            rows.append(
                {
                    "schema_version": SCHEMA_VERSION,
                    "scope": "state",
                    "state": state,
                    "peak": peak,
                    "probability": prob,
                }
            )
    out = Path(args.out)
    _write_csv(
        out / "peak-aoi.csv",
        ["schema_version", "scope", "state", "peak", "probability"],
        rows,
    )
    print(f"wrote {len(rows)} PMF rows to {out / 'peak-aoi.csv'}")
    return 0


# -------------------------------------------------------------------- main


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON settings file (defaults < config < flags)")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--gamma", type=float, default=None)
    sub.add_argument("--tmax", type=int, default=None)
    sub.add_argument("--jobs", type=int, default=None)
    sub.add_argument(
        "--paper-scale",
        action="store_true",
        help="use the large preset: 30 states, 15 densities, 21 cost points",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccmdp",
        description="solvers and experiment harness for communication-limited MDPs",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", help="write a seeded instance suite")
    p.add_argument("--out", default="suite")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("sweep", help="solve every (instance, method, beta) cell")
    p.add_argument("--suite", default="suite")
    p.add_argument("--out", default="results")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("solve", help="solve one cell and dump policy + report")
    p.add_argument("instance", help="instance name from the manifest, or 'counterexample'")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--suite", default="suite")
    p.add_argument("--out", default="solve-out")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("verify", help="run the full verification suite")
    p.add_argument("--out", default=None, help="directory for verify-report.json")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("aoi-hist", help="simulate one cell, dump peak-age PMFs")
    p.add_argument("instance")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--suite", default="suite")
    p.add_argument("--out", default="hist-out")
    _add_common(p)
    p.set_defaults(func=cmd_aoi_hist)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
