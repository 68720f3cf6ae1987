"""Experiment runner CLI.

Subcommands
    run         execute the configured algorithm for every (eps, seed) pair;
                one trace CSV + outcome JSON per pair, plus a summary CSV
    sweep       run + scaling summary (eps, sigma) and a log-log figure
    complexity  emit the complexity report JSON (packing sum, bound
                predictions, integral form)
    validate    partition / Lipschitz / certificate / envelope audits

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import os
import sys

import numpy as np

from . import complexity as cx
from .config import ConfigError, ExperimentConfig, load_config
from .costs import SamplingCost
from .environments import perturbed_objective
from .geometry import verify_assumptions
from .objectives import check_lipschitz
from .search import certificate_validity_check, run_search, write_trace_csv
from .stochastic import run_stochastic

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _fmt_eps(eps: float) -> str:
    return f"{eps:g}"


def _run_one(cfg: ExperimentConfig, eps: float, seed: int, out_dir: str) -> dict:
    """Execute one (eps, seed) pair and write its trace + outcome files."""
    tag = f"eps{_fmt_eps(eps)}_seed{seed}"
    dim = cfg.partition.domain.dim
    if cfg.algorithm == "cmfstooo":
        sto, rows = run_stochastic(
            cfg.partition,
            cfg.objective,
            cfg.L,
            gamma=cfg.gamma,
            variance=cfg.variance,
            eps=eps,
            seed=seed,
            budget=cfg.budget,
            max_depth=cfg.max_depth,
            dist=cfg.noise_dist,
        )
        outcome = sto.outcome
        extra_cols = ("m_t", "cum_samples")
        cum = np.cumsum(sto.batch_sizes)
        extra_vals = [(m, int(c)) for m, c in zip(sto.batch_sizes, cum)]
        outcome_dict = sto.to_dict()
    else:
        env = cfg.make_environment()
        outcome, rows = run_search(
            cfg.partition,
            env,
            cfg.L,
            cost=cfg.cost,
            eps=eps,
            budget=cfg.budget,
            max_depth=cfg.max_depth,
        )
        extra_cols = ()
        extra_vals = None
        outcome_dict = outcome.to_dict()
    outcome_dict["eps"] = eps
    outcome_dict["seed"] = seed
    outcome_dict["config_hash"] = cfg.hash
    trace_path = os.path.join(out_dir, f"trace_{tag}.csv")
    write_trace_csv(trace_path, rows, dim, extra_columns=extra_cols, extra_values=extra_vals)
    with open(os.path.join(out_dir, f"outcome_{tag}.json"), "w") as fh:
        json.dump(outcome_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outcome_dict["_trace_path"] = trace_path
    outcome_dict["_rows"] = rows
    return outcome_dict


def _worker(args):
    cfg_raw, eps, seed, out_dir = args
    from .config import parse_config

    cfg = parse_config(cfg_raw)
    rec = _run_one(cfg, eps, seed, out_dir)
    rec.pop("_rows", None)
    return rec


def _execute_runs(cfg: ExperimentConfig, out_dir: str, parallel: int) -> list[dict]:
    pairs = [(eps, seed) for eps in cfg.eps_list for seed in cfg.seeds]
    if parallel > 1 and len(pairs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(_worker, [(cfg.raw, e, s, out_dir) for e, s in pairs]))
    else:
        records = []
        for eps, seed in pairs:
            rec = _run_one(cfg, eps, seed, out_dir)
            records.append(rec)
    return records


def _write_summary(records: list[dict], path: str) -> None:
    cols = ["eps", "seed", "sigma", "tau", "stop_reason", "n_evals", "final_xi", "config_hash"]
    if any("total_samples" in r for r in records):
        cols.insert(6, "total_samples")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for rec in records:
            writer.writerow([rec.get(c, "") if rec.get(c) is not None else "" for c in cols])


def cmd_run(cfg: ExperimentConfig, out_dir: str, parallel: int, figures: bool) -> int:
    records = _execute_runs(cfg, out_dir, parallel)
    _write_summary(records, os.path.join(out_dir, "summary.csv"))
    if figures:
        from .figures import render_certificate_figure

        traces = {
            f"eps={_fmt_eps(r['eps'])},seed={r['seed']}": r["_rows"]
            for r in records
            if "_rows" in r
        }
        if traces:
            render_certificate_figure(traces, os.path.join(out_dir, "run_certificates.png"))
    not_certified = [r for r in records if r["stop_reason"] != "certified"]
    for rec in not_certified:
        print(
            f"run eps={_fmt_eps(rec['eps'])} seed={rec['seed']} stopped: {rec['stop_reason']}",
            file=sys.stderr,
        )
    print(f"{len(records) - len(not_certified)}/{len(records)} runs certified -> {out_dir}")
    return EXIT_OK if not not_certified else EXIT_BUDGET


def cmd_sweep(cfg: ExperimentConfig, out_dir: str, parallel: int, figures: bool) -> int:
    records = _execute_runs(cfg, out_dir, parallel)
    _write_summary(records, os.path.join(out_dir, "summary.csv"))
    sweep_path = os.path.join(out_dir, "sweep.csv")
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "sigma", "seed", "config_hash"])
        for rec in sorted(records, key=lambda r: (-r["eps"], r["seed"])):
            writer.writerow(
                [rec["eps"], rec["sigma"] if rec["sigma"] is not None else "", rec["seed"], rec["config_hash"]]
            )
    certified = [r for r in records if r["sigma"] is not None]
    if len({r["eps"] for r in certified}) >= 2:
        eps = np.array([r["eps"] for r in certified])
        sig = np.array([r["sigma"] for r in certified])
        slope = float(np.polyfit(np.log2(1.0 / eps), np.log2(sig), 1)[0])
        print(f"log2(sigma) vs log2(1/eps) slope: {slope:.3f}")
    if figures:
        from .figures import render_sweep_figure

        render_sweep_figure(records, os.path.join(out_dir, "sweep_sigma_vs_eps.png"))
    print(f"sweep of {len(records)} runs -> {out_dir}")
    return EXIT_OK if all(r["stop_reason"] == "certified" for r in records) else EXIT_BUDGET


def cmd_complexity(cfg: ExperimentConfig, out_dir: str, figures: bool) -> int:
    eps = cfg.eps_list[0]
    part = cfg.partition
    d = part.domain.dim
    cost = cfg.cost
    if cfg.algorithm == "cmfstooo":
        cost = SamplingCost(
            variance=cfg.variance,
            gamma=cfg.gamma,
            arity=part.arity,
            L=cfg.L,
            R=part.R,
            delta=part.delta,
        )
    beta = part.delta / 3.0
    S, profile = cx.packing_cost_sum(
        cfg.objective, cfg.L, eps, beta=beta, cost=cost, grid_step=cfg.grid_resolution
    )
    report = profile.to_dict()
    report["upper_pred"] = cx.upper_bound_prediction(
        profile, cost, part.arity, part.nu, part.R, part.delta, cfg.L, d
    )
    report["lower_pred"] = cx.lower_bound_prediction(
        cfg.objective, cfg.L, eps, cost, cfg.grid_resolution
    )
    report["integral"] = cx.integral_approximation(
        cfg.objective, cfg.L, eps, cost, b=beta, grid_step=cfg.grid_resolution
    )
    report["eps"] = eps
    report["config_hash"] = cfg.hash
    path = os.path.join(out_dir, "complexity_report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if figures:
        from .figures import render_complexity_figure

        render_complexity_figure(report, os.path.join(out_dir, "complexity_terms.png"))
    print(f"S = {S:.6g}, upper_pred = {report['upper_pred']:.6g} -> {path}")
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, out_dir: str) -> int:
    checks: list[tuple[str, bool, str]] = []

    report = verify_assumptions(cfg.partition, max_depth=3)
    checks.append(
        (
            "partition-assumptions",
            report.ok,
            report.violation or f"R_obs={report.R_observed:.4g}, nu_obs={report.nu_observed:.4g}",
        )
    )

    lip = check_lipschitz(cfg.objective, n_pairs=2000, seed=0)
    checks.append(("lipschitz-declared", lip.ok, f"max_ratio={lip.max_ratio:.6g} vs L={cfg.L}"))

    informational: list[str] = []
    if report.ok and lip.ok:
        eps = cfg.eps_list[0]
        env = cfg.make_environment()
        outcome, rows = run_search(
            cfg.partition, env, cfg.L, cost=cfg.cost, eps=eps,
            budget=cfg.budget, max_depth=cfg.max_depth,
        )
        target = cfg.objective
        tol = 1e-9
        if cfg.environment_kind == "bump":
            target = perturbed_objective(cfg.objective, env.bump)
            tol = cfg.L * cfg.objective.domain.diameter / 400.0  # estimated max
        bad = certificate_validity_check(rows, target, tol=tol)
        checks.append(
            ("certificate-validity", not bad, f"{len(bad)} violations over {len(rows)} rows")
        )

        audit = env.audit()
        if cfg.environment_kind == "bump":
            informational.append(
                f"bounded-error audit: {len(audit)} adversarial responses vs the base "
                f"objective (expected for the hidden-function construction)"
            )
            checks.append(("bounded-error-audit", True, "informational for bump environments"))
        else:
            checks.append(
                ("bounded-error-audit", not audit, f"{len(audit)} contract violations")
            )

        dom_bad = cx.dominance_violations(
            rows, cfg.partition.domain, cfg.L, cfg.grid_resolution
        )
        checks.append(
            ("certificate-dominates-oracle", not dom_bad, f"{len(dom_bad)} rows undercut the oracle")
        )

    all_ok = all(ok for _, ok, _ in checks)
    lines = []
    for name, ok, detail in checks:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        lines.append(line)
        print(line)
    for note in informational:
        print(f"[INFO] {note}")
        lines.append(f"[INFO] {note}")
    with open(os.path.join(out_dir, "validate_report.json"), "w") as fh:
        json.dump(
            {
                "config_hash": cfg.hash,
                "checks": [
                    {"name": n, "ok": ok, "detail": detail} for n, ok, detail in checks
                ],
                "informational": informational,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    if not all_ok:
        first = next(name for name, ok, _ in checks if not ok)
        print(f"validation failed: {first}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        a, b = spec.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in spec.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certopt",
        description="Certified multi-fidelity optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "complexity", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the YAML experiment config")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir or ./out)")
        p.add_argument("--seeds", default=None, help="seed range a..b or comma list, overrides config")
        p.add_argument("--parallel", type=int, default=1, help="number of parallel run workers")
        p.add_argument("--grid-resolution", type=float, default=None, help="grid step override")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seeds is not None:
            cfg.seeds = _parse_seeds(args.seeds)
        if args.grid_resolution is not None:
            cfg.grid_resolution = args.grid_resolution
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or cfg.out_dir or "out"
    os.makedirs(out_dir, exist_ok=True)
    figures = not args.no_figures
    if args.command == "run":
        return cmd_run(cfg, out_dir, args.parallel, figures)
    if args.command == "sweep":
        return cmd_sweep(cfg, out_dir, args.parallel, figures)
    if args.command == "complexity":
        return cmd_complexity(cfg, out_dir, figures)
    if args.command == "validate":
        return cmd_validate(cfg, out_dir)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
