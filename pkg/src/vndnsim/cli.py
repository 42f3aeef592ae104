"""Command line front end: single runs, the full instance matrix, compare.

Exit codes: 0 success, 2 configuration problem, 3 run or results failure.
Results land in <out>/<config-hash>/ so runs from different configurations
can never end up mixed in one directory.  The matrix writes per-run CSVs,
a flat runs.csv, summary.csv, and every pairwise comparison; all output is
deterministic for a given config and base seed, whatever --jobs says.
"""

import argparse
import csv
import json
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import __version__, stats
from .config import ConfigError, config_hash, default_config, load_config
from .ndn import MODE_LABELS
from .simkit import run_scenario

ENV_RESULTS_DIR = "NDNSIM_RESULTS_DIR"
DEFAULT_RESULTS_BASE = "results"
SCENARIOS = (1, 2)


def _instances(deployment=None, scenario=None):
    """(label, deployment, scenario, index) in the canonical grid order."""
    grid = []
    index = 0
    for dep in MODE_LABELS:
        for sc in SCENARIOS:
            if (deployment is None or dep == deployment) and \
                    (scenario is None or sc == scenario):
                grid.append(("%s-%d" % (dep, sc), dep, sc, index))
            index += 1
    return grid


def _load_config(args):
    cfg = load_config(args.config) if args.config else default_config()
    if getattr(args, "deployment", None):
        cfg.mode.deployment = args.deployment
    if getattr(args, "scenario", None):
        cfg.apps.scenario = args.scenario
    if getattr(args, "seed", None) is not None:
        cfg.run.seed = args.seed
    cfg.validate()
    return cfg


def _results_dir(args, cfg):
    base = args.out or os.environ.get(ENV_RESULTS_DIR) or DEFAULT_RESULTS_BASE
    path = os.path.join(base, config_hash(cfg))
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(path, cfg, extra):
    payload = {
        "config_hash": config_hash(cfg),
        "package_version": __version__,
        "python_version": platform.python_version(),
    }
    payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# run

def cmd_run(args):
    cfg = _load_config(args)
    out_dir = _results_dir(args, cfg)
    metrics = run_scenario(cfg)
    stem = "run-%s-seed%d" % (metrics.instance, cfg.run.seed)
    csv_path = os.path.join(out_dir, stem + ".csv")
    stats.write_run_csv(metrics, csv_path)
    _write_manifest(os.path.join(out_dir, stem + ".json"), cfg, {
        "command": "run",
        "deployment": cfg.mode.deployment,
        "scenario": cfg.apps.scenario,
        "seed": cfg.run.seed,
        "seed_overridden": args.seed is not None,
        "interests_sent": metrics.interests_sent,
        "data_received": metrics.data_received,
        "satisfaction_ratio": metrics.satisfaction_ratio,
        "metrics_csv": os.path.basename(csv_path),
    })
    print("%s seed=%d interests=%d data=%d satisfaction=%.4f -> %s"
          % (metrics.instance, cfg.run.seed, metrics.interests_sent,
             metrics.data_received, metrics.satisfaction_ratio, csv_path))
    return 0


# ---------------------------------------------------------------------------
# matrix

def _matrix_task(cfg, deployment, scenario, seed):
    run_cfg = replace(cfg,
                      mode=replace(cfg.mode, deployment=deployment),
                      apps=replace(cfg.apps, scenario=scenario),
                      run=replace(cfg.run, seed=seed))
    return run_scenario(run_cfg)


def _matrix_worker(payload):
    return _matrix_task(*payload)


def run_matrix(cfg, seeds=31, jobs=1, deployment=None, scenario=None,
               progress=None):
    """Execute the instance grid; returns RunMetrics in deterministic order.

    Seeds are cfg.run.seed + instance_index*1000 + run_index so every
    instance draws from a disjoint, reproducible block.  A failing run
    raises RuntimeError naming the instance and seed.
    """
    base_seed = cfg.run.seed
    grid = _instances(deployment, scenario)
    tasks = []
    for label, dep, sc, index in grid:
        for run_index in range(seeds):
            seed = base_seed + index * 1000 + run_index
            tasks.append((label, dep, sc, seed))

    results = []
    done = 0
    if jobs <= 1:
        for label, dep, sc, seed in tasks:
            try:
                metrics = _matrix_task(cfg, dep, sc, seed)
            except Exception as exc:
                raise RuntimeError("run failed: %s seed %d: %s"
                                   % (label, seed, exc)) from exc
            results.append(metrics)
            done += 1
            if progress:
                progress(label, seed, done, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            payloads = [(cfg, dep, sc, seed) for _, dep, sc, seed in tasks]
            futures = [pool.submit(_matrix_worker, p) for p in payloads]
            for (label, _, _, seed), future in zip(tasks, futures):
                try:
                    metrics = future.result()
                except Exception as exc:
                    raise RuntimeError("run failed: %s seed %d: %s"
                                       % (label, seed, exc)) from exc
                results.append(metrics)
                done += 1
                if progress:
                    progress(label, seed, done, len(tasks))
    return results


def write_matrix_outputs(results, out_dir):
    """Per-run CSVs, runs.csv, summary.csv and all pairwise comparisons."""
    for metrics in results:
        stem = "run-%s-seed%d.csv" % (metrics.instance, metrics.seed)
        stats.write_run_csv(metrics, os.path.join(out_dir, stem))
    stats.write_runs_index(results, os.path.join(out_dir, "runs.csv"))
    summaries = stats.summarize(results)
    stats.write_summary_csv(summaries, os.path.join(out_dir, "summary.csv"))

    by_instance = {}
    for metrics in results:
        by_instance.setdefault(metrics.instance, []).append(metrics)
    labels = [label for label, _, _, _ in _instances()
              if label in by_instance]
    comparisons = []
    for i, label_a in enumerate(labels):
        for label_b in labels[i + 1:]:
            values_a = [m.data_received
                        for m in sorted(by_instance[label_a],
                                        key=lambda m: m.seed)]
            values_b = [m.data_received
                        for m in sorted(by_instance[label_b],
                                        key=lambda m: m.seed)]
            comparisons.append(stats.compare_samples(
                label_a, label_b, values_a, values_b))
    stats.write_comparisons_csv(comparisons,
                                os.path.join(out_dir, "comparisons.csv"))
    return summaries, comparisons


def cmd_matrix(args):
    if args.seeds < 1:
        print("config error: --seeds must be at least 1", file=sys.stderr)
        return 2
    cfg = _load_config(args)
    out_dir = _results_dir(args, cfg)

    def progress(label, seed, done, total):
        print("[%d/%d] %s seed=%d" % (done, total, label, seed),
              file=sys.stderr, flush=True)

    try:
        results = run_matrix(cfg, seeds=args.seeds, jobs=args.jobs,
                             deployment=args.deployment,
                             scenario=args.scenario, progress=progress)
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    summaries, _ = write_matrix_outputs(results, out_dir)
    _write_manifest(os.path.join(out_dir, "manifest.json"), cfg, {
        "command": "matrix",
        "base_seed": cfg.run.seed,
        "seeds_per_instance": args.seeds,
        "runs": len(results),
    })
    for row in summaries:
        print("%-12s runs=%2d satisfaction mean=%.4f min=%.4f max=%.4f"
              % (row.instance, row.runs, row.satisfaction_mean,
                 row.satisfaction_min, row.satisfaction_max))
    print("results: %s" % out_dir)
    return 0


# ---------------------------------------------------------------------------
# compare

def cmd_compare(args):
    runs_path = os.path.join(args.results_dir, "runs.csv")
    if not os.path.exists(runs_path):
        print("no runs.csv under %s (run the matrix first)" % args.results_dir,
              file=sys.stderr)
        return 3
    rows = stats.read_runs_index(runs_path)
    samples = {}
    for row in rows:
        samples.setdefault(row["instance"], []).append(row)
    values = {}
    for label in (args.instance_a.lower(), args.instance_b.lower()):
        if label not in samples:
            print("instance %s not found in %s" % (label, runs_path),
                  file=sys.stderr)
            return 3
        ordered = sorted(samples[label], key=lambda r: r["seed"])
        values[label] = [r["data_received"] for r in ordered]
    label_a, label_b = args.instance_a.lower(), args.instance_b.lower()
    if len(values[label_a]) != len(values[label_b]):
        print("instances have different run counts: %s has %d, %s has %d"
              % (label_a, len(values[label_a]),
                 label_b, len(values[label_b])), file=sys.stderr)
        return 3
    result = stats.compare_samples(label_a, label_b,
                                   values[label_a], values[label_b])
    print("%s vs %s on data_received: n=%d/%d U=%.1f p=%.6g A12=%.4f"
          % (result.instance_a, result.instance_b, result.n1, result.n2,
             result.u_statistic, result.p_value, result.a12))
    comparisons_path = os.path.join(args.results_dir, "comparisons.csv")
    new_file = not os.path.exists(comparisons_path)
    with open(comparisons_path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(stats.COMPARISON_COLUMNS)
        writer.writerow([getattr(result, col)
                         for col in stats.COMPARISON_COLUMNS])
    return 0


# ---------------------------------------------------------------------------

def _add_common(parser, with_seed=True):
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--deployment", choices=MODE_LABELS,
                        help="forwarding deployment mode")
    parser.add_argument("--scenario", type=int, choices=SCENARIOS,
                        help="consumer mix: 1 all distinct, 2 half shared")
    if with_seed:
        parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--out",
                        help="results base directory (default $%s or ./%s)"
                        % (ENV_RESULTS_DIR, DEFAULT_RESULTS_BASE))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vndnsim",
        description="Vehicular named-data forwarding simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a single simulation run")
    _add_common(run_p)
    run_p.set_defaults(func=cmd_run)

    matrix_p = sub.add_parser(
        "matrix", help="run the deployment/scenario grid across seeds")
    _add_common(matrix_p)
    matrix_p.add_argument("--seeds", type=int, default=31,
                          help="runs per instance (default 31)")
    matrix_p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                          help="parallel worker processes")
    matrix_p.set_defaults(func=cmd_matrix)

    compare_p = sub.add_parser(
        "compare", help="Mann-Whitney U and A12 between two instances")
    compare_p.add_argument("results_dir",
                           help="directory holding runs.csv")
    compare_p.add_argument("instance_a", help="e.g. proposal-1")
    compare_p.add_argument("instance_b", help="e.g. standard-1")
    compare_p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
