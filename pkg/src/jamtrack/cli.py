"""Command-line pipeline: ingest, detect, track, bench and eval subcommands.

Every subcommand reads defaults from an optional YAML config file; explicit
flags win. All randomness flows from a single seed, so reruns with the same
config produce identical data files (timing columns aside). Diagnostics go to
stderr; data goes to files.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import bench as bench_mod
from . import pipeline
from .congestion import build_graph_sequence, write_edge_dump
from .errors import JamtrackError
from .features import DEFAULT_VARIANT, VARIANT_TAGS, canonical_variant
from .ingest import (
    RoadNetwork,
    aggregate_speeds,
    compute_tsi,
    free_flow_table,
    parse_speed_csv,
    read_free_flow_csv,
    read_tsi_csv,
    write_tsi_csv,
)
from .local_search import DetectConfig
from .metrics import (
    DEFAULT_THRESHOLDS,
    TRACKING_METHODS,
    modularity_from_arrays,
    nmi,
    propagation_probability,
    track_communities,
    write_events_csv,
    write_transition_csv,
)

log = logging.getLogger("jamtrack")

ENV_OUTDIR = "JAMTRACK_OUTDIR"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise JamtrackError("config file must be a mapping")
    return doc


def _setting(args, config: dict, name: str, default=None):
    """Flag value if given, else config-file value, else default."""
    val = getattr(args, name.replace("-", "_"), None)
    if val is not None:
        return val
    if name in config:
        return config[name]
    return default


def _outdir(args, config) -> Path:
    out = _setting(args, config, "out") or os.environ.get(ENV_OUTDIR) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_ingest(args) -> int:
    config = _load_config(args.config)
    speeds_path = _setting(args, config, "speeds")
    network_path = _setting(args, config, "network")
    if not speeds_path or not network_path:
        log.error("ingest needs --speeds and --network")
        return 2
    interval = int(_setting(args, config, "interval", 3600))
    out = _outdir(args, config)

    records = parse_speed_csv(speeds_path)
    RoadNetwork.from_json(network_path)  # validate geometry and CRS early
    overrides = None
    ff_path = _setting(args, config, "free_flow")
    if ff_path:
        overrides = read_free_flow_csv(ff_path)
    speeds = aggregate_speeds(records, interval)
    table = free_flow_table(records, overrides)
    tsi = compute_tsi(speeds, table)

    write_tsi_csv(tsi, out / "tsi.csv")
    with open(out / "free_flow.csv", "w", newline="") as fh:
        fh.write("segment_id,free_flow_kmh\n")
        for seg in sorted(table):
            fh.write(f"{seg},{table[seg]:.6f}\n")
    coverage = tsi.mask.mean() if tsi.mask.size else 0.0
    print(
        f"ingest: {len(tsi.segment_ids)} segments, {len(tsi.bin_starts)} bins, "
        f"coverage {coverage:.1%}",
        file=sys.stderr,
    )
    return 0


def cmd_detect(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    tsi_path = _setting(args, config, "tsi") or (out / "tsi.csv")
    network_path = _setting(args, config, "network")
    if not Path(tsi_path).exists():
        log.error("TSI artifact %s not found; run `jamtrack ingest` first", tsi_path)
        return 2
    if not network_path:
        log.error("detect needs --network")
        return 2
    variant = canonical_variant(_setting(args, config, "variant", DEFAULT_VARIANT))
    threshold = float(_setting(args, config, "threshold", 0.7))
    detect_cfg = DetectConfig(
        k_max=int(_setting(args, config, "k_max", 150)),
        level_count=int(_setting(args, config, "levels", 4)),
    )

    tsi = read_tsi_csv(tsi_path)
    network = RoadNetwork.from_json(network_path)
    seq = build_graph_sequence(tsi, network, threshold)
    results, adjacencies = pipeline.run_detection(seq, network, tsi, variant, detect_cfg)

    pipeline.write_results_csv(results, out / "results.csv")
    pipeline.write_partitions_csv(results, out / "partitions.csv")
    pipeline.write_weights_csv(adjacencies, out / "weights.csv")
    write_edge_dump(seq, out / "edges.csv")
    n_nonempty = sum(1 for r in results if r.best_partition is not None)
    print(f"detect[{variant}]: {len(results)} snapshots, {n_nonempty} nonempty", file=sys.stderr)
    return 0


def cmd_track(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    partitions_path = _setting(args, config, "partitions") or (out / "partitions.csv")
    if not Path(partitions_path).exists():
        log.error("partitions file %s not found; run `jamtrack detect` first", partitions_path)
        return 2
    method = _setting(args, config, "method", "jaccard")
    if method not in TRACKING_METHODS:
        log.error("unknown method %r; valid: %s", method, ", ".join(TRACKING_METHODS))
        return 2
    threshold = _setting(args, config, "threshold")
    if threshold is None:
        threshold = DEFAULT_THRESHOLDS[method]
    elif method == "icem":
        threshold = tuple(float(t) for t in str(threshold).split("/"))
    else:
        threshold = float(threshold)

    partitions, levels = pipeline.read_partitions_csv(partitions_path)
    if len(partitions) < 2:
        log.error("need >= 2 snapshots to track, got %d", len(partitions))
        return 2
    events = track_communities(partitions, method, threshold)
    write_events_csv(events, out / "events.csv")

    split = _setting(args, config, "split")
    split = int(split) if split is not None else len(levels) // 2
    if 0 < split < len(levels):
        src: dict[int, set] = {}
        dst: dict[int, set] = {}
        for centers in levels[:split]:
            for seg, lvl in centers.items():
                src.setdefault(lvl, set()).add(seg)
        for centers in levels[split:]:
            for seg, lvl in centers.items():
                dst.setdefault(lvl, set()).add(seg)
        all_bottlenecks = set().union(*src.values(), *dst.values()) if (src or dst) else set()
        if all_bottlenecks and src and dst:
            tm = propagation_probability(src, dst, len(all_bottlenecks))
            write_transition_csv(tm, out / "transitions.csv")
    print(f"track[{method}]: {len(events)} events", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    out = _outdir(args, config)
    scenario = _setting(args, config, "scenario", "all")
    scenarios = list(bench_mod.SCENARIOS) if scenario == "all" else [scenario]
    for s in scenarios:
        if s not in bench_mod.SCENARIOS:
            log.error("unknown scenario %r; valid: %s", s, ", ".join(bench_mod.SCENARIOS))
            return 2
    detect_cfg = DetectConfig(k_max=int(_setting(args, config, "k_max", 150)))
    for s in scenarios:
        cfg = bench_mod.BenchmarkConfig(
            scenario=s,
            n=int(_setting(args, config, "n", 2000)),
            snapshots=int(_setting(args, config, "snapshots", 5)),
            avg_degree=float(_setting(args, config, "avg_degree", 20.0)),
            max_degree=int(_setting(args, config, "max_degree", 40)),
            mu=float(_setting(args, config, "mu", 0.2)),
            intensity=float(_setting(args, config, "intensity", 0.3)),
            seed=int(_setting(args, config, "seed", 0)),
        )
        benchmark = bench_mod.generate(cfg)
        bundle_dir = out / s
        bench_mod.write_bundle(benchmark, bundle_dir)
        rows = pipeline.evaluate_benchmark(benchmark, detect_cfg)
        pipeline.write_report_csv(rows, bundle_dir / "report.csv")
        mean_nmi = float(np.mean([r["nmi"] for r in rows]))
        print(f"bench[{s}]: mean NMI {mean_nmi:.4f} over {len(rows)} snapshots", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    def read_labels(path):
        labels = {}
        with open(path) as fh:
            header = next(fh)
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) >= 2:
                    labels[parts[0]] = parts[1]
        return labels

    pred = read_labels(args.pred)
    truth = read_labels(args.truth)
    shared = set(pred) & set(truth)
    if not shared:
        log.error("prediction and truth share no nodes")
        return 2
    keys = sorted(shared)
    score = nmi([pred[k] for k in keys], [truth[k] for k in keys])
    print(f"nmi,{score:.6f}")
    if args.edges:
        index = {k: i for i, k in enumerate(keys)}
        eu, ev = [], []
        with open(args.edges) as fh:
            next(fh)
            for line in fh:
                u, v = line.strip().split(",")[:2]
                if u in index and v in index:
                    eu.append(index[u])
                    ev.append(index[v])
        labels = np.asarray([pred[k] for k in keys], dtype=object)
        q = modularity_from_arrays(eu, ev, np.ones(len(eu)), labels)
        print(f"modularity,{'' if q is None else f'{q:.6f}'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamtrack",
        description="Multi-scale congestion bottleneck detection and propagation tracking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file (flags override)")
        p.add_argument("--out", help=f"output directory (or ${ENV_OUTDIR})")

    p = sub.add_parser("ingest", help="aggregate speeds and compute the TSI matrix")
    common(p)
    p.add_argument("--speeds", help="speed CSV: timestamp,segment_id,speed_kmh")
    p.add_argument("--network", help="road network JSON")
    p.add_argument("--interval", type=int, help="bin width in seconds (default 3600)")
    p.add_argument("--free-flow", dest="free_flow", help="free-flow override CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("detect", help="detect congestion communities per snapshot")
    common(p)
    p.add_argument("--tsi", help="TSI matrix CSV (default <out>/tsi.csv)")
    p.add_argument("--network", help="road network JSON")
    p.add_argument("--variant", help=f"feature variant tag, one of {', '.join(VARIANT_TAGS)}")
    p.add_argument("--threshold", type=float, help="congestion TSI threshold (default 0.7)")
    p.add_argument("--k-max", dest="k_max", type=int, help="sweep upper bound (default 150)")
    p.add_argument("--levels", type=int, help="bottleneck level count (default 4)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("track", help="match communities across snapshots")
    common(p)
    p.add_argument("--partitions", help="partitions CSV from detect")
    p.add_argument("--method", help=f"one of {', '.join(TRACKING_METHODS)}")
    p.add_argument("--threshold", help="matching threshold (icem: k1/k2)")
    p.add_argument("--split", type=int, help="snapshot index splitting the two periods")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("bench", help="generate synthetic benchmarks and evaluate")
    common(p)
    p.add_argument("--scenario", help="birthdeath|expandcontract|hide|mergesplit|all")
    p.add_argument("--n", type=int, help="initial node count (default 2000)")
    p.add_argument("--snapshots", type=int, help="snapshot count (default 5)")
    p.add_argument("--avg-degree", dest="avg_degree", type=float)
    p.add_argument("--max-degree", dest="max_degree", type=int)
    p.add_argument("--mu", type=float, help="mixing fraction (default 0.2)")
    p.add_argument("--intensity", type=float, help="event intensity (default 0.3)")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="NMI (and modularity) between two label files")
    p.add_argument("--pred", required=True, help="CSV: node,community")
    p.add_argument("--truth", required=True, help="CSV: node,community")
    p.add_argument("--edges", help="optional edge CSV for modularity")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except JamtrackError as exc:
        log.error("%s", exc)
        return 1
    except ValueError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
