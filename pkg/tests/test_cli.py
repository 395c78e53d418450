import csv
import json

import pytest

from jamtrack.cli import main


def run(argv):
    return main(argv)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_full_pipeline(road_dataset, tmp_path):
    network, speeds = road_dataset
    out = tmp_path / "run"

    assert run(["ingest", "--speeds", str(speeds), "--network", str(network), "--out", str(out)]) == 0
    assert (out / "tsi.csv").exists()
    ff = read_csv(out / "free_flow.csv")
    assert {r["segment_id"] for r in ff} >= {"a0", "b5", "conn"}
    for r in ff:
        assert float(r["free_flow_kmh"]) > 80.0

    assert run(["detect", "--network", str(network), "--out", str(out)]) == 0
    results = read_csv(out / "results.csv")
    assert len(results) == 24  # one row per hourly bin
    parts = read_csv(out / "partitions.csv")
    assert parts, "no partition rows"
    conn_bins = {r["timestamp"] for r in parts if r["segment_id"] == "conn"}
    assert len(conn_bins) == 2  # the connector only congests in the morning peak
    for r in parts:
        assert r["center_flag"] in ("0", "1")
        assert 1 <= int(r["level"]) <= 4
    weights = read_csv(out / "weights.csv")
    assert {r["variant"] for r in weights} == {"KDSF"}
    by_ts = {}
    for r in weights:
        by_ts.setdefault(r["timestamp"], 0.0)
        by_ts[r["timestamp"]] += float(r["weight"])
    assert all(abs(total - 1.0) < 1e-6 for total in by_ts.values())

    assert run(["track", "--out", str(out)]) == 0
    events = read_csv(out / "events.csv")
    assert events
    kinds = {r["event"] for r in events}
    assert "continue" in kinds
    assert (out / "transitions.csv").exists()
    for r in read_csv(out / "transitions.csv"):
        assert 0.0 <= float(r["probability"]) <= 1.0


def test_detect_is_deterministic(road_dataset, tmp_path):
    network, speeds = road_dataset

    def run_once(name):
        out = tmp_path / name
        assert run(["ingest", "--speeds", str(speeds), "--network", str(network), "--out", str(out)]) == 0
        assert run(["detect", "--network", str(network), "--out", str(out)]) == 0
        return out

    a, b = run_once("a"), run_once("b")
    for fname in ("tsi.csv", "partitions.csv", "weights.csv", "edges.csv"):
        assert (a / fname).read_bytes() == (b / fname).read_bytes()
    # results.csv matches apart from the timing column
    ra, rb = read_csv(a / "results.csv"), read_csv(b / "results.csv")
    for x, y in zip(ra, rb):
        x.pop("runtime_ms")
        y.pop("runtime_ms")
        assert x == y


def test_variant_flag_changes_weights(road_dataset, tmp_path):
    network, speeds = road_dataset
    out = tmp_path / "run"
    assert run(["ingest", "--speeds", str(speeds), "--network", str(network), "--out", str(out)]) == 0
    assert run(["detect", "--network", str(network), "--variant", "KDST", "--out", str(out)]) == 0
    weights = read_csv(out / "weights.csv")
    assert {r["variant"] for r in weights} == {"KDST"}
    assert {r["feature"] for r in weights} == {"K", "D", "S", "T"}


def test_config_file_with_flag_override(road_dataset, tmp_path):
    network, speeds = road_dataset
    out = tmp_path / "run"
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        f"speeds: {speeds}\nnetwork: {network}\nout: {out}\ninterval: 7200\n"
    )
    assert run(["ingest", "--config", str(cfg), "--interval", "3600"]) == 0
    header = (out / "tsi.csv").read_text().splitlines()[0]
    bins = [int(c) for c in header.split(",")[1:]]
    assert bins[1] - bins[0] == 3600  # the flag beats the config value


def test_outdir_env_var(road_dataset, tmp_path, monkeypatch):
    network, speeds = road_dataset
    out = tmp_path / "envout"
    monkeypatch.setenv("JAMTRACK_OUTDIR", str(out))
    assert run(["ingest", "--speeds", str(speeds), "--network", str(network)]) == 0
    assert (out / "tsi.csv").exists()


def test_detect_without_tsi_fails(tmp_path, road_dataset):
    network, _ = road_dataset
    assert run(["detect", "--network", str(network), "--out", str(tmp_path / "none")]) == 2


def test_track_without_partitions_fails(tmp_path):
    assert run(["track", "--out", str(tmp_path / "none")]) == 2


def test_track_unknown_method_fails(road_dataset, tmp_path):
    network, speeds = road_dataset
    out = tmp_path / "run"
    run(["ingest", "--speeds", str(speeds), "--network", str(network), "--out", str(out)])
    run(["detect", "--network", str(network), "--out", str(out)])
    assert run(["track", "--out", str(out), "--method", "bogus"]) == 2


def test_track_alternate_methods(road_dataset, tmp_path):
    network, speeds = road_dataset
    out = tmp_path / "run"
    run(["ingest", "--speeds", str(speeds), "--network", str(network), "--out", str(out)])
    run(["detect", "--network", str(network), "--out", str(out)])
    for method in ("maxratio", "icem", "overlap", "transition", "ged"):
        assert run(["track", "--out", str(out), "--method", method]) == 0


def test_ingest_bad_crs_fails(tmp_path, road_dataset):
    _, speeds = road_dataset
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"crs": {"units": "deg"}, "segments": []}))
    assert run(["ingest", "--speeds", str(speeds), "--network", str(bad), "--out", str(tmp_path)]) == 1


def test_bench_and_eval(tmp_path):
    out = tmp_path / "bench"
    assert (
        run(
            [
                "bench",
                "--scenario",
                "mergesplit",
                "--n",
                "300",
                "--snapshots",
                "2",
                "--avg-degree",
                "12",
                "--max-degree",
                "24",
                "--mu",
                "0.15",
                "--seed",
                "1",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    bundle = out / "mergesplit"
    report = read_csv(bundle / "report.csv")
    assert len(report) == 2
    for r in report:
        assert 0.0 <= float(r["nmi"]) <= 1.0
        assert 0.0 < float(r["coverage"]) <= 1.0

    # self-evaluation of the ground truth must be perfect
    code = run(
        [
            "eval",
            "--pred",
            str(bundle / "labels_0.csv"),
            "--truth",
            str(bundle / "labels_0.csv"),
            "--edges",
            str(bundle / "edges_0.csv"),
        ]
    )
    assert code == 0


def test_bench_unknown_scenario_fails(tmp_path):
    assert run(["bench", "--scenario", "nope", "--out", str(tmp_path)]) == 2


def test_eval_disjoint_nodes_fails(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("node,community\n1,0\n")
    b.write_text("node,community\n2,0\n")
    assert run(["eval", "--pred", str(a), "--truth", str(b)]) == 2
