"""Speed-record ingestion: aggregation, free-flow estimation and the traffic state index.

The traffic state index (TSI) of a segment at a time bin is the relative
speed deficit (v_free - v_mean) / v_free, clamped to [0, 1]. Cells without
observations stay masked; they are never zero-filled.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DegenerateFreeFlowError, EmptyInputError, FormatError

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400


@dataclass
class SpeedMatrix:
    """Mean observed speed (km/h) per (segment, uniform time bin)."""

    segment_ids: list[str]
    bin_starts: np.ndarray  # epoch seconds, uniform width `interval`
    interval: int           # seconds
    values: np.ndarray      # (n_segments, n_bins)
    mask: np.ndarray        # True where a value is present

    @property
    def n_bins(self) -> int:
        return len(self.bin_starts)


@dataclass
class TsiMatrix:
    """Traffic state index per (segment, bin); values in [0, 1] where present."""

    segment_ids: list[str]
    bin_starts: np.ndarray
    interval: int
    values: np.ndarray
    mask: np.ndarray

    def bins_per_day(self) -> int:
        if SECONDS_PER_DAY % self.interval:
            raise FormatError(f"interval {self.interval}s does not divide one day")
        return SECONDS_PER_DAY // self.interval

    def day_series(self, seg_index: int, bin_index: int) -> np.ndarray:
        """Full-day TSI series for the day containing `bin_index`, missing cells zero-filled."""
        per_day = self.bins_per_day()
        day_start = self.bin_starts[bin_index] // SECONDS_PER_DAY * SECONDS_PER_DAY
        series = np.zeros(per_day)
        offsets = (self.bin_starts - day_start) // self.interval
        in_day = (offsets >= 0) & (offsets < per_day)
        cols = np.where(in_day & self.mask[seg_index])[0]
        series[offsets[cols]] = self.values[seg_index, cols]
        return series


@dataclass
class RoadNetwork:
    """Road segments with polyline geometry; adjacency = shared endpoint junction."""

    polylines: dict[str, np.ndarray]          # id -> (k, 2) projected meters
    junctions: dict[str, tuple[str, str]]     # id -> endpoint junction ids
    adjacency: dict[str, set[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.adjacency:
            by_junction: dict[str, set[str]] = {}
            for seg, (j1, j2) in self.junctions.items():
                by_junction.setdefault(j1, set()).add(seg)
                by_junction.setdefault(j2, set()).add(seg)
            adj: dict[str, set[str]] = {seg: set() for seg in self.junctions}
            for segs in by_junction.values():
                for s in segs:
                    adj[s] |= segs - {s}
            self.adjacency = adj

    def centroid(self, seg: str) -> np.ndarray:
        return self.polylines[seg].mean(axis=0)

    @classmethod
    def from_json(cls, path) -> "RoadNetwork":
        with open(path) as fh:
            doc = json.load(fh)
        crs = doc.get("crs")
        if not isinstance(crs, dict) or crs.get("units") != "m":
            raise FormatError(
                "network file must declare a projected-meter CRS: "
                '"crs": {"units": "m", ...}'
            )
        polylines: dict[str, np.ndarray] = {}
        junctions: dict[str, tuple[str, str]] = {}
        for seg in doc["segments"]:
            sid = str(seg["id"])
            pts = np.asarray(seg["polyline"], dtype=float)
            if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
                raise FormatError(f"segment {sid}: polyline needs >= 2 2-D points")
            if len(seg["junctions"]) != 2:
                raise FormatError(f"segment {sid}: exactly 2 endpoint junctions required")
            polylines[sid] = pts
            junctions[sid] = (str(seg["junctions"][0]), str(seg["junctions"][1]))
        return cls(polylines=polylines, junctions=junctions)


def parse_speed_csv(path, max_malformed_frac: float = 0.10) -> pd.DataFrame:
    """Read `timestamp,segment_id,speed_kmh` rows into a clean DataFrame.

    Timestamps may be ISO-8601 or epoch seconds; malformed rows are counted,
    logged and skipped. Fails if more than `max_malformed_frac` of rows are bad.
    """
    raw = pd.read_csv(path, dtype={"segment_id": str})
    expected = {"timestamp", "segment_id", "speed_kmh"}
    if not expected.issubset(raw.columns):
        raise FormatError(f"speed CSV needs columns {sorted(expected)}, got {list(raw.columns)}")
    n_total = len(raw)
    if n_total == 0:
        raise EmptyInputError("no records in speed CSV")

    epoch = pd.to_numeric(raw["timestamp"], errors="coerce")
    need_iso = epoch.isna()
    if need_iso.any():
        iso = pd.to_datetime(
            raw.loc[need_iso, "timestamp"], errors="coerce", utc=True, format="ISO8601"
        )
        secs = iso.astype("int64") // 10**9
        epoch.loc[need_iso] = secs.where(iso.notna(), np.nan).astype(float)

    speed = pd.to_numeric(raw["speed_kmh"], errors="coerce")
    seg = raw["segment_id"].astype(str)
    ok = epoch.notna() & speed.notna() & (speed >= 0) & (seg.str.len() > 0)
    n_bad = int((~ok).sum())
    if n_bad:
        log.warning("skipped %d/%d malformed speed rows", n_bad, n_total)
    if n_bad > max_malformed_frac * n_total:
        raise FormatError(f"{n_bad}/{n_total} malformed rows exceeds {max_malformed_frac:.0%} limit")
    out = pd.DataFrame(
        {"timestamp": epoch[ok].astype(np.int64), "segment_id": seg[ok], "speed_kmh": speed[ok]}
    )
    if out.empty:
        raise EmptyInputError("no parseable records in speed CSV")
    return out.reset_index(drop=True)


def aggregate_speeds(records: pd.DataFrame, interval: int) -> SpeedMatrix:
    """Bin records into uniform intervals; each cell is the arithmetic mean speed."""
    if interval <= 0:
        raise ValueError("interval must be positive")
    if len(records) == 0:
        raise EmptyInputError("no records to aggregate")
    df = records.copy()
    df["bin"] = (df["timestamp"] // interval) * interval
    first, last = int(df["bin"].min()), int(df["bin"].max())
    bin_starts = np.arange(first, last + interval, interval, dtype=np.int64)
    segment_ids = sorted(df["segment_id"].unique())
    seg_index = {s: i for i, s in enumerate(segment_ids)}
    bin_index = {int(b): j for j, b in enumerate(bin_starts)}

    grouped = df.groupby(["segment_id", "bin"], sort=True)["speed_kmh"].mean()
    values = np.zeros((len(segment_ids), len(bin_starts)))
    mask = np.zeros_like(values, dtype=bool)
    for (s, b), v in grouped.items():
        i, j = seg_index[s], bin_index[int(b)]
        values[i, j] = v
        mask[i, j] = True
    return SpeedMatrix(segment_ids, bin_starts, int(interval), values, mask)


def estimate_free_flow(speeds) -> float:
    """Nearest-rank 15th percentile of speeds sorted in descending order."""
    arr = np.asarray(list(speeds), dtype=float)
    if arr.size == 0:
        raise EmptyInputError("no speeds to estimate free flow from")
    if np.any(arr < 0):
        raise ValueError("speeds must be nonnegative")
    rank = math.ceil(0.15 * arr.size)  # 1-based nearest rank
    value = float(np.sort(arr)[::-1][rank - 1])
    if value <= 0:
        raise DegenerateFreeFlowError("free-flow estimate is not positive")
    return value


def free_flow_table(records: pd.DataFrame, overrides: dict[str, float] | None = None) -> dict[str, float]:
    """Per-segment free-flow speeds from raw record speeds; overrides win.

    Segments whose estimate degenerates (all-zero speeds) are excluded with a
    diagnostic; downstream stages drop them.
    """
    table: dict[str, float] = {}
    for seg, group in records.groupby("segment_id", sort=True):
        try:
            table[str(seg)] = estimate_free_flow(group["speed_kmh"].to_numpy())
        except DegenerateFreeFlowError:
            log.warning("segment %s: degenerate free-flow estimate, excluded", seg)
    if overrides:
        for seg, v in overrides.items():
            if v <= 0:
                raise ValueError(f"free-flow override for {seg} must be > 0")
            table[str(seg)] = float(v)
    return table


def read_free_flow_csv(path) -> dict[str, float]:
    df = pd.read_csv(path, dtype={"segment_id": str})
    if not {"segment_id", "free_flow_kmh"}.issubset(df.columns):
        raise FormatError("free-flow CSV needs columns segment_id,free_flow_kmh")
    return {str(r.segment_id): float(r.free_flow_kmh) for r in df.itertuples()}


def compute_tsi(speeds: SpeedMatrix, free_flow: dict[str, float]) -> TsiMatrix:
    """TSI = (v_free - v_mean) / v_free, clamped to [0, 1]; missing cells stay masked."""
    keep: list[int] = []
    ffs: list[float] = []
    for i, seg in enumerate(speeds.segment_ids):
        ff = free_flow.get(seg)
        if ff is None:
            log.warning("segment %s: no free-flow entry, dropped", seg)
            continue
        if ff <= 0:
            log.warning("segment %s: free-flow %.3f <= 0, dropped", seg, ff)
            continue
        keep.append(i)
        ffs.append(ff)
    if not keep:
        raise EmptyInputError("no segments with a usable free-flow speed")
    vf = np.asarray(ffs)[:, None]
    vals = speeds.values[keep]
    tsi = np.clip((vf - vals) / vf, 0.0, 1.0)
    mask = speeds.mask[keep].copy()
    tsi[~mask] = 0.0
    return TsiMatrix(
        segment_ids=[speeds.segment_ids[i] for i in keep],
        bin_starts=speeds.bin_starts.copy(),
        interval=speeds.interval,
        values=tsi,
        mask=mask,
    )


def write_tsi_csv(tsi: TsiMatrix, path) -> None:
    """Wide CSV: one row per segment, one column per bin start (epoch s); blank = missing."""
    with open(path, "w", newline="") as fh:
        fh.write("segment_id," + ",".join(str(int(b)) for b in tsi.bin_starts) + "\n")
        for i, seg in enumerate(tsi.segment_ids):
            cells = [
                f"{tsi.values[i, j]:.6f}" if tsi.mask[i, j] else ""
                for j in range(len(tsi.bin_starts))
            ]
            fh.write(seg + "," + ",".join(cells) + "\n")


def read_tsi_csv(path) -> TsiMatrix:
    df = pd.read_csv(path, dtype={"segment_id": str})
    bin_starts = np.array([int(c) for c in df.columns[1:]], dtype=np.int64)
    if len(bin_starts) < 2:
        interval = SECONDS_PER_DAY
    else:
        steps = np.diff(bin_starts)
        if not np.all(steps == steps[0]):
            raise FormatError("TSI CSV bins are not uniform")
        interval = int(steps[0])
    values = df.iloc[:, 1:].to_numpy(dtype=float)
    mask = ~np.isnan(values)
    values = np.nan_to_num(values)
    return TsiMatrix(
        segment_ids=[str(s) for s in df["segment_id"]],
        bin_starts=bin_starts,
        interval=interval,
        values=values,
        mask=mask,
    )
