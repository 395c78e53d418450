"""Shared synthetic road-network and speed-record fixtures."""
import json

import numpy as np
import pytest

DAY0 = 19784 * 86400  # midnight-aligned epoch base


def build_road_dataset(outdir, seed=0):
    """Two spatially separated congested corridors plus a free-flowing connector.

    Writes network.json and speeds.csv into `outdir` and returns their paths.
    Each corridor is a 6-segment chain; all segments run slow between 06:00
    and 20:00 and fast otherwise, the connector only during the 08:00 peak.
    """
    rng = np.random.default_rng(seed)
    segments = []

    def chain(prefix, origin, n=6):
        ox, oy = origin
        for i in range(n):
            x0 = ox + i * 100.0
            mid = [x0 + 50.0, oy + float(rng.uniform(-40, 40))]
            segments.append(
                {
                    "id": f"{prefix}{i}",
                    "polyline": [[x0, oy], mid, [x0 + 100.0, oy]],
                    "junctions": [f"j{prefix}{i}", f"j{prefix}{i + 1}"],
                }
            )

    chain("a", (0.0, 0.0))
    chain("b", (2000.0, 2000.0))
    segments.append(
        {
            "id": "conn",
            "polyline": [[600.0, 0.0], [2000.0, 2000.0]],
            "junctions": ["ja6", "jb0"],
        }
    )
    network_path = outdir / "network.json"
    network_path.write_text(json.dumps({"crs": {"units": "m"}, "segments": segments}))

    rows = ["timestamp,segment_id,speed_kmh"]
    for seg in segments:
        sid = seg["id"]
        for hour in range(24):
            if sid == "conn":
                congested = 8 <= hour < 10
            else:
                congested = 6 <= hour < 20
            for tick in range(3):
                ts = DAY0 + hour * 3600 + tick * 1200
                if congested:
                    v = rng.uniform(14.0, 22.0)
                else:
                    v = rng.uniform(82.0, 95.0)
                rows.append(f"{ts},{sid},{v:.2f}")
    speeds_path = outdir / "speeds.csv"
    speeds_path.write_text("\n".join(rows) + "\n")
    return network_path, speeds_path


@pytest.fixture
def road_dataset(tmp_path):
    return build_road_dataset(tmp_path)
