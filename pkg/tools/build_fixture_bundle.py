"""Write the synthetic input bundle used by the CLI tests and demos.

    python3 tools/build_fixture_bundle.py tests/data/bundle

Everything is generated from fixed seeds, so rerunning reproduces the files
byte for byte.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

N_SAMPLES = 1000
HITS = 703  # planted top-1 hit count
N_CLASSES = 10


def classification(out: Path) -> None:
    rng = np.random.default_rng(703)
    hits = set(rng.choice(N_SAMPLES, size=HITS, replace=False).tolist())
    preds, gts = [], []
    for i in range(N_SAMPLES):
        sid = f"img{i:04d}"
        label = int(rng.integers(N_CLASSES))
        others = [c for c in range(N_CLASSES) if c != label]
        rng.shuffle(others)
        if i in hits:
            ranked = [label] + others[:4]
        else:
            ranked = others[:1] + [label] + others[1:4]
        preds.append(json.dumps({"sample_id": sid, "ranked": [int(c) for c in ranked]}))
        gts.append(json.dumps({"sample_id": sid, "label": label}))
    (out / "predictions.jsonl").write_text("\n".join(preds) + "\n")
    (out / "ground_truth.jsonl").write_text("\n".join(gts) + "\n")


def detection(out: Path) -> None:
    gts = [
        {"image_id": "a", "boxes": [{"bbox": [10, 10, 50, 50], "class_id": 0}, {"bbox": [60, 60, 90, 100], "class_id": 1}]},
        {"image_id": "b", "boxes": [{"bbox": [0, 0, 20, 30], "class_id": 0}]},
        {"image_id": "c", "boxes": [{"bbox": [5, 5, 40, 40], "class_id": 1}, {"bbox": [50, 5, 80, 40], "class_id": 1}]},
    ]
    dets = [
        {"image_id": "a", "boxes": [{"bbox": [12, 10, 50, 52], "class_id": 0, "confidence": 0.95},
                                    {"bbox": [60, 58, 92, 100], "class_id": 1, "confidence": 0.7}]},
        {"image_id": "b", "boxes": [{"bbox": [30, 30, 60, 60], "class_id": 0, "confidence": 0.8},
                                    {"bbox": [0, 2, 20, 30], "class_id": 0, "confidence": 0.6}]},
        {"image_id": "c", "boxes": [{"bbox": [5, 5, 38, 40], "class_id": 1, "confidence": 0.9},
                                    {"bbox": [100, 100, 120, 120], "class_id": 2, "confidence": 0.3}]},
    ]
    (out / "detections.jsonl").write_text("\n".join(json.dumps(d) for d in dets) + "\n")
    (out / "detections_gt.jsonl").write_text("\n".join(json.dumps(g) for g in gts) + "\n")


def traces(out: Path) -> None:
    rng = np.random.default_rng(14)
    lat = 0.014 + rng.normal(0, 0.0005, 200).clip(-0.002, 0.002)
    (out / "latency.txt").write_text("latency_s\n" + "".join(f"{v:.6f}\n" for v in lat))

    # 100 inferences over 10 s, sampled every 50 ms
    t = np.round(np.arange(0, 10.0001, 0.05), 3)
    power = 117.8 + 6 * np.sin(2 * np.pi * 0.5 * t)
    (out / "power.csv").write_text("t_s,power_w\n" + "".join(f"{a:.3f},{p:.4f}\n" for a, p in zip(t, power)))
    idle_t = np.round(np.arange(0, 5.0001, 0.5), 3)
    (out / "idle_power.csv").write_text("t_s,power_w\n" + "".join(f"{a:.3f},20.0000\n" for a in idle_t))

    # 4 cores busy at ~49.6%, sampled every second
    ts = np.arange(0, 11, 1.0)
    rt = np.concatenate([[0.0], np.cumsum(np.full(10, 4 * 0.496))])
    ram = np.full(11, 2.48e9)
    (out / "resources.csv").write_text(
        "t_s,cpu_rt_s,ram_bytes\n" + "".join(f"{a:.1f},{b:.4f},{c:.0f}\n" for a, b, c in zip(ts, rt, ram)))
    base_rt = np.concatenate([[0.0], np.cumsum(np.full(10, 4 * 0.04))])
    (out / "idle_resources.csv").write_text(
        "t_s,cpu_rt_s,ram_bytes\n" + "".join(f"{a:.1f},{b:.4f},{c:.0f}\n" for a, b, c in zip(ts, base_rt, np.full(11, 0.4e9))))


def main(argv: list[str]) -> None:
    out = Path(argv[1] if len(argv) > 1 else "tests/data/bundle")
    out.mkdir(parents=True, exist_ok=True)
    classification(out)
    detection(out)
    traces(out)


if __name__ == "__main__":
    main(sys.argv)
