"""End-to-end CLI run: analyze the bundle, then compare the reference table.

    python3 demos/06_charts_and_cli.py [OUT_DIR]
"""

import sys
import tempfile
from pathlib import Path

from compressmetrics.cli import main
from compressmetrics.combined import write_report
from compressmetrics.reference import reference_reports

ROOT = Path(__file__).resolve().parents[1]
BUNDLE = ROOT / "tests" / "data" / "bundle"
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="compressmetrics-demo-"))
out.mkdir(parents=True, exist_ok=True)

main(["analyze", "--model", str(ROOT / "src" / "compressmetrics" / "data" / "resnet18.json"),
      "--predictions", str(BUNDLE / "predictions.jsonl"), "--ground-truth", str(BUNDLE / "ground_truth.jsonl"),
      "--latency", str(BUNDLE / "latency.txt"), "--power", str(BUNDLE / "power.csv"), "--inferences", "535",
      "--resources", str(BUNDLE / "resources.csv"), "--cores", "4", "--out", str(out / "analyzed.json")])

baseline, candidates = reference_reports("resnet18_imagenet")
paths = []
for i, rep in enumerate([baseline, *candidates]):
    p = out / "reports" / f"{i:02d}.json"
    p.parent.mkdir(exist_ok=True)
    p.write_text(write_report(rep))
    paths.append(str(p))
main(["compare", *paths, "--out", str(out / "comparison")])
print(f"\ncharts and log written to {out / 'comparison'}")
