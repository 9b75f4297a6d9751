"""CPU utilisation and RAM from a resource trace, with idle-baseline subtraction.

    python3 demos/03_resources.py
"""

from pathlib import Path

from compressmetrics.resources import (
    ResourceTrace,
    baseline_subtract,
    cpu_utilization,
    read_resource_trace,
    summarize,
)

BUNDLE = Path(__file__).resolve().parents[1] / "tests" / "data" / "bundle"

# hand-made trace: 3 s of CPU time in the first 5 s, 2 s in the next 5 s
toy = ResourceTrace.from_samples([(0, 0, 1e9), (5, 3, 1e9), (10, 5, 1e9)])
print("per-interval utilisation:", cpu_utilization(toy).per_interval.tolist())

work = summarize(read_resource_trace(BUNDLE / "resources.csv"), core_count=4)
idle = summarize(read_resource_trace(BUNDLE / "idle_resources.csv", label="baseline"), core_count=4)
net = baseline_subtract(work, idle)
print(f"workload CPU {work.cpu_utilization_pct:.1f}%  RAM peak {work.ram_peak / 1e9:.2f} GB")
print(f"idle     CPU {idle.cpu_utilization_pct:.1f}%  RAM peak {idle.ram_peak / 1e9:.2f} GB")
print(f"net      CPU {net.cpu_utilization_pct:.1f}%  RAM peak {net.ram_peak / 1e9:.2f} GB")
