"""Energy from a power trace: integration rules, windows and idle subtraction.

    python3 demos/04_energy.py
"""

from pathlib import Path

from compressmetrics.energy import (
    PowerTrace,
    clip_to_window,
    energy_per_inference,
    integrate_energy,
    net_energy,
    read_power_trace,
)

BUNDLE = Path(__file__).resolve().parents[1] / "tests" / "data" / "bundle"

import logging

logging.basicConfig(format="warning: %(message)s")

# two samples of a linear ramp: the rectangle rule misses the whole triangle
ramp = PowerTrace.from_samples([(0, 0), (10, 10)])
for method in ("trapezoidal", "rectangular"):
    s = integrate_energy(ramp, method)
    print(f"2-sample ramp, {method:<11}: {s.energy:5.1f} J  coarse sampling flagged: {s.coarse_sampling}")

trace = read_power_trace(BUNDLE / "power.csv")
whole = integrate_energy(trace)
print(f"bundle trace: {whole.energy:.2f} J over {whole.duration:.1f} s, mean power {whole.mean_power:.2f} W")
first, second = (integrate_energy(clip_to_window(trace, a, b)).energy for a, b in ((0, 4.3), (4.3, 10)))
print(f"split at 4.3 s: {first:.4f} + {second:.4f} = {first + second:.4f} J")
idle = read_power_trace(BUNDLE / "idle_power.csv")
print(f"per inference (535 runs): {energy_per_inference(whole, 535):.4f} J")
_, net = net_energy(trace, idle)
print(f"net of a 20 W idle floor: {net:.2f} J")
