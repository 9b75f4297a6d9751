"""Count parameters, MACs, CHATS and disk size for the bundled ResNet-18.

    python3 demos/01_cost_counting.py
"""

import dataclasses
from pathlib import Path

from compressmetrics.model_graph import count_cost, count_params, disk_size, load_model_descriptor

DESCRIPTOR = Path(__file__).resolve().parents[1] / "src" / "compressmetrics" / "data" / "resnet18.json"

model = load_model_descriptor(DESCRIPTOR)
params = count_params(model)
cost = count_cost(model)
size = disk_size(model)
print(f"{model.name}: {len(model.layers)} layers, {params.total_params:,} parameters")
print(f"  dense MACs   {cost.macs_dense:,}")
print(f"  CHATS (fp32) {cost.chats_dense:,}")
print(f"  disk size    {size.bytes / 2**20:.2f} MiB ({size.tag})")

# the same network quantised to 8 bits: CHATS and disk shrink by 4x, MACs do not change
int8 = dataclasses.replace(model, default_bitwidth=8)
print(f"  CHATS (int8) {count_cost(int8).chats_dense:,}")
print(f"  disk (int8)  {disk_size(int8).bytes / 2**20:.2f} MiB")

# half of every layer's weights pruned: effective MACs halve, dense MACs stay put
pruned = dataclasses.replace(model, layers=tuple(
    dataclasses.replace(layer, nonzero_params=layer.total_params // 2) if layer.total_params else layer
    for layer in model.layers))
pc = count_cost(pruned)
print(f"  50% pruned: dense MACs {pc.macs_dense:,}, effective MACs {pc.macs_effective:,.0f}")
print(f"  ops basis (2*MACs + elementwise): {count_cost(model, basis='ops').ops_dense:,}")
