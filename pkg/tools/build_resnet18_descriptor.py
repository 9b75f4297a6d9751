"""Write the ResNet-18 (ImageNet, 1000 classes) descriptor fixture.

Run from the repository root:

    python tools/build_resnet18_descriptor.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "compressmetrics" / "data" / "resnet18.json"


def conv(id_, cin, cout, k, stride=1, padding=0, input=None):
    rec = {"id": id_, "kind": "conv2d", "in_channels": cin, "out_channels": cout,
           "kernel_h": k, "kernel_w": k, "stride": stride, "padding": padding, "has_bias": False}
    if input:
        rec["input"] = input
    return rec


def bn(id_, c):
    return {"id": id_, "kind": "batchnorm", "channels": c}


def relu(id_, c):
    return {"id": id_, "kind": "activation", "channels": c}


def basic_block(prefix, cin, cout, stride, block_input):
    layers = [
        conv(f"{prefix}.conv1", cin, cout, 3, stride, 1),
        bn(f"{prefix}.bn1", cout),
        relu(f"{prefix}.relu1", cout),
        conv(f"{prefix}.conv2", cout, cout, 3, 1, 1),
        bn(f"{prefix}.bn2", cout),
    ]
    shortcut = block_input
    if stride != 1 or cin != cout:
        layers += [
            conv(f"{prefix}.downsample.0", cin, cout, 1, stride, 0, input=block_input),
            bn(f"{prefix}.downsample.1", cout),
        ]
        shortcut = f"{prefix}.downsample.1"
    layers += [
        {"id": f"{prefix}.add", "kind": "elementwise_add", "channels": cout,
         "inputs": [f"{prefix}.bn2", shortcut]},
        relu(f"{prefix}.relu2", cout),
    ]
    return layers


def build():
    layers = [
        conv("conv1", 3, 64, 7, 2, 3),
        bn("bn1", 64),
        relu("relu", 64),
        {"id": "maxpool", "kind": "pool", "channels": 64, "kernel_h": 3, "kernel_w": 3,
         "stride": 2, "padding": 1},
    ]
    last, cin = "maxpool", 64
    for stage, cout in enumerate((64, 128, 256, 512), start=1):
        for b in range(2):
            stride = 2 if (b == 0 and stage > 1) else 1
            block = basic_block(f"layer{stage}.{b}", cin, cout, stride, last)
            layers += block
            last, cin = block[-1]["id"], cout
    layers += [
        {"id": "avgpool", "kind": "pool", "channels": 512, "global": True},
        {"id": "fc", "kind": "linear", "in_features": 512, "out_features": 1000, "has_bias": True},
    ]
    return {"name": "resnet18", "default_bitwidth": 32, "input_shape": [3, 224, 224], "layers": layers}


if __name__ == "__main__":
    OUT.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {OUT}")
