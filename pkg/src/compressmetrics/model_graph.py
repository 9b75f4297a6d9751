"""Model descriptors and structural cost metrics.

A model descriptor is a small JSON document describing a network as an
ordered list of layers. From it we derive parameter counts, sparsity, an
estimated on-disk size and operation counts (MACs, CHATS).

Layers consume the output of the previous layer unless they name another
layer through ``input`` (or ``inputs`` for ``elementwise_add``), which is
enough to describe residual topologies such as ResNet.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Any, Iterable, Optional, Union

ALLOWED_BITWIDTHS = frozenset({1, 2, 4, 8, 16, 32, 64})
LAYER_KINDS = ("conv2d", "linear", "batchnorm", "activation", "pool", "elementwise_add")
MAC_KINDS = frozenset({"conv2d", "linear"})
ELEMENTWISE_KINDS = frozenset({"batchnorm", "activation", "elementwise_add"})
OPS_BASES = ("macs", "ops")


class DescriptorError(ValueError):
    """Raised for malformed or inconsistent model descriptors."""

    def __init__(self, message: str, layer_id: Optional[str] = None):
        self.layer_id = layer_id
        if layer_id is not None:
            message = f"layer {layer_id!r}: {message}"
        super().__init__(message)


class ShapeError(DescriptorError):
    """Raised when tensor shapes cannot be propagated through the graph."""


@dataclass(frozen=True)
class LayerSpec:
    id: str
    kind: str
    in_channels: Optional[int] = None
    out_channels: Optional[int] = None
    kernel_h: Optional[int] = None
    kernel_w: Optional[int] = None
    stride: Optional[int] = None
    padding: int = 0
    groups: int = 1
    has_bias: bool = True
    in_features: Optional[int] = None
    out_features: Optional[int] = None
    channels: Optional[int] = None
    global_pool: bool = False
    inputs: tuple[str, ...] = ()
    bitwidth_override: Optional[int] = None
    nonzero_params: Optional[int] = None

    @property
    def total_params(self) -> int:
        return layer_params(self)

    def bitwidth(self, default: int) -> int:
        return self.bitwidth_override if self.bitwidth_override is not None else default


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    default_bitwidth: int
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]
    measured_disk_size: Optional[int] = None

    def __post_init__(self):
        _validate_descriptor(self)

    def layer(self, layer_id: str) -> LayerSpec:
        for layer in self.layers:
            if layer.id == layer_id:
                return layer
        raise KeyError(layer_id)


@dataclass(frozen=True)
class ParamStats:
    total_params: int
    nonzero_params: int

    @property
    def sparsity_fraction(self) -> Fraction:
        if self.total_params == 0:
            return Fraction(0)
        return 1 - Fraction(self.nonzero_params, self.total_params)

    @property
    def sparsity(self) -> float:
        return float(self.sparsity_fraction)


@dataclass(frozen=True)
class LayerCost:
    id: str
    kind: str
    output_shape: tuple[int, int, int]
    macs_dense: int
    macs_effective: Fraction
    elementwise_ops: int
    bitwidth: int


@dataclass(frozen=True)
class CostStats:
    """Aggregated operation counts for one descriptor.

    ``macs_effective`` and ``chats_effective`` are floats because pruning
    scales each layer by a rational nonzero fraction; the sums are formed
    exactly and rounded once. ``chats_dense`` stays an ``int`` whenever the
    bit-width exponent is 1.
    """

    macs_dense: int
    macs_effective: float
    elementwise_ops: int
    bitwidth_bits: float
    chats_dense: Union[int, float]
    chats_effective: float
    basis: str = "macs"
    exponent: float = 1.0
    layers: tuple[LayerCost, ...] = field(default=(), repr=False)

    @property
    def ops_dense(self) -> int:
        return 2 * self.macs_dense + self.elementwise_ops


@dataclass(frozen=True)
class DiskSize:
    bytes: int
    tag: str  # "measured" or "estimated"


# --------------------------------------------------------------------------
# parsing and validation
# --------------------------------------------------------------------------

_INT_FIELDS = (
    "in_channels", "out_channels", "kernel_h", "kernel_w", "stride", "padding",
    "groups", "in_features", "out_features", "channels", "bitwidth_override",
    "nonzero_params",
)


def _as_int(value: Any, name: str, layer_id: Optional[str]) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DescriptorError(f"{name} must be an integer, got {value!r}", layer_id)
    return value


def _layer_from_record(record: Any, index: int) -> LayerSpec:
    if not isinstance(record, dict):
        raise DescriptorError(f"layer #{index} is not an object")
    layer_id = record.get("id")
    if not isinstance(layer_id, str) or not layer_id:
        raise DescriptorError(f"layer #{index} has no string 'id'")
    kind = record.get("kind")
    if kind not in LAYER_KINDS:
        raise DescriptorError(f"unknown layer kind {kind!r}", layer_id)

    kwargs: dict[str, Any] = {"id": layer_id, "kind": kind}
    for name in _INT_FIELDS:
        key = "bitwidth" if name == "bitwidth_override" else name
        if key in record and record[key] is not None:
            kwargs[name] = _as_int(record[key], key, layer_id)
    if "has_bias" in record:
        if not isinstance(record["has_bias"], bool):
            raise DescriptorError("has_bias must be a boolean", layer_id)
        kwargs["has_bias"] = record["has_bias"]
    if "global" in record:
        kwargs["global_pool"] = bool(record["global"])
    if "input" in record:
        if not isinstance(record["input"], str):
            raise DescriptorError("input must be a layer id", layer_id)
        kwargs["inputs"] = (record["input"],)
    if "inputs" in record:
        ids = record["inputs"]
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise DescriptorError("inputs must be a list of layer ids", layer_id)
        kwargs["inputs"] = tuple(ids)

    known = set(_INT_FIELDS) | {"id", "kind", "has_bias", "global", "input", "inputs", "bitwidth"}
    unknown = sorted(set(record) - known)
    if unknown:
        raise DescriptorError(f"unknown field(s) {', '.join(unknown)}", layer_id)
    return LayerSpec(**kwargs)


def _require_positive(layer: LayerSpec, *names: str) -> None:
    for name in names:
        value = getattr(layer, name)
        if value is None:
            raise DescriptorError(f"{layer.kind} requires {name}", layer.id)
        if value <= 0:
            raise DescriptorError(f"{name} must be positive, got {value}", layer.id)


def _validate_layer(layer: LayerSpec) -> None:
    if layer.kind == "conv2d":
        _require_positive(layer, "in_channels", "out_channels", "kernel_h", "kernel_w", "groups")
        if layer.stride is not None and layer.stride <= 0:
            raise DescriptorError("stride must be positive", layer.id)
        if layer.in_channels % layer.groups or layer.out_channels % layer.groups:
            raise DescriptorError("groups must divide channels", layer.id)
    elif layer.kind == "linear":
        _require_positive(layer, "in_features", "out_features")
    elif layer.kind == "pool":
        _require_positive(layer, "channels")
        if not layer.global_pool:
            _require_positive(layer, "kernel_h", "kernel_w")
            if layer.stride is not None and layer.stride <= 0:
                raise DescriptorError("stride must be positive", layer.id)
    else:
        _require_positive(layer, "channels")
    if layer.padding < 0:
        raise DescriptorError("padding must be non-negative", layer.id)
    if layer.kind == "elementwise_add" and len(layer.inputs) < 2:
        raise DescriptorError("elementwise_add needs at least two inputs", layer.id)
    if layer.kind != "elementwise_add" and len(layer.inputs) > 1:
        raise DescriptorError("only elementwise_add takes several inputs", layer.id)
    if layer.bitwidth_override is not None and layer.bitwidth_override not in ALLOWED_BITWIDTHS:
        raise DescriptorError(f"unsupported bitwidth {layer.bitwidth_override}", layer.id)
    if layer.nonzero_params is not None:
        if layer.nonzero_params < 0:
            raise DescriptorError("nonzero_params must be non-negative", layer.id)
        if layer.nonzero_params > layer_params(layer):
            raise DescriptorError(
                f"nonzero_params {layer.nonzero_params} exceeds total {layer_params(layer)}",
                layer.id,
            )


def _validate_descriptor(m: ModelDescriptor) -> None:
    if m.default_bitwidth not in ALLOWED_BITWIDTHS:
        raise DescriptorError(f"unsupported default_bitwidth {m.default_bitwidth}")
    if not m.layers:
        raise DescriptorError("descriptor has no layers")
    if len(m.input_shape) != 3 or any(d <= 0 for d in m.input_shape):
        raise DescriptorError(f"input_shape must be three positive integers, got {m.input_shape}")
    if m.measured_disk_size is not None and m.measured_disk_size < 0:
        raise DescriptorError("measured_disk_size_bytes must be non-negative")
    seen: set[str] = set()
    for layer in m.layers:
        if layer.id in seen:
            raise DescriptorError("duplicate layer id", layer.id)
        for ref in layer.inputs:
            if ref not in seen:
                raise DescriptorError(f"input {ref!r} does not name an earlier layer", layer.id)
        _validate_layer(layer)
        seen.add(layer.id)


def descriptor_from_dict(doc: Any) -> ModelDescriptor:
    if not isinstance(doc, dict):
        raise DescriptorError("descriptor must be a JSON object")
    for key in ("name", "default_bitwidth", "input_shape", "layers"):
        if key not in doc:
            raise DescriptorError(f"missing top-level field {key!r}")
    if not isinstance(doc["name"], str):
        raise DescriptorError("name must be a string")
    shape = doc["input_shape"]
    if not isinstance(shape, list) or len(shape) != 3:
        raise DescriptorError("input_shape must be [channels, height, width]")
    shape = tuple(_as_int(v, "input_shape", None) for v in shape)
    if not isinstance(doc["layers"], list):
        raise DescriptorError("layers must be an array")
    measured = doc.get("measured_disk_size_bytes")
    if measured is not None:
        measured = _as_int(measured, "measured_disk_size_bytes", None)
    layers = tuple(_layer_from_record(rec, i) for i, rec in enumerate(doc["layers"]))
    return ModelDescriptor(
        name=doc["name"],
        default_bitwidth=_as_int(doc["default_bitwidth"], "default_bitwidth", None),
        layers=layers,
        input_shape=shape,
        measured_disk_size=measured,
    )


def parse_model_descriptor(raw: Union[bytes, str, IO]) -> ModelDescriptor:
    """Parse and validate a JSON model descriptor.

    ``raw`` may be bytes, text, or a readable file object.
    """
    if isinstance(raw, (io.IOBase,)) or hasattr(raw, "read"):
        raw = raw.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"malformed descriptor document: {exc}") from exc
    return descriptor_from_dict(doc)


def load_model_descriptor(path: Union[str, Path]) -> ModelDescriptor:
    return parse_model_descriptor(Path(path).read_bytes())


def descriptor_to_dict(m: ModelDescriptor) -> dict:
    layers = []
    for layer in m.layers:
        rec: dict[str, Any] = {"id": layer.id, "kind": layer.kind}
        for name in _INT_FIELDS:
            value = getattr(layer, name)
            if value is None:
                continue
            if name == "padding" and value == 0:
                continue
            if name == "groups" and value == 1:
                continue
            rec["bitwidth" if name == "bitwidth_override" else name] = value
        if layer.kind in MAC_KINDS:
            rec["has_bias"] = layer.has_bias
        if layer.global_pool:
            rec["global"] = True
        if len(layer.inputs) == 1 and layer.kind != "elementwise_add":
            rec["input"] = layer.inputs[0]
        elif layer.inputs:
            rec["inputs"] = list(layer.inputs)
        layers.append(rec)
    doc: dict[str, Any] = {
        "name": m.name,
        "default_bitwidth": m.default_bitwidth,
        "input_shape": list(m.input_shape),
    }
    if m.measured_disk_size is not None:
        doc["measured_disk_size_bytes"] = m.measured_disk_size
    doc["layers"] = layers
    return doc


# --------------------------------------------------------------------------
# counting
# --------------------------------------------------------------------------


def layer_params(layer: LayerSpec) -> int:
    if layer.kind == "conv2d":
        weights = layer.out_channels * (layer.in_channels // layer.groups) * layer.kernel_h * layer.kernel_w
        return weights + (layer.out_channels if layer.has_bias else 0)
    if layer.kind == "linear":
        return layer.in_features * layer.out_features + (layer.out_features if layer.has_bias else 0)
    if layer.kind == "batchnorm":
        return 2 * layer.channels
    return 0


def _layer_nonzero(layer: LayerSpec) -> int:
    return layer.nonzero_params if layer.nonzero_params is not None else layer_params(layer)


def count_params(m: ModelDescriptor) -> ParamStats:
    total = sum(layer_params(layer) for layer in m.layers)
    nonzero = sum(_layer_nonzero(layer) for layer in m.layers)
    return ParamStats(total_params=total, nonzero_params=nonzero)


def _spatial_out(size: int, kernel: int, stride: int, padding: int, axis: str, layer_id: str) -> int:
    out = (size + 2 * padding - kernel) // stride + 1
    if out <= 0:
        raise ShapeError(
            f"non-positive output {axis} {out} (in={size}, kernel={kernel}, "
            f"stride={stride}, padding={padding})",
            layer_id,
        )
    return out


def propagate_shapes(m: ModelDescriptor) -> dict[str, tuple[int, int, int]]:
    """Return the (channels, height, width) output shape of every layer."""
    shapes: dict[str, tuple[int, int, int]] = {}
    previous = tuple(m.input_shape)
    for layer in m.layers:
        if layer.inputs:
            in_shapes = [shapes[ref] for ref in layer.inputs]
        else:
            in_shapes = [previous]
        c, h, w = in_shapes[0]

        if layer.kind == "conv2d":
            if c != layer.in_channels:
                raise ShapeError(f"expects {layer.in_channels} input channels, got {c}", layer.id)
            stride = layer.stride or 1
            out = (
                layer.out_channels,
                _spatial_out(h, layer.kernel_h, stride, layer.padding, "height", layer.id),
                _spatial_out(w, layer.kernel_w, stride, layer.padding, "width", layer.id),
            )
        elif layer.kind == "linear":
            if c * h * w != layer.in_features:
                raise ShapeError(f"expects {layer.in_features} input features, got {c * h * w}", layer.id)
            out = (layer.out_features, 1, 1)
        elif layer.kind == "pool":
            if c != layer.channels:
                raise ShapeError(f"expects {layer.channels} channels, got {c}", layer.id)
            if layer.global_pool:
                out = (c, 1, 1)
            else:
                # stride defaults to the kernel size
                stride_h = layer.stride or layer.kernel_h
                stride_w = layer.stride or layer.kernel_w
                out = (
                    c,
                    _spatial_out(h, layer.kernel_h, stride_h, layer.padding, "height", layer.id),
                    _spatial_out(w, layer.kernel_w, stride_w, layer.padding, "width", layer.id),
                )
        else:
            if c != layer.channels:
                raise ShapeError(f"expects {layer.channels} channels, got {c}", layer.id)
            if layer.kind == "elementwise_add" and any(s != in_shapes[0] for s in in_shapes[1:]):
                raise ShapeError(f"input shapes differ: {in_shapes}", layer.id)
            out = (c, h, w)
        shapes[layer.id] = out
        previous = out
    return shapes


def chats(ops: int, bitwidth: int, exponent: float = 1.0) -> Union[int, float]:
    """Operation count weighted by bit width.

    Integer-exact for the default linear exponent.
    """
    if exponent == 1:
        return ops * bitwidth
    return ops * bitwidth ** exponent


def layer_costs(m: ModelDescriptor) -> tuple[LayerCost, ...]:
    shapes = propagate_shapes(m)
    costs = []
    for layer in m.layers:
        out_c, out_h, out_w = shapes[layer.id]
        if layer.kind == "conv2d":
            macs = out_h * out_w * out_c * layer.kernel_h * layer.kernel_w * (layer.in_channels // layer.groups)
        elif layer.kind == "linear":
            macs = layer.in_features * layer.out_features
        else:
            macs = 0
        total = layer_params(layer)
        if macs and total:
            effective = Fraction(macs * _layer_nonzero(layer), total)
        else:
            effective = Fraction(macs)
        elementwise = out_c * out_h * out_w if layer.kind in ELEMENTWISE_KINDS else 0
        costs.append(
            LayerCost(
                id=layer.id,
                kind=layer.kind,
                output_shape=(out_c, out_h, out_w),
                macs_dense=macs,
                macs_effective=effective,
                elementwise_ops=elementwise,
                bitwidth=layer.bitwidth(m.default_bitwidth),
            )
        )
    return tuple(costs)


def effective_bitwidth(m: ModelDescriptor) -> float:
    """Parameter-count-weighted mean bit width (default width if parameter-free)."""
    total = 0
    weighted = 0
    for layer in m.layers:
        n = layer_params(layer)
        total += n
        weighted += n * layer.bitwidth(m.default_bitwidth)
    if total == 0:
        return float(m.default_bitwidth)
    return weighted / total


def count_cost(m: ModelDescriptor, basis: str = "macs", exponent: float = 1.0) -> CostStats:
    """Count MACs and CHATS for a descriptor.

    ``basis="macs"`` weights MACs by bit width; ``basis="ops"`` uses
    ``2 * MACs + elementwise ops`` instead. CHATS is summed layer by layer
    so mixed-precision models are counted exactly.
    """
    if basis not in OPS_BASES:
        raise ValueError(f"basis must be one of {OPS_BASES}, got {basis!r}")
    costs = layer_costs(m)
    chats_dense: Union[int, float] = 0
    chats_eff = Fraction(0) if exponent == 1 else 0.0
    for lc in costs:
        if basis == "macs":
            dense_ops, eff_ops = lc.macs_dense, lc.macs_effective
        else:
            dense_ops = 2 * lc.macs_dense + lc.elementwise_ops
            eff_ops = 2 * lc.macs_effective + lc.elementwise_ops
        chats_dense += chats(dense_ops, lc.bitwidth, exponent)
        if exponent == 1:
            chats_eff += eff_ops * lc.bitwidth
        else:
            chats_eff += float(eff_ops) * lc.bitwidth ** exponent
    return CostStats(
        macs_dense=sum(lc.macs_dense for lc in costs),
        macs_effective=float(sum((lc.macs_effective for lc in costs), Fraction(0))),
        elementwise_ops=sum(lc.elementwise_ops for lc in costs),
        bitwidth_bits=effective_bitwidth(m),
        chats_dense=chats_dense,
        chats_effective=float(chats_eff),
        basis=basis,
        exponent=exponent,
        layers=costs,
    )


def estimate_disk_size(layers: Iterable[LayerSpec], default_bitwidth: int, effective: bool = False) -> int:
    bits = 0
    for layer in layers:
        n = _layer_nonzero(layer) if effective else layer_params(layer)
        bits += n * layer.bitwidth(default_bitwidth)
    return math.ceil(Fraction(bits, 8))


def disk_size(m: ModelDescriptor, effective: bool = False) -> DiskSize:
    """Measured disk size when the descriptor carries one, else an estimate.

    With ``effective=True`` the estimate counts only nonzero parameters, i.e.
    the size the model would have once pruned weights are physically removed.
    """
    if m.measured_disk_size is not None and not effective:
        return DiskSize(m.measured_disk_size, "measured")
    return DiskSize(estimate_disk_size(m.layers, m.default_bitwidth, effective), "estimated")
