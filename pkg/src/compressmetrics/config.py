"""Run configuration: defaults < config file < command-line flags."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Optional

CONFIG_ENV = "COMPRESSMETRICS_CONFIG"

DEFAULTS: dict[str, Any] = {
    "zeta": None,
    "hw_profile": None,
    "hw_profiles": {},
    "bindings": "performance=top1,speed=chats,size=disk,efficiency=energy",
    "iou_profile": "single",
    "ap_method": "all_point",
    "integration": "trapezoidal",
    "ops_basis": "macs",
    "chats_exponent": 1.0,
    "top_k": 1,
    "top_n": 4,
    "cores": 1,
    "inferences": 1,
}


class ConfigError(ValueError):
    pass


def load_config_file(path: Optional[str] = None) -> dict[str, Any]:
    """Read the JSON config named by ``path`` or by ``$COMPRESSMETRICS_CONFIG``."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"config file {path}: unknown key(s) {', '.join(unknown)}")
    return doc


def effective_config(flags: dict[str, Any], config_path: Optional[str] = None) -> dict[str, Any]:
    """Merge defaults, the config file and non-``None`` flag values."""
    merged = dict(DEFAULTS)
    merged.update(load_config_file(config_path))
    merged.update({k: v for k, v in flags.items() if v is not None and k in DEFAULTS})
    return merged
