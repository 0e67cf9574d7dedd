"""Run configuration: one JSON file, overridable by CLI flags (flags win).

File schema (all keys optional):

    { "seed": int, "jobs": int, "sigma": float, "pAugment": float,
      "threshold": float, "ratios": [train, test, val],
      "binarizeThreshold": int,
      "tree": { "maxWidthByDepth": {"1": 8, ...}, "keepDepthMin": 6,
                "keepDepthMax": 10, "sizeCapFactor": 1.5 },
      "baseline": { "cropFraction": 1.0, "brightnessJitter": 0.0,
                    "hueJitter": 0.0, "saturationJitter": 0.0 } }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .ops import StandardAugmentParams
from .pipeline import TreeConfig
from .pixelgt import DEFAULT_BINARIZE_THRESHOLD


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    jobs: int = 0  # 0 = use all cores
    sigma: float = 1.0
    p_augment: float = 0.5
    threshold: float = 0.1
    ratios: tuple[float, float, float] = (0.72, 0.2, 0.08)
    binarize_threshold: int = DEFAULT_BINARIZE_THRESHOLD
    tree: TreeConfig = field(default_factory=TreeConfig)
    baseline: StandardAugmentParams = field(default_factory=StandardAugmentParams)

    def resolved_jobs(self) -> int:
        if self.jobs < 0:
            raise ConfigError(f"jobs must be >= 0, got {self.jobs}")
        return self.jobs or (os.cpu_count() or 1)


def load_config(path: Path | str) -> RunConfig:
    try:
        obj = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must be a JSON object")

    cfg = RunConfig()
    simple = {
        "seed": "seed",
        "jobs": "jobs",
        "sigma": "sigma",
        "pAugment": "p_augment",
        "threshold": "threshold",
        "binarizeThreshold": "binarize_threshold",
    }
    updates: dict = {}
    for key, attr in simple.items():
        if key in obj:
            updates[attr] = obj[key]
    if "ratios" in obj:
        ratios = obj["ratios"]
        if not (isinstance(ratios, list) and len(ratios) == 3):
            raise ConfigError("ratios must be a list of three numbers")
        updates["ratios"] = tuple(float(r) for r in ratios)
    if "tree" in obj:
        updates["tree"] = TreeConfig.from_json(obj["tree"])
    if "baseline" in obj:
        b = obj["baseline"]
        updates["baseline"] = StandardAugmentParams(
            crop_fraction=float(b.get("cropFraction", 1.0)),
            brightness_jitter=float(b.get("brightnessJitter", 0.0)),
            hue_jitter=float(b.get("hueJitter", 0.0)),
            saturation_jitter=float(b.get("saturationJitter", 0.0)),
        )
    unknown = set(obj) - set(simple) - {"ratios", "tree", "baseline"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return replace(cfg, **updates)


def apply_flag_overrides(cfg: RunConfig, args) -> RunConfig:
    """CLI flags beat config-file values."""
    updates: dict = {}
    for flag, attr in (
        ("seed", "seed"),
        ("jobs", "jobs"),
        ("sigma", "sigma"),
        ("p_augment", "p_augment"),
        ("threshold", "threshold"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            updates[attr] = value
    if getattr(args, "ratios", None) is not None:
        parts = str(args.ratios).split(",")
        if len(parts) != 3:
            raise ConfigError(f"--ratios wants three comma-separated values, got {args.ratios!r}")
        updates["ratios"] = tuple(float(p) for p in parts)
    return replace(cfg, **updates) if updates else cfg
