#!/usr/bin/env python3
"""Build the binding test fixtures: a small synthetic dataset, its node
caches, and reference sample outputs produced by the core CLI for several
seeds. Rerunning always rebuilds from scratch."""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

from structaug.annot_io import (
    DatasetManifest,
    ManifestEntry,
    save_image,
    save_manifest,
    serialize_annotation,
)
from structaug.cli import main
from structaug.rng import Rng
from structaug.synth import make_table

SEEDS = (11, 22, 33)
DRAWS = 100
EXPLORE_SEED = 900

FIXTURES = Path(__file__).resolve().parent.parent / ".fixtures"


def build_dataset(data_dir: Path) -> None:
    data_dir.mkdir(parents=True)
    specs = [
        ("p0_t0", dict(n_rows=4, n_cols=5, rgb=False)),
        ("p1_t0", dict(n_rows=5, n_cols=4, rgb=True)),
        ("p2_t0", dict(n_rows=6, n_cols=6, rgb=False, span_attempts=6)),
    ]
    rng = Rng(0xF1C5)
    entries = []
    for table_id, kwargs in specs:
        doc = make_table(rng, table_id=table_id, **kwargs)
        save_image(doc.image, data_dir / f"{table_id}.png")
        (data_dir / f"{table_id}.json").write_bytes(serialize_annotation(doc))
        entries.append(
            ManifestEntry(id=table_id, image=f"{table_id}.png", annotation=f"{table_id}.json")
        )
    save_manifest(DatasetManifest(entries=tuple(entries), base_dir=data_dir), data_dir / "manifest.json")


def build_png_vectors(out_dir: Path) -> None:
    """Tiny PNGs with known pixel values for the decoder unit test."""
    import numpy as np

    out_dir.mkdir(parents=True)
    gray = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    save_image(gray, out_dir / "gray.png")
    rgb = np.zeros((2, 3, 3), dtype=np.uint8)
    rgb[..., 0] = [[10, 20, 30], [40, 50, 60]]
    rgb[..., 1] = [[110, 120, 130], [140, 150, 160]]
    rgb[..., 2] = [[210, 220, 230], [240, 250, 255]]
    save_image(rgb, out_dir / "rgb.png")
    (out_dir / "expected.json").write_text(
        json.dumps(
            {
                "gray": {"width": 4, "height": 3, "channels": 1, "data": gray.flatten().tolist()},
                "rgb": {"width": 3, "height": 2, "channels": 3, "data": rgb.flatten().tolist()},
            }
        )
    )


def run() -> int:
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    data_dir = FIXTURES / "data"
    build_dataset(data_dir)
    build_png_vectors(FIXTURES / "png")

    manifest = str(data_dir / "manifest.json")
    caches = str(FIXTURES / "caches")
    code = main(["explore", "--manifest", manifest, "--out", caches, "--seed", str(EXPLORE_SEED)])
    if code != 0:
        return code
    for seed in SEEDS:
        out = str(FIXTURES / "samples" / f"s{seed}")
        code = main(
            ["sample", "--manifest", manifest, "--caches", caches, "--out", out,
             "--n", str(DRAWS), "--seed", str(seed)]
        )
        if code != 0:
            return code
    (FIXTURES / "meta.json").write_text(
        json.dumps({"seeds": list(SEEDS), "draws": DRAWS, "sigma": 1.0, "pAugment": 0.5})
    )
    print(f"fixtures ready under {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
