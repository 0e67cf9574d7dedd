"""Batch command-line frontend.

Subcommands: ``split``, ``explore``, ``sample``, ``gtgen``, ``evaluate``,
``stats``.  Every command is a deterministic function of its inputs and the
seed: reruns produce byte-identical outputs.  Exit codes: 0 success, 1
runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Iterable, TypeVar

from . import __version__
from .annot_io import (
    DatasetManifest,
    ManifestEntry,
    SplitSpec,
    load_document,
    load_manifest,
    parse_annotation,
    rebase_manifest,
    save_image,
    save_manifest,
    serialize_annotation,
    split_dataset,
)
from .config import RunConfig, apply_flag_overrides, load_config
from .errors import AnnotationError, ConfigError, StructAugError
from .ops import standard_augment
from .metrics import SegmentationReport, evaluate
from .pipeline import (
    categorize_doc,
    distribution_for,
    explore_tree,
    global_frequency_from_counts,
    load_node_set,
    node_frequency,
    save_node_set,
    training_stream,
)
from .pixelgt import binarize, expand_separators, mask_paths, write_mask_png
from .reporting import (
    grid_text,
    render_grid_heatmap,
    render_metrics_figure,
    report_csv_bytes,
)
from .rng import DOMAIN_EXPLORE, DOMAIN_STREAM, Rng, derive_seed, fnv1a64

T = TypeVar("T")
R = TypeVar("R")


def safe_stem(table_id: str) -> str:
    """Path-safe filename stem; a hash suffix disambiguates sanitized ids."""
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", table_id)
    if safe != table_id:
        safe = f"{safe}-{fnv1a64(table_id.encode('utf-8')):016x}"
    return safe


def cache_filename(table_id: str) -> str:
    return f"{safe_stem(table_id)}.nodes.json"


def _parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int) -> list[R]:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_flag_overrides(cfg, args)


def _train_shapes(manifest: DatasetManifest) -> list[tuple[int, int]]:
    shapes = []
    for entry in manifest.train_entries():
        doc = parse_annotation(manifest.resolve(entry.annotation).read_bytes())
        shapes.append((doc.n_rows, doc.n_cols))
    return shapes


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_split(args) -> int:
    cfg = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    out = split_dataset(manifest, SplitSpec(ratios=cfg.ratios, seed=cfg.seed))
    target = Path(args.out) if args.out else Path(args.manifest)
    out = rebase_manifest(out, target.parent)
    save_manifest(out, target)
    counts = {s: sum(1 for e in out.entries if e.split == s) for s in ("train", "test", "val")}
    print(f"split {len(out.entries)} tables -> train={counts['train']} test={counts['test']} val={counts['val']}")
    print(f"wrote {target}")
    return 0


def cmd_explore(args) -> int:
    cfg = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = manifest.train_entries()

    def explore_one(entry: ManifestEntry):
        try:
            doc = load_document(manifest, entry)
        except (AnnotationError, OSError) as exc:
            return entry, None, None, str(exc)
        table_seed = derive_seed(cfg.seed, DOMAIN_EXPLORE, entry.id)
        tree_cfg = replace(cfg.tree, seed=table_seed)
        node_set = explore_tree(doc, tree_cfg, Rng(table_seed))
        save_node_set(node_set, out_dir / cache_filename(entry.id))
        return entry, node_set, (doc.n_rows, doc.n_cols), None

    results = _parallel_map(explore_one, entries, cfg.resolved_jobs())

    skipped = 0
    shapes = []
    for entry, node_set, shape, error in results:
        if error is not None:
            skipped += 1
            print(f"warning: skipping {entry.id}: {error}", file=sys.stderr)
            continue
        shapes.append(shape)
        print(f"{entry.id}: {len(node_set)} nodes")
        print(grid_text(node_frequency(node_set)))
    if shapes:
        print("global category frequencies (train):")
        print(grid_text(global_frequency_from_counts(shapes)))
    print(f"explored {len(entries) - skipped} tables ({skipped} skipped) -> {out_dir}")
    return 0


def cmd_sample(args) -> int:
    cfg = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = manifest.train_entries()

    if args.baseline:
        return _sample_baseline(cfg, manifest, entries, out_dir, args.n)

    cache_dir = Path(args.caches) if args.caches else None
    if cache_dir is None:
        print("error: --caches is required (or use --baseline)", file=sys.stderr)
        return 2
    missing = [e.id for e in entries if not (cache_dir / cache_filename(e.id)).exists()]
    if missing:
        print(
            f"error: no node cache for {', '.join(missing)}; run "
            f"`structaug explore` first",
            file=sys.stderr,
        )
        return 1

    fg = global_frequency_from_counts(_train_shapes(manifest))

    def sample_one(entry: ManifestEntry) -> tuple[str, int]:
        doc = load_document(manifest, entry)
        node_set = load_node_set(cache_dir / cache_filename(entry.id), doc)
        p = distribution_for(node_set, fg, categorize_doc(doc), cfg.sigma)
        stream = training_stream(
            doc,
            node_set,
            p,
            Rng(derive_seed(cfg.seed, DOMAIN_STREAM, entry.id)),
            p_augment=cfg.p_augment,
        )
        for i in range(args.n):
            draw = next(stream)
            stem = out_dir / f"{safe_stem(entry.id)}-{i:03d}"
            stem.with_suffix(".json").write_bytes(serialize_annotation(draw))
            save_image(draw.image, stem.with_suffix(".png"))
        return entry.id, args.n

    results = _parallel_map(sample_one, entries, cfg.resolved_jobs())
    for table_id, count in results:
        print(f"{table_id}: wrote {count} draws")
    print(f"sampled {len(results)} tables x {args.n} draws -> {out_dir}")
    return 0


def _sample_baseline(cfg, manifest, entries, out_dir: Path, n: int) -> int:
    """Image-transform baseline draws: jittered/cropped pixels, annotations
    passed through untouched (crop bookkeeping is the training harness's
    job)."""

    def baseline_one(entry: ManifestEntry) -> tuple[str, int]:
        doc = load_document(manifest, entry)
        rng = Rng(derive_seed(cfg.seed, DOMAIN_STREAM, entry.id))
        for i in range(n):
            image = standard_augment(doc.image, cfg.baseline, rng)
            stem = out_dir / f"{safe_stem(entry.id)}-{i:03d}"
            stem.with_suffix(".json").write_bytes(serialize_annotation(doc))
            save_image(image, stem.with_suffix(".png"))
        return entry.id, n

    results = _parallel_map(baseline_one, entries, cfg.resolved_jobs())
    for table_id, count in results:
        print(f"{table_id}: wrote {count} baseline draws")
    print(f"baseline-augmented {len(results)} tables x {n} draws -> {out_dir}")
    return 0


def cmd_gtgen(args) -> int:
    cfg = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def gtgen_one(entry: ManifestEntry) -> str:
        doc = load_document(manifest, entry)
        row_mask, col_mask = expand_separators(doc, binarize(doc.image, cfg.binarize_threshold))
        row_path, col_path = mask_paths(out_dir, safe_stem(entry.id))
        write_mask_png(row_mask, row_path)
        write_mask_png(col_mask, col_path)
        return entry.id

    done = _parallel_map(gtgen_one, manifest.entries, cfg.resolved_jobs())
    print(f"wrote separator masks for {len(done)} tables -> {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    pred_dir = Path(args.pred)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = manifest.by_split(args.split) if args.split else manifest.entries

    per_table: dict[str, SegmentationReport] = {}
    missing: list[str] = []
    for entry in entries:
        pred_path = pred_dir / f"{entry.id}.json"
        if not pred_path.exists():
            missing.append(entry.id)
            continue
        gt_doc = parse_annotation(manifest.resolve(entry.annotation).read_bytes())
        pred_doc = parse_annotation(pred_path.read_bytes())
        per_table[entry.id] = evaluate(gt_doc, pred_doc, cfg.threshold)

    if not per_table:
        print("error: no predictions found to evaluate", file=sys.stderr)
        return 1

    aggregate = SegmentationReport.merged(list(per_table.values()))
    report_obj = {
        "threshold": cfg.threshold,
        "tables": {tid: per_table[tid].to_json() for tid in sorted(per_table)},
        "aggregate": aggregate.to_json(),
        "missing": sorted(missing),
    }
    (out_dir / "report.json").write_text(json.dumps(report_obj, indent=2) + "\n")
    (out_dir / "report.csv").write_bytes(report_csv_bytes(per_table, aggregate))
    figures = out_dir / "figures"
    figures.mkdir(exist_ok=True)
    render_metrics_figure(aggregate, figures / "metrics.png")

    for kind in ("row", "column", "cell"):
        k = aggregate.kind(kind)
        print(
            f"{kind:>6}: correct {k.correct_pct:6.2f}%  over {k.over_pct:5.2f}%  "
            f"under {k.under_pct:5.2f}%  ({k.gt_count} segments)"
        )
    print(f"evaluated {len(per_table)} tables -> {out_dir}")
    if missing:
        print(f"error: missing predictions for {len(missing)} tables: {', '.join(missing)}", file=sys.stderr)
        return 1
    return 0


def cmd_stats(args) -> int:
    cfg = _load_run_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    split_counts = {s: sum(1 for e in manifest.entries if e.split == s) for s in ("train", "test", "val")}
    split_counts["unassigned"] = sum(1 for e in manifest.entries if e.split is None)

    shapes = []
    for entry in manifest.entries:
        doc = parse_annotation(manifest.resolve(entry.annotation).read_bytes())
        shapes.append((entry.id, entry.split, doc.n_rows, doc.n_cols, categorize_doc(doc).label))
    fg = global_frequency_from_counts([(r, c) for _, _, r, c, _ in shapes])

    lines = ["table,split,rows,columns,category"]
    for table_id, split, rows, cols, label in shapes:
        lines.append(f"{table_id},{split or ''},{rows},{cols},{label}")
    (out_dir / "stats.csv").write_text("\n".join(lines) + "\n")
    render_grid_heatmap(fg, "table categories", out_dir / "categories.png")

    node_total = 0
    if args.caches:
        cache_dir = Path(args.caches)
        for entry in manifest.train_entries():
            path = cache_dir / cache_filename(entry.id)
            if path.exists():
                node_total += len(json.loads(path.read_text("utf-8"))["nodes"])
        print(f"cached nodes across train tables: {node_total}")

    print(f"tables: {len(manifest.entries)}  splits: {split_counts}")
    print("category frequencies:")
    print(grid_text(fg))
    print(f"wrote {out_dir / 'stats.csv'} and {out_dir / 'categories.png'}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, *, out_required: bool = True) -> None:
    parser.add_argument("--manifest", required=True, help="dataset manifest JSON")
    parser.add_argument("--config", help="run-config JSON file (flags win)")
    parser.add_argument("--seed", type=int, default=None, help="base seed")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers (0 = all cores)")
    if out_required:
        parser.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structaug",
        description="Structure-preserving table augmentation, pixel ground truth and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="assign train/test/val splits to a manifest")
    _add_common(p, out_required=False)
    p.add_argument("--out", help="output manifest path (default: overwrite input)")
    p.add_argument("--ratios", help="train,test,val ratios (default 0.72,0.2,0.08)")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("explore", help="precompute augmentation trees for train tables")
    _add_common(p)
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("sample", help="materialize training draws from cached trees")
    _add_common(p)
    p.add_argument("--caches", help="node cache directory from explore")
    p.add_argument("--n", type=int, default=5, help="draws per table")
    p.add_argument("--baseline", action="store_true",
                   help="image-transform baseline instead of structural draws")
    p.add_argument("--sigma", type=float, default=None, help="category Gaussian spread")
    p.add_argument("--p-augment", dest="p_augment", type=float, default=None,
                   help="probability of yielding an augmented variant")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("gtgen", help="render separator-band pixel ground truth")
    _add_common(p)
    p.set_defaults(fn=cmd_gtgen)

    p = sub.add_parser("evaluate", help="score predicted structures against ground truth")
    _add_common(p)
    p.add_argument("--pred", required=True, help="directory of <id>.json predictions")
    p.add_argument("--threshold", type=float, default=None, help="overlap threshold T")
    p.add_argument("--split", choices=("train", "test", "val"), help="restrict to one split")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("stats", help="dataset statistics, category grid and figures")
    _add_common(p)
    p.add_argument("--caches", help="optional node cache directory to summarize")
    p.set_defaults(fn=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (StructAugError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:  # pragma: no cover - console script shim
    sys.exit(main())
