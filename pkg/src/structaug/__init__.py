"""Structure-preserving augmentation, pixel ground truth and segmentation
metrics for annotated table images."""

from .model import (
    Cell,
    CellGridIndex,
    ColumnBox,
    RowBox,
    TableDocument,
    ValidationReport,
    Violation,
    grid_index,
    transpose,
    validate,
)
from .ops import (
    AbortReason,
    Axis,
    BlockSelection,
    OpKind,
    OpOutcome,
    OpRecord,
    StandardAugmentParams,
    TargetSelection,
    apply_random_op,
    delete_block,
    replicate_block,
    replay_record,
    select_source_block,
    select_target_index,
    standard_augment,
)
from .pipeline import (
    AugNode,
    Category,
    NodeSet,
    TreeConfig,
    build_distribution,
    categorize,
    explore_tree,
    gaussian_grid,
    global_frequency,
    node_frequency,
    sample_node,
    training_stream,
)
from .annot_io import (
    DatasetManifest,
    ManifestEntry,
    SplitSpec,
    load_manifest,
    parse_annotation,
    save_manifest,
    serialize_annotation,
    split_dataset,
    training_fraction,
)
from .metrics import SegmentationReport, SegmentSet, correspondence, evaluate
from .pixelgt import SeparatorMask, binarize, expand_separators
from .rng import Rng, derive_seed

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
