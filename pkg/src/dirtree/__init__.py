"""Directory-page parsing for financial prospectuses.

The pipeline finds pages that list the parties around a fund (managers,
custodians, auditors, counsel), labels each text span as a header or a body,
rebuilds the page's reading hierarchy bottom-up and emits directory blocks:
the stack of headers leading to each body entry.
"""

from .annotate import (
    Annotation,
    AnnotationLabel,
    AnnotationSet,
    Gazetteer,
    GazetteerError,
    annotate,
    annotate_document,
    is_address_candidate,
)
from .features import FEATURE_NAMES, FeatureVector, extract_features
from .forest import (
    Dataset,
    EmptyClassError,
    ForestHyperparams,
    ForestModel,
    load_model,
    predict,
    predict_score,
    resample,
    save_model,
    train,
)
from .metrics import (
    PRF,
    PageSetMismatch,
    eval_classifier,
    eval_segmentation,
    eval_tree,
    normalize_text,
)
from .segment import (
    EmptyPageError,
    LabeledSpan,
    PageStyleStats,
    SpanLabel,
    page_style_stats,
    segment_page,
)
from .tree import (
    DirectoryBlock,
    NodeLabel,
    ReadingTree,
    TreeInvariantError,
    TreeNode,
    TreeParams,
    build_tree,
    cluster_headers,
    directory_blocks,
    reading_sequence,
    validate_tree,
)
from .visual import (
    BBox,
    GeometryError,
    Group,
    Line,
    SchemaError,
    Segment,
    StyleInfo,
    VisualPage,
    document_to_json,
    group_layout,
    group_text,
    parse_document,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationLabel",
    "AnnotationSet",
    "BBox",
    "Dataset",
    "DirectoryBlock",
    "EmptyClassError",
    "EmptyPageError",
    "FEATURE_NAMES",
    "FeatureVector",
    "ForestHyperparams",
    "ForestModel",
    "Gazetteer",
    "GazetteerError",
    "GeometryError",
    "Group",
    "LabeledSpan",
    "Line",
    "NodeLabel",
    "PRF",
    "PageSetMismatch",
    "PageStyleStats",
    "ReadingTree",
    "SchemaError",
    "Segment",
    "SpanLabel",
    "StyleInfo",
    "TreeInvariantError",
    "TreeNode",
    "TreeParams",
    "VisualPage",
    "annotate",
    "annotate_document",
    "build_tree",
    "cluster_headers",
    "directory_blocks",
    "document_to_json",
    "eval_classifier",
    "eval_segmentation",
    "eval_tree",
    "extract_features",
    "group_layout",
    "group_text",
    "is_address_candidate",
    "load_model",
    "normalize_text",
    "page_style_stats",
    "parse_document",
    "predict",
    "predict_score",
    "reading_sequence",
    "resample",
    "save_model",
    "segment_page",
    "train",
    "validate_tree",
]
