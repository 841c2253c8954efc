"""Hint-position selection for knowledge distillation via layer-similarity clustering.

Pipeline: activation dump -> (N, C) layer representations -> pairwise
similarity (linear/RBF CKA or mean-squared CCA) -> k-means with
D = 1 - similarity -> one hint position per cluster. Reference loss kernels
for the distillation stage live in :mod:`hintscout.losses`.
"""

from ._version import __version__
from .clustering import ClusterAssignment, ClusterConfig, assign, kmeans, seed, seed_positions, update
from .container import (
    DumpManifest,
    LayerEntry,
    TensorBlob,
    load_dump,
    read_blob,
    read_manifest,
    write_blob,
    write_manifest,
)
from .errors import (
    DegenerateLayerError,
    FormatError,
    HintScoutError,
    LengthError,
    ValidationError,
)
from .losses import (
    ATTENTION_P1,
    IDENTITY_MSE,
    HintPair,
    LossWeights,
    attention_map,
    classification_loss,
    compression_report,
    hint_loss,
    logit_loss,
    soften,
    total_loss,
)
from .representation import (
    SAMPLE_BUDGET,
    LayerRepresentation,
    build_representations,
    normalize,
    pad_channels,
    represent,
)
from .selection import (
    HintConfig,
    baseline_positions,
    emit_hint_config,
    read_hint_config,
    select_positions,
)
from .similarity import (
    MetricSpec,
    SimilarityMatrix,
    cka,
    centroid_similarity,
    hsic,
    layer_similarity,
    r2_cca,
    similarity_matrix,
)

__all__ = [
    "__version__",
    "ATTENTION_P1",
    "IDENTITY_MSE",
    "ClusterAssignment",
    "ClusterConfig",
    "DumpManifest",
    "DegenerateLayerError",
    "FormatError",
    "HintConfig",
    "HintPair",
    "HintScoutError",
    "LayerEntry",
    "LayerRepresentation",
    "LengthError",
    "LossWeights",
    "MetricSpec",
    "SAMPLE_BUDGET",
    "SimilarityMatrix",
    "TensorBlob",
    "ValidationError",
    "assign",
    "attention_map",
    "baseline_positions",
    "build_representations",
    "centroid_similarity",
    "cka",
    "classification_loss",
    "compression_report",
    "emit_hint_config",
    "hint_loss",
    "hsic",
    "kmeans",
    "layer_similarity",
    "load_dump",
    "logit_loss",
    "normalize",
    "pad_channels",
    "r2_cca",
    "read_blob",
    "read_hint_config",
    "read_manifest",
    "represent",
    "seed",
    "seed_positions",
    "select_positions",
    "similarity_matrix",
    "soften",
    "total_loss",
    "update",
    "write_blob",
    "write_manifest",
]
