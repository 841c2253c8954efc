"""Layer representation matrices: spatial averaging, normalization, channel padding.

A candidate layer's activations (N, C, H, W) are reduced to an (N, C) matrix
by averaging over height and width; fully-connected activations (N, C) pass
through unchanged. Representations are optionally z-scored per column and
zero-padded on the channel axis to a common width so centroid arithmetic can
average matrices of different channel counts. Zero padding leaves both the
linear Gram matrix and all pairwise row distances unchanged, so it perturbs
neither similarity metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import LayerEntry, TensorBlob
from .errors import ValidationError

# Default number of samples kept from a dump; larger dumps are clipped to
# their leading rows, smaller dumps are used whole.
SAMPLE_BUDGET = 10_000


@dataclass
class LayerRepresentation:
    """Per-layer (N, C_pad) matrix with its pre-padding channel count."""

    layer_index: int  # 1-based
    matrix: np.ndarray
    original_channels: int
    normalized: bool = False

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValidationError(f"layer {self.layer_index}: representation must be a matrix")
        if self.matrix.shape[0] < 2:
            raise ValidationError(f"layer {self.layer_index}: needs at least two samples")
        if not (0 < self.original_channels <= self.matrix.shape[1]):
            raise ValidationError(
                f"layer {self.layer_index}: original channel count {self.original_channels} "
                f"outside matrix width {self.matrix.shape[1]}"
            )
        if not np.isfinite(self.matrix).all():
            raise ValidationError(f"layer {self.layer_index}: non-finite entries")
        if np.any(self.matrix[:, self.original_channels :] != 0.0):
            raise ValidationError(f"layer {self.layer_index}: padding columns must be zero")


def represent(blob: TensorBlob) -> np.ndarray:
    """Reduce a blob to an (N, C) float64 matrix.

    Rank-4 input is averaged over the two spatial axes; rank-2 input is
    returned unchanged (up to the float64 cast, which is exact).
    """
    arr = blob.array
    if arr.ndim == 4:
        return arr.astype(np.float64).mean(axis=(2, 3))
    if arr.ndim == 2:
        return arr.astype(np.float64)
    raise ValidationError(f"expected rank 2 or 4, got rank {arr.ndim}")


def normalize(matrix: np.ndarray) -> np.ndarray:
    """Z-score each column across samples (sample std, N-1 denominator).

    Constant columns map to all-zero columns, so zero padding survives
    normalization unchanged.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] < 2:
        raise ValidationError("normalization needs at least two samples")
    constant = matrix.max(axis=0) == matrix.min(axis=0)
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0, ddof=1)
    safe_std = np.where(constant, 1.0, std)
    out = (matrix - mean) / safe_std
    out[:, constant] = 0.0
    return out


def pad_channels(reps: list[LayerRepresentation]) -> list[LayerRepresentation]:
    """Zero-pad every representation to the widest channel count in the model."""
    if not reps:
        return []
    counts = {rep.matrix.shape[0] for rep in reps}
    if len(counts) > 1:
        offenders = ", ".join(f"layer {r.layer_index} (N={r.matrix.shape[0]})" for r in reps)
        raise ValidationError(f"sample counts differ across layers: {offenders}")
    width = max(rep.matrix.shape[1] for rep in reps)
    out = []
    for rep in reps:
        pad = width - rep.matrix.shape[1]
        matrix = np.pad(rep.matrix, ((0, 0), (0, pad))) if pad else rep.matrix.copy()
        out.append(
            LayerRepresentation(rep.layer_index, matrix, rep.original_channels, rep.normalized)
        )
    return out


def build_representations(
    pairs: list[tuple[LayerEntry, TensorBlob]],
    *,
    sample_budget: int | None = SAMPLE_BUDGET,
    normalized: bool = False,
) -> list[LayerRepresentation]:
    """Dump blobs -> padded per-layer representations, in manifest order."""
    reps = []
    for entry, blob in pairs:
        matrix = represent(blob)
        if sample_budget is not None:
            matrix = matrix[:sample_budget]
        if normalized:
            matrix = normalize(matrix)
        reps.append(LayerRepresentation(entry.index, matrix, entry.channels, normalized))
    return pad_channels(reps)
