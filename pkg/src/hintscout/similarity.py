"""Representation-similarity metrics: HSIC, linear/RBF CKA, mean-squared CCA.

All metrics take (N, C) matrices with samples as rows and return a scalar in
[0, 1] up to floating rounding. The empirical HSIC of two n x n kernel
matrices is tr(K H L H) / (n-1)^2 with H = I - ones/n; CKA is the HSIC ratio
HSIC(K, L) / sqrt(HSIC(K, K) HSIC(L, L)). Mean-squared CCA is the mean of the
squared canonical correlations, computed as ||Q_Y^T Q_X||_F^2 / p1 from
orthonormal bases of the column-centered matrices.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLayerError, ValidationError
from .representation import LayerRepresentation

METRIC_KINDS = ("cka_linear", "cka_rbf", "r2_cca")

# Absolute floor for HSIC(K, K) below which the CKA denominator is treated
# as degenerate, and the relative singular-value cutoff for numerical rank.
DEGENERACY_TOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class MetricSpec:
    """Which similarity metric to use, plus the RBF bandwidth rule.

    The RBF kernel bandwidth is ``rbf_bandwidth_fraction`` times the median
    pairwise Euclidean row distance of the matrix the kernel is built from.
    """

    kind: str = "cka_linear"
    rbf_bandwidth_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}, expected one of {METRIC_KINDS}")
        if not self.rbf_bandwidth_fraction > 0:
            raise ValueError("rbf_bandwidth_fraction must be positive")


def hsic(k: np.ndarray, l: np.ndarray) -> float:
    """Empirical HSIC of two symmetric n x n kernel matrices.

    Uses the double-centering identity tr(K H L H) = sum(HKH * L), valid for
    symmetric L, instead of materializing H.
    """
    k = np.asarray(k, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel matrix must be square, got {k.shape}")
    if k.shape != l.shape:
        raise ValueError(f"kernel shapes differ: {k.shape} vs {l.shape}")
    n = k.shape[0]
    if n < 2:
        raise ValueError("HSIC needs at least two samples")
    kc = k - k.mean(axis=0, keepdims=True) - k.mean(axis=1, keepdims=True) + k.mean()
    return float((kc * l).sum() / (n - 1) ** 2)


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _rbf_gram(x: np.ndarray, bandwidth_fraction: float) -> np.ndarray:
    d2 = _pairwise_sq_dists(x)
    n = x.shape[0]
    iu = np.triu_indices(n, k=1)
    median = float(np.median(np.sqrt(d2[iu])))
    sigma = bandwidth_fraction * median
    if sigma <= 0:
        raise DegenerateLayerError("zero median pairwise row distance (constant rows)")
    return np.exp(-d2 / (2.0 * sigma * sigma))


def cka(x: np.ndarray, y: np.ndarray, spec: MetricSpec = MetricSpec()) -> float:
    """Centered kernel alignment between two representation matrices.

    ``cka_linear`` uses Gram matrices XX^T and YY^T, evaluated through the
    algebraically identical feature-space form ||Xc^T Yc||_F^2; ``cka_rbf``
    builds Gaussian kernels with the per-matrix median-distance bandwidth.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("CKA expects matrices with samples as rows")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if n < 3:
        raise ValueError("CKA needs at least three samples")
    scale = 1.0 / (n - 1) ** 2
    if spec.kind == "cka_linear":
        xc = x - x.mean(axis=0)
        yc = y - y.mean(axis=0)
        cross = np.linalg.norm(xc.T @ yc) ** 2 * scale
        xx = np.linalg.norm(xc.T @ xc) ** 2 * scale
        yy = np.linalg.norm(yc.T @ yc) ** 2 * scale
    elif spec.kind == "cka_rbf":
        kx = _rbf_gram(x, spec.rbf_bandwidth_fraction)
        ky = _rbf_gram(y, spec.rbf_bandwidth_fraction)
        cross = hsic(kx, ky)
        xx = hsic(kx, kx)
        yy = hsic(ky, ky)
    else:
        raise ValueError(f"cka does not handle metric kind {spec.kind!r}")
    if xx <= DEGENERACY_TOL:
        raise DegenerateLayerError("first argument degenerate: HSIC(K, K) ~ 0")
    if yy <= DEGENERACY_TOL:
        raise DegenerateLayerError("second argument degenerate: HSIC(L, L) ~ 0")
    return float(cross / np.sqrt(xx * yy))


def _orthonormal_basis(matrix: np.ndarray, side: str) -> np.ndarray:
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise DegenerateLayerError(f"{side} argument is all-zero after centering")
    rank = int((s > RANK_TOL * s[0]).sum())
    return u[:, :rank]


def r2_cca(x: np.ndarray, y: np.ndarray, p1: int | None = None) -> float:
    """Mean squared canonical correlation between two representation matrices.

    Columns are centered internally; orthonormal bases are truncated to
    numerical rank. ``p1`` defaults to the smaller column count and should be
    the smaller *original* channel count when matrices carry zero padding.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("R^2_CCA expects matrices with samples as rows")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"sample counts differ: {x.shape[0]} vs {y.shape[0]}")
    if p1 is None:
        p1 = min(x.shape[1], y.shape[1])
    if p1 <= 0:
        raise ValueError("p1 must be positive")
    qx = _orthonormal_basis(x - x.mean(axis=0), "first")
    qy = _orthonormal_basis(y - y.mean(axis=0), "second")
    return float(np.linalg.norm(qy.T @ qx) ** 2 / p1)


def layer_similarity(a: LayerRepresentation, b: LayerRepresentation, spec: MetricSpec) -> float:
    """Metric value between two layers; discounts padding for the CCA rank."""
    if spec.kind == "r2_cca":
        return r2_cca(a.matrix, b.matrix, p1=min(a.original_channels, b.original_channels))
    return cka(a.matrix, b.matrix, spec)


def centroid_similarity(rep: LayerRepresentation, centroid: np.ndarray, spec: MetricSpec) -> float:
    """Metric value between a layer and a centroid matrix.

    Centroids have no original channel count, so the CCA rank parameter is the
    layer's own channel count; the centroid basis is truncated to numerical
    rank as usual. CKA operates on the padded width directly.
    """
    if spec.kind == "r2_cca":
        return r2_cca(rep.matrix, centroid, p1=rep.original_channels)
    return cka(rep.matrix, centroid, spec)


@dataclass
class SimilarityMatrix:
    """Symmetric L x L matrix of pairwise layer similarities."""

    values: np.ndarray
    metric: MetricSpec
    layer_indices: list[int]

    def to_json(self) -> str:
        import json

        metric: dict = {"kind": self.metric.kind}
        if self.metric.kind == "cka_rbf":
            metric["rbf_fraction"] = self.metric.rbf_bandwidth_fraction
        doc = {
            "metric": metric,
            "layer_indices": self.layer_indices,
            "values": [[float(v) for v in row] for row in self.values],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def similarity_matrix(
    reps: list[LayerRepresentation],
    spec: MetricSpec = MetricSpec(),
    threads: int = 1,
) -> SimilarityMatrix:
    """Evaluate the metric on every layer pair.

    The unordered pair grid is evaluated once per pair (optionally across a
    thread pool) and reduced into the matrix in index order, so the result is
    deterministic regardless of scheduling. The diagonal is forced to exactly
    1 and the matrix is exactly symmetric by construction.
    """
    if len(reps) < 2:
        raise ValueError("need at least two layers")
    counts = {rep.matrix.shape[0] for rep in reps}
    if len(counts) > 1:
        raise ValidationError(f"sample counts differ across layers: {sorted(counts)}")
    n_layers = len(reps)
    pairs = [(i, j) for i in range(n_layers) for j in range(i + 1, n_layers)]

    def compute(pair: tuple[int, int]) -> float:
        i, j = pair
        try:
            return layer_similarity(reps[i], reps[j], spec)
        except DegenerateLayerError as exc:
            raise DegenerateLayerError(
                f"layers {reps[i].layer_index} and {reps[j].layer_index}: {exc}"
            ) from exc

    if threads > 1 and pairs:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(compute, pairs))
    else:
        results = [compute(p) for p in pairs]

    values = np.eye(n_layers)
    for (i, j), value in zip(pairs, results):
        values[i, j] = value
        values[j, i] = value
    return SimilarityMatrix(values, spec, [rep.layer_index for rep in reps])
