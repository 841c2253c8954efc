"""K-means over layer representations with distance D = 1 - similarity.

Seeds are the layers at evenly spaced 1-based positions (first, center, last
for k = 3). Assignment and update alternate until the assignment is a fixed
point or the iteration cap is hit. 1 - CKA and 1 - R^2_CCA are not true
metrics (no triangle inequality), but alternating minimization is still
well-defined; no correction is applied.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLayerError
from .representation import LayerRepresentation
from .similarity import MetricSpec, centroid_similarity

SEED_RULES = ("evenly_spaced_by_index",)


@dataclass(frozen=True)
class ClusterConfig:
    k: int
    metric: MetricSpec = MetricSpec()
    max_iterations: int = 100
    seed_rule: str = "evenly_spaced_by_index"

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.seed_rule not in SEED_RULES:
            raise ValueError(f"unknown seed rule {self.seed_rule!r}")


@dataclass
class ClusterAssignment:
    """Converged (or capped) clustering state.

    ``labels`` maps 1-based layer index to a cluster id in [1..k].
    ``cost_history`` holds one entry per iteration: the cost of that
    iteration's final state, i.e. its labels measured against the centroids
    recomputed from them. The last entry equals ``cost``.
    """

    labels: dict[int, int]
    centroids: list[np.ndarray]
    cost: float
    iterations_run: int
    converged: bool
    config: ClusterConfig
    cost_history: list[float] = field(default_factory=list)

    def members(self) -> list[list[int]]:
        """Per-cluster sorted layer indices, for cluster ids 1..k."""
        out: list[list[int]] = [[] for _ in range(self.config.k)]
        for layer_index, cluster_id in self.labels.items():
            out[cluster_id - 1].append(layer_index)
        return [sorted(m) for m in out]

    def to_json(self) -> str:
        import json

        metric: dict = {"kind": self.config.metric.kind}
        if self.config.metric.kind == "cka_rbf":
            metric["rbf_fraction"] = self.config.metric.rbf_bandwidth_fraction
        doc = {
            "labels": {str(i): c for i, c in sorted(self.labels.items())},
            "cost": self.cost,
            "iterations": self.iterations_run,
            "converged": self.converged,
            "config": {
                "k": self.config.k,
                "metric": metric,
                "max_iterations": self.config.max_iterations,
                "seed_rule": self.config.seed_rule,
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def seed_positions(layer_count: int, k: int) -> list[int]:
    """Evenly spaced 1-based seed positions: round(1 + (i-1)(L-1)/(k-1)).

    Rounding is half-down so the k = 3 center of an even-length model is the
    lower of the two middle layers.
    """
    if not 1 <= k <= layer_count:
        raise ValueError(f"k={k} outside [1, {layer_count}]")
    if k == 1:
        return [1]
    step = (layer_count - 1) / (k - 1)
    return [math.ceil(1 + (i - 1) * step - 0.5) for i in range(1, k + 1)]


def seed(reps: list[LayerRepresentation], k: int) -> list[np.ndarray]:
    """Initial centroids: copies of the representation matrices at the seed positions."""
    positions = seed_positions(len(reps), k)
    return [reps[p - 1].matrix.copy() for p in positions]


def _distance_grid(
    reps: list[LayerRepresentation], centroids: list[np.ndarray], spec: MetricSpec
) -> np.ndarray:
    grid = np.empty((len(reps), len(centroids)))
    for i, rep in enumerate(reps):
        for j, centroid in enumerate(centroids):
            try:
                grid[i, j] = 1.0 - centroid_similarity(rep, centroid, spec)
            except DegenerateLayerError as exc:
                raise DegenerateLayerError(
                    f"layer {rep.layer_index} vs cluster {j + 1} centroid: {exc}"
                ) from exc
    return grid


def assign(
    reps: list[LayerRepresentation], centroids: list[np.ndarray], spec: MetricSpec
) -> list[int]:
    """Nearest-centroid labels (1-based cluster ids), ties toward the lower id."""
    grid = _distance_grid(reps, centroids, spec)
    return [int(j) + 1 for j in grid.argmin(axis=1)]


def update(reps: list[LayerRepresentation], labels: list[int], k: int) -> list[np.ndarray]:
    """New centroids: entrywise mean of each cluster's member matrices."""
    centroids = []
    for cluster_id in range(1, k + 1):
        members = [rep.matrix for rep, lab in zip(reps, labels) if lab == cluster_id]
        if not members:
            raise ValueError(f"cluster {cluster_id} has no members; repair must run first")
        centroids.append(np.mean(members, axis=0))
    return centroids


def _repair_empty(labels: list[int], grid: np.ndarray, k: int) -> list[int]:
    """Move the worst-fitting layer of a multi-member cluster into each empty cluster."""
    labels = list(labels)
    for cluster_id in range(1, k + 1):
        if cluster_id in labels:
            continue
        counts = Counter(labels)
        candidates = [i for i, lab in enumerate(labels) if counts[lab] >= 2]
        worst = max(candidates, key=lambda i: (grid[i, labels[i] - 1], -i))
        labels[worst] = cluster_id
    return labels


def kmeans(reps: list[LayerRepresentation], config: ClusterConfig) -> ClusterAssignment:
    """Alternate assignment and update from the seeds until labels are fixed.

    An iteration is one assignment plus the update it triggers; the final
    confirming assignment that detects the fixed point is not counted. Empty
    clusters are repaired before the fixed-point check by donating the layer
    farthest from its own centroid.
    """
    if config.k > len(reps):
        raise ValueError(f"k={config.k} exceeds layer count {len(reps)}")
    spec = config.metric
    centroids = seed(reps, config.k)
    previous: list[int] | None = None
    iterations = 0
    converged = False
    cost_history: list[float] = []
    while iterations < config.max_iterations:
        grid = _distance_grid(reps, centroids, spec)
        if previous is not None:
            # centroids == update(previous) here, so this row read is the
            # consistent-state cost of the iteration just completed
            cost_history.append(float(sum(grid[i, lab - 1] for i, lab in enumerate(previous))))
        labels = [int(j) + 1 for j in grid.argmin(axis=1)]
        labels = _repair_empty(labels, grid, config.k)
        if labels == previous:
            converged = True
            break
        iterations += 1
        previous = labels
        centroids = update(reps, previous, config.k)

    assert previous is not None
    if not converged:
        cost_history.append(
            float(
                sum(
                    1.0 - centroid_similarity(rep, centroids[lab - 1], spec)
                    for rep, lab in zip(reps, previous)
                )
            )
        )
    return ClusterAssignment(
        labels={rep.layer_index: lab for rep, lab in zip(reps, previous)},
        centroids=centroids,
        cost=cost_history[-1],
        iterations_run=iterations,
        converged=converged,
        config=config,
        cost_history=cost_history,
    )
