"""Hint-position selection from a converged clustering, plus the config emitter.

A cluster's hint is positional: the lower median of its sorted member indices
(rule "center") or its maximum index (rule "last"). Positions are 1-based over
the manifest's layer order; the emitted JSON carries the indexing convention
explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ._version import __version__
from .clustering import ClusterAssignment
from .errors import FormatError, ValidationError
from .similarity import MetricSpec

POSITION_RULES = ("center", "last")


@dataclass
class HintConfig:
    teacher_name: str
    metric: MetricSpec
    k: int
    position_rule: str
    hint_positions: list[int]
    cluster_members: list[list[int]]  # sorted per cluster, clusters ordered by min index

    def validate(self) -> None:
        if self.position_rule not in POSITION_RULES:
            raise ValidationError(f"unknown position rule {self.position_rule!r}")
        if len(self.hint_positions) != self.k or len(self.cluster_members) != self.k:
            raise ValidationError(
                f"need exactly k={self.k} positions and clusters, got "
                f"{len(self.hint_positions)} and {len(self.cluster_members)}"
            )
        if any(b <= a for a, b in zip(self.hint_positions, self.hint_positions[1:])):
            raise ValidationError(f"hint positions must be strictly increasing: {self.hint_positions}")
        unclaimed = list(range(self.k))
        for position in self.hint_positions:
            homes = [c for c in unclaimed if position in self.cluster_members[c]]
            if not homes:
                raise ValidationError(f"position {position} belongs to no unclaimed cluster")
            unclaimed.remove(homes[0])


def _chosen_position(members: list[int], rule: str) -> int:
    if rule == "last":
        return members[-1]
    return members[(len(members) - 1) // 2]  # lower median


def select_positions(
    assignment: ClusterAssignment, rule: str, teacher_name: str = ""
) -> HintConfig:
    """One hint position per cluster, under the given position rule.

    Depends only on cluster membership, never on centroid matrices. Clusters
    are ordered by their minimum member index; output positions sorted
    ascending.
    """
    if rule not in POSITION_RULES:
        raise ValueError(f"unknown position rule {rule!r}, expected one of {POSITION_RULES}")
    members = [m for m in assignment.members() if m]
    if len(members) != assignment.config.k:
        raise ValidationError("assignment has empty clusters")
    members.sort(key=lambda m: m[0])
    config = HintConfig(
        teacher_name=teacher_name,
        metric=assignment.config.metric,
        k=assignment.config.k,
        position_rule=rule,
        hint_positions=sorted(_chosen_position(m, rule) for m in members),
        cluster_members=members,
    )
    config.validate()
    return config


def baseline_positions(group_sizes: list[int]) -> list[int]:
    """Hints at the end of each spatial-size group: cumulative sums of the sizes."""
    if any(size <= 0 for size in group_sizes):
        raise ValueError(f"group sizes must be positive: {group_sizes}")
    positions = []
    total = 0
    for size in group_sizes:
        total += size
        positions.append(total)
    return positions


def emit_hint_config(config: HintConfig, destination: str | Path) -> None:
    """Write the hint-config JSON; byte-stable for identical inputs."""
    config.validate()
    metric: dict = {"kind": config.metric.kind}
    if config.metric.kind == "cka_rbf":
        metric["rbf_fraction"] = config.metric.rbf_bandwidth_fraction
    doc = {
        "teacher": config.teacher_name,
        "metric": metric,
        "k": config.k,
        "rule": config.position_rule,
        "positions": config.hint_positions,
        "clusters": config.cluster_members,
        "indexing": "1-based",
        "tool_version": __version__,
    }
    Path(destination).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_hint_config(path: str | Path) -> HintConfig:
    """Parse an emitted hint config; inverse of :func:`emit_hint_config`."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse hint config {path}: {exc}") from exc
    for key in ("teacher", "metric", "k", "rule", "positions", "clusters"):
        if key not in doc:
            raise FormatError(f"hint config missing key '{key}'")
    metric = MetricSpec(
        kind=doc["metric"]["kind"],
        rbf_bandwidth_fraction=doc["metric"].get("rbf_fraction", 0.5),
    )
    config = HintConfig(
        teacher_name=doc["teacher"],
        metric=metric,
        k=doc["k"],
        position_rule=doc["rule"],
        hint_positions=[int(p) for p in doc["positions"]],
        cluster_members=[[int(i) for i in c] for c in doc["clusters"]],
    )
    config.validate()
    return config
