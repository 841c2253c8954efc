"""Reference distillation-loss kernels.

These are the plain-numpy definitions of the losses a selected hint
configuration feeds: temperature-softened targets, KL logit loss,
cross-entropy classification loss, channel-aggregated attention maps, the
hint loss over teacher/student feature pairs, their weighted total, and the
compression-ratio report. Everything is forward-only and deterministic;
training with gradients lives in the harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import TensorBlob
from .errors import DegenerateLayerError

ATTENTION_P1 = "attention_map_p1"
IDENTITY_MSE = "identity_mse"
TRANSFORM_KINDS = (ATTENTION_P1, IDENTITY_MSE)


@dataclass(frozen=True)
class LossWeights:
    """Weights for the combined objective gamma*cls + alpha*logit + beta*hint."""

    gamma: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    temperature: float = 4.0

    def __post_init__(self) -> None:
        if min(self.gamma, self.alpha, self.beta) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.gamma == self.alpha == self.beta == 0:
            raise ValueError("at least one loss weight must be positive")
        if self.temperature < 1:
            raise ValueError("temperature must be at least 1")

    @classmethod
    def from_tradeoff(cls, tradeoff: float, temperature: float = 4.0) -> "LossWeights":
        """Two-term variant: tradeoff*logit + (1-tradeoff)*classification, no hints."""
        if not 0 <= tradeoff <= 1:
            raise ValueError("tradeoff must be in [0, 1]")
        return cls(gamma=1 - tradeoff, alpha=tradeoff, beta=0.0, temperature=temperature)


@dataclass
class HintPair:
    """One teacher/student feature pair and the transform applied to both."""

    teacher_feature: TensorBlob | np.ndarray
    student_feature: TensorBlob | np.ndarray
    transform: str = ATTENTION_P1


def _as_array(feature: TensorBlob | np.ndarray) -> np.ndarray:
    if isinstance(feature, TensorBlob):
        return feature.array.astype(np.float64)
    return np.asarray(feature, dtype=np.float64)


def soften(logits: np.ndarray, temperature: float) -> np.ndarray:
    """Temperature-softened class probabilities exp(z_i/T) / sum_j exp(z_j/T).

    The maximum logit is subtracted before exponentiation so extreme
    magnitudes cannot overflow.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0:
        raise ValueError("logit vector is empty")
    if not np.isfinite(z).all():
        raise ValueError("logits must be finite")
    if temperature < 1:
        raise ValueError("temperature must be at least 1")
    e = np.exp((z - z.max()) / temperature)
    return e / e.sum()


def _log_soften(z: np.ndarray, temperature: float) -> np.ndarray:
    s = (z - z.max()) / temperature
    return s - np.log(np.exp(s).sum())


def logit_loss(
    student_logits: np.ndarray,
    teacher_logits: np.ndarray,
    temperature: float,
    scale_by_temperature_sq: bool = True,
) -> float:
    """KL(teacher softened || student softened), scaled by T^2 by default.

    The T^2 factor keeps gradient magnitudes comparable across temperatures;
    pass ``scale_by_temperature_sq=False`` for the raw divergence.
    """
    zs = np.asarray(student_logits, dtype=np.float64)
    zt = np.asarray(teacher_logits, dtype=np.float64)
    if zs.shape != zt.shape:
        raise ValueError(f"logit shapes differ: {zs.shape} vs {zt.shape}")
    log_ps = _log_soften(zs, temperature)
    log_pt = _log_soften(zt, temperature)
    kl = float((np.exp(log_pt) * (log_pt - log_ps)).sum())
    kl = max(kl, 0.0)  # clamp -1e-17 style rounding
    return kl * temperature * temperature if scale_by_temperature_sq else kl


def classification_loss(student_logits: np.ndarray, label: int) -> float:
    """Cross-entropy of the T=1 softened logits against a one-hot label."""
    z = np.asarray(student_logits, dtype=np.float64)
    if not 0 <= label < z.size:
        raise ValueError(f"label {label} out of range for {z.size} classes")
    shifted = z - z.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


def attention_map(feature: TensorBlob | np.ndarray, p: float = 1.0) -> np.ndarray:
    """Channel-aggregated, unit-normalized spatial saliency per sample.

    Each (C, H, W) sample maps to sum_c |A_c|^p flattened to length H*W and
    divided by its Euclidean norm.
    """
    arr = _as_array(feature)
    if arr.ndim != 4:
        raise ValueError(f"attention map expects (N, C, H, W), got shape {arr.shape}")
    if p <= 0:
        raise ValueError("p must be positive")
    maps = (np.abs(arr) ** p).sum(axis=1).reshape(arr.shape[0], -1)
    norms = np.linalg.norm(maps, axis=1)
    zero = norms == 0.0
    if zero.any():
        raise DegenerateLayerError(f"all-zero feature map for sample {int(np.argmax(zero))}")
    return maps / norms[:, None]


def _pair_loss(pair: HintPair) -> float:
    teacher = _as_array(pair.teacher_feature)
    student = _as_array(pair.student_feature)
    if teacher.shape[0] != student.shape[0]:
        raise ValueError(
            f"sample counts differ: teacher {teacher.shape[0]}, student {student.shape[0]}"
        )
    if pair.transform == ATTENTION_P1:
        t_maps = attention_map(teacher, p=1.0)
        s_maps = attention_map(student, p=1.0)
        if t_maps.shape[1] != s_maps.shape[1]:
            raise ValueError(
                f"attention maps differ in spatial size: {t_maps.shape[1]} vs {s_maps.shape[1]}"
            )
        return float(np.linalg.norm(s_maps - t_maps, axis=1).mean())
    if pair.transform == IDENTITY_MSE:
        if teacher.shape != student.shape:
            raise ValueError(f"feature shapes differ: {teacher.shape} vs {student.shape}")
        return float(((student - teacher) ** 2).mean())
    raise ValueError(f"unknown transform {pair.transform!r}, expected one of {TRANSFORM_KINDS}")


def hint_loss(pairs: list[HintPair]) -> float:
    """Sum of per-pair transform losses: mean batch distance between attention
    maps, or plain MSE for already-aligned features."""
    total = 0.0
    for idx, pair in enumerate(pairs):
        try:
            total += _pair_loss(pair)
        except (ValueError, DegenerateLayerError) as exc:
            raise type(exc)(f"hint pair {idx}: {exc}") from exc
    return total


def total_loss(
    student_logits: np.ndarray,
    teacher_logits: np.ndarray,
    label: int,
    pairs: list[HintPair],
    weights: LossWeights,
) -> float:
    """gamma*classification + alpha*logit + beta*hint."""
    return (
        weights.gamma * classification_loss(student_logits, label)
        + weights.alpha * logit_loss(student_logits, teacher_logits, weights.temperature)
        + weights.beta * hint_loss(pairs)
    )


def compression_report(
    teacher_params: float,
    student_params: float,
    teacher_ms: float,
    student_ms: float,
) -> tuple[float, float]:
    """Compression ratio (percent parameters removed) and inference speed-up."""
    if min(teacher_params, student_params, teacher_ms, student_ms) <= 0:
        raise ValueError("parameter counts and timings must be positive")
    ratio = (1.0 - student_params / teacher_params) * 100.0
    speed_up = teacher_ms / student_ms
    return ratio, speed_up
