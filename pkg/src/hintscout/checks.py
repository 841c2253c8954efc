"""Self-test checks over the loss kernels, driven by `hintscout check-losses`.

Each check is a named predicate over closed-form cases. The checks resolve
kernel functions through the module object at call time, so a corrupted
kernel (e.g. a test monkeypatching ``losses.soften``) is caught.
"""

from __future__ import annotations

import math

import numpy as np

from . import losses


def _soften_sums_to_one() -> bool:
    for z in ([0.3, -1.2, 2.5], [5.0, 5.0, 5.0, 5.0], [-100.0, 100.0]):
        for t in (1.0, 2.0, 8.0):
            if abs(losses.soften(z, t).sum() - 1.0) > 1e-9:
                return False
    return True


def _soften_symmetric() -> bool:
    return bool(np.allclose(losses.soften([0.0, 0.0], 4.0), [0.5, 0.5], atol=1e-12))


def _soften_extreme_finite() -> bool:
    p = losses.soften([1000.0, 0.0], 1.0)
    return bool(np.isfinite(p).all() and p[0] > 0.999 and p[1] < 1e-6)


def _logit_loss_zero_identical() -> bool:
    z = [1.5, -0.5, 3.0]
    return losses.logit_loss(z, z, 4.0) < 1e-12


def _logit_loss_shift_invariant() -> bool:
    zs, zt = [0.1, 1.0, -2.0], [2.0, 0.0, 1.0]
    base = losses.logit_loss(zs, zt, 2.0)
    shifted = losses.logit_loss(
        [z + 7.0 for z in zs], [z - 3.0 for z in zt], 2.0
    )
    return abs(base - shifted) < 1e-9


def _classification_confident() -> bool:
    return losses.classification_loss([50.0, 0.0, 0.0], 0) < 1e-9


def _classification_positive() -> bool:
    return losses.classification_loss([3.0, 1.0], 0) > 0.0


def _attention_single_channel() -> bool:
    feature = np.array([[[[1.0, 0.0], [0.0, 1.0]]]])
    expected = np.array([[1.0, 0.0, 0.0, 1.0]]) / math.sqrt(2.0)
    return bool(np.allclose(losses.attention_map(feature, 1.0), expected, atol=1e-12))


def _attention_constant_uniform() -> bool:
    feature = np.full((2, 3, 2, 2), 0.7)
    maps = losses.attention_map(feature, 1.0)
    return bool(np.allclose(maps, 0.5, atol=1e-12))


def _hint_loss_zero_identical() -> bool:
    feature = np.arange(24.0).reshape(2, 3, 2, 2) + 1.0
    pairs = [
        losses.HintPair(feature, feature.copy(), losses.ATTENTION_P1),
        losses.HintPair(feature, feature.copy(), losses.IDENTITY_MSE),
    ]
    return losses.hint_loss(pairs) < 1e-12


def _hint_loss_scale_invariant() -> bool:
    rng = np.random.default_rng(5)
    feature = rng.normal(size=(3, 2, 4, 4))
    pair = losses.HintPair(feature, 3.0 * feature, losses.ATTENTION_P1)
    return losses.hint_loss([pair]) < 1e-9


def _hint_loss_additive() -> bool:
    rng = np.random.default_rng(6)
    a = losses.HintPair(rng.normal(size=(2, 2, 3, 3)), rng.normal(size=(2, 2, 3, 3)))
    b = losses.HintPair(rng.normal(size=(2, 4, 3, 3)), rng.normal(size=(2, 4, 3, 3)))
    joint = losses.hint_loss([a, b])
    split = losses.hint_loss([a]) + losses.hint_loss([b])
    return abs(joint - split) < 1e-9


def _total_loss_weight_selection() -> bool:
    zs, zt = [1.0, -2.0, 0.5], [0.0, 0.0, 4.0]
    w = losses.LossWeights(gamma=1.0, alpha=0.0, beta=0.0, temperature=4.0)
    return abs(losses.total_loss(zs, zt, 2, [], w) - losses.classification_loss(zs, 2)) < 1e-12


def _total_loss_linear_in_weights() -> bool:
    rng = np.random.default_rng(7)
    zs, zt = rng.normal(size=5), rng.normal(size=5)
    pairs = [losses.HintPair(rng.normal(size=(2, 2, 3, 3)), rng.normal(size=(2, 2, 3, 3)))]
    base = losses.total_loss(zs, zt, 1, pairs, losses.LossWeights(0.5, 0.5, 0.5, 4.0))
    double_beta = losses.total_loss(zs, zt, 1, pairs, losses.LossWeights(0.5, 0.5, 1.0, 4.0))
    hint = losses.hint_loss(pairs)
    return abs((double_beta - base) - 0.5 * hint) < 1e-9


def _compression_report_identity() -> bool:
    ratio, speed = losses.compression_report(1.0e6, 1.0e6, 9.0, 9.0)
    return abs(ratio) < 1e-12 and abs(speed - 1.0) < 1e-12


CHECKS: list[tuple[str, object]] = [
    ("soften sums to 1", _soften_sums_to_one),
    ("soften symmetric logits are uniform", _soften_symmetric),
    ("soften extreme logits stay finite", _soften_extreme_finite),
    ("logit loss zero for identical logits", _logit_loss_zero_identical),
    ("logit loss shift invariant", _logit_loss_shift_invariant),
    ("classification loss near zero when confident", _classification_confident),
    ("classification loss positive for finite logits", _classification_positive),
    ("attention map single channel absolute value", _attention_single_channel),
    ("attention map of constant feature is uniform", _attention_constant_uniform),
    ("hint loss zero for identical features", _hint_loss_zero_identical),
    ("hint loss invariant to positive scaling", _hint_loss_scale_invariant),
    ("hint loss additive over pairs", _hint_loss_additive),
    ("total loss weight selection", _total_loss_weight_selection),
    ("total loss linear in each weight", _total_loss_linear_in_weights),
    ("compression report identity", _compression_report_identity),
]


def run_checks() -> list[tuple[str, bool]]:
    """Evaluate every check; exceptions count as failures."""
    results = []
    for name, fn in CHECKS:
        try:
            ok = bool(fn())
        except Exception:
            ok = False
        results.append((name, ok))
    return results
