"""Target alignment scoring for per-transition TD error pairs.

Every transition carries two scalar TD errors for the taken action: the
online error (bootstrap target from the current network) and the offline
error (bootstrap target from the lagged target network). The alignment
score in [0, 1] measures how strongly the online view supports the update
the offline target proposes, with full credit when the online error agrees
in sign and exceeds the offline error in magnitude.
"""

from __future__ import annotations

import enum
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_EPSILON = 1e-8


class ErrorPair(NamedTuple):
    online: float
    offline: float


class Scenario(enum.Enum):
    PERFECT = "perfect"
    OFFLINE_UNDERSHOOT = "offline_undershoot"
    OFFLINE_OVERSHOOT = "offline_overshoot"
    MISALIGNED = "misaligned"


class AlignmentScore(NamedTuple):
    value: float
    scenario: Scenario


def residual_online_error(pair: ErrorPair) -> float:
    """Online error left over if the offline update were applied in full."""
    return pair.online - pair.offline


def base_alignment(pair: ErrorPair, eps: float = DEFAULT_EPSILON) -> float:
    """|online| over the total variation |online| + |residual| (plus eps).

    Approaches 1 as the residual vanishes with a nonzero online error, and is
    exactly 0 when the online error is 0.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    residual = abs(residual_online_error(pair))
    mag = abs(pair.online)
    return mag / (mag + residual + eps)


def alignment_score(pair: ErrorPair, eps: float = DEFAULT_EPSILON) -> AlignmentScore:
    """Final alignment value plus the scenario the error pair falls into.

    Value is exactly 1 iff the errors share a sign and the online one is
    strictly larger in magnitude (offline undershoot); every other case takes
    the base alignment. Scenario classification: perfect when the errors are
    equal (including both zero), undershoot/overshoot for same-sign magnitude
    order, misaligned when the product is <= 0 and they are not both zero.
    """
    online, offline = pair
    if online == offline:
        scenario = Scenario.PERFECT
    elif online * offline > 0.0:
        if abs(online) > abs(offline):
            scenario = Scenario.OFFLINE_UNDERSHOOT
        else:
            scenario = Scenario.OFFLINE_OVERSHOOT
    else:
        scenario = Scenario.MISALIGNED
    if scenario is Scenario.OFFLINE_UNDERSHOOT:
        return AlignmentScore(1.0, scenario)
    return AlignmentScore(base_alignment(pair, eps), scenario)


def alignment_values(
    online: np.ndarray, offline: np.ndarray, eps: float = DEFAULT_EPSILON
) -> np.ndarray:
    """Vectorized alignment values for batches of error pairs."""
    online = np.asarray(online, dtype=np.float64)
    offline = np.asarray(offline, dtype=np.float64)
    mag = np.abs(online)
    residual = np.abs(online - offline)
    base = mag / (mag + residual + eps)
    full = (online * offline > 0.0) & (mag > np.abs(offline))
    return np.where(full, 1.0, base)


def top_k_indices(values: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k largest values, stable: ties go to earlier positions,
    and the returned positions keep the input order."""
    values = np.asarray(values)
    if k > values.shape[0]:
        raise ValueError(f"k={k} exceeds the {values.shape[0]} available scores")
    order = np.argsort(-values, kind="stable")[:k]
    order.sort()
    return order


def select_top_k(
    scores: Sequence[tuple[int, AlignmentScore]], k: int
) -> list[int]:
    """Buffer indices of the k highest-scoring entries (stable tie-breaking)."""
    values = np.fromiter((s.value for _, s in scores), dtype=np.float64, count=len(scores))
    return [scores[i][0] for i in top_k_indices(values, k)]
