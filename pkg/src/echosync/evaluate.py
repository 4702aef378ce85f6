"""Discrepancy scoring against perceptual boundaries and aggregation.

A prediction is correct when its discrepancy (prediction minus truth,
in ms) falls strictly inside an open boundary interval. The hard
boundary (-125, 45) is the range where a synchronisation error is
undetectable; the soft boundary (-185, 90) extends to errors detected
no better than chance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataError, ValidationError


@dataclass(frozen=True)
class ScoringBoundary:
    name: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < 0 < self.upper:
            raise ValidationError(
                f"boundary must satisfy lower < 0 < upper, got ({self.lower}, {self.upper})"
            )


HARD = ScoringBoundary("hard", -125.0, 45.0)
SOFT = ScoringBoundary("soft", -185.0, 90.0)


def discrepancy(prediction_ms: float, truth_ms: float) -> float:
    if not (math.isfinite(prediction_ms) and math.isfinite(truth_ms)):
        raise ValidationError("prediction and truth must be finite")
    return prediction_ms - truth_ms


def score(disc_ms: float, boundary: ScoringBoundary) -> bool:
    """Correct iff strictly inside the open interval."""
    return boundary.lower < disc_ms < boundary.upper


@dataclass
class EvalRow:
    utterance_id: str
    prediction: float
    truth: float
    dataset: str = ""
    type_code: str = ""
    speaker: str = ""
    disc: float = field(init=False)

    def __post_init__(self):
        self.disc = discrepancy(self.prediction, self.truth)


@dataclass
class GroupStats:
    """One aggregate line: counts are exact, spread is population std."""

    name: str
    n: int
    hard_pct: float
    soft_pct: float
    mean_ms: float
    std_ms: float


GROUP_KEYS = ("dataset", "type", "speaker")


def _group_value(row: EvalRow, group_key: str) -> str:
    if group_key == "dataset":
        return row.dataset
    if group_key == "type":
        return row.type_code
    if group_key == "speaker":
        return row.speaker
    raise ValidationError(f"unknown group key {group_key!r}; expected one of {GROUP_KEYS}")


def _stats(name: str, rows: list) -> GroupStats:
    discs = np.array([r.disc for r in rows], dtype=np.float64)
    hard = sum(score(r.disc, HARD) for r in rows)
    soft = sum(score(r.disc, SOFT) for r in rows)
    return GroupStats(
        name=name,
        n=len(rows),
        hard_pct=100.0 * hard / len(rows),
        soft_pct=100.0 * soft / len(rows),
        mean_ms=float(discs.mean()),
        std_ms=float(discs.std()),
    )


def aggregate(rows: list, group_key: str = "dataset") -> list:
    """Per-group stats plus an 'All' row, groups sorted by name."""
    if not rows:
        raise EmptyDataError("cannot aggregate an empty row set")
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(_group_value(row, group_key), []).append(row)
    out = [_stats(name, groups[name]) for name in sorted(groups)]
    out.append(_stats("All", rows))
    return out
