"""Easy-to-difficult sampling: probabilities, pace schedule, selection mask.

Easy samples get a probability tied to how unambiguous their anchor distance
is; difficult samples get a (provably smaller) probability tied to how close
they sit to the median difficult distance. A decreasing pace value thresholds
the cross-view average so easy samples enter training first.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .difficulty import REGION_NEGATIVE, REGION_POSITIVE
from .errors import DataError, NumericalError

log = logging.getLogger(__name__)


def easy_prob(d, d_max, region):
    """Sampling probability of an easy sample.

    Negative region: d / d_max (farther is easier). Positive region:
    1 - d / d_max (closer is easier). d_max is the maximum anchor distance
    over the negative set.
    """
    if d_max <= 0.0:
        raise NumericalError("d_max must be positive (degenerate geometry)")
    if region == REGION_NEGATIVE:
        return d / d_max
    if region == REGION_POSITIVE:
        return 1.0 - d / d_max
    raise DataError(f"unknown region {region!r}")


def hard_prob(d, d_med, sum_d):
    """Sampling probability of a difficult sample: |d - median| / sum of all
    difficult distances."""
    if sum_d <= 0.0:
        raise NumericalError("sum of difficult distances must be positive")
    return abs(d - d_med) / sum_d


@dataclass
class SamplingState:
    """Per-view probabilities, their cross-view average, and the last mask."""

    per_view: np.ndarray   # (V, n)
    averaged: np.ndarray   # (n,)


def compute_probabilities(assignment, partitions):
    """Probabilities for every sample in every view, then the cross-view mean.

    Requires resolved (consistent) labels. If a view's geometry leaves some
    difficult probability at or above the smallest easy probability, those
    values are clamped just below it so easy-first ordering survives.
    """
    n_views = assignment.n_views
    n = assignment.n
    per_view = np.zeros((n_views, n))
    for v in range(n_views):
        part = partitions[v]
        labels = assignment.labels[v]
        regions = assignment.regions[v]
        dist = part.anchor_distances
        if len(part.negative) == 0:
            raise NumericalError(f"view {v}: empty negative set")
        d_max = dist[part.negative].max()
        if d_max <= 0.0:
            raise NumericalError(f"view {v}: all negative samples at distance 0")
        hard_idx = np.array(
            [k for k in range(n) if labels[k] == 1 and k != part.anchor_index],
            dtype=int,
        )
        if hard_idx.size:
            hard_d = dist[hard_idx]
            d_med = float(np.median(hard_d))
            sum_d = float(hard_d.sum())
            if sum_d <= 0.0:
                raise NumericalError(
                    f"view {v}: difficult samples all at distance 0"
                )
        for k in range(n):
            if k == part.anchor_index:
                per_view[v, k] = 1.0  # the anchor is maximally unambiguous
            elif labels[k] == 0:
                per_view[v, k] = easy_prob(dist[k], d_max, regions[k])
            else:
                per_view[v, k] = hard_prob(dist[k], d_med, sum_d)
        easy_mask = assignment.labels[v] == 0
        if easy_mask.any() and hard_idx.size:
            min_easy = per_view[v, easy_mask].min()
            ceiling = max(min_easy - 1e-9, 0.0)
            too_big = per_view[v, hard_idx] >= min_easy
            if too_big.any():
                log.info(
                    "view %d: clamping %d difficult probabilities below %g",
                    v, int(too_big.sum()), min_easy,
                )
                per_view[v, hard_idx[too_big]] = ceiling
    return SamplingState(per_view, per_view.mean(axis=0))


@dataclass
class PaceSchedule:
    """Start by selecting ~initial_fraction of the samples; reach all of them
    at full_inclusion_epoch_fraction of the way through training."""

    max_epochs: int
    initial_fraction: float = 0.05
    full_inclusion_epoch_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.initial_fraction <= 1.0:
            raise DataError(f"initial_fraction out of (0, 1]: {self.initial_fraction}")
        if not 0.0 < self.full_inclusion_epoch_fraction <= 1.0:
            raise DataError(
                "full_inclusion_epoch_fraction out of (0, 1]: "
                f"{self.full_inclusion_epoch_fraction}"
            )
        if self.max_epochs < 1:
            raise DataError(f"max_epochs must be >= 1, got {self.max_epochs}")


def pace_value(schedule, epoch, averaged_probs):
    """Pace at a given epoch: starts at the probability of the sample ranked
    ceil(initial_fraction * n) (descending), decays linearly to 0 at
    full_inclusion_epoch_fraction * max_epochs, then stays 0."""
    if epoch >= schedule.max_epochs:
        raise DataError(f"epoch {epoch} >= max_epochs {schedule.max_epochs}")
    p = np.sort(np.asarray(averaged_probs, dtype=float))[::-1]
    rank = int(np.ceil(schedule.initial_fraction * len(p)))
    rank = max(1, min(rank, len(p)))
    lam0 = p[rank - 1]
    t_full = schedule.full_inclusion_epoch_fraction * schedule.max_epochs
    return float(lam0 * max(0.0, 1.0 - epoch / t_full))


def selection_mask(averaged_probs, lam):
    """One shared mask for all views: selected iff pace <= averaged probability."""
    return (lam <= np.asarray(averaged_probs, dtype=float)).astype(int)
