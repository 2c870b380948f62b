"""K-means on the common subspace plus the standard evaluation metrics."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DataError, ShapeError


@dataclass
class ClusterModel:
    centers: np.ndarray      # (c, p)
    assignments: np.ndarray  # (n,) cluster ids
    objective: float         # sum of squared distances to assigned centers


def _objective(z, centers, assign):
    return float(((z - centers[assign]) ** 2).sum())


def _kmeans_pp_init(z, c, rng):
    n = z.shape[0]
    centers = np.empty((c, z.shape[1]))
    first = int(rng.integers(n))
    centers[0] = z[first]
    d2 = ((z - centers[0]) ** 2).sum(axis=1)
    for q in range(1, c):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[q] = z[idx]
        d2 = np.minimum(d2, ((z - centers[q]) ** 2).sum(axis=1))
    return centers


def _lloyd(z, centers, max_iter):
    c = centers.shape[0]
    assign = None
    for _ in range(max_iter):
        d2 = ((z[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for q in range(c):
            members = z[assign == q]
            if len(members):
                centers[q] = members.mean(axis=0)
            else:
                # re-seed an empty cluster to the point farthest from its center
                far = ((z - centers[assign]) ** 2).sum(axis=1).argmax()
                centers[q] = z[far]
                assign[far] = q
    d2 = ((z[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    return centers, assign


def kmeans(z, c, max_iter=100, seed=0, restarts=20):
    """Lloyd's algorithm from k-means++ seeding; keeps the best of ``restarts``
    runs (ties by restart index)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n = z.shape[0]
    if c < 1:
        raise DataError(f"cluster count must be >= 1, got {c}")
    if c > n:
        raise DataError(f"cannot form {c} clusters from {n} samples")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        centers = _kmeans_pp_init(z, c, rng)
        centers, assign = _lloyd(z, centers.copy(), max_iter)
        obj = _objective(z, centers, assign)
        if best is None or obj < best.objective:
            best = ClusterModel(centers, assign, obj)
    return best


def _contingency(pred, truth):
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.size == 0:
        raise DataError("empty label vectors")
    if pred.shape != truth.shape:
        raise ShapeError(f"label lengths differ: {pred.shape} vs {truth.shape}")
    pred_ids = np.unique(pred)
    truth_ids = np.unique(truth)
    table = np.zeros((len(pred_ids), len(truth_ids)), dtype=int)
    pmap = {v: i for i, v in enumerate(pred_ids)}
    tmap = {v: i for i, v in enumerate(truth_ids)}
    for p, t in zip(pred, truth):
        table[pmap[p], tmap[t]] += 1
    return table


def accuracy(pred, truth):
    """Clustering accuracy under the optimal one-to-one cluster/class match."""
    table = _contingency(pred, truth)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum() / table.sum())


def nmi(pred, truth):
    """Normalized mutual information with geometric-mean normalization.

    Identical partitions give 1 (including the single-cluster case); if either
    partition has zero entropy and they differ, the value is 0.
    """
    table = _contingency(pred, truth).astype(float)
    n = table.sum()
    p_ij = table / n
    p_i = p_ij.sum(axis=1)
    p_j = p_ij.sum(axis=0)
    h_i = -np.sum(p_i[p_i > 0] * np.log(p_i[p_i > 0]))
    h_j = -np.sum(p_j[p_j > 0] * np.log(p_j[p_j > 0]))
    if h_i == 0.0 or h_j == 0.0:
        # degenerate partitions: identical iff the table is a single cell-per-
        # line match up to relabeling
        pred = np.asarray(pred)
        truth = np.asarray(truth)
        same = len(np.unique(pred)) == len(np.unique(truth)) and accuracy(
            pred, truth) == 1.0
        return 1.0 if same else 0.0
    mask = p_ij > 0
    mi = np.sum(p_ij[mask] * np.log(
        p_ij[mask] / (np.outer(p_i, p_j)[mask])
    ))
    return float(mi / np.sqrt(h_i * h_j))


def purity(pred, truth):
    """Mean within-cluster majority fraction."""
    table = _contingency(pred, truth)
    return float(table.max(axis=1).sum() / table.sum())


@dataclass
class MetricReport:
    acc: float
    nmi: float
    purity: float
    contingency: np.ndarray


def evaluate(pred, truth):
    return MetricReport(
        acc=accuracy(pred, truth),
        nmi=nmi(pred, truth),
        purity=purity(pred, truth),
        contingency=_contingency(pred, truth),
    )


def format_report(report):
    """Human-readable metric table."""
    lines = [
        "metric   value",
        f"ACC      {report.acc:.4f}",
        f"NMI      {report.nmi:.4f}",
        f"Purity   {report.purity:.4f}",
    ]
    return "\n".join(lines)


def write_report(report, path):
    """Machine-readable key-value file (deterministic for identical inputs)."""
    with open(path, "w") as fh:
        fh.write(f"acc = {report.acc:.12f}\n")
        fh.write(f"nmi = {report.nmi:.12f}\n")
        fh.write(f"purity = {report.purity:.12f}\n")
