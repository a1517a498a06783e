"""Candidate hypothesis construction from dataset features.

The recipe, in deterministic order: two subcluster-vs-rest classifiers per
class, one one-vs-rest classifier per class (recorded as that class's
optimum), one pair-vs-rest classifier per unordered class pair when there are
at least three classes, then random unit-norm fill up to the target count.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    Hypothesis,
    HypothesisSpace,
    sgn,
)


@dataclass(frozen=True)
class HypothesisGenConfig:
    target_count: int = 100
    seed: int = 0
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    kmeans_max_iters: int = 100

    def __post_init__(self) -> None:
        if self.target_count <= 0:
            raise DataError("target_count must be positive")
        if self.svm_lambda <= 0.0:
            raise DataError("svm_lambda must be positive")
        if self.svm_epochs <= 0 or self.kmeans_max_iters <= 0:
            raise DataError("iteration counts must be positive")


def two_means(
    points: np.ndarray, seed: int = 0, max_iters: int = 100
) -> tuple[list[int], list[int]]:
    """Lloyd's iteration with k = 2 and deterministic farthest-point start.

    The first center is the point nearest the data mean, the second the point
    farthest from it. An empty cluster is repaired by moving in the point
    farthest from its current center. The seed does not influence the result;
    it is accepted for interface stability. Returns two non-empty index lists.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = pts.shape[0]
    if n < 2:
        raise DataError("two_means needs at least 2 points")
    mean = pts.mean(axis=0)
    first = int(np.argmin(np.sum((pts - mean) ** 2, axis=1)))
    second = int(np.argmax(np.sum((pts - pts[first]) ** 2, axis=1)))
    centers = np.stack([pts[first], pts[second]])
    assign = np.full(n, -1, dtype=int)
    for _it in range(max_iters):
        d0 = np.sum((pts - centers[0]) ** 2, axis=1)
        d1 = np.sum((pts - centers[1]) ** 2, axis=1)
        new_assign = np.where(d1 < d0, 1, 0)  # ties go to cluster 0
        for empty in (0, 1):
            if np.any(new_assign == empty):
                continue
            donor = 1 - empty
            dists = np.where(new_assign == donor, (d1 if donor else d0), -np.inf)
            new_assign[int(np.argmax(dists))] = empty
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in (0, 1):
            centers[k] = pts[assign == k].mean(axis=0)
    return (
        [int(i) for i in np.flatnonzero(assign == 0)],
        [int(i) for i in np.flatnonzero(assign == 1)],
    )


def train_linear_svm(
    pos: np.ndarray,
    neg: np.ndarray,
    cfg: HypothesisGenConfig,
    seed: int | None = None,
    tag: str = "",
) -> Hypothesis:
    """Hinge-loss linear classifier via epoch-ordered subgradient descent.

    Step size 1/(lambda * t) with the multiplicative shrinkage folded in. The
    bias rides along as a constant-feature coordinate so the whole parameter
    vector is L2-regularized and the schedule stays stable. Example order is
    reshuffled every epoch from a seeded generator, so retraining with the
    same inputs is exact.
    """
    xp = np.asarray(pos, dtype=float)
    xn = np.asarray(neg, dtype=float)
    if xp.ndim == 1:
        xp = xp.reshape(-1, 1)
    if xn.ndim == 1:
        xn = xn.reshape(-1, 1)
    if xp.shape[0] == 0 or xn.shape[0] == 0:
        raise DataError("both sides of the SVM need at least one point")
    if xp.shape[1] != xn.shape[1]:
        raise DataError("positive and negative points have mismatched dimensions")
    d = xp.shape[1]
    x = np.hstack([np.vstack([xp, xn]), np.ones((xp.shape[0] + xn.shape[0], 1))])
    y = np.concatenate([np.ones(xp.shape[0]), -np.ones(xn.shape[0])])
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    lam = cfg.svm_lambda
    w = np.zeros(d + 1)
    t = 0
    for _ in range(cfg.svm_epochs):
        for i in rng.permutation(x.shape[0]):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (w @ x[i])
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * x[i]
    bias = float(w[d])
    weights = w[:d]
    if not np.any(weights != 0.0) and bias == 0.0:
        bias = 1e-12  # inseparable degenerate inputs can cancel exactly; keep admissible
    return Hypothesis(weights=weights, bias=bias, tag=tag)


def training_accuracy(h: Hypothesis, pos: np.ndarray, neg: np.ndarray) -> float:
    xp = np.asarray(pos, dtype=float).reshape(len(pos), -1)
    xn = np.asarray(neg, dtype=float).reshape(len(neg), -1)
    correct = sum(1 for p in xp if sgn(h.score(p)) > 0)
    correct += sum(1 for p in xn if sgn(h.score(p)) < 0)
    return correct / (len(xp) + len(xn))


def build_hypothesis_space(
    ds: Dataset, train_ids: Sequence[str], cfg: HypothesisGenConfig
) -> HypothesisSpace:
    """Assemble the full candidate set for a train split, per the fixed recipe."""
    train_ids = tuple(train_ids)
    if not train_ids:
        raise DataError("empty train split")
    feats = ds.feature_matrix(train_ids)
    labels = ds.labels(train_ids)
    c_count = ds.num_classes
    for c in range(c_count):
        if int(np.sum(labels == c)) == 0:
            raise DataError(f"class {ds.classes[c]!r} has no train items")
    pair_count = c_count * (c_count - 1) // 2 if c_count >= 3 else 0
    deterministic = 2 * c_count + c_count + pair_count
    if cfg.target_count < deterministic:
        raise DataError(
            f"target_count {cfg.target_count} is below the {deterministic} hypotheses "
            "the recipe produces deterministically"
        )
    root = np.random.SeedSequence(cfg.seed)
    seeds = iter(root.generate_state(deterministic + 1).tolist())
    hyps: list[Hypothesis] = []

    for c in range(c_count):
        members = np.flatnonzero(labels == c)
        sub_a, sub_b = two_means(feats[members], seed=cfg.seed, max_iters=cfg.kmeans_max_iters)
        for k, sub in enumerate((sub_a, sub_b)):
            pos_rows = members[sub]
            neg_mask = np.ones(len(train_ids), dtype=bool)
            neg_mask[pos_rows] = False
            hyps.append(
                train_linear_svm(
                    feats[pos_rows],
                    feats[neg_mask],
                    cfg,
                    seed=next(seeds),
                    tag=f"{ds.classes[c]}/cluster{k}-vs-rest",
                )
            )
    h_star = []
    for c in range(c_count):
        mask = labels == c
        h_star.append(len(hyps))
        hyps.append(
            train_linear_svm(
                feats[mask],
                feats[~mask],
                cfg,
                seed=next(seeds),
                tag=f"{ds.classes[c]}-vs-rest",
            )
        )
    if c_count >= 3:
        for a in range(c_count):
            for b in range(a + 1, c_count):
                mask = (labels == a) | (labels == b)
                hyps.append(
                    train_linear_svm(
                        feats[mask],
                        feats[~mask],
                        cfg,
                        seed=next(seeds),
                        tag=f"{ds.classes[a]}+{ds.classes[b]}-vs-rest",
                    )
                )
    fill_rng = np.random.default_rng(next(seeds))
    while len(hyps) < cfg.target_count:
        w = fill_rng.standard_normal(ds.d)
        norm = float(np.linalg.norm(w))
        if norm < 1e-12:
            continue
        hyps.append(Hypothesis(weights=w / norm, bias=0.0, tag="random"))
    return HypothesisSpace(hypotheses=tuple(hyps), h_star=tuple(h_star))


def teachability_filter(
    ds: Dataset, train_ids: Sequence[str], hs: HypothesisSpace
) -> tuple[str, ...]:
    """Drop train items the per-class optima cannot all classify correctly.

    An item survives only if, for every class c, the class-c optimum predicts
    positive exactly when the item belongs to class c. Order is preserved.
    """
    survivors: list[str] = []
    for item_id in train_ids:
        item = ds.item_by_id(item_id)
        ok = True
        for c, h_idx in enumerate(hs.h_star):
            want = 1.0 if item.class_index == c else -1.0
            if sgn(hs.hypotheses[h_idx].score(item.features)) != want:
                ok = False
                break
        if ok:
            survivors.append(item_id)
    if not survivors:
        raise DataError("teachability filter removed every train item; the space cannot teach")
    return tuple(survivors)
