"""Shared synthetic fixtures: datasets, hypothesis spaces, randomized instances."""
from __future__ import annotations

import numpy as np

from teachkit.core import (
    Dataset,
    Hypothesis,
    HypothesisSpace,
    Item,
    LearnerParams,
)
from teachkit.teacher import TeachingContext, build_context


def make_items(features, classes, ids=None, overrides=None):
    items = []
    for i, (f, c) in enumerate(zip(features, classes)):
        items.append(
            Item(
                id=ids[i] if ids else f"i{i}",
                class_index=int(c),
                features=np.asarray(f, dtype=float),
                difficulty_override=None if overrides is None else float(overrides[i]),
            )
        )
    return tuple(items)


def make_dataset(features, classes, class_names=("a", "b"), ids=None, overrides=None) -> Dataset:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    return Dataset(
        classes=tuple(class_names),
        d=features.shape[1],
        items=make_items(features, classes, ids=ids, overrides=overrides),
    )


def make_space(weight_rows, biases, h_star) -> HypothesisSpace:
    hyps = tuple(
        Hypothesis(weights=np.asarray(w, dtype=float), bias=float(b), tag=f"h{i}")
        for i, (w, b) in enumerate(zip(weight_rows, biases))
    )
    return HypothesisSpace(hypotheses=hyps, h_star=tuple(h_star))


def random_instance(
    rng: np.random.Generator,
    n_classes: int | None = None,
    n_items: int | None = None,
    n_hyps: int | None = None,
    alpha: float | None = None,
    beta: float = 1.0,
    gamma: float = 1.0,
    d: int = 3,
    holdout: int = 0,
) -> TeachingContext:
    """A random teaching context with overridden difficulty per item.

    Sizes follow the randomized-fixture envelope used throughout the suite:
    |H| <= 20, |X| <= 50, C in {2, 3, 4}. With `holdout` > 0 the last items
    stay out of the candidate pool (use `held_out_ids` to retrieve them).
    """
    c = int(rng.integers(2, 5)) if n_classes is None else n_classes
    n = int(rng.integers(max(c + 2, 8), 51)) if n_items is None else n_items
    h = int(rng.integers(c + 1, 21)) if n_hyps is None else n_hyps
    a = float(rng.uniform(0.1, 2.0)) if alpha is None else alpha
    classes = rng.integers(0, c, size=n)
    for k in range(c):  # guarantee every class appears
        classes[k] = k
    features = rng.normal(size=(n, d))
    overrides = rng.uniform(0.05, 2.0, size=n)
    ds = make_dataset(
        features, classes, class_names=tuple(f"c{k}" for k in range(c)), overrides=overrides
    )
    weights = rng.normal(size=(h, d))
    biases = rng.normal(size=h) * 0.5
    space = make_space(weights, biases, h_star=tuple(range(c)))
    params = LearnerParams(alpha=a, beta=beta, gamma=gamma)
    candidates = None
    if holdout:
        candidates = [it.id for it in ds.items[: n - holdout]]
    return build_context(ds, space, params, candidates)


def held_out_ids(ctx: TeachingContext) -> list[str]:
    pool = set(ctx.candidate_ids)
    return [it.id for it in ctx.dataset.items if it.id not in pool]


def gaussian_blobs(
    rng: np.random.Generator,
    centers,
    per_class: int,
    sigma: float,
    outlier_frac: float = 0.0,
    outlier_scale: float = 10.0,
):
    """2-D class blobs with an optional fraction of far-displaced outliers.

    Outliers keep their class label but are pushed outlier_scale * sigma away
    from the class center in a random direction. Returns (features, labels).
    """
    feats = []
    labels = []
    centers = np.asarray(centers, dtype=float)
    for c, center in enumerate(centers):
        block = center + rng.normal(size=(per_class, centers.shape[1])) * sigma
        n_out = int(round(outlier_frac * per_class))
        for j in range(n_out):
            direction = rng.normal(size=centers.shape[1])
            direction /= np.linalg.norm(direction)
            block[j] = center + direction * outlier_scale * sigma
        feats.append(block)
        labels.extend([c] * per_class)
    return np.vstack(feats), np.array(labels)
