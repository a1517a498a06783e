"""Probabilistic learner model: response likelihoods, discount factors, and the
reference (definitional) per-class posterior computation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DataError, HypothesisSpace, Hypothesis, LearnerParams, sgn_array


def sigmoid(z: float) -> float:
    """Numerically stable logistic 1 / (1 + exp(-z))."""
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def sigmoid_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def likelihood(h: Hypothesis, features: np.ndarray, y_binary: float, alpha: float) -> float:
    """Probability that a learner holding `h` answers consistently with label `y_binary`.

    Logistic in alpha * h(x) * y: near 0.5 close to the boundary, saturating
    with the score magnitude. Complementary in the label sign.
    """
    if not alpha > 0.0:
        raise DataError("alpha must be positive")
    return sigmoid(alpha * h.score(features) * y_binary)


def explanation_discount(diff: float, beta: float) -> float:
    """Per-example factor from explanation difficulty: logistic of beta * diff.

    beta = math.inf is the sentinel for "explanations ignored" and yields
    exactly 1.0 (also at diff = 0, by convention, so the reduction to the
    label-only model is an exact equality).
    """
    if diff < 0.0:
        raise DataError("explanation difficulty must be non-negative")
    if math.isinf(beta):
        return 1.0
    return sigmoid(beta * diff)


def density_discount(dist: float, gamma: float) -> float:
    """Per-example factor from representativeness distance: logistic of gamma * dist.

    gamma = math.inf is the sentinel for "density ignored" and yields exactly 1.0.
    """
    if dist < 0.0:
        raise DataError("representativeness distance must be non-negative")
    if math.isinf(gamma):
        return 1.0
    return sigmoid(gamma * dist)


def representativeness_distance(
    features: np.ndarray, class_member_features: np.ndarray
) -> float:
    """Mean squared Euclidean distance from `features` to its class members.

    The member block is expected to include the item itself (its self term
    contributes 0), so a singleton class scores exactly 0.
    """
    members = np.asarray(class_member_features, dtype=float)
    if members.ndim == 1:
        members = members.reshape(1, -1)
    if members.shape[0] == 0:
        raise DataError("representativeness distance needs a non-empty class")
    deltas = members - np.asarray(features, dtype=float)[None, :]
    return float(np.mean(np.sum(deltas * deltas, axis=1)))


@dataclass(frozen=True, eq=False)
class ShownExample:
    """One teaching example as seen by the learner model."""

    features: np.ndarray
    true_class: int
    difficulty: float | None = None
    distance: float | None = None


@dataclass(frozen=True, eq=False)
class ClassPosterior:
    """Unnormalized per-hypothesis mass for one class's one-vs-all task."""

    class_index: int
    weights: np.ndarray


def uniform_prior(space: HypothesisSpace) -> np.ndarray:
    return np.full(len(space), 1.0 / len(space))


def naive_posterior(
    prior: np.ndarray,
    shown: Sequence[ShownExample],
    space: HypothesisSpace,
    params: LearnerParams,
    class_index: int,
) -> ClassPosterior:
    """Reference posterior computed directly from its definition.

    Each hypothesis keeps its prior mass, multiplied by the response likelihood
    for every shown example whose binarized label it mispredicts, and by the
    hypothesis-independent discount product E(e_t) * D(x_t) over all shown
    examples. No normalization is applied; ratios between hypotheses are
    unaffected by the discounts.
    """
    masses = np.array(prior, dtype=float).copy()
    if masses.shape != (len(space),):
        raise DataError("prior length must match the hypothesis count")
    w = space.weight_matrix
    b = space.biases
    for ex in shown:
        y = 1.0 if ex.true_class == class_index else -1.0
        scores = w @ np.asarray(ex.features, dtype=float) + b
        disagree = sgn_array(scores) != y
        masses[disagree] *= sigmoid_array(params.alpha * scores[disagree] * y)
    discount = 1.0
    for ex in shown:
        if not math.isinf(params.beta):
            if ex.difficulty is None:
                raise DataError(
                    "explanation discounting is enabled but a shown example has no difficulty"
                )
            discount *= explanation_discount(ex.difficulty, params.beta)
        if not math.isinf(params.gamma):
            if ex.distance is None:
                raise DataError(
                    "density discounting is enabled but a shown example has no distance"
                )
            discount *= density_discount(ex.distance, params.gamma)
    return ClassPosterior(class_index=class_index, weights=masses * discount)
