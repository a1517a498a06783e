"""Stochastic learner simulation for desk-scale strategy comparisons.

A simulated learner holds one hypothesis per class and predicts by argmax
score. On each teaching example, every class whose held hypothesis
mispredicts the binarized label is resampled from the normalized posterior of
the prefix shown so far. Explanation and density discounts multiply every
hypothesis identically, so they cancel under normalization and cannot change
these dynamics: RAND_EXP therefore behaves exactly like RAND_IM here, and the
difference between them only exists for human-facing sessions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import DataError, Strategy, TeachingSet
from .learner import sigmoid_array
from .teacher import TeachingContext, greedy_select


@dataclass
class SimulatedLearner:
    """Random-walk state: per-class hypothesis index plus normalized beliefs.

    Beliefs track the posterior of the shown prefix; every class whose held
    hypothesis mispredicts a new example resamples its index from its row.
    """

    current: np.ndarray  # (C,) hypothesis indices
    beliefs: np.ndarray  # (C, |H|), rows sum to 1
    rng: np.random.Generator

    def predict(self, scores_column: np.ndarray) -> int:
        """Argmax over per-class scores of the held hypotheses; ties go low."""
        return int(np.argmax(scores_column[self.current]))

    def observe(self, scores_column: np.ndarray, true_class: int, posterior: np.ndarray) -> None:
        """Update on one teaching example whose prefix posterior is `posterior`."""
        self.beliefs = posterior
        signs = np.where(scores_column >= 0.0, 1.0, -1.0)
        for c in range(self.current.shape[0]):
            y = 1.0 if true_class == c else -1.0
            if signs[self.current[c]] != y:
                self.current[c] = self.rng.choice(posterior.shape[1], p=posterior[c])


@dataclass(frozen=True)
class SimulationReport:
    strategy: str
    learners: int
    mean_accuracy: float | None
    std_accuracy: float | None
    confusion: tuple[tuple[int, ...], ...]  # row = truth, column = prediction
    teaching_curve: tuple[float, ...]
    note: str | None = None

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "learners": self.learners,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "confusion": [list(row) for row in self.confusion],
            "teaching_curve": list(self.teaching_curve),
            "note": self.note,
        }


def prefix_posteriors(teach_ids: Sequence[str], ctx: TeachingContext) -> np.ndarray:
    """Normalized per-class posterior after each teaching prefix: (T, C, |H|).

    Row (t, c) is the distribution a learner resamples class c from right
    after seeing example t. Discounts multiply every hypothesis equally, so
    they drop out here; only mispredicted binarized labels shrink mass.
    """
    teach_ids = tuple(teach_ids)
    ds = ctx.dataset
    space = ctx.space
    c_count = ds.num_classes
    h_count = len(space)
    scores = space.score_matrix(ds.feature_matrix(teach_ids))  # (|H|, T)
    truth = ds.labels(teach_ids)
    masses = np.full((c_count, h_count), 1.0 / h_count)
    out = np.empty((len(teach_ids), c_count, h_count))
    for t in range(len(teach_ids)):
        col = scores[:, t]
        signs = np.where(col >= 0.0, 1.0, -1.0)
        for c in range(c_count):
            y = 1.0 if int(truth[t]) == c else -1.0
            disagree = signs != y
            factors = np.where(disagree, sigmoid_array(ctx.params.alpha * col * y), 1.0)
            masses[c] *= factors
            masses[c] /= masses[c].sum()  # renormalize; sampling only sees ratios
        out[t] = masses
    return out


def simulate_learner(
    teach_ids: Sequence[str],
    test_ids: Sequence[str],
    ctx: TeachingContext,
    seed: int | np.random.SeedSequence,
    posteriors: np.ndarray | None = None,
) -> tuple[float, np.ndarray, list[bool]]:
    """Run one learner through a teaching sequence and a test sequence.

    Returns test accuracy, a (C, C) confusion count matrix, and the per-step
    teaching-phase correctness of the learner's answer before feedback.
    `posteriors` may carry a precomputed prefix_posteriors array for the
    teaching sequence; it is derived on the fly otherwise.
    """
    teach_ids = tuple(teach_ids)
    test_ids = tuple(test_ids)
    overlap = set(teach_ids) & set(test_ids)
    if overlap:
        raise DataError(f"teaching and test items overlap: {sorted(overlap)[:5]!r}")
    ds = ctx.dataset
    space = ctx.space
    c_count = ds.num_classes
    h_count = len(space)

    teach_feats = ds.feature_matrix(teach_ids)
    teach_truth = ds.labels(teach_ids)
    teach_scores = space.score_matrix(teach_feats)  # (|H|, T)
    test_feats = ds.feature_matrix(test_ids)
    test_truth = ds.labels(test_ids)
    test_scores = space.score_matrix(test_feats)
    if posteriors is None:
        posteriors = prefix_posteriors(teach_ids, ctx)

    rng = np.random.default_rng(seed)
    learner = SimulatedLearner(
        current=rng.integers(0, h_count, size=c_count),
        beliefs=np.full((c_count, h_count), 1.0 / h_count),
        rng=rng,
    )

    curve: list[bool] = []
    for t in range(len(teach_ids)):
        col = teach_scores[:, t]
        curve.append(learner.predict(col) == int(teach_truth[t]))
        learner.observe(col, int(teach_truth[t]), posteriors[t])

    confusion = np.zeros((c_count, c_count), dtype=int)
    correct = 0
    for t in range(len(test_ids)):
        pred = learner.predict(test_scores[:, t])
        truth = int(test_truth[t])
        confusion[truth, pred] += 1
        if pred == truth:
            correct += 1
    accuracy = correct / len(test_ids) if test_ids else 0.0
    return accuracy, confusion, curve


def run_experiment(
    strategies: Sequence[Strategy],
    learners_per_strategy: int,
    ctx: TeachingContext,
    test_ids: Sequence[str],
    budget: int,
    seed: int,
) -> list[SimulationReport]:
    """Simulate a cohort per strategy and aggregate accuracy and confusion.

    Greedy strategies teach one fixed sequence to every learner; the random
    strategies draw a fresh sequence per learner. Every learner also sees the
    test items in its own shuffled order. All randomness derives from the
    master seed, so reruns are reproducible.
    """
    if learners_per_strategy < 0:
        raise DataError("learner count cannot be negative")
    test_ids = tuple(test_ids)
    if not test_ids:
        raise DataError("test split is empty")
    c_count = ctx.dataset.num_classes
    reports: list[SimulationReport] = []
    for si, strategy in enumerate(strategies):
        fixed_set: TeachingSet | None = None
        fixed_posteriors: np.ndarray | None = None
        if strategy in (Strategy.STRICT, Strategy.EXPLAIN):
            fixed_set = greedy_select(strategy, budget, ctx)
            fixed_posteriors = prefix_posteriors(fixed_set.item_ids, ctx)
        accuracies: list[float] = []
        confusion = np.zeros((c_count, c_count), dtype=int)
        curve_sum = np.zeros(budget)
        for li in range(learners_per_strategy):
            ss = np.random.SeedSequence([seed, si, li])
            select_seed, order_seed, dyn_seed = (int(s) for s in ss.generate_state(3))
            if fixed_set is not None:
                teach_ids = fixed_set.item_ids
            else:
                teach_ids = greedy_select(strategy, budget, ctx, seed=select_seed).item_ids
            order_rng = np.random.default_rng(order_seed)
            shuffled_test = tuple(test_ids[i] for i in order_rng.permutation(len(test_ids)))
            acc, conf, curve = simulate_learner(
                teach_ids, shuffled_test, ctx, dyn_seed, posteriors=fixed_posteriors
            )
            accuracies.append(acc)
            confusion += conf
            curve_sum += np.array(curve, dtype=float)
        n = len(accuracies)
        mean = float(np.mean(accuracies)) if n else None
        std = float(np.std(accuracies, ddof=1)) if n >= 2 else None
        note = None
        if strategy is Strategy.RAND_EXP:
            note = "explanations do not alter simulated dynamics; identical to RAND_IM"
        reports.append(
            SimulationReport(
                strategy=strategy.value,
                learners=n,
                mean_accuracy=mean,
                std_accuracy=std,
                confusion=tuple(tuple(int(v) for v in row) for row in confusion),
                teaching_curve=tuple((curve_sum / n).tolist()) if n else (),
                note=note,
            )
        )
    return reports


def write_reports(reports: Sequence[SimulationReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json() for r in reports], fh)
        fh.write("\n")
