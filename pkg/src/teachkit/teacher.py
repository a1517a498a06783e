"""Teaching-set selection: per-class errors, the expected-error-reduction
objective, greedy selection, and the matrix engine that makes it fast.

Two routes compute the same quantity. ``objective_value`` goes through the
definitional per-class posterior and exists as the slow reference; the
``FastEngine`` keeps, per class, an error vector, a confidence matrix, and a
running unnormalized posterior, so one selection step is a handful of
elementwise products. Their agreement is a tested invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    Hypothesis,
    HypothesisSpace,
    LearnerParams,
    StepDiagnostic,
    Strategy,
    TeachingSet,
    sgn,
    sgn_array,
)
from .learner import (
    ClassPosterior,
    ShownExample,
    naive_posterior,
    representativeness_distance,
    sigmoid_array,
    uniform_prior,
)


def class_error(
    h: Hypothesis, ds: Dataset, eligible_ids: Sequence[str], class_index: int
) -> float:
    """Fraction of eligible items whose one-vs-all sign prediction for the class is wrong."""
    ids = tuple(eligible_ids)
    if not ids:
        raise DataError("class_error needs a non-empty eligible set")
    wrong = 0
    for item_id in ids:
        item = ds.item_by_id(item_id)
        y = 1.0 if item.class_index == class_index else -1.0
        if sgn(h.score(item.features)) != y:
            wrong += 1
    return wrong / len(ids)


def expected_error(posterior: ClassPosterior, errs: np.ndarray) -> float:
    """Posterior-weighted error: dot product of (unnormalized) mass and error vectors."""
    errs = np.asarray(errs, dtype=float)
    if posterior.weights.shape != errs.shape:
        raise DataError("posterior and error vectors have mismatched lengths")
    return float(posterior.weights @ errs)


@dataclass(frozen=True, eq=False)
class TeachingContext:
    """Immutable bundle of everything one selection run needs.

    Candidates are the eligible pool in dataset order. Per-candidate
    difficulties/distances feed the discount factors; classes with a single
    candidate get distance 0. The per-class error vectors are computed over
    the full candidate pool once.
    """

    dataset: Dataset
    space: HypothesisSpace
    params: LearnerParams
    candidate_ids: tuple[str, ...]
    features: np.ndarray  # (n, d)
    true_classes: np.ndarray  # (n,)
    scores: np.ndarray  # (|H|, n)
    binary_labels: np.ndarray  # (C, n), entries +/-1
    errors: np.ndarray  # (C, |H|)
    difficulties: np.ndarray  # (n,), NaN when unavailable
    distances: np.ndarray  # (n,)
    discounts: np.ndarray  # (n,), E * D per candidate under params

    @property
    def n_candidates(self) -> int:
        return len(self.candidate_ids)

    def shown_example(self, pos: int) -> ShownExample:
        diff = float(self.difficulties[pos])
        return ShownExample(
            features=self.features[pos],
            true_class=int(self.true_classes[pos]),
            difficulty=None if math.isnan(diff) else diff,
            distance=float(self.distances[pos]),
        )

    def positions_of(self, item_ids: Sequence[str]) -> list[int]:
        index = {iid: pos for pos, iid in enumerate(self.candidate_ids)}
        try:
            return [index[iid] for iid in item_ids]
        except KeyError as exc:
            raise DataError(f"item {exc.args[0]!r} is not in the candidate pool") from None


def build_context(
    dataset: Dataset,
    space: HypothesisSpace,
    params: LearnerParams,
    candidate_ids: Sequence[str] | None = None,
) -> TeachingContext:
    """Precompute scores, labels, errors, and discount factors for a candidate pool."""
    if candidate_ids is None:
        ids = tuple(item.id for item in dataset.items)
    else:
        wanted = set(candidate_ids)
        if len(wanted) != len(tuple(candidate_ids)):
            raise DataError("candidate pool contains duplicates")
        ids = tuple(item.id for item in dataset.items if item.id in wanted)
        if len(ids) != len(wanted):
            missing = wanted - set(ids)
            raise DataError(f"candidate ids not in dataset: {sorted(missing)!r}")
    if not ids:
        raise DataError("candidate pool is empty")
    feats = dataset.feature_matrix(ids)
    true_classes = dataset.labels(ids)
    c_count = dataset.num_classes
    n = len(ids)
    scores = space.score_matrix(feats)
    binary = np.where(true_classes[None, :] == np.arange(c_count)[:, None], 1.0, -1.0)
    preds = sgn_array(scores)
    errors = np.array(
        [np.mean(preds != binary[c][None, :], axis=1) for c in range(c_count)]
    )
    difficulties = np.full(n, np.nan)
    for pos, iid in enumerate(ids):
        eff = dataset.item_by_id(iid).effective_difficulty()
        if eff is not None:
            difficulties[pos] = eff
    distances = np.zeros(n)
    for c in range(c_count):
        member_pos = np.flatnonzero(true_classes == c)
        block = feats[member_pos]
        for pos in member_pos:
            distances[pos] = representativeness_distance(feats[pos], block)
    discounts = np.ones(n)
    if not math.isinf(params.beta):
        missing = [ids[pos] for pos in range(n) if math.isnan(difficulties[pos])]
        if missing:
            raise DataError(
                "explanation discounting needs a difficulty for every candidate; "
                f"missing for {missing[:5]!r}"
            )
        discounts *= sigmoid_array(params.beta * difficulties)
    if not math.isinf(params.gamma):
        discounts *= sigmoid_array(params.gamma * distances)
    return TeachingContext(
        dataset=dataset,
        space=space,
        params=params,
        candidate_ids=ids,
        features=feats,
        true_classes=true_classes,
        scores=scores,
        binary_labels=binary,
        errors=errors,
        difficulties=difficulties,
        distances=distances,
        discounts=discounts,
    )


def strict_variant(ctx: TeachingContext) -> TeachingContext:
    """The same pool with both discount factors pinned to 1 (label-only teaching)."""
    params = replace(ctx.params, beta=math.inf, gamma=math.inf)
    return replace(ctx, params=params, discounts=np.ones(ctx.n_candidates))


def objective_value(item_ids: Sequence[str], ctx: TeachingContext) -> float:
    """Expected-error reduction of a teaching set, via the reference posterior.

    Mean over classes of sum_h (prior_h - posterior_h) * err_c(h); empty sets
    score exactly 0. This is the oracle the fast engine is checked against.
    """
    positions = ctx.positions_of(item_ids)
    shown = [ctx.shown_example(p) for p in positions]
    prior = uniform_prior(ctx.space)
    total = 0.0
    c_count = ctx.dataset.num_classes
    for c in range(c_count):
        post = naive_posterior(prior, shown, ctx.space, ctx.params, c)
        total += float((prior - post.weights) @ ctx.errors[c])
    return total / c_count


class FastEngine:
    """Greedy selection state: per class an error vector, a confidence matrix
    whose columns are discount-scaled, and a running unnormalized posterior.

    A candidate's score is the mean over classes of -(e o p) . Lp[:, x]; adding
    a constant that does not depend on the candidate turns it into the full
    objective, so the argmax is the same. Selecting x multiplies each class's
    posterior elementwise by the chosen column.
    """

    def __init__(self, ctx: TeachingContext):
        self.ctx = ctx
        c_count = ctx.dataset.num_classes
        h_count = len(ctx.space)
        agree = sgn_array(ctx.scores)[None, :, :] == ctx.binary_labels[:, None, :]
        raw = sigmoid_array(
            ctx.params.alpha * ctx.scores[None, :, :] * ctx.binary_labels[:, None, :]
        )
        self.L = np.where(agree, 1.0, raw)  # (C, |H|, n)
        self.Lp = self.L * ctx.discounts[None, None, :]
        self.prior = np.full(h_count, 1.0 / h_count)
        self.p = np.tile(self.prior, (c_count, 1))  # (C, |H|)
        self.errors = ctx.errors  # (C, |H|)
        self.remaining = np.ones(ctx.n_candidates, dtype=bool)
        self._prior_term = float(np.mean(self.errors @ self.prior))

    def current_objective(self) -> float:
        """Expected-error reduction of everything selected so far."""
        return self._prior_term - float(np.mean(np.einsum("ch,ch->c", self.errors, self.p)))

    def candidate_scores(self) -> np.ndarray:
        """Mean per-class score -(e o p) . Lp for each remaining candidate; -inf elsewhere."""
        ep = self.errors * self.p  # (C, |H|)
        r = -np.einsum("ch,chn->n", ep, self.Lp) / self.p.shape[0]
        return np.where(self.remaining, r, -np.inf)

    def candidate_objectives(self) -> np.ndarray:
        """Objective value R(T u {x}) implied for each remaining candidate."""
        return self._prior_term + self.candidate_scores()

    def apply(self, pos: int) -> None:
        """Record candidate `pos` as taught: multiply posteriors by its column."""
        if not self.remaining[pos]:
            raise DataError("candidate already selected")
        self.p = self.p * self.Lp[:, :, pos]
        self.remaining[pos] = False

    def step(self) -> tuple[int, float]:
        """Select the best remaining candidate (ties to the smallest index).

        Returns its pool position and the objective value after the update.
        """
        if not np.any(self.remaining):
            raise DataError("no candidates remain")
        scores = self.candidate_scores()
        pos = int(np.argmax(scores))
        self.apply(pos)
        return pos, self._prior_term + float(scores[pos])

    def posterior(self, class_index: int) -> np.ndarray:
        return self.p[class_index].copy()

    def posterior_masses(self) -> tuple[float, ...]:
        return tuple(float(m) for m in self.p.sum(axis=1))


def greedy_select(
    strategy: Strategy, budget: int, ctx: TeachingContext, seed: int | None = None
) -> TeachingSet:
    """Build a teaching set under the given strategy.

    STRICT runs the greedy engine with both discounts forced to 1; EXPLAIN
    runs it with the context's parameters as given. The two random strategies
    sample uniformly without replacement (the seed is required for them) and
    differ downstream only in whether explanations ride along with feedback.
    Step diagnostics always carry the objective trace of the emitted order.
    """
    if budget <= 0:
        raise DataError("budget must be positive")
    if budget > ctx.n_candidates:
        raise DataError(
            f"budget {budget} exceeds the candidate pool of {ctx.n_candidates}"
        )
    if strategy is Strategy.STRICT:
        run_ctx = strict_variant(ctx)
    else:
        run_ctx = ctx
    engine = FastEngine(run_ctx)
    order: list[int] = []
    diagnostics: list[StepDiagnostic] = []
    if strategy in (Strategy.RAND_IM, Strategy.RAND_EXP):
        if seed is None:
            raise DataError("random strategies require a seed")
        rng = np.random.default_rng(seed)
        picks = rng.permutation(ctx.n_candidates)[:budget]
        for pos in picks:
            pos = int(pos)
            engine.apply(pos)
            order.append(pos)
            diagnostics.append(
                StepDiagnostic(
                    item_id=ctx.candidate_ids[pos],
                    objective=engine.current_objective(),
                    posterior_mass=engine.posterior_masses(),
                )
            )
    else:
        for _ in range(budget):
            pos, value = engine.step()
            order.append(pos)
            diagnostics.append(
                StepDiagnostic(
                    item_id=ctx.candidate_ids[pos],
                    objective=value,
                    posterior_mass=engine.posterior_masses(),
                )
            )
    return TeachingSet(
        strategy=strategy,
        budget=budget,
        item_ids=tuple(ctx.candidate_ids[p] for p in order),
        per_step=tuple(diagnostics),
    )
