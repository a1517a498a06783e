"""Shared domain types and the on-disk JSON formats used across the pipeline."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """An input file or constructed object violates a format rule or invariant."""


def sgn(value: float) -> float:
    """Sign of a classifier score, with the fixed tie rule sgn(0) = +1."""
    return 1.0 if value >= 0.0 else -1.0


def sgn_array(values: np.ndarray) -> np.ndarray:
    """Vectorized :func:`sgn`."""
    return np.where(np.asarray(values) >= 0.0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExplanationMap:
    """A width x height heatmap with values in [0, 1] and a scalar difficulty."""

    width: int
    height: int
    values: np.ndarray  # row-major, length width * height
    difficulty: float

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise DataError("explanation dimensions must be positive")
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.width * self.height,):
            raise DataError(
                f"explanation has {vals.size} values, expected {self.width * self.height}"
            )
        if vals.size and (float(vals.min()) < 0.0 or float(vals.max()) > 1.0):
            raise DataError("explanation values must lie in [0, 1]")
        if not (self.difficulty >= 0.0):
            raise DataError("explanation difficulty must be non-negative")


@dataclass(frozen=True, eq=False)
class Item:
    """One teachable example: feature vector, label, optional explanation."""

    id: str
    class_index: int
    features: np.ndarray
    explanation: ExplanationMap | None = None
    image_uri: str | None = None
    difficulty_override: float | None = None

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=float)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 1:
            raise DataError(f"item {self.id!r}: features must be a flat vector")
        if self.difficulty_override is not None and not (self.difficulty_override >= 0.0):
            raise DataError(f"item {self.id!r}: difficulty_override must be >= 0")

    def effective_difficulty(self) -> float | None:
        """Difficulty used by discounting: override wins over the explanation's."""
        if self.difficulty_override is not None:
            return float(self.difficulty_override)
        if self.explanation is not None:
            return float(self.explanation.difficulty)
        return None


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered item collection with C named classes and fixed feature size d."""

    classes: tuple[str, ...]
    d: int
    items: tuple[Item, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.classes) < 2:
            raise DataError("a dataset needs at least 2 classes")
        if self.d <= 0:
            raise DataError("feature dimensionality must be positive")
        seen: set[str] = set()
        expl_dims: tuple[int, int] | None = None
        for item in self.items:
            if item.id in seen:
                raise DataError(f"duplicate item id {item.id!r}")
            seen.add(item.id)
            if not (0 <= item.class_index < len(self.classes)):
                raise DataError(f"item {item.id!r}: class index {item.class_index} out of range")
            if item.features.shape != (self.d,):
                raise DataError(
                    f"item {item.id!r}: features have length {item.features.size}, expected {self.d}"
                )
            if item.explanation is not None:
                dims = (item.explanation.width, item.explanation.height)
                if expl_dims is None:
                    expl_dims = dims
                elif dims != expl_dims:
                    raise DataError(
                        f"item {item.id!r}: explanation dimensions {dims} differ from {expl_dims}"
                    )

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {item.id: pos for pos, item in enumerate(self.items)}

    def item_by_id(self, item_id: str) -> Item:
        try:
            return self.items[self._index[item_id]]
        except KeyError:
            raise DataError(f"unknown item id {item_id!r}") from None

    def position_of(self, item_id: str) -> int:
        try:
            return self._index[item_id]
        except KeyError:
            raise DataError(f"unknown item id {item_id!r}") from None

    def feature_matrix(self, ids: Sequence[str] | None = None) -> np.ndarray:
        items = self.items if ids is None else [self.item_by_id(i) for i in ids]
        return np.array([it.features for it in items], dtype=float).reshape(len(items), self.d)

    def labels(self, ids: Sequence[str] | None = None) -> np.ndarray:
        items = self.items if ids is None else [self.item_by_id(i) for i in ids]
        return np.array([it.class_index for it in items], dtype=int)


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """A linear scoring function w . x + bias; prediction is sgn of the score."""

    weights: np.ndarray
    bias: float
    tag: str = ""

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise DataError("hypothesis weights must be a flat vector")
        if not np.any(w != 0.0) and self.bias == 0.0:
            raise DataError("the all-zero hypothesis is not admissible")

    def score(self, features: np.ndarray) -> float:
        return float(self.weights @ np.asarray(features, dtype=float) + self.bias)


@dataclass(frozen=True, eq=False)
class HypothesisSpace:
    """A finite candidate set of linear classifiers with per-class optima."""

    hypotheses: tuple[Hypothesis, ...]
    h_star: tuple[int, ...]  # one index per class

    def __post_init__(self) -> None:
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "h_star", tuple(int(i) for i in self.h_star))
        if len(self.hypotheses) < len(self.h_star):
            raise DataError("need at least as many hypotheses as classes")
        if len(set(self.h_star)) != len(self.h_star):
            raise DataError("per-class optimal hypothesis indices must be distinct")
        for idx in self.h_star:
            if not (0 <= idx < len(self.hypotheses)):
                raise DataError(f"optimal hypothesis index {idx} out of range")

    def __len__(self) -> int:
        return len(self.hypotheses)

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        """(|H|, d) stack of weight vectors."""
        return np.array([h.weights for h in self.hypotheses], dtype=float)

    @cached_property
    def biases(self) -> np.ndarray:
        return np.array([h.bias for h in self.hypotheses], dtype=float)

    def score_matrix(self, features: np.ndarray) -> np.ndarray:
        """(|H|, n) scores for an (n, d) feature block."""
        return self.weight_matrix @ np.asarray(features, dtype=float).T + self.biases[:, None]


@dataclass(frozen=True)
class LearnerParams:
    """Learner noise and discount sharpness. beta/gamma may be math.inf."""

    alpha: float = 0.5
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0) or math.isinf(self.alpha):
            raise DataError("alpha must be a positive finite real")
        if not (self.beta > 0.0):
            raise DataError("beta must be positive (math.inf allowed)")
        if not (self.gamma > 0.0):
            raise DataError("gamma must be positive (math.inf allowed)")


class Strategy(str, Enum):
    RAND_IM = "RAND_IM"
    RAND_EXP = "RAND_EXP"
    STRICT = "STRICT"
    EXPLAIN = "EXPLAIN"

    @property
    def shows_explanations(self) -> bool:
        return self in (Strategy.RAND_EXP, Strategy.EXPLAIN)


@dataclass(frozen=True)
class StepDiagnostic:
    """Per-selection bookkeeping: cumulative objective and posterior mass per class."""

    item_id: str
    objective: float
    posterior_mass: tuple[float, ...]


@dataclass(frozen=True)
class TeachingSet:
    """An ordered selection of at most `budget` item ids plus step diagnostics."""

    strategy: Strategy
    budget: int
    item_ids: tuple[str, ...]
    per_step: tuple[StepDiagnostic, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        object.__setattr__(self, "per_step", tuple(self.per_step))
        if self.budget <= 0:
            raise DataError("teaching budget must be positive")
        if len(self.item_ids) > self.budget:
            raise DataError("teaching set exceeds its budget")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise DataError("teaching set contains duplicate items")


# ---------------------------------------------------------------------------
# Structural equality helpers (ndarray fields make dataclass eq unusable)
# ---------------------------------------------------------------------------

def explanations_equal(a: ExplanationMap | None, b: ExplanationMap | None) -> bool:
    if a is None or b is None:
        return a is b
    return (
        a.width == b.width
        and a.height == b.height
        and a.difficulty == b.difficulty
        and np.array_equal(a.values, b.values)
    )


def items_equal(a: Item, b: Item) -> bool:
    return (
        a.id == b.id
        and a.class_index == b.class_index
        and np.array_equal(a.features, b.features)
        and a.image_uri == b.image_uri
        and a.difficulty_override == b.difficulty_override
        and explanations_equal(a.explanation, b.explanation)
    )


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    return (
        a.classes == b.classes
        and a.d == b.d
        and len(a.items) == len(b.items)
        and all(items_equal(x, y) for x, y in zip(a.items, b.items))
    )


def spaces_equal(a: HypothesisSpace, b: HypothesisSpace) -> bool:
    return (
        a.h_star == b.h_star
        and len(a) == len(b)
        and all(
            x.tag == y.tag and x.bias == y.bias and np.array_equal(x.weights, y.weights)
            for x, y in zip(a.hypotheses, b.hypotheses)
        )
    )


# ---------------------------------------------------------------------------
# Dataset file format
# ---------------------------------------------------------------------------

def _explanation_to_json(e: ExplanationMap | None) -> dict | None:
    if e is None:
        return None
    return {
        "width": e.width,
        "height": e.height,
        "values": e.values.tolist(),
        "difficulty": e.difficulty,
    }


def _explanation_from_json(obj: dict | None, item_id: str) -> ExplanationMap | None:
    if obj is None:
        return None
    try:
        return ExplanationMap(
            width=int(obj["width"]),
            height=int(obj["height"]),
            values=np.asarray(obj["values"], dtype=float),
            difficulty=float(obj["difficulty"]),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"item {item_id!r}: malformed explanation ({exc})") from exc


def dataset_to_json(ds: Dataset) -> dict:
    return {
        "classes": list(ds.classes),
        "d": ds.d,
        "items": [
            {
                "id": it.id,
                "class": it.class_index,
                "features": it.features.tolist(),
                "image_uri": it.image_uri,
                "explanation": _explanation_to_json(it.explanation),
                "difficulty_override": it.difficulty_override,
            }
            for it in ds.items
        ],
    }


def dataset_from_json(obj: dict) -> Dataset:
    try:
        classes = tuple(str(c) for c in obj["classes"])
        d = int(obj["d"])
        raw_items = obj["items"]
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed dataset file: {exc}") from exc
    items = []
    for raw in raw_items:
        try:
            item_id = str(raw["id"])
            feats = np.asarray(raw["features"], dtype=float)
            class_index = int(raw["class"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed item record: {exc}") from exc
        if feats.shape != (d,):
            raise DataError(
                f"item {item_id!r}: features have length {feats.size}, expected {d}"
            )
        override = raw.get("difficulty_override")
        items.append(
            Item(
                id=item_id,
                class_index=class_index,
                features=feats,
                explanation=_explanation_from_json(raw.get("explanation"), item_id),
                image_uri=raw.get("image_uri"),
                difficulty_override=None if override is None else float(override),
            )
        )
    return Dataset(classes=classes, d=d, items=tuple(items))


def load_dataset(path: str | Path) -> Dataset:
    """Read and validate a dataset JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read dataset file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"dataset file {path} is not valid JSON: {exc}") from exc
    return dataset_from_json(obj)


def write_dataset(ds: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_json(ds), fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Hypothesis file format
# ---------------------------------------------------------------------------

def space_to_json(space: HypothesisSpace, d: int) -> dict:
    return {
        "d": d,
        "hypotheses": [
            {"weights": h.weights.tolist(), "bias": h.bias, "tag": h.tag}
            for h in space.hypotheses
        ],
        "h_star": list(space.h_star),
    }


def space_from_json(obj: dict) -> HypothesisSpace:
    try:
        d = int(obj["d"])
        raw = obj["hypotheses"]
        h_star = tuple(int(i) for i in obj["h_star"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed hypothesis file: {exc}") from exc
    hyps = []
    for pos, rec in enumerate(raw):
        try:
            w = np.asarray(rec["weights"], dtype=float)
            bias = float(rec["bias"])
            tag = str(rec.get("tag", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed hypothesis record {pos}: {exc}") from exc
        if w.shape != (d,):
            raise DataError(f"hypothesis {pos}: weights have length {w.size}, expected {d}")
        hyps.append(Hypothesis(weights=w, bias=bias, tag=tag))
    return HypothesisSpace(hypotheses=tuple(hyps), h_star=h_star)


def load_hypotheses(path: str | Path) -> HypothesisSpace:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read hypothesis file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"hypothesis file {path} is not valid JSON: {exc}") from exc
    return space_from_json(obj)


def write_hypotheses(space: HypothesisSpace, d: int, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space_to_json(space, d), fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Teaching-set file format
# ---------------------------------------------------------------------------

def teaching_set_to_json(tset: TeachingSet) -> dict:
    return {
        "strategy": tset.strategy.value,
        "budget": tset.budget,
        "item_ids": list(tset.item_ids),
        "per_step": [
            {
                "item_id": s.item_id,
                "objective": s.objective,
                "posterior_mass": list(s.posterior_mass),
            }
            for s in tset.per_step
        ],
    }


def teaching_set_from_json(obj: dict) -> TeachingSet:
    try:
        strategy = Strategy(obj["strategy"])
        budget = int(obj["budget"])
        item_ids = tuple(str(i) for i in obj["item_ids"])
        raw_steps = obj.get("per_step", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed teaching-set file: {exc}") from exc
    steps = tuple(
        StepDiagnostic(
            item_id=str(s["item_id"]),
            objective=float(s["objective"]),
            posterior_mass=tuple(float(m) for m in s["posterior_mass"]),
        )
        for s in raw_steps
    )
    return TeachingSet(strategy=strategy, budget=budget, item_ids=item_ids, per_step=steps)


def load_teaching_set(path: str | Path) -> TeachingSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read teaching-set file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"teaching-set file {path} is not valid JSON: {exc}") from exc
    return teaching_set_from_json(obj)


def write_teaching_set(tset: TeachingSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(teaching_set_to_json(tset), fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Train/test split
# ---------------------------------------------------------------------------

def split_dataset(
    ds: Dataset, train_fraction: float, seed: int
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Stratified train/test partition of item ids, deterministic under `seed`.

    Each class is shuffled with its own seed stream and split so that
    round(train_fraction * n_class) items land on the train side, clamped so
    both sides stay non-empty. Returned tuples preserve dataset order.
    """
    if not (0.0 < train_fraction < 1.0):
        raise DataError("train_fraction must lie strictly between 0 and 1")
    by_class: dict[int, list[int]] = {c: [] for c in range(ds.num_classes)}
    for pos, item in enumerate(ds.items):
        by_class[item.class_index].append(pos)
    train_pos: list[int] = []
    test_pos: list[int] = []
    for c in range(ds.num_classes):
        members = by_class[c]
        if len(members) < 2:
            raise DataError(
                f"class {ds.classes[c]!r} has {len(members)} item(s); need at least 2 to split"
            )
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        order = rng.permutation(len(members))
        n_train = int(math.floor(train_fraction * len(members) + 0.5))
        n_train = min(max(n_train, 1), len(members) - 1)
        chosen = set(int(k) for k in order[:n_train])
        for local, pos in enumerate(members):
            (train_pos if local in chosen else test_pos).append(pos)
    train_pos.sort()
    test_pos.sort()
    return (
        tuple(ds.items[p].id for p in train_pos),
        tuple(ds.items[p].id for p in test_pos),
    )
