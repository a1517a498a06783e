"""Explanation heatmaps: composition from feature maps, normalization, difficulty.

Feature maps arrive precomputed in a sidecar file; composing an explanation
is pure arithmetic over them, so nothing here touches a network.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import DataError, Dataset, ExplanationMap, Item

CENTERING_EPSILON = 1e-6


@dataclass(frozen=True, eq=False)
class FeatureMapStack:
    """K per-channel activation grids for one item, each row-major of size W*H."""

    item_id: str
    width: int
    height: int
    maps: np.ndarray  # shape (K, width * height)

    def __post_init__(self) -> None:
        m = np.asarray(self.maps, dtype=float)
        object.__setattr__(self, "maps", m)
        if m.ndim != 2 or m.shape[0] < 1:
            raise DataError(f"item {self.item_id!r}: need at least one channel map")
        if m.shape[1] != self.width * self.height:
            raise DataError(
                f"item {self.item_id!r}: maps have {m.shape[1]} cells, expected "
                f"{self.width * self.height}"
            )

    @property
    def channels(self) -> int:
        return int(self.maps.shape[0])


@dataclass(frozen=True, eq=False)
class ClassWeights:
    """Per-class channel weights and biases for explanation composition."""

    weights: np.ndarray  # shape (C, K)
    biases: np.ndarray  # shape (C,)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.biases, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        if w.ndim != 2:
            raise DataError("class weights must be a (classes, channels) matrix")
        if b.shape != (w.shape[0],):
            raise DataError("need one bias per class")

    @property
    def channels(self) -> int:
        return int(self.weights.shape[1])


def compose_explanation(fm: FeatureMapStack, cw: ClassWeights, class_index: int) -> np.ndarray:
    """Raw heatmap: per cell, the class-weighted sum of channel activations plus bias."""
    if not (0 <= class_index < cw.weights.shape[0]):
        raise DataError(f"class index {class_index} out of range")
    if fm.channels != cw.channels:
        raise DataError(
            f"item {fm.item_id!r}: {fm.channels} channels but weights expect {cw.channels}"
        )
    return cw.weights[class_index] @ fm.maps + cw.biases[class_index]


def normalize_map(raw: np.ndarray) -> np.ndarray:
    """Min-max rescale a raw heatmap onto [0, 1]; a constant grid maps to all zeros."""
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise DataError("cannot normalize an empty grid")
    lo = float(raw.min())
    hi = float(raw.max())
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def entropy_difficulty(values: np.ndarray) -> float:
    """Mean of -e * ln(e) over grid cells, with 0 * ln(0) taken as 0.

    Low values mean a localized, near-binary heatmap that is easy to read;
    the maximum over constant grids is 1/e at cell value 1/e.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise DataError("cannot score an empty grid")
    if float(vals.min()) < 0.0 or float(vals.max()) > 1.0:
        raise DataError("difficulty is defined for values in [0, 1] only")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(vals > 0.0, vals * np.log(vals), 0.0)
    return float(-terms.mean())


def center_difficulties(ds: Dataset) -> Dataset:
    """Remove each class's mean difficulty, then shift so every value stays > 0.

    Per class, non-overridden difficulties become d - mean(d) + s where s is the
    smallest shift (plus CENTERING_EPSILON) that keeps the class minimum positive.
    Items with a difficulty_override keep it verbatim, except an override of
    exactly 0 is clamped to CENTERING_EPSILON so positivity holds everywhere.
    """
    for item in ds.items:
        if item.difficulty_override is None and item.explanation is None:
            raise DataError(
                f"item {item.id!r} has neither an explanation difficulty nor an override"
            )
    new_items: list[Item] = list(ds.items)
    for c in range(ds.num_classes):
        positions = [
            pos
            for pos, item in enumerate(ds.items)
            if item.class_index == c and item.difficulty_override is None
        ]
        if not positions:
            continue  # class fully overridden; nothing to center
        raw = np.array([ds.items[p].explanation.difficulty for p in positions])
        centered = raw - raw.mean()
        shift = max(0.0, -float(centered.min())) + CENTERING_EPSILON
        adjusted = centered + shift
        for p, value in zip(positions, adjusted):
            item = ds.items[p]
            new_items[p] = replace(item, explanation=replace(item.explanation, difficulty=float(value)))
    for pos, item in enumerate(ds.items):
        if item.difficulty_override is not None and item.difficulty_override == 0.0:
            new_items[pos] = replace(item, difficulty_override=CENTERING_EPSILON)
    return Dataset(classes=ds.classes, d=ds.d, items=tuple(new_items))


# ---------------------------------------------------------------------------
# Feature-map sidecar file
# ---------------------------------------------------------------------------

def load_feature_maps(path: str | Path) -> tuple[dict[str, FeatureMapStack], ClassWeights]:
    """Read the sidecar file of per-item channel maps plus class weights."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read feature-map file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"feature-map file {path} is not valid JSON: {exc}") from exc
    try:
        k = int(obj["K"])
        width = int(obj["width"])
        height = int(obj["height"])
        cw = ClassWeights(
            weights=np.asarray(obj["class_weights"], dtype=float),
            biases=np.asarray(obj["class_biases"], dtype=float),
        )
        raw_items = obj["items"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed feature-map file: {exc}") from exc
    if cw.channels != k:
        raise DataError(f"class weights have {cw.channels} channels, header says {k}")
    stacks: dict[str, FeatureMapStack] = {}
    for rec in raw_items:
        try:
            item_id = str(rec["id"])
            maps = np.asarray(rec["maps"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed feature-map record: {exc}") from exc
        if maps.ndim != 2 or maps.shape[0] != k:
            raise DataError(f"item {item_id!r}: expected {k} channel maps")
        stacks[item_id] = FeatureMapStack(item_id=item_id, width=width, height=height, maps=maps)
    return stacks, cw


def attach_explanations(
    ds: Dataset, stacks: dict[str, FeatureMapStack], cw: ClassWeights
) -> Dataset:
    """Compose, normalize, and score an explanation for every item with a map."""
    new_items: list[Item] = []
    for item in ds.items:
        stack = stacks.get(item.id)
        if stack is None:
            new_items.append(item)
            continue
        grid = normalize_map(compose_explanation(stack, cw, item.class_index))
        expl = ExplanationMap(
            width=stack.width,
            height=stack.height,
            values=grid,
            difficulty=entropy_difficulty(grid),
        )
        new_items.append(replace(item, explanation=expl))
    return Dataset(classes=ds.classes, d=ds.d, items=tuple(new_items))
