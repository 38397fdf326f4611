"""Synthetic correlated multi-label data, missing-label simulation, file I/O.

Labels use {-1, +1} throughout. A dataset carries the ground-truth labels and
an "observed" copy in which some true positives have been turned into -1
(the assumed-negative convention): missingness only ever hides positives.

The text format is deliberately dumb: a "N C F" header, N feature rows, N
truth label rows, N observed label rows, all space-separated, floats written
with shortest round-trip decimals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrast import as_label_matrix
from .linalg import as_matrix
from .seeding import component_rng


class DatasetFormatError(ValueError):
    """A dataset file could not be parsed; the message names the line."""


@dataclass
class Dataset:
    features: np.ndarray          # N x F float64
    truth: np.ndarray             # N x C in {-1, +1}
    observed: np.ndarray          # N x C in {-1, +1}
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.features = as_matrix(self.features, "features")
        self.truth = as_label_matrix(self.truth, "truth")
        self.observed = as_label_matrix(self.observed, "observed")
        n = self.features.shape[0]
        if self.truth.shape[0] != n or self.observed.shape != self.truth.shape:
            raise ValueError("features, truth and observed row counts differ")
        if not (self.truth == 1).any(axis=1).all():
            raise ValueError("every truth row needs at least one positive label")
        if ((self.observed == 1) & (self.truth == -1)).any():
            raise ValueError("observed positives must be a subset of truth positives")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return self.truth.shape[1]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MissingnessSpec:
    """How to hide positives: keep each with probability ``ratio`` (mode
    "keep", with at least one survivor per row) or keep exactly one
    uniformly chosen positive per row (mode "single")."""

    mode: str
    ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("keep", "single"):
            raise ValueError("mode must be 'keep' or 'single'")
        if self.mode == "keep" and not 0.0 < self.ratio <= 1.0:
            raise ValueError("keep ratio must be in (0, 1]")


def generate_synthetic(
    n_samples: int,
    n_classes: int,
    n_features: int,
    n_groups: int,
    noise: float,
    seed: int,
) -> Dataset:
    """Correlated multi-label data with low-rank label structure.

    The classes form an implication chain in a random order (each class
    implies its predecessor, the way "grape" implies "fruit"), and each group
    owns the template closed under that chain: the nested prefix ending at
    the group's anchor class. Anchor depths are spread evenly, so templates
    range from a single label to most of the label set. A sample copies its
    group's template, flips non-anchor entries with a small probability
    (``min(noise, 0.5) / 10``, at most 5%), and gets features equal to the
    sum of the prototype vectors of its positive classes plus Gaussian noise
    of scale ``noise``. The anchor is never flipped, so every row keeps a
    positive.
    """
    if min(n_samples, n_classes, n_features, n_groups) < 1:
        raise ValueError("all counts must be >= 1")
    if n_groups > n_classes:
        raise ValueError("n_groups must not exceed n_classes")
    if not 0.0 <= noise <= 4.0:
        raise ValueError("noise must be in [0, 4]")
    rng = component_rng(seed, "data")

    chain = rng.permutation(n_classes)  # chain[j] implies chain[j-1] implies ...
    if n_groups == 1:
        depths = np.array([0])
    else:
        depths = np.round(np.linspace(0, n_classes - 1, n_groups)).astype(int)
    anchors = chain[depths]
    templates = np.full((n_groups, n_classes), -1, dtype=np.int8)
    for g, depth in enumerate(depths):
        templates[g, chain[: depth + 1]] = 1

    groups = rng.integers(0, n_groups, size=n_samples)
    truth = templates[groups].copy()
    flips = rng.random((n_samples, n_classes)) < min(noise, 0.5) / 10.0
    flips[np.arange(n_samples), anchors[groups]] = False  # anchors are stable
    truth[flips] *= -1

    prototypes = rng.normal(0.0, 1.0, size=(n_classes, n_features))
    positives = (truth == 1).astype(np.float64)
    features = positives @ prototypes + noise * rng.normal(
        0.0, 1.0, size=(n_samples, n_features)
    )
    return Dataset(features, truth, truth.copy())


def drop_labels(truth, spec: MissingnessSpec) -> np.ndarray:
    """Observed labels after hiding positives per ``spec``.

    Rows are processed in order with a generator seeded from ``spec.seed``,
    so the result is reproducible. A row that would lose all its positives in
    "keep" mode has its survivor set redrawn until nonempty.
    """
    truth = as_label_matrix(truth, "truth")
    if not (truth == 1).any(axis=1).all():
        raise ValueError("every truth row needs at least one positive label")
    rng = component_rng(spec.seed, "missing")
    observed = np.full_like(truth, -1)
    for i in range(truth.shape[0]):
        pos = np.flatnonzero(truth[i] == 1)
        if spec.mode == "single":
            observed[i, pos[rng.integers(pos.size)]] = 1
        else:
            kept = pos[rng.random(pos.size) < spec.ratio]
            while kept.size == 0:
                kept = pos[rng.random(pos.size) < spec.ratio]
            observed[i, kept] = 1
    return observed


def average_positives(labels) -> float:
    """Mean number of +1 entries per row."""
    labels = as_label_matrix(labels)
    return float((labels == 1).sum(axis=1).mean())


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{ds.n_samples} {ds.n_classes} {ds.n_features}\n")
        for row in ds.features:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        for block in (ds.truth, ds.observed):
            for row in block:
                fh.write(" ".join(str(int(x)) for x in row) + "\n")


def _parse_labels(fields: list[str], lineno: int, n_classes: int) -> list[int]:
    if len(fields) != n_classes:
        raise DatasetFormatError(
            f"line {lineno}: expected {n_classes} labels, got {len(fields)}"
        )
    out = []
    for f in fields:
        try:
            value = int(f)
        except ValueError:
            raise DatasetFormatError(f"line {lineno}: bad label {f!r}") from None
        if value not in (-1, 1):
            raise DatasetFormatError(f"line {lineno}: label must be -1 or 1, got {value}")
        out.append(value)
    return out


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError("line 1: empty file")
    head = lines[0].split()
    try:
        n, c, f = (int(x) for x in head)
    except ValueError:
        raise DatasetFormatError("line 1: header must be 'N C F'") from None
    if len(head) != 3 or min(n, c, f) < 1:
        raise DatasetFormatError("line 1: header must be three positive ints 'N C F'")
    if len(lines) != 1 + 3 * n:
        raise DatasetFormatError(
            f"expected {1 + 3 * n} lines for N={n}, found {len(lines)}"
        )

    features = np.empty((n, f))
    for i in range(n):
        fields = lines[1 + i].split()
        if len(fields) != f:
            raise DatasetFormatError(
                f"line {2 + i}: expected {f} features, got {len(fields)}"
            )
        try:
            features[i] = [float(x) for x in fields]
        except ValueError:
            raise DatasetFormatError(f"line {2 + i}: bad feature value") from None

    truth = np.array(
        [_parse_labels(lines[1 + n + i].split(), 2 + n + i, c) for i in range(n)],
        dtype=np.int8,
    )
    observed = np.array(
        [_parse_labels(lines[1 + 2 * n + i].split(), 2 + 2 * n + i, c) for i in range(n)],
        dtype=np.int8,
    )
    try:
        return Dataset(features, truth, observed)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from None
