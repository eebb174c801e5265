"""Ground-truth feature labels and false-positive / false-negative
tradeoff curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import GroundTruthNetwork
from .features import KINDS, FeaturePosteriorTable


@dataclass(frozen=True)
class FeatureLabelTable:
    """Boolean truth labels with the same pair conventions as
    FeaturePosteriorTable."""

    kind: str
    names: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        object.__setattr__(self, "names", tuple(self.names))
        lab = np.asarray(self.labels, dtype=bool)
        n = len(self.names)
        if lab.shape != (n, n):
            raise ValueError(f"labels must be ({n}, {n})")
        object.__setattr__(self, "labels", lab)

    def pairs(self):
        n = len(self.names)
        if self.kind == "markov":
            return [(i, j) for i in range(n) for j in range(i + 1, n)]
        return [(i, j) for i in range(n) for j in range(n) if i != j]

    def values(self) -> np.ndarray:
        return np.asarray([self.labels[i, j] for i, j in self.pairs()])


def label_features(net: GroundTruthNetwork, kind: str) -> FeatureLabelTable:
    """True/false labels read off the generating network.

    edge: the directed edge exists. markov: adjacent in the moral graph
    (edge in either direction or a common child). path: a directed path
    exists.
    """
    if kind == "edge":
        lab = net.dag.adjacency()
    elif kind == "markov":
        lab = net.dag.moral_adjacency()
    elif kind == "path":
        lab = net.dag.reachability()
    else:
        raise ValueError(f"unknown feature kind {kind!r}")
    return FeatureLabelTable(kind=kind, names=net.names, labels=lab)


def tradeoff_curve(
    estimates: FeaturePosteriorTable,
    labels: FeatureLabelTable,
    thresholds=None,
) -> list[tuple[float, int, int]]:
    """(threshold, false positives, false negatives) along a grid.

    A feature is predicted true when its estimate exceeds t. False
    positives are label-negative features predicted true; false
    negatives are label-positive features predicted false.
    """
    if estimates.kind != labels.kind:
        raise ValueError(
            f"estimates are {estimates.kind!r} but labels are {labels.kind!r}"
        )
    if estimates.names != labels.names:
        raise ValueError("estimates and labels cover different variable sets")
    if thresholds is None:
        thresholds = np.linspace(0.0, 1.0, 101)
    est = estimates.values()
    lab = labels.values()
    curve = []
    for t in thresholds:
        predicted = est > t
        fp = int(np.sum(predicted & ~lab))
        fn = int(np.sum(~predicted & lab))
        curve.append((float(t), fp, fn))
    return curve


def write_curve(curve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("threshold,false_positives,false_negatives\n")
        for t, fp, fn in curve:
            fh.write(f"{format(t, '.12g')},{fp},{fn}\n")
