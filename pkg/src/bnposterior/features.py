"""Feature posterior tables and the on-disk trace / table formats."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError

KINDS = ("edge", "markov", "path")


@dataclass(frozen=True)
class FeaturePosteriorTable:
    """Estimates in [0, 1] for one feature kind over all variable pairs.

    estimates[i, j] is the probability of edge i->j (kind "edge"), of a
    directed path i~>j (kind "path"), or of i and j being in each
    other's Markov blanket (kind "markov", symmetric). The diagonal is
    always zero. meta records which estimator produced the table.
    """

    kind: str
    names: tuple[str, ...]
    estimates: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        object.__setattr__(self, "names", tuple(self.names))
        est = np.asarray(self.estimates, dtype=float)
        n = len(self.names)
        if est.shape != (n, n):
            raise ValueError(f"estimates must be ({n}, {n})")
        if np.any(est < -1e-12) or np.any(est > 1.0 + 1e-12):
            raise ValueError("estimates must lie in [0, 1]")
        est = np.clip(est, 0.0, 1.0)
        np.fill_diagonal(est, 0.0)
        if self.kind == "markov" and not np.allclose(est, est.T, rtol=0, atol=1e-12):
            raise ValueError("markov estimates must be symmetric")
        object.__setattr__(self, "estimates", est)

    @property
    def n(self) -> int:
        return len(self.names)

    def pairs(self) -> list[tuple[int, int]]:
        """Feature index set: ordered pairs for edge/path, i<j for markov."""
        n = self.n
        if self.kind == "markov":
            return [(i, j) for i in range(n) for j in range(i + 1, n)]
        return [(i, j) for i in range(n) for j in range(n) if i != j]

    def values(self) -> np.ndarray:
        return np.asarray([self.estimates[i, j] for i, j in self.pairs()])


def write_feature_table(table: FeaturePosteriorTable, path) -> None:
    """CSV rows kind,i,j,estimate (markov listed once per unordered pair)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("kind,i,j,estimate\n")
        for i, j in table.pairs():
            fh.write(
                f"{table.kind},{table.names[i]},{table.names[j]},"
                f"{format(table.estimates[i, j], '.12g')}\n"
            )


def read_feature_table(path) -> FeaturePosteriorTable:
    kind = None
    names: list[str] = []
    seen: dict[tuple[str, str], float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "kind,i,j,estimate":
            raise DataFormatError(f"{path}: expected header 'kind,i,j,estimate'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataFormatError(f"{path}:{lineno}: expected 4 fields")
            k, i, j, est = parts
            if kind is None:
                kind = k
            elif k != kind:
                raise DataFormatError(f"{path}:{lineno}: mixed feature kinds")
            try:
                val = float(est)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad estimate {est!r}") from None
            if not (0.0 <= val <= 1.0):
                raise DataFormatError(f"{path}:{lineno}: estimate {val} outside [0, 1]")
            for name in (i, j):
                if name not in names:
                    names.append(name)
            seen[(i, j)] = val
    if kind is None:
        raise DataFormatError(f"{path}: no feature rows")
    idx = {name: t for t, name in enumerate(names)}
    est = np.zeros((len(names), len(names)))
    for (i, j), val in seen.items():
        est[idx[i], idx[j]] = val
        if kind == "markov":
            est[idx[j], idx[i]] = val
    return FeaturePosteriorTable(kind=kind, names=tuple(names), estimates=est)


@dataclass(frozen=True)
class McmcTraceRecord:
    """One sampler step: running score (natural log) and what happened."""

    iteration: int
    log_score: float
    proposal_kind: str
    accepted: bool


def write_trace(records, path) -> None:
    """Tab-separated iteration, score in bits (log2), proposal, accepted."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            bits = rec.log_score / math.log(2.0)
            fh.write(f"{rec.iteration}\t{format(bits, '.12g')}\t{rec.proposal_kind}\t{int(rec.accepted)}\n")
