"""Discrete datasets, sufficient statistics, and synthetic data generation.

Variables are categorical with values encoded as nonnegative integers;
variable i takes values in [0, arities[i]). Parent configurations are
indexed in mixed radix with the FIRST parent least significant; every
module in the package relies on that one encoding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dag import Dag
from .errors import DataFormatError


@dataclass(frozen=True)
class Dataset:
    """Fully observed discrete data matrix.

    Attributes:
        names: one identifier per variable.
        arities: number of categories r_i per variable (positive).
        rows: integer matrix of shape (M, n), entry in [0, r_i).
    """

    names: tuple[str, ...]
    arities: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "arities", np.asarray(self.arities, dtype=np.int64))
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64))
        n = len(self.names)
        if n < 1:
            raise ValueError("need at least one variable")
        if self.arities.shape != (n,):
            raise ValueError("arities must have one entry per variable")
        if np.any(self.arities < 1):
            raise ValueError("arities must be positive")
        if self.rows.ndim != 2 or self.rows.shape[1] != n:
            raise ValueError(f"rows must be (M, {n})")
        if self.rows.shape[0] < 1:
            raise ValueError("need at least one row")
        if np.any(self.rows < 0) or np.any(self.rows >= self.arities[None, :]):
            raise ValueError("row entries must satisfy 0 <= x_i < r_i")
        if len(set(self.names)) != n:
            raise ValueError("variable names must be unique")

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return int(self.rows.shape[0])

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None


@dataclass(frozen=True)
class CountTable:
    """Family sufficient statistics N_{ux}.

    counts[u, x] is the number of rows where the parents take the
    configuration with mixed-radix index u and the child takes value x.
    """

    child: int
    parents: tuple[int, ...]
    counts: np.ndarray  # shape (q, r_child)

    @property
    def num_configs(self) -> int:
        return int(self.counts.shape[0])


def config_radix(arities: Sequence[int]) -> np.ndarray:
    """Mixed-radix place values, first position least significant."""
    r = np.asarray(arities, dtype=np.int64)
    if r.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(([1], np.cumprod(r[:-1])))


def config_index(values: np.ndarray, arities: Sequence[int]) -> np.ndarray:
    """Mixed-radix index of each row of `values` (columns follow `arities`)."""
    radix = config_radix(arities)
    if radix.size == 0:
        return np.zeros(values.shape[0] if values.ndim == 2 else 1, dtype=np.int64)
    return values @ radix


def config_values(index: int, arities: Sequence[int]) -> tuple[int, ...]:
    """Inverse of config_index for a single configuration."""
    vals = []
    for r in arities:
        vals.append(index % r)
        index //= r
    return tuple(int(v) for v in vals)


def counts(d: Dataset, child: int, parents: Iterable[int]) -> CountTable:
    """Tally N_{ux} for the family (child | parents).

    The parent order given here fixes the configuration indexing
    (first parent least significant).
    """
    parents = tuple(int(p) for p in parents)
    if len(set(parents)) != len(parents):
        raise ValueError("duplicate parents")
    if child in parents:
        raise ValueError("child cannot be its own parent")
    for v in (child, *parents):
        if v < 0 or v >= d.n:
            raise ValueError(f"variable id {v} out of range")
    r = int(d.arities[child])
    par_arities = d.arities[list(parents)]
    q = int(np.prod(par_arities)) if parents else 1
    if parents:
        u = config_index(d.rows[:, list(parents)], par_arities)
    else:
        u = np.zeros(d.num_rows, dtype=np.int64)
    flat = u * r + d.rows[:, child]
    tab = np.bincount(flat, minlength=q * r).reshape(q, r)
    return CountTable(child=child, parents=parents, counts=tab)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def load_csv(path) -> Dataset:
    """Read a dataset from CSV.

    First line is the header; each header cell is either `name` or
    `name:arity`. Undeclared arities are inferred as max observed + 1.
    A declared arity smaller than the observed maximum is an error.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        names: list[str] = []
        declared: list[int | None] = []
        for cell in header:
            cell = cell.strip()
            if ":" in cell:
                name, _, ar = cell.partition(":")
                name = name.strip()
                try:
                    arity = int(ar)
                except ValueError:
                    raise DataFormatError(f"{path}: bad declared arity in header cell {cell!r}") from None
                if arity < 1:
                    raise DataFormatError(f"{path}: declared arity must be positive in {cell!r}")
                declared.append(arity)
            else:
                name = cell
                declared.append(None)
            if not name:
                raise DataFormatError(f"{path}: empty variable name in header")
            names.append(name)
        n = len(names)
        body: list[list[int]] = []
        for rownum, cells in enumerate(reader, start=1):
            if len(cells) != n:
                raise DataFormatError(
                    f"{path}: row {rownum} has {len(cells)} cells, expected {n}"
                )
            vals = []
            for j, cell in enumerate(cells):
                try:
                    v = int(cell.strip())
                except ValueError:
                    raise DataFormatError(
                        f"{path}: parse error at row {rownum}, column {names[j]}: "
                        f"{cell.strip()!r} is not a nonnegative integer"
                    ) from None
                if v < 0:
                    raise DataFormatError(
                        f"{path}: parse error at row {rownum}, column {names[j]}: "
                        f"negative value {v}"
                    )
                vals.append(v)
            body.append(vals)
    if not body:
        raise DataFormatError(f"{path}: no data rows")
    rows = np.asarray(body, dtype=np.int64)
    arities = []
    for j in range(n):
        observed_max = int(rows[:, j].max())
        if declared[j] is None:
            arities.append(observed_max + 1)
        else:
            if declared[j] <= observed_max:
                raise DataFormatError(
                    f"{path}: column {names[j]} declares arity {declared[j]} "
                    f"but contains value {observed_max}"
                )
            arities.append(declared[j])
    return Dataset(names=tuple(names), arities=np.asarray(arities), rows=rows)


def save_csv(d: Dataset, path) -> None:
    """Write a dataset with declared arities in the header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{name}:{int(r)}" for name, r in zip(d.names, d.arities)])
        for row in d.rows:
            writer.writerow([int(v) for v in row])


# ---------------------------------------------------------------------------
# Ground-truth networks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruthNetwork:
    """A known generating network: DAG plus one CPT per node.

    cpts[i] has shape (q_i, r_i); row u is the distribution of node i
    given parent configuration u (mixed radix over dag.parents(i)).
    """

    names: tuple[str, ...]
    arities: np.ndarray
    dag: Dag
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "arities", np.asarray(self.arities, dtype=np.int64))
        object.__setattr__(self, "cpts", tuple(np.asarray(c, dtype=float) for c in self.cpts))
        n = len(self.names)
        if self.dag.n != n or len(self.cpts) != n or self.arities.shape != (n,):
            raise ValueError("names, arities, dag, and cpts disagree on n")
        for i, cpt in enumerate(self.cpts):
            q = int(np.prod(self.arities[list(self.dag.parents(i))])) if self.dag.parents(i) else 1
            r = int(self.arities[i])
            if cpt.shape != (q, r):
                raise ValueError(f"cpt for node {i} must have shape ({q}, {r}), got {cpt.shape}")
            if np.any(cpt < 0):
                raise ValueError(f"cpt for node {i} has negative entries")
            if np.any(np.abs(cpt.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError(f"cpt rows for node {i} must sum to 1 within 1e-9")

    @property
    def n(self) -> int:
        return len(self.names)


def forward_sample(net: GroundTruthNetwork, num_rows: int, seed) -> Dataset:
    """Ancestral sampling of `num_rows` complete assignments."""
    if num_rows < 1:
        raise ValueError("need at least one row")
    rng = np.random.default_rng(seed)
    n = net.n
    order = net.dag.topological_order()
    rows = np.zeros((num_rows, n), dtype=np.int64)
    for i in order:
        parents = net.dag.parents(i)
        if parents:
            u = config_index(rows[:, list(parents)], net.arities[list(parents)])
        else:
            u = np.zeros(num_rows, dtype=np.int64)
        cdf = np.cumsum(net.cpts[i], axis=1)
        draws = rng.random(num_rows)
        rows[:, i] = np.sum(cdf[u] < draws[:, None], axis=1)
    return Dataset(names=net.names, arities=net.arities.copy(), rows=rows)


def random_network(
    n: int,
    *,
    arity: int = 2,
    max_parents: int = 3,
    edge_prob: float = 0.5,
    concentration: float = 0.4,
    seed=0,
    names: Sequence[str] | None = None,
) -> GroundTruthNetwork:
    """Random generating network for synthetic experiments.

    Nodes are wired along a random topological order; each node draws
    up to max_parents parents from its predecessors. Small Dirichlet
    concentration gives skewed CPT rows, i.e. learnable dependencies.
    """
    rng = np.random.default_rng(seed)
    if names is None:
        names = tuple(f"X{i}" for i in range(n))
    order = rng.permutation(n)
    parent_sets: list[tuple[int, ...]] = [() for _ in range(n)]
    for pos in range(n):
        i = int(order[pos])
        preds = [int(order[t]) for t in range(pos)]
        if not preds:
            continue
        cap = min(max_parents, len(preds))
        want = int(rng.binomial(cap, edge_prob))
        if want > 0:
            chosen = rng.choice(len(preds), size=want, replace=False)
            parent_sets[i] = tuple(sorted(preds[t] for t in chosen))
    dag = Dag(n, parent_sets, _checked=True)
    arities = np.full(n, arity, dtype=np.int64)
    cpts = []
    for i in range(n):
        q = int(np.prod(arities[list(dag.parents(i))])) if dag.parents(i) else 1
        cpt = rng.dirichlet(np.full(arity, concentration), size=q)
        cpt = np.maximum(cpt, 1e-6)
        cpt /= cpt.sum(axis=1, keepdims=True)
        cpts.append(cpt)
    return GroundTruthNetwork(names=tuple(names), arities=arities, dag=dag, cpts=tuple(cpts))


# ---------------------------------------------------------------------------
# Network text format
# ---------------------------------------------------------------------------
#
#   var <name> <arity>
#   parents <name> <p1> <p2> ...
#   cpt <name> <u-index> : <prob_0> ... <prob_{r-1}>
#
# u-index uses the package's mixed-radix encoding over the declared
# parent order (first parent least significant).

def load_network(path) -> GroundTruthNetwork:
    names: list[str] = []
    arities: list[int] = []
    parents: dict[str, list[str]] = {}
    cpt_rows: dict[str, dict[int, list[float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            kind = fields[0]
            try:
                if kind == "var":
                    if len(fields) != 3:
                        raise ValueError("expected: var <name> <arity>")
                    names.append(fields[1])
                    arities.append(int(fields[2]))
                elif kind == "parents":
                    if len(fields) < 2:
                        raise ValueError("expected: parents <name> <p1> ...")
                    parents[fields[1]] = fields[2:]
                elif kind == "cpt":
                    if len(fields) < 5 or fields[3] != ":":
                        raise ValueError("expected: cpt <name> <u-index> : <probs>")
                    name, u = fields[1], int(fields[2])
                    cpt_rows.setdefault(name, {})[u] = [float(x) for x in fields[4:]]
                else:
                    raise ValueError(f"unknown directive {kind!r}")
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not names:
        raise DataFormatError(f"{path}: no variables declared")
    if len(set(names)) != len(names):
        raise DataFormatError(f"{path}: duplicate variable names")
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    ar = np.asarray(arities, dtype=np.int64)
    parent_sets: list[tuple[int, ...]] = [() for _ in range(n)]
    parent_orders: list[tuple[int, ...]] = [() for _ in range(n)]
    for name, plist in parents.items():
        if name not in index:
            raise DataFormatError(f"{path}: parents line for unknown variable {name!r}")
        try:
            ids = tuple(index[p] for p in plist)
        except KeyError as exc:
            raise DataFormatError(f"{path}: unknown parent {exc.args[0]!r} of {name}") from None
        parent_orders[index[name]] = ids
        parent_sets[index[name]] = tuple(sorted(ids))
    try:
        dag = Dag(n, parent_sets)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    cpts: list[np.ndarray] = []
    for i, name in enumerate(names):
        declared_order = parent_orders[i]
        q = int(np.prod(ar[list(declared_order)])) if declared_order else 1
        r = int(ar[i])
        table = np.zeros((q, r), dtype=float)
        rows = cpt_rows.get(name, {})
        if len(rows) != q:
            raise DataFormatError(
                f"{path}: variable {name} needs {q} cpt lines, found {len(rows)}"
            )
        for u, probs in rows.items():
            if u < 0 or u >= q:
                raise DataFormatError(f"{path}: cpt u-index {u} out of range for {name}")
            if len(probs) != r:
                raise DataFormatError(
                    f"{path}: cpt line for {name} u={u} needs {r} probabilities"
                )
            table[u] = probs
        # re-index to the canonical sorted parent order used by Dag
        canon = parent_sets[i]
        if canon != declared_order and declared_order:
            perm_table = np.zeros_like(table)
            decl_ar = [int(ar[p]) for p in declared_order]
            pos_in_decl = {p: t for t, p in enumerate(declared_order)}
            for u in range(q):
                vals = config_values(u, decl_ar)
                canon_vals = [vals[pos_in_decl[p]] for p in canon]
                cu = int(config_index(np.asarray([canon_vals]), ar[list(canon)])[0])
                perm_table[cu] = table[u]
            table = perm_table
        cpts.append(table)
    try:
        return GroundTruthNetwork(names=tuple(names), arities=ar, dag=dag, cpts=tuple(cpts))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def save_network(net: GroundTruthNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, r in zip(net.names, net.arities):
            fh.write(f"var {name} {int(r)}\n")
        for i, name in enumerate(net.names):
            ps = net.dag.parents(i)
            if ps:
                fh.write(f"parents {name} {' '.join(net.names[p] for p in ps)}\n")
            for u in range(net.cpts[i].shape[0]):
                probs = " ".join(format(p, ".17g") for p in net.cpts[i][u])
                fh.write(f"cpt {name} {u} : {probs}\n")
