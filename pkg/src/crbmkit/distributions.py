"""Dense probability distributions and conditional tables.

All divergences use log base 2, so a bound of "n - l bits" is directly the
uniform-vs-delta divergence on n - l output bits.  Zero probabilities are
represented exactly; nothing is epsilon-floored here (support-class logic
needs true zeros).  The floor used by the compiler lives in that module.

Joint distributions over (x, y) put the k input units on the low bits:
joint index v = x + 2^k * y.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .bitspace import check_width
from .errors import DisjointSupports, ShapeMismatch, WidthMismatch, ZeroInputMass

SUM_TOL = 1e-12


@dataclass(frozen=True)
class Dist:
    """A probability vector over {0,1}^width, indexed by state."""

    width: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_width(self.width)
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (1 << self.width,):
            raise ShapeMismatch(
                f"expected {1 << self.width} probabilities, got shape {p.shape}"
            )
        if np.any(p < 0):
            raise ValueError("negative probability entry")
        if abs(p.sum() - 1.0) > SUM_TOL * (1 << self.width):
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)
        p.setflags(write=False)

    @property
    def strictly_positive(self) -> bool:
        return bool(self.probs.min() > 0)

    def __getitem__(self, idx: int) -> float:
        return float(self.probs[idx])

    @staticmethod
    def from_probs(values, width: int | None = None) -> "Dist":
        v = np.asarray(values, dtype=float)
        if width is None:
            width = int(v.size - 1).bit_length()
        return Dist(width, v)

    @staticmethod
    def uniform(width: int) -> "Dist":
        n = 1 << width
        return Dist(width, np.full(n, 1.0 / n))

    @staticmethod
    def point_mass(width: int, index: int) -> "Dist":
        p = np.zeros(1 << width)
        p[index] = 1.0
        return Dist(width, p)

    def to_json(self) -> str:
        return json.dumps({"width": self.width, "probs": self.probs.tolist()})

    @staticmethod
    def from_json(text: str) -> "Dist":
        obj = json.loads(text)
        return Dist(obj["width"], np.array(obj["probs"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["state", "prob"])
        for i, p in enumerate(self.probs):
            w.writerow([i, format(p, ".17g")])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "Dist":
        rows = list(csv.reader(io.StringIO(text)))
        vals = [float(r[1]) for r in rows[1:] if r]
        return Dist.from_probs(vals)


@dataclass(frozen=True)
class ConditionalTable:
    """A 2^k x 2^n row-stochastic table; row x is the output law given x."""

    k: int
    n: int
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_width(self.n)
        if self.k < 0:
            raise ValueError("k must be >= 0")
        r = np.asarray(self.rows, dtype=float)
        if r.shape != (1 << self.k, 1 << self.n):
            raise ShapeMismatch(f"expected shape {(1 << self.k, 1 << self.n)}, got {r.shape}")
        if np.any(r < 0):
            raise ValueError("negative probability entry")
        if np.any(np.abs(r.sum(axis=1) - 1.0) > SUM_TOL * (1 << self.n)):
            raise ValueError("a row does not sum to 1")
        object.__setattr__(self, "rows", r)
        r.setflags(write=False)

    def row(self, x: int) -> Dist:
        return Dist(self.n, self.rows[x])

    @staticmethod
    def from_rows(k: int, n: int, rows) -> "ConditionalTable":
        return ConditionalTable(k, n, np.asarray(rows, dtype=float))

    @staticmethod
    def uniform(k: int, n: int) -> "ConditionalTable":
        return ConditionalTable(k, n, np.full((1 << k, 1 << n), 1.0 / (1 << n)))

    @staticmethod
    def deterministic(k: int, n: int, outputs: list[int]) -> "ConditionalTable":
        """Point-mass rows: row x is the delta at outputs[x]."""
        rows = np.zeros((1 << k, 1 << n))
        for x, y in enumerate(outputs):
            rows[x, y] = 1.0
        return ConditionalTable(k, n, rows)

    def support_size(self) -> int:
        return int(np.count_nonzero(self.rows))

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "n": self.n, "rows": self.rows.tolist()})

    @staticmethod
    def from_json(text: str) -> "ConditionalTable":
        obj = json.loads(text)
        return ConditionalTable(obj["k"], obj["n"], np.array(obj["rows"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["x"] + [f"y{y}" for y in range(1 << self.n)])
        for x in range(1 << self.k):
            w.writerow([x] + [format(p, ".17g") for p in self.rows[x]])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "ConditionalTable":
        rows = list(csv.reader(io.StringIO(text)))
        data = [[float(v) for v in r[1:]] for r in rows[1:] if r]
        arr = np.array(data)
        k = (arr.shape[0] - 1).bit_length()
        n = (arr.shape[1] - 1).bit_length()
        return ConditionalTable(k, n, arr)


@dataclass(frozen=True)
class PartitionModel:
    """A partition of {0,1}^n; the model holds block-constant distributions."""

    n: int
    blocks: tuple[frozenset[int], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for b in self.blocks:
            if not b:
                raise ValueError("empty partition block")
            if seen & b:
                raise ValueError("overlapping partition blocks")
            seen |= b
        if seen != set(range(1 << self.n)):
            raise ValueError("blocks do not cover {0,1}^n")

    @staticmethod
    def cylinder(n: int, l: int) -> "PartitionModel":
        """The partition of {0,1}^n induced by the first l output bits."""
        if not 0 <= l <= n:
            raise ValueError(f"l must be in [0, {n}]")
        groups: dict[int, set[int]] = {}
        for y in range(1 << n):
            groups.setdefault(y & ((1 << l) - 1), set()).add(y)
        return PartitionModel(n, tuple(frozenset(groups[z]) for z in sorted(groups)))


@dataclass(frozen=True)
class SupportClass:
    """Conditionals with at most 2^k + d nonzero entries in total."""

    k: int
    n: int
    d: int

    def __post_init__(self):
        dmax = (1 << self.k) * ((1 << self.n) - 1)
        if not 0 <= self.d <= dmax:
            raise ValueError(f"d must be in [0, {dmax}]")

    @property
    def max_support(self) -> int:
        return (1 << self.k) + self.d


def hadamard(p: Dist, q: Dist) -> Dist:
    """Renormalized entry-wise product (p * q)(x) = p(x)q(x) / sum p q."""
    if p.width != q.width:
        raise WidthMismatch(f"widths differ: {p.width} vs {q.width}")
    prod = p.probs * q.probs
    z = prod.sum()
    if z <= 0:
        raise DisjointSupports("supports are disjoint; normalizer vanishes")
    return Dist(p.width, prod / z)


def kl_dist(p: Dist, q: Dist) -> float:
    """KL divergence in bits; +inf when supp(p) is not inside supp(q)."""
    if p.width != q.width:
        raise WidthMismatch(f"widths differ: {p.width} vs {q.width}")
    mask = p.probs > 0
    if np.any(q.probs[mask] <= 0):
        return float("inf")
    return float(np.sum(p.probs[mask] * np.log2(p.probs[mask] / q.probs[mask])))


def kl_conditional(p: ConditionalTable, q: ConditionalTable) -> float:
    """Uniform-input average of the row divergences, in bits."""
    if (p.k, p.n) != (q.k, q.n):
        raise ShapeMismatch("table shapes differ")
    return sum(kl_dist(p.row(x), q.row(x)) for x in range(1 << p.k)) / (1 << p.k)


def tv_row_distance(p: ConditionalTable, q: ConditionalTable) -> float:
    """max over inputs x of the L1 distance between the x-rows."""
    if (p.k, p.n) != (q.k, q.n):
        raise ShapeMismatch("table shapes differ")
    return float(np.abs(p.rows - q.rows).sum(axis=1).max())


def conditional_of_joint(p: Dist, k: int) -> ConditionalTable:
    """Block-normalize a joint over (x, y) into a table; x = low k bits."""
    if not 0 <= k <= p.width:
        raise ValueError(f"k must be in [0, {p.width}]")
    n = p.width - k
    # index v = x + 2^k*y, so reshape to (2^n, 2^k) puts x on the fast axis
    blocks = p.probs.reshape(1 << n, 1 << k)
    masses = blocks.sum(axis=0)
    for x in range(1 << k):
        if masses[x] <= 0:
            raise ZeroInputMass(x)
    return ConditionalTable(k, n, (blocks / masses).T)


def joint_from(marginal: Dist, table: ConditionalTable) -> Dist:
    """Joint q(x) p(y|x) over x + 2^k*y indexing."""
    if marginal.width != table.k:
        raise WidthMismatch("marginal width != table input width")
    joint = (table.rows * marginal.probs[:, None]).T.reshape(-1)
    return Dist(table.k + table.n, joint)


def in_support_class(p: ConditionalTable, c: SupportClass) -> bool:
    if (p.k, p.n) != (c.k, c.n):
        raise ShapeMismatch("table does not match support class shape")
    return p.support_size() <= c.max_support


def partition_project(p: Dist, m: PartitionModel) -> tuple[Dist, float]:
    """Divergence minimizer over the partition model and its divergence.

    The minimizer spreads each block's mass uniformly within the block; for
    the cylinder partition induced by the first l bits the divergence is at
    most n - l bits.
    """
    if p.width != m.n:
        raise WidthMismatch("distribution width != partition width")
    q = np.empty_like(p.probs)
    for block in m.blocks:
        idx = sorted(block)
        q[idx] = p.probs[idx].sum() / len(idx)
    proj = Dist(p.width, q)
    return proj, kl_dist(p, proj)


def random_dist(width: int, rng: np.random.Generator) -> Dist:
    return Dist(width, rng.dirichlet(np.ones(1 << width)))


def random_conditional(k: int, n: int, seed: int) -> ConditionalTable:
    """Rows drawn independently and uniformly on the simplex (flat Dirichlet)."""
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.ones(1 << n), size=1 << k)
    return ConditionalTable(k, n, rows)
