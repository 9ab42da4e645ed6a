"""Finite-domain learning primitives.

Points are the integers 0..u-1 and labels live in {-1, +1}. Hypotheses are
fixed label vectors, classes are ordered sets of hypotheses, and a joint
distribution assigns mass to every (point, label) cell. All values are
immutable after construction, so they can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "DEFAULT_ENUMERATION_CAP",
    "RngStream",
    "Hypothesis",
    "HypothesisClass",
    "DiscreteDistribution",
    "Dataset",
    "sample_dataset",
    "enumerate_class",
    "subset_rank",
    "subset_unrank",
    "vc_dimension_bruteforce",
]

DEFAULT_ENUMERATION_CAP = 10**6

_UINT64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """Addressable randomness: equal (seed, stream) pairs give equal draws.

    Each stream is an independent counter-based generator, so handing stream
    1 + i to trial i makes parallel execution reproduce serial execution
    exactly, whatever the thread count. Draw sequences are stable for a fixed
    numpy version.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < _UINT64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not 0 <= self.stream < _UINT64:
            raise ValueError("stream must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """A fixed labeling of the domain, one value from {-1, +1} per point."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.labels, dtype=np.int8, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("labels must be a nonempty one-dimensional sequence")
        if not np.isin(arr, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def domain_size(self) -> int:
        return int(self.labels.size)

    def __call__(self, x):
        """Evaluate at a point index or an array of point indices."""
        return self.labels[x]

    def same_labels(self, other: "Hypothesis") -> bool:
        return self.domain_size == other.domain_size and bool(
            np.array_equal(self.labels, other.labels)
        )


class HypothesisClass:
    """Ordered finite set of distinct hypotheses over a shared domain.

    The index order is canonical: every tie anywhere in the package breaks
    toward the lowest index. A class is backed either by an explicit label
    matrix (one row per hypothesis) or by the exact-negatives family, which
    is described combinatorially and enumerates itself lazily because its
    size is binomial(u, d).
    """

    __slots__ = ("domain_size", "declared_vc", "_matrix", "_negative_spec")

    def __init__(self, matrix, declared_vc: int | None = None):
        mat = np.array(matrix, dtype=np.int8, copy=True)
        if mat.ndim != 2 or mat.shape[0] == 0 or mat.shape[1] == 0:
            raise ValueError("matrix must be nonempty with shape (hypotheses, points)")
        if not np.isin(mat, (-1, 1)).all():
            raise ValueError("matrix entries must be -1 or +1")
        if np.unique(mat, axis=0).shape[0] != mat.shape[0]:
            raise ValueError("duplicate hypothesis rows are not allowed")
        mat.setflags(write=False)
        self._matrix = mat
        self._negative_spec = None
        self.domain_size = int(mat.shape[1])
        self.declared_vc = declared_vc

    @classmethod
    def from_hypotheses(cls, hypotheses, declared_vc: int | None = None) -> "HypothesisClass":
        return cls(np.stack([h.labels for h in hypotheses]), declared_vc)

    @classmethod
    def with_exact_negatives(cls, u: int, d: int) -> "HypothesisClass":
        """The family of all labelings with exactly d of u points negative.

        Ordered lexicographically by the sorted index set of the negative
        points, so index 0 labels points 0..d-1 negative. Enumeration is
        lazy; individual members come from unranking, which works at any
        size. The dimension of this family is d, recorded as declared_vc.
        """
        if d < 1 or u <= d:
            raise ValueError("need 1 <= d < u")
        self = cls.__new__(cls)
        self._matrix = None
        self._negative_spec = (int(u), int(d))
        self.domain_size = int(u)
        self.declared_vc = int(d)
        return self

    @property
    def size(self) -> int:
        if self._matrix is not None:
            return int(self._matrix.shape[0])
        u, d = self._negative_spec
        return math.comb(u, d)

    def __len__(self) -> int:
        return self.size

    @property
    def is_enumerated(self) -> bool:
        return self._matrix is not None

    @property
    def matrix(self) -> np.ndarray:
        """Label matrix; materializes lazily under the default cap."""
        if self._matrix is None:
            self._materialize(DEFAULT_ENUMERATION_CAP)
        return self._matrix

    def _materialize(self, cap: int) -> None:
        size = self.size
        if size > cap:
            raise ValueError(
                f"class of size {size} exceeds the enumeration cap of {cap}"
            )
        u, d = self._negative_spec
        mat = np.ones((size, u), dtype=np.int8)
        for row, negatives in enumerate(combinations(range(u), d)):
            mat[row, negatives] = -1
        mat.setflags(write=False)
        self._matrix = mat

    def hypothesis(self, index: int) -> Hypothesis:
        """Member at a canonical index, without forcing enumeration."""
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} out of range for class of size {self.size}")
        if self._matrix is not None:
            return Hypothesis(self._matrix[index])
        u, d = self._negative_spec
        labels = np.ones(u, dtype=np.int8)
        labels[subset_unrank(u, d, index)] = -1
        return Hypothesis(labels)

    def __iter__(self):
        for i in range(self.size):
            yield self.hypothesis(i)


def enumerate_class(klass: HypothesisClass, cap: int = DEFAULT_ENUMERATION_CAP) -> HypothesisClass:
    """Force materialization of the label matrix, bounded by the cap."""
    if not klass.is_enumerated:
        klass._materialize(cap)
    return klass


def subset_unrank(u: int, d: int, rank: int) -> np.ndarray:
    """The sorted d-subset of range(u) at a lexicographic rank."""
    if not 0 <= rank < math.comb(u, d):
        raise ValueError(f"rank {rank} out of range for {u} choose {d}")
    out = np.empty(d, dtype=np.int64)
    remaining = rank
    element = 0
    for position in range(d):
        while True:
            below = math.comb(u - element - 1, d - position - 1)
            if remaining < below:
                break
            remaining -= below
            element += 1
        out[position] = element
        element += 1
    return out


def subset_rank(u: int, d: int, subset) -> int:
    """Lexicographic rank of a strictly increasing d-subset of range(u)."""
    arr = np.asarray(subset, dtype=np.int64)
    if arr.size != d or (np.diff(arr) <= 0).any() or arr[0] < 0 or arr[-1] >= u:
        raise ValueError("subset must be strictly increasing within range(u)")
    rank = 0
    previous = -1
    for position, element in enumerate(arr):
        for skipped in range(previous + 1, element):
            rank += math.comb(u - skipped - 1, d - position - 1)
        previous = int(element)
    return rank


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Joint distribution over (point, label) cells.

    mass[i, 0] is the probability of drawing point i with label -1 and
    mass[i, 1] the probability of label +1 there. Entries are nonnegative
    and total 1 within 1e-9; nothing is silently renormalized.
    """

    mass: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.mass, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValueError("mass must have shape (domain size, 2)")
        if (arr < 0).any():
            raise ValueError("mass entries must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mass must sum to 1, got {total!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "mass", arr)

    @property
    def domain_size(self) -> int:
        return int(self.mass.shape[0])

    @property
    def has_deterministic_labels(self) -> bool:
        """True when no point carries mass on both labels."""
        return bool(((self.mass[:, 0] == 0.0) | (self.mass[:, 1] == 0.0)).all())

    def point_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    @classmethod
    def deterministic(cls, marginal, labels) -> "DiscreteDistribution":
        """Distribution with the given point masses and fixed labels."""
        marg = np.asarray(marginal, dtype=np.float64)
        lab = np.asarray(labels)
        if marg.shape != lab.shape:
            raise ValueError("marginal and labels must have matching shapes")
        mass = np.zeros((marg.size, 2))
        mass[np.arange(marg.size), (lab == 1).astype(np.intp)] = marg
        return cls(mass)

    @classmethod
    def uniform_deterministic(cls, labels) -> "DiscreteDistribution":
        lab = np.asarray(labels)
        return cls.deterministic(np.full(lab.size, 1.0 / lab.size), lab)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered sample of (point, label) pairs over a finite domain."""

    points: np.ndarray
    labels: np.ndarray
    domain_size: int

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.int64, copy=True)
        lab = np.array(self.labels, dtype=np.int8, copy=True)
        if pts.ndim != 1 or lab.ndim != 1 or pts.size != lab.size:
            raise ValueError("points and labels must be equal-length vectors")
        if pts.size and (pts.min() < 0 or pts.max() >= self.domain_size):
            raise ValueError("point indices must lie inside the domain")
        if not np.isin(lab, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")
        pts.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return int(self.points.size)

    def take(self, index) -> "Dataset":
        """Sub-dataset by slice, index array, or boolean mask."""
        return Dataset(self.points[index], self.labels[index], self.domain_size)


def sample_dataset(dist: DiscreteDistribution, n: int, rng) -> Dataset:
    """Draw n i.i.d. samples from the joint mass table.

    rng may be an RngStream (a fresh generator is taken from it) or an
    already-positioned numpy Generator.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    flat = dist.mass.reshape(-1)
    cells = gen.choice(flat.size, size=n, p=flat / flat.sum())
    points = cells >> 1
    labels = np.where(cells & 1, 1, -1).astype(np.int8)
    return Dataset(points, labels, dist.domain_size)


def vc_dimension_bruteforce(klass: HypothesisClass, max_domain: int = 24) -> int:
    """Largest k such that some k points realize all 2**k labelings.

    Exhaustive over point subsets, so the domain size is capped; large
    combinatorial families should rely on declared_vc instead.
    """
    u = klass.domain_size
    if u > max_domain:
        raise ValueError(
            f"domain size {u} exceeds the brute-force limit of {max_domain}; "
            "use the class's declared_vc for known families"
        )
    mat = enumerate_class(klass).matrix
    best = 0
    for k in range(1, u + 1):
        if 2**k > mat.shape[0]:
            break
        shattered = False
        for subset in combinations(range(u), k):
            if np.unique(mat[:, subset], axis=0).shape[0] == 2**k:
                shattered = True
                break
        if not shattered:
            break
        best = k
    return best
