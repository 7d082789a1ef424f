"""Nearest neighbor and m-nearest-neighbors prediction over a sample set.

Distance ties are decided exactly: candidates whose floating-point squared
distances are within a small window of each other are re-compared in rational
arithmetic on the (exact) float coordinates.  Positions returned by the query
functions are 0-based offsets into the sample set.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from selsample.domain import UsageError, as_point

# Relative window on squared distances inside which float comparison is not trusted.
TIE_WINDOW = 1e-9
# Largest tie-group subset count enumerated exhaustively.
ENUMERATION_CAP = 1000


@dataclass(frozen=True)
class LabeledSample:
    point: tuple
    label: int
    index: int  # insertion order, 1-based


class SampleSet:
    """Append-only ordered set of labeled samples."""

    def __init__(self, dimension: int, points=None, labels=None):
        if dimension not in (1, 2):
            raise UsageError("sample sets are 1D or 2D")
        self.dimension = dimension
        self._pts = np.empty((16, dimension))
        self._lab = np.empty(16, dtype=np.int64)
        self._n = 0
        self._hash = hashlib.blake2b(digest_size=16)
        self._tree = None
        if points is not None:
            for p, y in zip(points, labels):
                self.append(p, y)

    def __len__(self):
        return self._n

    def __getitem__(self, i: int) -> LabeledSample:
        if not -self._n <= i < self._n:
            raise IndexError(i)
        i %= self._n
        return LabeledSample(tuple(self._pts[i].tolist()), int(self._lab[i]), i + 1)

    def __iter__(self):
        for i in range(self._n):
            yield self[i]

    @property
    def points(self) -> np.ndarray:
        return self._pts[: self._n]

    @property
    def labels(self) -> np.ndarray:
        return self._lab[: self._n]

    @property
    def checksum(self) -> str:
        return self._hash.hexdigest()

    def append(self, point, label: int) -> LabeledSample:
        p = as_point(point, self.dimension)
        if self._n == len(self._pts):
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
            self._lab = np.concatenate([self._lab, np.empty_like(self._lab)])
        self._pts[self._n] = p
        self._lab[self._n] = int(label)
        self._hash.update(np.asarray(p, dtype="<f8").tobytes())
        self._hash.update(int(label).to_bytes(8, "little", signed=True))
        self._n += 1
        return self[self._n - 1]

    def prefix(self, n: int) -> "SampleSet":
        """A new sample set holding the first `n` samples."""
        return SampleSet(self.dimension, self.points[:n], self.labels[:n])

    def find(self, x) -> int | None:
        """Position of the first sample whose coordinates equal `x` exactly."""
        if self._n == 0:
            return None
        hit = np.flatnonzero((self.points == np.asarray(x, dtype=float)).all(axis=1))
        return int(hit[0]) if hit.size else None

    def tree(self) -> cKDTree:
        if self._tree is None or self._tree[0] != self._n:
            self._tree = (self._n, cKDTree(self.points.copy()))
        return self._tree[1]


def exact_sqdist(p: Sequence[float], q: Sequence[float]) -> Fraction:
    return sum(((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p, q)), Fraction(0))


def _sqdists(x: tuple, Z: SampleSet) -> np.ndarray:
    diff = Z.points - np.asarray(x)
    return np.einsum("ij,ij->i", diff, diff)


def _check_query(x, Z: SampleSet) -> tuple:
    if len(Z) == 0:
        raise UsageError("sample set is empty")
    return as_point(x, Z.dimension)


def nearest_indices(x, Z: SampleSet) -> list[int]:
    """All positions achieving the minimum distance to `x`, sorted ascending."""
    x = _check_query(x, Z)
    sqd = _sqdists(x, Z)
    lo = sqd.min()
    cand = np.flatnonzero(sqd <= lo + TIE_WINDOW * (1.0 + lo))
    if cand.size == 1:
        return [int(cand[0])]
    pts = Z.points
    exact = [exact_sqdist(x, pts[i]) for i in cand]
    best = min(exact)
    return [int(i) for i, e in zip(cand, exact) if e == best]


def predict_nn(x, Z: SampleSet, rng: np.random.Generator) -> int:
    """Label of the nearest sample; exact ties broken uniformly with `rng`."""
    near = nearest_indices(x, Z)
    if len(near) == 1:
        return int(Z.labels[near[0]])
    return int(Z.labels[near[int(rng.integers(len(near)))]])


@dataclass(frozen=True)
class TieFamily:
    """All K-sets minimizing distance to a point.

    Every member is ``prefix`` plus ``free`` positions drawn from ``ties``, the
    group of samples sitting exactly at the K-th smallest distance.
    """

    prefix: tuple
    ties: tuple
    free: int

    @property
    def size(self) -> int:
        return math.comb(len(self.ties), self.free)

    def members(self):
        for extra in itertools.combinations(self.ties, self.free):
            yield tuple(sorted(self.prefix + extra))


def k_nearest_tie_family(x, Z: SampleSet, K: int) -> TieFamily:
    x = _check_query(x, Z)
    if K < 1:
        raise UsageError("K must be at least 1")
    if len(Z) < K:
        raise UsageError(f"need at least K={K} samples, have {len(Z)}")
    sqd = _sqdists(x, Z)
    kth = np.partition(sqd, K - 1)[K - 1]
    slack = TIE_WINDOW * (1.0 + kth)
    certain = np.flatnonzero(sqd < kth - slack)
    window = np.flatnonzero(np.abs(sqd - kth) <= slack)
    pts = Z.points
    exact = {int(i): exact_sqdist(x, pts[i]) for i in window}
    boundary = sorted(exact.values())[K - len(certain) - 1]
    prefix = [int(i) for i in certain] + [i for i, e in exact.items() if e < boundary]
    ties = [i for i, e in exact.items() if e == boundary]
    return TieFamily(tuple(sorted(prefix)), tuple(sorted(ties)), K - len(prefix))


def mode_frequency(labels) -> int:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return 0
    return int(np.bincount(labels).max())


def min_mode_frequency(family: TieFamily, labels) -> int:
    """Smallest mode frequency over the family's members.

    Filling each free slot with a label of currently lowest count is optimal
    for minimizing the maximum count.
    """
    labels = np.asarray(labels)
    counts = Counter(int(labels[i]) for i in family.prefix)
    avail = Counter(int(labels[i]) for i in family.ties)
    for _ in range(family.free):
        lab = min((lab for lab, a in avail.items() if a > 0), key=lambda lab: (counts[lab], lab))
        counts[lab] += 1
        avail[lab] -= 1
    return max(counts.values(), default=0)


def select_ambiguous_set(family: TieFamily, labels, rng: np.random.Generator | None = None) -> tuple:
    """Pick a family member of least mode frequency, uniformly among minimizers.

    Families with more than ``ENUMERATION_CAP`` members are filled greedily:
    each free slot takes a tie member whose label currently has the lowest
    count, chosen uniformly among such members.  Without `rng` the first
    candidate is taken.
    """
    labels = np.asarray(labels)
    if family.free == 0 or not family.ties:
        return tuple(family.prefix)

    def pick(n):
        return 0 if rng is None or n == 1 else int(rng.integers(n))

    if family.size <= ENUMERATION_CAP:
        best, winners = None, []
        for member in family.members():
            freq = mode_frequency(labels[list(member)])
            if best is None or freq < best:
                best, winners = freq, [member]
            elif freq == best:
                winners.append(member)
        return winners[pick(len(winners))]

    counts = Counter(int(labels[i]) for i in family.prefix)
    remaining = list(family.ties)
    chosen = []
    for _ in range(family.free):
        low = min(counts[int(labels[i])] for i in remaining)
        eligible = [i for i in remaining if counts[int(labels[i])] == low]
        i = eligible[pick(len(eligible))]
        remaining.remove(i)
        chosen.append(i)
        counts[int(labels[i])] += 1
    return tuple(sorted(family.prefix + tuple(chosen)))


def _mode(labels, rng) -> int:
    counts = np.bincount(np.asarray(labels, dtype=np.int64))
    top = np.flatnonzero(counts == counts.max())
    if top.size == 1:
        return int(top[0])
    return int(top[int(rng.integers(top.size))])


def predict_mnn(x, Z: SampleSet, m: int, rng: np.random.Generator) -> int:
    """Mode of the most ambiguous m-set of nearest samples."""
    x = _check_query(x, Z)
    if m < 1:
        raise UsageError("m must be at least 1")
    if len(Z) < m:
        raise UsageError(f"need at least m={m} samples, have {len(Z)}")
    hit = Z.find(x)
    if hit is not None:
        return int(Z.labels[hit])
    family = k_nearest_tie_family(x, Z, m)
    chosen = select_ambiguous_set(family, Z.labels, rng)
    return _mode(Z.labels[list(chosen)], rng)


def _tie_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, i])


def knn_query(points: np.ndarray, Z: SampleSet, k: int):
    """Distances and positions of the k nearest samples for each query row."""
    points = np.asarray(points, dtype=float).reshape(-1, Z.dimension)
    d, idx = Z.tree().query(points, k=k)
    if k == 1:
        d, idx = d[:, None], idx[:, None]
    return d, idx


def predict_many(points, Z: SampleSet, m: int = 1, seed: int = 0) -> np.ndarray:
    """Predict each row of `points` with the m-NN rule (m=1: nearest neighbor rule).

    Rows whose answer depends on an exact tie (or a mode tie) are routed
    through the scalar rules with a generator seeded from ``(seed, row)``, so
    results equal ``predict_nn`` / ``predict_mnn`` called with that generator.
    """
    if len(Z) == 0:
        raise UsageError("sample set is empty")
    if len(Z) < m:
        raise UsageError(f"need at least m={m} samples, have {len(Z)}")
    points = np.asarray(points, dtype=float).reshape(-1, Z.dimension)
    labels = Z.labels
    if len(Z) == 1:
        return np.full(len(points), labels[0], dtype=np.int64)
    k = m + 1 if len(Z) > m else m
    d, idx = knn_query(points, Z, k)
    near_labels = labels[idx[:, :m]]
    if m == 1:
        out = near_labels[:, 0].copy()
        unsure = d[:, 1] - d[:, 0] <= TIE_WINDOW * (1.0 + d[:, 1])
    else:
        counts = np.stack([(near_labels == c).sum(axis=1) for c in range(labels.max() + 1)], axis=1)
        out = counts.argmax(axis=1)
        top = counts.max(axis=1)
        unsure = (counts == top[:, None]).sum(axis=1) > 1
        unsure |= d[:, 0] == 0.0
        if k > m:
            unsure |= d[:, m] - d[:, m - 1] <= TIE_WINDOW * (1.0 + d[:, m])
    for i in np.flatnonzero(unsure):
        rng = _tie_rng(seed, int(i))
        if m == 1:
            out[i] = predict_nn(points[i], Z, rng)
        else:
            out[i] = predict_mnn(points[i], Z, m, rng)
    return out.astype(np.int64)
