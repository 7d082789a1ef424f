"""Domain spaces, the Euclidean metric, and true labeling functions.

Every domain is the unit interval or unit square with the uniform measure.
True functions are deterministic and expose both a scalar ``label`` and a
vectorized ``labels`` that agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from selsample.pnm import read_pnm


class UsageError(ValueError):
    """Raised when an operation is called outside its contract."""


Point = tuple  # tuple of floats, length == domain dimension


def as_point(p, dim: int | None = None) -> tuple:
    coords = tuple(float(c) for c in np.atleast_1d(np.asarray(p, dtype=float)))
    if dim is not None and len(coords) != dim:
        raise UsageError(f"point {coords} has dimension {len(coords)}, expected {dim}")
    if not all(math.isfinite(c) for c in coords):
        raise UsageError(f"point {coords} has non-finite coordinates")
    return coords


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    """Euclidean distance between two points of equal dimension."""
    p = as_point(p)
    q = as_point(q)
    if len(p) != len(q):
        raise UsageError(f"dimension mismatch: {len(p)} vs {len(q)}")
    return math.dist(p, q)


@dataclass(frozen=True)
class DomainSpace:
    """Unit interval (dimension 1) or unit square (dimension 2), uniform measure."""

    dimension: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise UsageError("only 1D and 2D domains are supported")

    def contains(self, p) -> bool:
        return len(p) == self.dimension and all(0.0 <= c <= 1.0 for c in p)

    def check(self, p) -> tuple:
        p = as_point(p, self.dimension)
        if not self.contains(p):
            raise UsageError(f"point {p} lies outside the unit domain")
        return p

    def sample_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.random((count, self.dimension))


UNIT_INTERVAL = DomainSpace(1)
UNIT_SQUARE = DomainSpace(2)


def sample_mu(space: DomainSpace, rng: np.random.Generator) -> tuple:
    """Draw one point uniformly from the domain."""
    return tuple(rng.random(space.dimension).tolist())


class TrueFunction:
    """Base for deterministic labelers f: X -> {0, ..., label_count - 1}."""

    dimension = 2
    label_count = 2

    @property
    def space(self) -> DomainSpace:
        return DomainSpace(self.dimension)

    def label(self, p) -> int:
        p = self.space.check(p)
        return int(self.labels(np.array([p]))[0])

    def labels(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


def label_of(f: TrueFunction, p) -> int:
    return f.label(p)


@dataclass(frozen=True)
class Disk(TrueFunction):
    """Label 1 inside the closed disk, 0 elsewhere."""

    cx: float = 0.5
    cy: float = 0.5
    radius: float = 0.3

    def labels(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        dx = points[:, 0] - self.cx
        dy = points[:, 1] - self.cy
        return (dx * dx + dy * dy <= self.radius * self.radius).astype(np.int64)

    def area(self) -> float:
        """Area of the disk; assumes it lies inside the unit square."""
        return math.pi * self.radius**2

    def describe(self):
        return f"disk:{self.cx!r},{self.cy!r},{self.radius!r}"


@dataclass(frozen=True)
class Checkerboard(TrueFunction):
    k: int = 4

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("checkerboard needs k >= 1")

    @property
    def label_count(self):
        return 2 if self.k > 1 else 1

    def labels(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        cells = np.minimum(np.floor(points * self.k).astype(np.int64), self.k - 1)
        return (cells[:, 0] + cells[:, 1]) % 2

    def describe(self):
        return f"checker:{self.k}"


@dataclass(frozen=True, eq=False)
class ImageTruth(TrueFunction):
    """Pixel-cell labeling of the unit square; row 0 of `codes` is the top edge."""

    codes: np.ndarray
    label_count: int = 2
    source: str = "<array>"

    @classmethod
    def from_raster(cls, raster: np.ndarray, source: str = "<array>") -> "ImageTruth":
        raster = np.asarray(raster)
        if raster.ndim == 3:
            keys = raster[:, :, 0] * 65536 * 65536 + raster[:, :, 1] * 65536 + raster[:, :, 2]
        else:
            keys = raster
        flat = keys.ravel()
        _, first = np.unique(flat, return_index=True)
        order = np.sort(first)  # label codes follow first appearance in row-major order
        mapping = {int(flat[i]): code for code, i in enumerate(order)}
        codes = np.vectorize(mapping.__getitem__, otypes=[np.int64])(keys)
        return cls(codes=codes, label_count=max(len(mapping), 1), source=source)

    @classmethod
    def from_file(cls, path) -> "ImageTruth":
        return cls.from_raster(read_pnm(path), source=str(path))

    def labels(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        h, w = self.codes.shape
        cols = np.clip(np.floor(points[:, 0] * w).astype(np.int64), 0, w - 1)
        rows = np.clip(np.floor((1.0 - points[:, 1]) * h).astype(np.int64), 0, h - 1)
        return self.codes[rows, cols]

    def describe(self):
        return f"image:{self.source}"


def default_epsilon(i: int) -> Fraction:
    return Fraction(1, 2 ** (i + 2))


@dataclass(frozen=True, eq=False)
class Adversarial1D(TrueFunction):
    """Indicator of {0} united with the intervals (2^-i, 3*2^-(i+1) + eps_i] for i <= i_max."""

    i_max: int
    epsilons: tuple  # Fraction per i = 1..i_max
    pieces: tuple = field(default=(), repr=False)

    dimension = 1

    def __post_init__(self):
        pieces = tuple(
            (Fraction(1, 2**i), Fraction(3, 2 ** (i + 1)) + eps)
            for i, eps in enumerate(self.epsilons, start=1)
        )
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_float_pieces", tuple((float(a), float(b)) for a, b in pieces))

    def labels(self, points):
        x = np.asarray(points, dtype=float).reshape(-1)
        out = (x == 0.0).astype(np.int64)
        for lo, hi in self._float_pieces:
            out[(x > lo) & (x <= hi)] = 1
        return out

    def measure_of_ones(self, a: Fraction, b: Fraction) -> Fraction:
        """Exact Lebesgue measure of the label-1 set inside [a, b]."""
        total = Fraction(0)
        for lo, hi in self.pieces:
            overlap = min(b, hi) - max(a, lo)
            if overlap > 0:
                total += overlap
        return total

    def describe(self):
        return f"adv1d:{self.i_max}"


def build_adversarial_1d(
    i_max: int = 20, epsilon_rule: Callable[[int], float | Fraction] = default_epsilon
) -> Adversarial1D:
    if i_max < 2:
        raise UsageError("i_max must be at least 2")
    eps = []
    for i in range(1, i_max + 1):
        e = Fraction(epsilon_rule(i))
        if not 0 < e < Fraction(1, 2 ** (i + 1)):
            raise UsageError(f"epsilon_{i} = {e} violates 0 < eps_i < 2^-(i+1)")
        eps.append(e)
    return Adversarial1D(i_max=i_max, epsilons=tuple(eps))
