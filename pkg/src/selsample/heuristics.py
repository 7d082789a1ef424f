"""Selection heuristics scoring how useful a candidate would be as the next sample."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from selsample.domain import UsageError, as_point
from selsample.predictor import (
    TIE_WINDOW,
    SampleSet,
    k_nearest_tie_family,
    knn_query,
    min_mode_frequency,
)

# Expected Voronoi-neighbor counts in the plane and in space, used as the
# default K for the K-nearest-neighbor variant.
DEFAULT_K = {1: 2, 2: 6, 3: 16}


@dataclass(frozen=True)
class HeuristicSpec:
    """One of ``distance``, ``nmc_knn`` (with K) or ``nmc_voronoi``."""

    variant: str
    K: int | None = None

    def __post_init__(self):
        if self.variant not in ("distance", "nmc_knn", "nmc_voronoi"):
            raise UsageError(f"unknown heuristic {self.variant!r}")
        if self.variant == "nmc_knn" and (self.K is None or self.K < 2):
            raise UsageError("nmc_knn needs K >= 2")
        if self.variant != "nmc_knn" and self.K is not None:
            raise UsageError(f"{self.variant} takes no K")

    @property
    def is_nmc(self) -> bool:
        return self.variant != "distance"

    @classmethod
    def parse(cls, text: str, dimension: int = 2) -> "HeuristicSpec":
        """Parse ``dist``, ``nmc-knn[:K]`` or ``nmc-vor``."""
        name, _, arg = text.partition(":")
        if name == "dist" and not arg:
            return cls("distance")
        if name == "nmc-vor" and not arg:
            return cls("nmc_voronoi")
        if name == "nmc-knn":
            try:
                K = int(arg) if arg else DEFAULT_K[dimension]
            except ValueError:
                raise UsageError(f"bad K in heuristic {text!r}") from None
            return cls("nmc_knn", K)
        raise UsageError(f"unknown heuristic selector {text!r}")

    def describe(self) -> str:
        return {"distance": "dist", "nmc_voronoi": "nmc-vor"}.get(self.variant) or f"nmc-knn:{self.K}"


def phi_distance(x, Z: SampleSet) -> float:
    """Distance from `x` to the nearest sample; +inf for an empty set."""
    if len(Z) == 0:
        return math.inf
    x = as_point(x, Z.dimension)
    # hypot keeps subnormal gaps from underflowing to a false zero
    return float(np.hypot.reduce(Z.points - np.asarray(x), axis=1).min())


def nonmodal_count(labels) -> int:
    """Number of labels that differ from the most frequent one."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size == 0:
        return 0
    return int(labels.size - np.bincount(labels).max())


def phi_nmc_knn(x, Z: SampleSet, K: int) -> int:
    if K < 2:
        raise UsageError("K must be at least 2")
    if len(Z) == 0:
        return 0
    x = as_point(x, Z.dimension)
    if Z.find(x) is not None:
        return 0
    if len(Z) < K:
        return nonmodal_count(Z.labels)
    family = k_nearest_tie_family(x, Z, K)
    return K - min_mode_frequency(family, Z.labels)


def phi_nmc_voronoi(x, Z: SampleSet, geom) -> int:
    from selsample.voronoi import voronoi_neighbors

    neigh = voronoi_neighbors(x, Z, geom)
    return nonmodal_count(Z.labels[neigh])


def _nmc_many(candidates: np.ndarray, Z: SampleSet, K: int) -> np.ndarray:
    """phi_nmc_knn over many rows; undecidable rows fall back to the scalar rule."""
    n = len(Z)
    out = np.zeros(len(candidates), dtype=np.int64)
    if n == 0 or len(candidates) == 0:
        return out
    labels = Z.labels
    if n < K:
        base = nonmodal_count(labels)
        member = np.array([Z.find(c) is not None for c in candidates])
        out[~member] = base
        return out
    k = K + 1 if n > K else K
    if len(candidates) * n <= 200_000:
        diff = candidates[:, None, :] - Z.points[None, :, :]
        sqd = np.einsum("ijk,ijk->ij", diff, diff)
        idx = np.argpartition(sqd, k - 1, axis=1)[:, :k]
        d = np.sqrt(np.take_along_axis(sqd, idx, axis=1))
        order = np.argsort(d, axis=1, kind="stable")
        idx = np.take_along_axis(idx, order, axis=1)
        d = np.take_along_axis(d, order, axis=1)
    else:
        d, idx = knn_query(candidates, Z, k)
    near = labels[idx[:, :K]]
    top = np.zeros(len(candidates), dtype=np.int64)
    for c in range(int(labels.max()) + 1):
        top = np.maximum(top, (near == c).sum(axis=1))
    out[:] = K - top
    unsure = d[:, 0] == 0.0
    if k > K:
        unsure |= d[:, K] - d[:, K - 1] <= TIE_WINDOW * (1.0 + d[:, K])
    for i in np.flatnonzero(unsure):
        out[i] = phi_nmc_knn(candidates[i], Z, K)
    return out


def phi_many(spec: HeuristicSpec, candidates, Z: SampleSet, geom=None) -> np.ndarray:
    """Evaluate the heuristic for each row of `candidates`."""
    candidates = np.asarray(candidates, dtype=float).reshape(-1, Z.dimension)
    if spec.variant == "distance":
        if len(Z) == 0:
            return np.full(len(candidates), math.inf)
        diff = candidates[:, None, :] - Z.points[None, :, :]
        return np.hypot.reduce(diff, axis=2).min(axis=1)
    if spec.variant == "nmc_knn":
        return _nmc_many(candidates, Z, spec.K)
    if geom is None:
        raise UsageError("nmc_voronoi needs a Voronoi index")
    return np.array([phi_nmc_voronoi(c, Z, geom) for c in candidates], dtype=np.int64)
