"""Monte Carlo error and Q-measure estimates, prediction rasters, failure demo."""

from __future__ import annotations

import colorsys
import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from selsample.domain import (
    UNIT_INTERVAL,
    DomainSpace,
    TrueFunction,
    UsageError,
    build_adversarial_1d,
)
from selsample.heuristics import HeuristicSpec, phi_many
from selsample.predictor import SampleSet, predict_many
from selsample.sampler import RunTrace

DEFAULT_PROBES = 20_000


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Fixed iid probe points with their true labels, reused across a whole curve."""

    points: np.ndarray
    labels: np.ndarray
    seed: int = 0

    def __len__(self):
        return len(self.points)

    @property
    def checksum(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(np.ascontiguousarray(self.points, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        return h.hexdigest()


def make_probes(space: DomainSpace, truth: TrueFunction, count: int = DEFAULT_PROBES, seed: int = 0) -> ProbeSet:
    if count < 1:
        raise UsageError("need at least one probe")
    rng = np.random.default_rng([seed, 0x50524F4245])
    pts = space.sample_many(rng, count)
    return ProbeSet(pts, truth.labels(pts), seed)


def estimate_error(Z: SampleSet, truth: TrueFunction, probes: ProbeSet, m: int = 1, seed: int | None = None) -> float:
    """Fraction of probes whose prediction disagrees with the truth.

    Ties are broken with generators seeded from ``(seed, probe index)``.
    """
    if len(probes) == 0:
        raise UsageError("probe set is empty")
    pred = predict_many(probes.points, Z, m=m, seed=probes.seed if seed is None else seed)
    return float(np.mean(pred != probes.labels))


def estimate_q_measure(Z: SampleSet, h: HeuristicSpec, probes: ProbeSet, geom=None) -> float:
    """Fraction of probes where the non-modal count is positive."""
    if not h.is_nmc:
        raise UsageError("the Q-measure is defined for non-modal count heuristics only")
    if len(probes) == 0:
        raise UsageError("probe set is empty")
    if h.variant == "nmc_voronoi" and geom is None:
        from selsample.voronoi import build_index

        geom = build_index(Z)
    phi = phi_many(h, probes.points, Z, geom)
    return float(np.mean(phi > 0))


def pixel_centers(width: int, height: int) -> np.ndarray:
    """Centers in row-major order, row 0 at the top (y close to 1)."""
    if width < 1 or height < 1:
        raise UsageError("raster dimensions must be positive")
    xs = (np.arange(width) + 0.5) / width
    ys = 1.0 - (np.arange(height) + 0.5) / height
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def raster_predict(Z: SampleSet, width: int, height: int, m: int = 1, seed: int = 0) -> np.ndarray:
    """Predicted label at each pixel center as a (height, width) array."""
    if Z.dimension != 2:
        raise UsageError("rasters need a 2D sample set")
    centers = pixel_centers(width, height)
    return predict_many(centers, Z, m=m, seed=seed).reshape(height, width)


def palette(label_count: int) -> np.ndarray:
    colors = [(255, 255, 255), (0, 0, 0)]
    extra = max(label_count - 2, 0)
    for j in range(extra):
        r, g, b = colorsys.hsv_to_rgb(j / extra, 1.0, 1.0)
        colors.append((round(r * 255), round(g * 255), round(b * 255)))
    return np.array(colors[: max(label_count, 2)], dtype=np.uint8)


def raster_to_rgb(raster: np.ndarray, label_count: int | None = None, marks=None) -> np.ndarray:
    """Color a label raster; `marks` is an optional (rows, cols) pair painted red."""
    if label_count is None:
        label_count = int(raster.max()) + 1
    rgb = palette(label_count)[raster]
    if marks is not None:
        rows, cols = marks
        rgb[rows, cols] = (255, 0, 0)
    return rgb


def sample_pixels(Z: SampleSet, width: int, height: int):
    pts = Z.points
    cols = np.clip(np.floor(pts[:, 0] * width).astype(np.int64), 0, width - 1)
    rows = np.clip(np.floor((1.0 - pts[:, 1]) * height).astype(np.int64), 0, height - 1)
    return rows, cols


@dataclass
class ErrorCurve:
    rows: list[tuple[int, float, float | None]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "error", "q_measure"])
        for n, err, q in self.rows:
            w.writerow([n, repr(err), "" if q is None else repr(q)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ErrorCurve":
        rows = []
        for row in csv.DictReader(io.StringIO(text)):
            q = row["q_measure"]
            rows.append((int(row["n"]), float(row["error"]), None if q == "" else float(q)))
        return cls(rows)


def curve_points(start: int, stop: int, stride: int) -> list[int]:
    if stride < 1:
        raise UsageError("stride must be at least 1")
    ns = list(range(start, stop + 1, stride))
    if ns[-1] != stop:
        ns.append(stop)
    return ns


def error_curve(trace: RunTrace, truth: TrueFunction, probes: ProbeSet, stride: int,
                heuristic: HeuristicSpec | None = None, m: int = 1) -> ErrorCurve:
    """Error (and Q-measure for non-modal heuristics) along a run, same probes throughout."""
    Z = trace.samples
    start = max(trace.initial_seed_count, m, 1)
    curve = ErrorCurve()
    for n in curve_points(start, len(Z), stride):
        prefix = Z.prefix(n)
        err = estimate_error(prefix, truth, probes, m=m)
        q = estimate_q_measure(prefix, heuristic, probes) if heuristic is not None and heuristic.is_nmc else None
        curve.rows.append((n, err, q))
    return curve


# adversarial 1D demonstration -------------------------------------------------


def failure_samples(n: int) -> list[float]:
    """z_1 = 0 and z_k = 2^(2-k) for k >= 2."""
    return [0.0] + [2.0 ** (2 - k) for k in range(2, n + 1)]


def analytic_nn_error(truth, points, labels) -> Fraction:
    """Exact measure of the set where the 1D nearest neighbor prediction is wrong."""
    order = sorted(set(zip((Fraction(p) for p in points), labels)))
    pts = [p for p, _ in order]
    cuts = [Fraction(0)] + [(a + b) / 2 for a, b in zip(pts, pts[1:])] + [Fraction(1)]
    err = Fraction(0)
    for (_, lab), lo, hi in zip(order, cuts, cuts[1:]):
        ones = truth.measure_of_ones(lo, hi)
        err += (hi - lo) - ones if lab == 1 else ones
    return err


@dataclass
class FailureDemo:
    rows: list[tuple[int, Fraction, float]]
    probes: int

    @property
    def strictly_increasing(self) -> bool:
        vals = [a for _, a, _ in self.rows]
        return all(b > a for a, b in zip(vals, vals[1:]))

    def sigma(self, analytic: Fraction) -> float:
        p = float(analytic)
        return math.sqrt(p * (1 - p) / self.probes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "analytic_error", "mc_error"])
        for n, a, mc in self.rows:
            w.writerow([n, repr(float(a)), repr(mc)])
        return buf.getvalue()


def failure_demo(i_max: int = 20, n_steps: int = 10, probes: int = 100_000, seed: int = 0) -> FailureDemo:
    """Errors of the nearest neighbor rule on the prescribed adversarial sample sequence."""
    if n_steps < 1 or n_steps > i_max - 2:
        raise UsageError("need 1 <= n_steps <= i_max - 2")
    truth = build_adversarial_1d(i_max)
    probe_set = make_probes(UNIT_INTERVAL, truth, probes, seed)
    pts = failure_samples(n_steps)
    labels = truth.labels(np.array(pts)).tolist()
    rows = []
    for n in range(1, n_steps + 1):
        Z = SampleSet(1, [(p,) for p in pts[:n]], labels[:n])
        exact = analytic_nn_error(truth, pts[:n], labels[:n])
        rows.append((n, exact, estimate_error(Z, truth, probe_set)))
    return FailureDemo(rows, probes)
