"""The selective sampling process: draw kappa(n) candidates, keep the best one."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from selsample.domain import DomainSpace, TrueFunction, UsageError, sample_mu
from selsample.heuristics import HeuristicSpec, phi_many
from selsample.predictor import LabeledSample, SampleSet


@dataclass(frozen=True)
class KappaSchedule:
    """Candidate count per step: ``constant`` (k), ``harmonic_log`` or ``iid``."""

    variant: str
    k: int = 1

    def __post_init__(self):
        if self.variant not in ("constant", "harmonic_log", "iid"):
            raise UsageError(f"unknown kappa schedule {self.variant!r}")
        if self.variant == "constant" and self.k < 1:
            raise UsageError("constant kappa needs k >= 1")

    @classmethod
    def parse(cls, text: str) -> "KappaSchedule":
        name, _, arg = text.partition(":")
        if name == "const":
            try:
                return cls("constant", int(arg))
            except ValueError:
                raise UsageError(f"bad kappa {text!r}") from None
        if name == "hlog" and not arg:
            return cls("harmonic_log")
        if name == "iid" and not arg:
            return cls("iid")
        raise UsageError(f"unknown kappa selector {text!r}")

    def describe(self) -> str:
        return {"harmonic_log": "hlog", "iid": "iid"}.get(self.variant) or f"const:{self.k}"


@lru_cache(maxsize=None)
def _harmonic_floor(j: int) -> int:
    return math.floor(sum(Fraction(1, i) for i in range(1, j + 1)))


def kappa_value(schedule: KappaSchedule, n: int) -> int:
    if n < 1:
        raise UsageError("kappa is defined for n >= 1")
    if schedule.variant == "constant":
        return schedule.k
    if schedule.variant == "iid":
        return 1
    j = n.bit_length()  # ceil(lg(n + 1))
    return max(1, _harmonic_floor(j))


def seed_count_from_p(p: float) -> int:
    """Initial iid sample count hitting every component of measure >= p with high confidence."""
    if not 0 < p <= 1:
        raise UsageError("p must lie in (0, 1]")
    return max(20, math.ceil(5 / p))


@dataclass(frozen=True)
class ProcessConfig:
    heuristic: HeuristicSpec
    kappa: KappaSchedule
    total_samples: int
    initial_seed_count: int = 20
    seed: int = 0

    def __post_init__(self):
        if not self.total_samples >= self.initial_seed_count >= 0:
            raise UsageError("need total_samples >= initial_seed_count >= 0")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class StepRecord:
    n: int
    kappa: int
    phi: float
    ties: int
    point: tuple
    label: int


@dataclass
class RunTrace:
    samples: SampleSet
    initial_seed_count: int
    records: list[StepRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        """All samples in order; seed rows leave kappa, phi and ties empty."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "kappa", "phi", "ties", "x", "y", "label"])
        for s in self.samples:
            if s.index <= self.initial_seed_count:
                row = [s.index, "", "", ""]
            else:
                r = self.records[s.index - self.initial_seed_count - 1]
                row = [r.n, r.kappa, repr(float(r.phi)), r.ties]
            xy = [repr(c) for c in s.point]
            row += xy + ([""] if len(xy) == 1 else []) + [s.label]
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RunTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        dim = 1 if rows and rows[0]["y"] == "" else 2
        Z = SampleSet(dim)
        seeds = 0
        records = []
        for row in rows:
            p = (float(row["x"]),) if dim == 1 else (float(row["x"]), float(row["y"]))
            Z.append(p, int(row["label"]))
            if row["kappa"] == "":
                seeds += 1
            else:
                phi = float(row["phi"])
                records.append(StepRecord(int(row["n"]), int(row["kappa"]), phi, int(row["ties"]), p, int(row["label"])))
        return cls(Z, seeds, records)


def select_next(Z: SampleSet, cfg: ProcessConfig, n: int, rng: np.random.Generator, space: DomainSpace,
                truth: TrueFunction, geom=None) -> tuple[LabeledSample, StepRecord]:
    """Draw kappa(n) candidates, keep a uniformly chosen maximizer of the heuristic.

    The chosen sample is appended to `Z` and returned with its step record.
    """
    k = kappa_value(cfg.kappa, n)
    cand = np.array([sample_mu(space, rng) for _ in range(k)])
    phi = phi_many(cfg.heuristic, cand, Z, geom)
    best = phi.max()
    winners = np.flatnonzero(phi == best)
    pick = winners[0] if winners.size == 1 else winners[int(rng.integers(winners.size))]
    point = tuple(cand[pick].tolist())
    sample = Z.append(point, truth.label(point))
    return sample, StepRecord(n, k, float(best), int(winners.size), point, sample.label)


def run_process(cfg: ProcessConfig, space: DomainSpace, truth: TrueFunction) -> RunTrace:
    """Seed with iid samples, then select until `cfg.total_samples` samples exist."""
    if truth.dimension != space.dimension:
        raise UsageError("truth and domain dimensions differ")
    if cfg.heuristic.variant == "nmc_voronoi" and space.dimension != 2:
        raise UsageError("nmc_voronoi runs on 2D domains only")
    rng = np.random.default_rng(cfg.seed)
    Z = SampleSet(space.dimension)
    for _ in range(cfg.initial_seed_count):
        p = sample_mu(space, rng)
        Z.append(p, truth.label(p))
    geom = None
    if cfg.heuristic.variant == "nmc_voronoi":
        from selsample.voronoi import build_index

        geom = build_index(Z)
    trace = RunTrace(Z, cfg.initial_seed_count)
    for n in range(cfg.initial_seed_count + 1, cfg.total_samples + 1):
        _, rec = select_next(Z, cfg, n, rng, space, truth, geom)
        trace.records.append(rec)
        if geom is not None:
            geom.extend(Z)
    return trace
