"""Command line driver: run, render, compare, failure-demo.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 self-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from selsample.domain import (
    UNIT_INTERVAL,
    UNIT_SQUARE,
    Checkerboard,
    Disk,
    ImageTruth,
    TrueFunction,
    UsageError,
    build_adversarial_1d,
)
from selsample.evaluation import (
    DEFAULT_PROBES,
    error_curve,
    estimate_error,
    estimate_q_measure,
    failure_demo,
    make_probes,
    raster_predict,
    raster_to_rgb,
    sample_pixels,
)
from selsample.heuristics import HeuristicSpec
from selsample.images import write_emblem
from selsample.pnm import atomic_write_bytes, encode_pnm
from selsample.sampler import KappaSchedule, ProcessConfig, run_process, seed_count_from_p

EXIT_IO, EXIT_USAGE, EXIT_SELFCHECK = 1, 2, 3

DEFAULTS = {
    "truth": "disk:0.5,0.5,0.3",
    "heuristic": "dist",
    "kappa": "const:1",
    "n": "1000",
    "seed": "0",
    "seed-initial": None,
    "seed-p": None,
    "probes": str(DEFAULT_PROBES),
    "probe-seed": "0",
    "stride": None,
    "m": "1",
    "width": "256",
    "height": "256",
    "out": ".",
}


def parse_truth(text: str) -> TrueFunction:
    name, _, arg = text.partition(":")
    try:
        if name == "disk":
            cx, cy, r = (float(v) for v in arg.split(","))
            if r <= 0:
                raise UsageError("disk radius must be positive")
            return Disk(cx, cy, r)
        if name == "checker":
            return Checkerboard(int(arg))
        if name == "adv1d":
            return build_adversarial_1d(int(arg) if arg else 20)
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad truth selector {text!r}") from None
    if name == "image" and arg:
        try:
            return ImageTruth.from_file(arg)
        except ValueError as exc:
            raise UsageError(f"cannot use image {arg!r}: {exc}") from None
    raise UsageError(f"unknown truth selector {text!r}")


def read_spec_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep or key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: expected one of {sorted(DEFAULTS)} as key=value")
        out[key] = value.strip()
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    truth: str
    heuristic: HeuristicSpec
    kappa: KappaSchedule
    total: int
    seed: int
    initial: int
    probes: int
    probe_seed: int
    stride: int
    m: int
    width: int
    height: int
    out: Path

    @classmethod
    def from_options(cls, opts: dict) -> "ExperimentSpec":
        merged = {**DEFAULTS, **{k: v for k, v in opts.items() if v is not None}}
        truth = parse_truth(merged["truth"])
        try:
            total = int(merged["n"])
            seed = int(merged["seed"])
            probes = int(merged["probes"])
            probe_seed = int(merged["probe-seed"])
            m = int(merged["m"])
            width, height = int(merged["width"]), int(merged["height"])
            if merged["seed-initial"] is not None and merged["seed-p"] is not None:
                raise UsageError("give at most one of --seed-initial and --seed-p")
            if merged["seed-p"] is not None:
                initial = seed_count_from_p(float(merged["seed-p"]))
            elif merged["seed-initial"] is not None:
                initial = int(merged["seed-initial"])
            else:
                initial = min(20, total)
            stride = int(merged["stride"]) if merged["stride"] is not None else max((total - initial) // 10, 1)
        except ValueError as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"bad numeric option: {exc}") from None
        if probes < 1 or m < 1 or stride < 1 or width < 1 or height < 1 or total < 1:
            raise UsageError("n, probes, m, stride, width and height must be positive")
        if initial < m:
            raise UsageError("initial seed count must be at least m")
        h = HeuristicSpec.parse(merged["heuristic"], truth.dimension)
        if h.variant == "nmc_voronoi" and truth.dimension != 2:
            raise UsageError("nmc-vor needs a 2D truth")
        return cls(merged["truth"], h, KappaSchedule.parse(merged["kappa"]), total, seed, initial,
                   probes, probe_seed, stride, m, width, height, Path(merged["out"]))

    def config(self, seed: int | None = None) -> ProcessConfig:
        return ProcessConfig(self.heuristic, self.kappa, self.total, self.initial,
                             self.seed if seed is None else seed)


def _execute(spec: ExperimentSpec, seed: int | None = None):
    truth = parse_truth(spec.truth)
    space = UNIT_SQUARE if truth.dimension == 2 else UNIT_INTERVAL
    trace = run_process(spec.config(seed), space, truth)
    probes = make_probes(space, truth, spec.probes, spec.probe_seed)
    return truth, trace, probes


def _write_text(path: Path, text: str):
    atomic_write_bytes(path, text.encode())


def _spec_options(args) -> dict:
    opts = read_spec_file(args.spec) if getattr(args, "spec", None) else {}
    for key in DEFAULTS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            opts[key] = str(value)
    return opts


def cmd_run(args) -> int:
    spec = ExperimentSpec.from_options(_spec_options(args))
    truth, trace, probes = _execute(spec)
    curve = error_curve(trace, truth, probes, spec.stride, spec.heuristic, m=spec.m)
    spec.out.mkdir(parents=True, exist_ok=True)
    _write_text(spec.out / "trace.csv", trace.to_csv())
    _write_text(spec.out / "curve.csv", curve.to_csv())
    print(f"final_error={curve.rows[-1][1]!r}")
    return 0


def cmd_render(args) -> int:
    spec = ExperimentSpec.from_options(_spec_options(args))
    if parse_truth(spec.truth).dimension != 2:
        raise UsageError("render needs a 2D truth")
    truth, trace, probes = _execute(spec)
    Z = trace.samples
    raster = raster_predict(Z, spec.width, spec.height, m=spec.m, seed=spec.seed)
    marks = sample_pixels(Z, spec.width, spec.height) if args.overlay_samples else None
    rgb = raster_to_rgb(raster, max(truth.label_count, int(raster.max()) + 1), marks)
    spec.out.mkdir(parents=True, exist_ok=True)
    atomic_write_bytes(spec.out / "prediction.ppm", encode_pnm(rgb))
    print(f"final_error={estimate_error(Z, truth, probes, m=spec.m)!r}")
    return 0


def _compare_job(job):
    spec, seed = job
    truth, trace, probes = _execute(spec, seed)
    err = estimate_error(trace.samples, truth, probes, m=spec.m)
    q = estimate_q_measure(trace.samples, spec.heuristic, probes) if spec.heuristic.is_nmc else None
    return err, q


def _fan_out(jobs):
    try:
        workers = int(os.environ.get("SELSAMPLE_THREADS", "0")) or os.cpu_count() or 1
    except ValueError:
        raise UsageError("SELSAMPLE_THREADS must be an integer") from None
    if workers <= 1 or len(jobs) <= 1:
        return [_compare_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_compare_job, jobs))


def cmd_compare(args) -> int:
    if len(args.spec) < 2:
        raise UsageError("compare needs at least two --spec files")
    base = {k: str(v) for k in DEFAULTS if (v := getattr(args, k.replace("-", "_"), None)) is not None}
    specs = []
    for path in args.spec:
        specs.append(ExperimentSpec.from_options({**read_spec_file(path), **base}))
    ref = specs[0]
    for s in specs[1:]:
        if (s.truth, s.probes, s.probe_seed, s.total, s.m) != (ref.truth, ref.probes, ref.probe_seed, ref.total, ref.m):
            raise UsageError("specs must share truth, probes, probe seed, n and m")
    names = [Path(p).stem for p in args.spec]
    jobs = [(s, s.seed + j) for s in specs for j in range(args.seeds)]
    results = _fan_out(jobs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["spec", "seed", "error", "q_measure"])
    summary = []
    for i, (name, s) in enumerate(zip(names, specs)):
        chunk = results[i * args.seeds : (i + 1) * args.seeds]
        for j, (err, q) in enumerate(chunk):
            w.writerow([name, s.seed + j, repr(err), "" if q is None else repr(q)])
        med_err = statistics.median(e for e, _ in chunk)
        qs = [q for _, q in chunk if q is not None]
        med_q = statistics.median(qs) if qs else None
        w.writerow([name, "median", repr(med_err), "" if med_q is None else repr(med_q)])
        summary.append((name, med_err, med_q))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "compare.csv", buf.getvalue())
    for name, med_err, med_q in summary:
        print(f"{name}: median_error={med_err!r}" + ("" if med_q is None else f" median_q={med_q!r}"))
    return 0


def cmd_failure_demo(args) -> int:
    demo = failure_demo(args.i_max, args.n_steps, args.probes, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "failure.csv", demo.to_csv())
    print(f"{'n':>3}  {'analytic_error':>20}  {'mc_error':>10}")
    for n, exact, mc in demo.rows:
        print(f"{n:>3}  {float(exact):>20.15f}  {mc:>10.6f}")
    if not demo.strictly_increasing:
        print("self-check failed: analytic error is not strictly increasing", file=sys.stderr)
        return EXIT_SELFCHECK
    return 0


def cmd_emblem(args) -> int:
    write_emblem(args.out, args.size)
    return 0


def _experiment_flags(p: argparse.ArgumentParser, with_spec: bool = True):
    if with_spec:
        p.add_argument("--spec", help="flat key=value file; flags given here override it")
    p.add_argument("--truth", help="disk:cx,cy,r | checker:k | image:<path> | adv1d[:i_max]")
    p.add_argument("--heuristic", help="dist | nmc-knn:K | nmc-vor")
    p.add_argument("--kappa", help="const:k | hlog | iid")
    p.add_argument("--n", type=int, help="total number of samples")
    p.add_argument("--seed", type=int, help="process seed")
    p.add_argument("--seed-initial", type=int, help="number of initial iid samples (default 20)")
    p.add_argument("--seed-p", type=float, help="derive the initial count as max(20, 5/p)")
    p.add_argument("--probes", type=int, help=f"Monte Carlo probe count (default {DEFAULT_PROBES})")
    p.add_argument("--probe-seed", type=int, help="probe seed, shared across compared runs")
    p.add_argument("--stride", type=int, help="curve stride in samples")
    p.add_argument("--m", type=int, help="prediction rule: m nearest neighbors (1 = nearest neighbor)")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selsample", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the sampling process; write trace.csv and curve.csv")
    _experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("render", help="run and write prediction.ppm")
    _experiment_flags(p)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--overlay-samples", action="store_true", help="paint sample pixels red")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("compare", help="final error and Q-measure across specs and seeds")
    p.add_argument("--spec", action="append", default=[], help="spec file (repeat, at least two)")
    p.add_argument("--seeds", type=int, default=20, help="seeds per spec, starting at its seed")
    _experiment_flags(p, with_spec=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("failure-demo", help="adversarial 1D sequence with decreasing accuracy")
    p.add_argument("--i-max", type=int, default=20)
    p.add_argument("--n-steps", type=int, default=10)
    p.add_argument("--probes", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_failure_demo)

    p = sub.add_parser("emblem", help="write the synthetic two-label emblem as a PGM")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=256)
    p.set_defaults(func=cmd_emblem)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"selsample: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"selsample: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
