import numpy as np
import pytest

import selsample.cli as cli
from selsample.evaluation import ErrorCurve
from selsample.pnm import read_pnm
from selsample.sampler import RunTrace

SMALL = ["--truth", "disk:0.5,0.5,0.3", "--n", "80", "--probes", "2000"]


def run(argv, capsys=None):
    code = cli.main(argv)
    out = capsys.readouterr().out if capsys else ""
    return code, out


def test_run_writes_trace_and_curve(tmp_path, capsys):
    code, out = run(["run", *SMALL, "--heuristic", "nmc-knn:6", "--kappa", "const:10", "--seed-initial", "20",
                     "--out", str(tmp_path)], capsys)
    assert code == 0 and out.startswith("final_error=")
    trace = RunTrace.from_csv((tmp_path / "trace.csv").read_text())
    assert len(trace.samples) == 80 and trace.initial_seed_count == 20
    curve = ErrorCurve.from_csv((tmp_path / "curve.csv").read_text())
    assert curve.rows[0][0] == 20 and curve.rows[-1][0] == 80
    assert float(out.split("=")[1]) == curve.rows[-1][1]
    assert RunTrace.from_csv(trace.to_csv()).to_csv() == (tmp_path / "trace.csv").read_text()
    assert curve.to_csv() == (tmp_path / "curve.csv").read_text()


@pytest.mark.parametrize(
    "argv",
    [
        ["run", *SMALL, "--heuristic", "nmc-vor", "--kappa", "hlog", "--seed", "5"],
        ["render", *SMALL, "--heuristic", "nmc-knn:6", "--width", "48", "--height", "32", "--overlay-samples"],
        ["failure-demo", "--probes", "20000"],
    ],
)
def test_repeated_invocations_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([*argv, "--out", str(a)]) == 0
    assert cli.main([*argv, "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_render_single_sample_is_uniform(tmp_path, capsys):
    code, _ = run(["render", "--n", "1", "--width", "16", "--height", "8", "--out", str(tmp_path)], capsys)
    assert code == 0
    img = read_pnm(tmp_path / "prediction.ppm")
    assert img.shape == (8, 16, 3)
    assert len(np.unique(img.reshape(-1, 3), axis=0)) == 1


def test_render_image_truth(tmp_path, emblem_path, capsys):
    code, out = run(["render", "--truth", f"image:{emblem_path}", "--n", "300", "--probes", "2000",
                     "--width", "32", "--height", "32", "--out", str(tmp_path)], capsys)
    assert code == 0 and "final_error=" in out


def test_render_rejects_1d(tmp_path):
    assert cli.main(["render", "--truth", "adv1d", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--truth", "blob"],
        ["run", "--heuristic", "nmc-knn:1"],
        ["run", "--kappa", "const:0"],
        ["run", "--n", "10", "--seed-initial", "20"],
        ["run", "--seed-initial", "5", "--seed-p", "0.1"],
        ["run", "--seed-p", "2"],
        ["run", "--truth", "adv1d", "--heuristic", "nmc-vor"],
        ["failure-demo", "--i-max", "4", "--n-steps", "10"],
    ],
)
def test_usage_errors_exit_2(tmp_path, argv):
    assert cli.main([*argv, "--out", str(tmp_path)]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--n", "many"])
    assert info.value.code == 2


def test_io_failure_exits_1(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", *SMALL, "--out", str(blocker / "sub")]) == 1
    assert cli.main(["run", "--truth", f"image:{tmp_path / 'missing.pgm'}", "--out", str(tmp_path)]) == 1


def test_malformed_image_exits_2(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P3\n1 1\n255\n0 0 0")
    assert cli.main(["run", "--truth", f"image:{bad}", "--out", str(tmp_path)]) == 2


def test_failure_demo_exit_codes(tmp_path, monkeypatch, capsys):
    code, out = run(["failure-demo", "--n-steps", "2", "--probes", "10000", "--out", str(tmp_path)], capsys)
    assert code == 0 and len(out.splitlines()) == 3
    text = (tmp_path / "failure.csv").read_text().splitlines()
    assert text[0] == "n,analytic_error,mc_error" and len(text) == 3

    real = cli.failure_demo

    def flipped(*args):
        demo = real(*args)
        demo.rows.reverse()
        return demo

    monkeypatch.setattr(cli, "failure_demo", flipped)
    assert cli.main(["failure-demo", "--probes", "1000", "--out", str(tmp_path)]) == 3


def write_spec(path, **items):
    path.write_text("".join(f"{k} = {v}\n" for k, v in items.items()))
    return path


def test_spec_file_matches_flags(tmp_path):
    spec = write_spec(tmp_path / "s.txt", truth="disk:0.5,0.5,0.3", n=80, probes=2000, heuristic="nmc-knn:6",
                      seed_initial=20)
    assert cli.main(["run", "--spec", str(spec), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", *SMALL, "--heuristic", "nmc-knn:6", "--seed-initial", "20",
                     "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/trace.csv").read_bytes() == (tmp_path / "b/trace.csv").read_bytes()
    bad = tmp_path / "bad.txt"
    bad.write_text("colour = blue\n")
    assert cli.main(["run", "--spec", str(bad), "--out", str(tmp_path)]) == 2


def test_compare_duplicate_spec_gives_identical_medians(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SELSAMPLE_THREADS", "1")
    a = write_spec(tmp_path / "a.txt", truth="disk:0.5,0.5,0.3", n=60, probes=2000, heuristic="nmc-knn:6")
    b = write_spec(tmp_path / "b.txt", truth="disk:0.5,0.5,0.3", n=60, probes=2000, heuristic="nmc-knn:6")
    code, out = run(["compare", "--spec", str(a), "--spec", str(b), "--seeds", "3", "--out", str(tmp_path)], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split(": ")[1] == lines[1].split(": ")[1]
    rows = (tmp_path / "compare.csv").read_text().splitlines()
    assert rows[0] == "spec,seed,error,q_measure" and len(rows) == 1 + 2 * 4
    assert rows[4].startswith("a,median,")


def test_compare_parallel_matches_serial(tmp_path, monkeypatch):
    a = write_spec(tmp_path / "a.txt", truth="disk:0.5,0.5,0.3", n=50, probes=1000)
    b = write_spec(tmp_path / "b.txt", truth="disk:0.5,0.5,0.3", n=50, probes=1000, heuristic="nmc-knn:6")
    argv = ["compare", "--spec", str(a), "--spec", str(b), "--seeds", "3"]
    monkeypatch.setenv("SELSAMPLE_THREADS", "1")
    assert cli.main([*argv, "--out", str(tmp_path / "s")]) == 0
    monkeypatch.setenv("SELSAMPLE_THREADS", "3")
    assert cli.main([*argv, "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "s/compare.csv").read_bytes() == (tmp_path / "p/compare.csv").read_bytes()


def test_compare_guards(tmp_path):
    a = write_spec(tmp_path / "a.txt", truth="disk:0.5,0.5,0.3", n=50)
    b = write_spec(tmp_path / "b.txt", truth="checker:4", n=50)
    assert cli.main(["compare", "--spec", str(a), "--spec", str(b), "--out", str(tmp_path)]) == 2
    assert cli.main(["compare", "--spec", str(a), "--out", str(tmp_path)]) == 2


def test_emblem_command(tmp_path):
    path = tmp_path / "e.pgm"
    assert cli.main(["emblem", "--out", str(path), "--size", "64"]) == 0
    assert read_pnm(path).shape == (64, 64)
