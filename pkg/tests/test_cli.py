""" Tests for the command line runner. """

import csv
from pathlib import Path
from unittest import mock

import pytest

from elastodtn.cli import build_parser, exact_solution, main
from elastodtn.exceptions import SolverError
from elastodtn.models import IncidentWave, WaveKind

RUN_FILE = """
mode = "{mode}"

[medium]
lambda = 2.0
mu = 1.0
omega = 2.0

[incidence]
kind = "compressional"
theta = 1.0471975511965976

[geometry]
period = 0.5
b = 0.25

[adapt]
tolerance = 0.5
h0 = 0.25
max_iterations = 3

[study]
divisions = [2, 4]
omegas = [1.0, 2.0]
"""


@pytest.fixture
def run_file(tmp_path: Path):
    def write(mode: str = "adapt", extra: str = "") -> Path:
        path = tmp_path / f"{mode}.toml"
        path.write_text(RUN_FILE.format(mode=mode) + extra, encoding="utf-8")
        return path

    return write


def _manifest(directory: Path) -> list:
    return (directory / "MANIFEST").read_text(encoding="utf-8").splitlines()


def test_parser_defaults() -> None:
    args = build_parser().parse_args(["adapt", "--config", "run.toml"])

    assert args.mode == "adapt"
    assert args.config == Path("run.toml")
    assert args.out is None
    assert args.seed == 0
    assert args.threads >= 1


def test_parser_rejects_unknown_mode() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args(["refine", "--config", "run.toml"])


def test_solve_writes_artifacts(run_file, tmp_path: Path) -> None:
    out = tmp_path / "solve"

    code = main(
        ["solve", "--config", str(run_file("solve")), "--out", str(out)]
    )

    assert code == 0
    lines = _manifest(out)
    assert lines[0] == "status: complete"
    assert "# mode: solve" in lines
    for name in ("convergence.csv", "convergence.gp", "mesh.vtk", "field.vtk"):
        assert (out / name).exists()
        assert any(line.endswith(f"  {name}") for line in lines)
    with open(out / "convergence.csv", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 1
    assert rows[0]["e_h"] != ""
    assert float(rows[0]["seconds"]) > 0.0


def test_adapt_run_records_every_iteration(run_file, tmp_path: Path) -> None:
    out = tmp_path / "adapt"

    code = main(
        [
            "adapt",
            "--config",
            str(run_file()),
            "--out",
            str(out),
            "--threads",
            "2",
            "--seed",
            "7",
        ]
    )

    assert code == 0
    assert "# seed: 7" in _manifest(out)
    with open(out / "convergence.csv", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert 1 <= len(rows) <= 3
    assert [int(r["iter"]) for r in rows] == list(range(len(rows)))


def test_failed_run_marks_manifest_incomplete(
    run_file, tmp_path: Path
) -> None:
    out = tmp_path / "failed"
    failing = mock.Mock(side_effect=SolverError("factorization failed"))

    with mock.patch("elastodtn.cli.adaptive_solve", failing):
        code = main(["adapt", "--config", str(run_file()), "--out", str(out)])

    assert code == 1
    assert failing.call_count == 1
    lines = _manifest(out)
    assert lines[0] == "status: incomplete"
    assert "# error: factorization failed" in lines


def test_mode_mismatch_warns(run_file, tmp_path: Path) -> None:
    with pytest.warns(UserWarning, match="overridden"):
        code = main(
            [
                "solve",
                "--config",
                str(run_file("adapt")),
                "--out",
                str(tmp_path / "out"),
            ]
        )

    assert code == 0


def test_bad_config_exits_with_two(
    run_file, tmp_path: Path, capsys: pytest.CaptureFixture
) -> None:
    path = run_file(extra="\n[outputs]\nformat = \"vtu\"\n")

    code = main(["adapt", "--config", str(path), "--out", str(tmp_path)])

    assert code == 2
    assert "outputs.format" in capsys.readouterr().err
    assert not (tmp_path / "MANIFEST").exists()


def test_study_covers_every_frequency(run_file, tmp_path: Path) -> None:
    out = tmp_path / "study"

    code = main(["study", "--config", str(run_file("study")), "--out", str(out)])

    assert code == 0
    with open(out / "study.csv", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert [(float(r["omega"]), int(r["level"])) for r in rows] == [
        (1.0, 0),
        (1.0, 1),
        (2.0, 0),
        (2.0, 1),
    ]
    assert (out / "study.gp").exists()


def test_exact_solution_only_for_flat_compressional(example1, example2) -> None:
    assert exact_solution(example1) is not None
    assert exact_solution(example2) is None

    shear = IncidentWave(WaveKind.SHEAR, example1.wave.theta)
    shear_problem = type(example1)(
        example1.profile, example1.b, example1.medium, shear
    )
    assert exact_solution(shear_problem) is None


def test_rerun_reproduces_the_table(run_file, tmp_path: Path) -> None:
    out = tmp_path / "again"
    argv = ["adapt", "--config", str(run_file()), "--out", str(out)]

    def table() -> list:
        with open(out / "convergence.csv", encoding="utf-8") as handle:
            return [
                {k: v for k, v in row.items() if k != "seconds"}
                for row in csv.DictReader(handle)
            ]

    assert main(argv) == 0
    first = table()
    assert main(argv) == 0

    assert table() == first
