"""Command line entry point: ``elastodtn solve|adapt|study --config FILE``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
import warnings
from pathlib import Path
from typing import List, Optional, Sequence

from .adapt import (
    IterationRecord,
    SolveStep,
    StudyRecord,
    adaptive_solve,
    choose_truncation,
    solve_on_mesh,
    uniform_study,
)
from .analytic import ExactFlatSolution, Evaluator, energy_error, h1_error
from .config import RunConfig, RunMode, load_config
from .exceptions import ConfigError, ElastoDtnError
from .export import (
    ARTIFACTS,
    CONVERGENCE_COLUMNS,
    STUDY_COLUMNS,
    inside,
    write_convergence_csv,
    write_gnuplot,
    write_manifest,
    write_matrix_market,
    write_study_csv,
    write_vtk,
)
from .mesh import build_initial_mesh
from .models import ElasticMedium, ProblemSpec, WaveKind

_LOGGER = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastodtn",
        description="Elastic scattering by a periodic rigid grating with an"
        " adaptive finite element DtN method.",
    )
    parser.add_argument(
        "mode", choices=[m.value for m in RunMode], help="what to run"
    )
    parser.add_argument(
        "--config", required=True, type=Path, help="TOML run file"
    )
    parser.add_argument(
        "--out", type=Path, default=None, help="output directory"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="assembly threads (default: all cores)",
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="recorded in the MANIFEST"
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    return parser


def exact_solution(problem: ProblemSpec) -> Optional[Evaluator]:
    """Closed-form scattered field when the surface is the plane y = 0."""
    if not problem.profile.is_flat or problem.profile.max_height != 0.0:
        return None
    if problem.wave.kind is not WaveKind.COMPRESSIONAL:
        return None
    return ExactFlatSolution.from_problem(problem.medium, problem.wave)


class _Run:
    """Bookkeeping for the artifacts of one run."""

    def __init__(self, config: RunConfig, directory: Path, threads: int):
        self.config = config
        self.directory = directory
        self.threads = threads
        self.written: List[Path] = []
        self.records: List[IterationRecord] = []

    def path(self, key: str) -> Path:
        return inside(self.directory, ARTIFACTS.get(key, key))

    def keep(self, path: Path) -> None:
        self.written.append(path)

    def write_records(self) -> None:
        if not (self.config.outputs.csv and self.records):
            return
        self.keep(write_convergence_csv(self.path("convergence"), self.records))
        columns = ["eps_h", "e_h"]
        self.keep(
            write_gnuplot(
                self.path("convergence_plot"),
                ARTIFACTS["convergence"],
                "dof",
                columns,
                CONVERGENCE_COLUMNS,
                "convergence",
            )
        )

    def write_step(self, step: SolveStep) -> None:
        outputs = self.config.outputs
        if outputs.vtk:
            self.keep(write_vtk(self.path("mesh"), step.mesh))
            self.keep(
                write_vtk(
                    self.path("field"),
                    step.mesh,
                    step.field.full(),
                    step.indicators.eta,
                )
            )
        if outputs.matrix:
            self.keep(
                write_matrix_market(self.path("matrix"), step.system.matrix)
            )

    def snapshot(self, record: IterationRecord, step: SolveStep) -> None:
        self.records.append(record)
        if self.config.outputs.snapshots:
            name = f"snapshot_{record.iteration:03d}.vtk"
            self.keep(
                write_vtk(
                    self.path(name),
                    step.mesh,
                    step.field.full(),
                    step.indicators.eta,
                )
            )

    def solve(self) -> None:
        problem = self.config.problem
        settings = self.config.adapt
        exact = exact_solution(problem)
        N, eps_N = choose_truncation(problem, settings.dtn_tol)
        mesh = build_initial_mesh(
            problem.profile, problem.b, settings.h0, settings.min_angle
        )
        started = time.perf_counter()
        step = solve_on_mesh(problem, mesh, N, self.threads)
        e_h = None
        if exact is not None:
            full = step.field.full()
            e_h = h1_error(mesh, full, exact)
            _LOGGER.info(
                "energy norm error %.4e",
                energy_error(mesh, full, exact, problem.medium),
            )
        self.records.append(
            IterationRecord(
                iteration=0,
                dof=step.dofmap.size,
                N=N,
                eps_N=eps_N,
                eps_h=step.indicators.eps_h,
                e_h=e_h,
                seconds=time.perf_counter() - started,
            )
        )
        self.write_records()
        self.write_step(step)

    def adapt(self) -> None:
        problem = self.config.problem
        settings = dataclasses.replace(
            self.config.adapt, num_threads=self.threads
        )
        result = adaptive_solve(
            problem, settings, exact_solution(problem), self.snapshot
        )
        _LOGGER.info(
            "finished after %d solves (%s)", len(result.records), result.cause.value
        )
        self.write_records()
        self.write_step(result.final)

    def study(self) -> None:
        problem = self.config.problem
        medium = problem.medium
        omegas = self.config.study.omegas or (medium.omega,)
        records: List[StudyRecord] = []
        for omega in omegas:
            shifted = dataclasses.replace(
                problem,
                medium=ElasticMedium(medium.lam, medium.mu, float(omega)),
            )
            records.extend(
                uniform_study(
                    shifted,
                    self.config.study.divisions,
                    self.config.adapt.dtn_tol,
                    exact_solution(shifted),
                    self.threads,
                )
            )
        if self.config.outputs.csv:
            self.keep(write_study_csv(self.path("study"), records))
            self.keep(
                write_gnuplot(
                    self.path("study_plot"),
                    ARTIFACTS["study"],
                    "dof",
                    ["e_h"],
                    STUDY_COLUMNS,
                    "uniform refinement",
                )
            )


def run(
    config: RunConfig,
    mode: Optional[RunMode] = None,
    out: Optional[Path] = None,
    threads: int = 1,
    seed: int = 0,
) -> int:
    """Execute one run and write its artifacts.

    Returns
    -------
    int
        0 on success, 1 when a module raised; in that case whatever was
        produced is flushed and the MANIFEST is marked incomplete.
    """
    mode = RunMode(mode or config.mode)
    directory = Path(out if out is not None else config.outputs.directory)
    directory.mkdir(parents=True, exist_ok=True)
    job = _Run(config, directory, max(1, threads))
    notes = [f"mode: {mode.value}", f"config: {config.source}", f"seed: {seed}"]
    try:
        getattr(job, mode.value)()
    except (ElastoDtnError, ValueError, RuntimeError) as exc:
        _LOGGER.error("%s run failed: %s", mode.value, exc)
        print(f"elastodtn: error: {exc}", file=sys.stderr)
        try:
            job.write_records()
        except OSError:
            _LOGGER.exception("could not flush partial records")
        write_manifest(
            directory, job.written, complete=False, notes=notes + [f"error: {exc}"]
        )
        return 1
    write_manifest(directory, job.written, complete=True, notes=notes)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"elastodtn: {exc}", file=sys.stderr)
        return 2
    if config.mode.value != args.mode:
        warnings.warn(
            f"config mode '{config.mode.value}' overridden by '{args.mode}'",
            UserWarning,
        )
    return run(config, RunMode(args.mode), args.out, args.threads, args.seed)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
