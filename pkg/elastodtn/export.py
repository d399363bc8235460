"""Artifact writers: VTK meshes and fields, tables, Matrix Market, MANIFEST."""

from __future__ import annotations

import csv
import hashlib
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import meshio
import numpy as np
import scipy.io
import scipy.sparse as sp

from .adapt import IterationRecord, StudyRecord
from .mesh import Mesh

_LOGGER = logging.getLogger(__name__)

ARTIFACTS = {
    "convergence": "convergence.csv",
    "convergence_plot": "convergence.gp",
    "study": "study.csv",
    "study_plot": "study.gp",
    "mesh": "mesh.vtk",
    "field": "field.vtk",
    "matrix": "system.mtx",
    "manifest": "MANIFEST",
}

CONVERGENCE_COLUMNS = IterationRecord.columns()

STUDY_COLUMNS = ["omega", "level", "h", "dof", "e_h", "rate"]


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def inside(directory: Path, name: str) -> Path:
    """Path of ``name`` under ``directory``; refuses to leave it."""
    root = Path(directory).resolve()
    target = (root / name).resolve()
    if root != target and root not in target.parents:
        raise ValueError(f"{name} escapes the output directory {root}")
    return target


def _pad3(values: np.ndarray) -> np.ndarray:
    out = np.zeros((len(values), 3))
    out[:, : values.shape[1]] = values
    return out


def write_vtk(
    path: "str | Path",
    mesh: Mesh,
    field: Optional[np.ndarray] = None,
    eta: Optional[np.ndarray] = None,
) -> Path:
    """Write the mesh, and optionally a field and indicators, as VTK legacy ASCII.

    Triangles and boundary edges (line cells) form two cell blocks; the
    integer cell array ``tag`` is 0 on triangles and the boundary tag on
    lines. A complex field is split into ``u_real`` and ``u_imag`` vectors.
    """
    points = _pad3(mesh.vertices)
    cells = [("triangle", mesh.triangles), ("line", mesh.boundary_edges)]
    cell_data: Dict[str, List[np.ndarray]] = {
        "tag": [
            np.zeros(mesh.num_triangles, dtype=np.int32),
            mesh.boundary_tags.astype(np.int32),
        ]
    }
    if eta is not None:
        cell_data["eta"] = [
            np.asarray(eta, dtype=float),
            np.zeros(len(mesh.boundary_edges)),
        ]
    point_data = {}
    if field is not None:
        values = np.asarray(field, dtype=complex).reshape(-1, 2)
        point_data["u_real"] = _pad3(values.real)
        point_data["u_imag"] = _pad3(values.imag)
    out = meshio.Mesh(
        points=points, cells=cells, point_data=point_data, cell_data=cell_data
    )
    meshio.write(
        str(path), out, file_format="vtk42", binary=False
    )
    return Path(path)


def write_matrix_market(path: "str | Path", matrix: sp.spmatrix) -> Path:
    """Complex general coordinate Matrix Market dump."""
    scipy.io.mmwrite(
        str(path),
        sp.coo_matrix(matrix, dtype=complex),
        field="complex",
        symmetry="general",
    )
    # mmwrite appends the extension when it is missing
    path = Path(path)
    return path if path.suffix == ".mtx" else path.with_suffix(".mtx")


def _write_table(path: Path, columns: Sequence[str], rows: Iterable[Dict]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row[c]) for c in columns])
    return path


def write_convergence_csv(
    path: "str | Path", records: Sequence[IterationRecord]
) -> Path:
    """One row per adaptive iteration, floats in shortest round-trip form."""
    return _write_table(
        Path(path), CONVERGENCE_COLUMNS, (r.to_row() for r in records)
    )


def read_convergence_csv(path: "str | Path") -> List[IterationRecord]:
    with open(path, encoding="utf-8", newline="") as handle:
        return [IterationRecord.from_row(row) for row in csv.DictReader(handle)]


def write_study_csv(path: "str | Path", records: Sequence[StudyRecord]) -> Path:
    rows = (
        {column: getattr(r, column) for column in STUDY_COLUMNS}
        for r in records
    )
    return _write_table(Path(path), STUDY_COLUMNS, rows)


def write_gnuplot(
    path: "str | Path",
    table: str,
    x_column: str,
    y_columns: Sequence[str],
    columns: Sequence[str],
    title: str,
) -> Path:
    """gnuplot script drawing ``y_columns`` against ``x_column`` in log-log."""
    index = {name: i + 1 for i, name in enumerate(columns)}
    plots = ", \\\n     ".join(
        f"'{table}' using {index[x_column]}:{index[y]} with linespoints"
        f" title '{y}'"
        for y in y_columns
    )
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale xy",
        f"set xlabel '{x_column}'",
        f"set title '{title}'",
        f"plot {plots}",
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8")
    return Path(path)


def sha256(path: "str | Path") -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(
    directory: "str | Path",
    artifacts: Iterable["str | Path"],
    complete: bool = True,
    notes: Sequence[str] = (),
) -> Path:
    """List every artifact with its size and SHA-256.

    The first line reads ``status: complete`` or ``status: incomplete``;
    notes follow as ``# `` lines.
    """
    directory = Path(directory)
    lines = [f"status: {'complete' if complete else 'incomplete'}"]
    lines.extend(f"# {note}" for note in notes)
    names = sorted({Path(a).name for a in artifacts})
    for name in names:
        path = directory / name
        if not path.exists():
            lines.append(f"missing  {name}")
            continue
        lines.append(f"{sha256(path)}  {path.stat().st_size}  {name}")
    target = inside(directory, ARTIFACTS["manifest"])
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _LOGGER.debug("manifest written with %d artifacts", len(names))
    return target
