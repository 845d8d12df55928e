"""Writers for iteration logs, sweep tables and legacy-ASCII VTK fields."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from hydroswitch.core.constitutive import SoilModel
from hydroswitch.core.mesh import Mesh
from utils.helpers import format_number, parse_number
from utils.logger import get_logger


logger = get_logger(__name__)

ITERATION_COLUMNS = (
    "step",
    "iter",
    "scheme",
    "eta_lin",
    "eta_LN",
    "eta_NL",
    "eta_LL",
    "C_N",
    "eff_index",
    "wall_ms",
)
_NUMERIC_COLUMNS = ITERATION_COLUMNS[3:]


def iteration_rows(records: Iterable[object], *, timings: bool = True) -> List[Dict[str, str]]:
    """Stringify :class:`IterationRecord` objects into CSV rows."""

    rows: List[Dict[str, str]] = []
    for r in records:
        rows.append(
            {
                "step": str(r.step),  # type: ignore[attr-defined]
                "iter": str(r.iteration),  # type: ignore[attr-defined]
                "scheme": r.scheme,  # type: ignore[attr-defined]
                "eta_lin": format_number(r.eta_lin),  # type: ignore[attr-defined]
                "eta_LN": format_number(r.eta_LN),  # type: ignore[attr-defined]
                "eta_NL": format_number(r.eta_NL),  # type: ignore[attr-defined]
                "eta_LL": format_number(r.eta_LL),  # type: ignore[attr-defined]
                "C_N": format_number(r.C_N),  # type: ignore[attr-defined]
                "eff_index": format_number(r.eff_index),  # type: ignore[attr-defined]
                "wall_ms": format_number(r.wall_ms) if timings else "",  # type: ignore[attr-defined]
            }
        )
    return rows


def write_iterations_csv(path: str | Path, records: Iterable[object], *, timings: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = iteration_rows(records, timings=timings)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=ITERATION_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    logger.debug(f"Wrote {len(rows)} iteration rows to {path}")
    return path


def read_iterations_csv(path: str | Path) -> List[Dict[str, object]]:
    """Rows of an iterations CSV with numeric columns parsed (blank cells become ``None``)."""

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return []
    reader = csv.DictReader(text.splitlines())
    missing = set(ITERATION_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"{path} is missing column(s): {', '.join(sorted(missing))}")
    rows: List[Dict[str, object]] = []
    for raw in reader:
        row: Dict[str, object] = {
            "step": int(raw["step"]),
            "iter": int(raw["iter"]),
            "scheme": raw["scheme"],
        }
        for column in _NUMERIC_COLUMNS:
            row[column] = parse_number(raw[column] or "")
        rows.append(row)
    return rows


def write_table_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Dict[str, object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: format_number(v) if isinstance(v, float) else ("" if v is None else v) for k, v in row.items()}
            )
    return path


def write_vtk(
    path: str | Path,
    mesh: Mesh,
    psi: NDArray[np.float64],
    model: SoilModel,
    *,
    title: Optional[str] = None,
) -> Path:
    """Legacy ASCII UNSTRUCTURED_GRID with point data ``pressure_head`` and ``saturation``."""

    psi = np.asarray(psi, dtype=float)
    if psi.shape != (mesh.n_vertices,):
        raise ValueError(f"expected {mesh.n_vertices} nodal values, got shape {psi.shape}")
    saturation = np.asarray(model.water_content(psi), dtype=float)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nv, nt = mesh.n_vertices, mesh.n_triangles
    lines = [
        "# vtk DataFile Version 3.0",
        (title or "hydroswitch field").replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    lines += [f"{format_number(x)} {format_number(z)} 0" for x, z in mesh.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines.append(f"POINT_DATA {nv}")
    for name, values in (("pressure_head", psi), ("saturation", saturation)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [format_number(v) for v in values]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {nv}-vertex field to {path}")
    return path


def read_vtk_point_data(path: str | Path) -> Dict[str, NDArray[np.float64]]:
    """Point arrays of a file written by :func:`write_vtk`, plus ``points``."""

    tokens = Path(path).read_text(encoding="utf-8").splitlines()
    data: Dict[str, NDArray[np.float64]] = {}
    i = 0
    while i < len(tokens):
        line = tokens[i].split()
        if line[:1] == ["POINTS"]:
            n = int(line[1])
            data["points"] = np.array([[float(v) for v in tokens[i + 1 + k].split()] for k in range(n)])
            i += n
        elif line[:1] == ["POINT_DATA"]:
            n = int(line[1])
        elif line[:1] == ["SCALARS"]:
            name = line[1]
            data[name] = np.array([float(tokens[i + 2 + k]) for k in range(n)])
            i += n + 1
        i += 1
    return data


__all__ = [
    "ITERATION_COLUMNS",
    "iteration_rows",
    "write_iterations_csv",
    "read_iterations_csv",
    "write_table_csv",
    "write_vtk",
    "read_vtk_point_data",
]
