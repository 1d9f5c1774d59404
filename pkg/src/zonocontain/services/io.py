"""
CSV and JSON persistence.

Matrices, point clouds and experiment records are written as RFC-4180 CSV with LF
line endings and ``repr`` floats, so identical inputs give byte-identical files.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np
from numpy.typing import ArrayLike

from ..models.bodies import BodySpec, dump_body, parse_body
from ..models.exceptions import BadShape, InvalidBody
from ..models.experiment import ExperimentRecord
from ..models.wire import WitnessLineDict
from ..models.zonotope import FloatArray, Zonotope, as_matrix

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_cell(value: Any) -> str:
    """CSV text of a cell: empty for None, shortest round-trip repr for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _writer(handle: Any) -> Any:
    return csv.writer(handle, lineterminator="\n")


def read_matrix_csv(path: PathLike) -> FloatArray:
    """
    Read a numeric matrix, one row per line.

    Raises:
        BadShape: If the file is empty, ragged or non-numeric
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows:
        raise BadShape(f"{path} holds no rows")
    try:
        return as_matrix([[float(cell) for cell in row] for row in rows])
    except ValueError as e:
        raise BadShape(f"{path} is not a numeric matrix: {e}") from e


def write_matrix_csv(path: PathLike, matrix: ArrayLike) -> None:
    M = as_matrix(matrix)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = _writer(handle)
        for row in M:
            writer.writerow([format_cell(v) for v in row])


def metadata_path(path: PathLike) -> Path:
    target = Path(path)
    return target.with_name(target.stem + ".meta.json")


def write_zonotope(path: PathLike, zonotope: Zonotope) -> Path:
    """Write the generator CSV and its metadata sidecar; returns the sidecar path."""
    write_matrix_csv(path, zonotope.generators)
    sidecar = metadata_path(path)
    payload = json.dumps(zonotope.metadata(), sort_keys=True)
    sidecar.write_text(payload + "\n", encoding="utf-8")
    return sidecar


def read_zonotope(path: PathLike) -> Zonotope:
    return Zonotope.from_matrix(read_matrix_csv(path))


def write_points(handle: TextIO, points: ArrayLike) -> None:
    """Write points as CSV rows under an x0..x(d-1) header to an open text handle."""
    P = as_matrix(points)
    writer = _writer(handle)
    writer.writerow([f"x{i}" for i in range(P.shape[1])])
    for row in P:
        writer.writerow([format_cell(v) for v in row])


def write_points_csv(path: PathLike, points: ArrayLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        write_points(handle, points)


def read_body(source: PathLike) -> BodySpec:
    """
    Load a BodySpec from a JSON file, or from inline JSON when the text starts with '{'.

    Raises:
        InvalidBody: If the file is missing or the payload does not validate
    """
    text = str(source)
    if not text.lstrip().startswith("{"):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as e:
            raise InvalidBody(f"Cannot read body file {source}: {e}") from e
    return parse_body(text)


def write_body(path: PathLike, body: BodySpec) -> None:
    Path(path).write_text(dump_body(body) + "\n", encoding="utf-8")


def write_records_csv(path: PathLike, records: Sequence[ExperimentRecord]) -> None:
    columns = ExperimentRecord.columns()
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = _writer(handle)
        writer.writerow(columns)
        for record in records:
            row = record.to_dict()
            writer.writerow([format_cell(row[c]) for c in columns])
    logger.info("Wrote %d records to %s", len(records), path)


def read_records_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def witnesses_path(path: PathLike) -> Path:
    target = Path(path)
    return target.with_name(target.stem + ".witnesses.jsonl")


def write_witnesses_jsonl(path: PathLike, lines: Iterable[WitnessLineDict]) -> Path:
    """Write one JSON object per witness next to the CSV at ``path``."""
    sidecar = witnesses_path(path)
    with open(sidecar, "w", newline="\n", encoding="utf-8") as handle:
        for line in lines:
            handle.write(json.dumps(line, sort_keys=True) + "\n")
    return sidecar


def read_witnesses_jsonl(path: PathLike) -> List[WitnessLineDict]:
    sidecar = Path(path)
    if sidecar.suffix != ".jsonl":
        sidecar = witnesses_path(path)
    with open(sidecar, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def dump_json(payload: Any, indent: Optional[int] = 2) -> str:
    """JSON text for CLI output; NaN and inf are not allowed."""
    return json.dumps(payload, indent=indent, sort_keys=True, allow_nan=False)
