"""CSV and JSON report writers."""

import csv
import io
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np
from pydantic import ValidationError

from .errors import FormatError, SounderIOError
from .models import AngularSpectrum, DelayProfile, LocationReport, Padp, PadpSide
from .utils import atomic_write

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    return value


def _json_default(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    """Write rows with a fixed column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    atomic_write(path, buf.getvalue().encode("utf-8"))
    logger.debug("wrote %s", path)


def write_json(path: PathLike, doc: Any) -> None:
    """Write a JSON document with sorted keys."""
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
    atomic_write(path, (text + "\n").encode("utf-8"))
    logger.debug("wrote %s", path)


def write_profile_csv(path: PathLike, p: DelayProfile) -> None:
    """Delay profile as delay_ns, power."""
    rows = [{"delay_ns": t * 1e9, "power": float(v)} for t, v in zip(p.delays_s, p.power)]
    write_csv(path, ("delay_ns", "power"), rows)


def _write_matrix(path: PathLike, corner: str, row_labels, col_labels, matrix: np.ndarray) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([corner, *(f"{c:g}" for c in col_labels)])
    for label, values in zip(row_labels, matrix):
        writer.writerow([f"{label:g}", *(repr(float(v)) for v in values)])
    atomic_write(path, buf.getvalue().encode("utf-8"))
    logger.debug("wrote %s", path)


def write_pas_csv(path: PathLike, pas: AngularSpectrum) -> None:
    """PAS matrix: one row per TX angle, one column per RX angle."""
    _write_matrix(path, "tx_deg/rx_deg", pas.grid.tx_azimuths_deg, pas.grid.rx_azimuths_deg, pas.power)


def write_padp_csv(path: PathLike, p: Padp) -> None:
    """PADP matrix: one row per angle, one column per delay (ns)."""
    delays_ns = np.arange(p.power.shape[1]) * p.delay_bin_s * 1e9
    corner = "rx_deg/delay_ns" if p.side == PadpSide.RX else "tx_deg/delay_ns"
    _write_matrix(path, corner, p.angles_deg, delays_ns, p.power)


def write_locations_csv(path: PathLike, reports: Sequence[LocationReport]) -> None:
    """Per-location table consumed by the fit command."""
    write_csv(path, LocationReport.COLUMNS, (r.model_dump() for r in reports))


def read_locations_csv(path: PathLike) -> List[LocationReport]:
    """Read a per-location table.

    Raises:
        SounderIOError: file cannot be read
        FormatError: missing columns or invalid values
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SounderIOError(f"cannot read {path}: {e}") from e
    reader = csv.DictReader(io.StringIO(text))
    missing = set(LocationReport.COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise FormatError(f"{path}: missing columns {sorted(missing)}")
    reports: List[LocationReport] = []
    for line, row in enumerate(reader, start=2):
        try:
            reports.append(LocationReport.model_validate({k: row[k] for k in LocationReport.COLUMNS}))
        except ValidationError as e:
            raise FormatError(f"{path}:{line}: {e}") from e
    return reports


def rows_to_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> List[List[str]]:
    """Stringify rows for console tables."""
    out = []
    for row in rows:
        cells = []
        for col in columns:
            value = _cell(row.get(col))
            cells.append(f"{value:.4g}" if isinstance(value, float) else str(value))
        out.append(cells)
    return out
