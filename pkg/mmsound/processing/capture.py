"""Capture and calibration file I/O, sector merging and snapshot averaging."""

import io
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ..errors import (
    DataError,
    DimensionError,
    FormatError,
    GridConflictError,
    GridError,
    SounderIOError,
)
from ..models import (
    BeamGrid,
    CalibrationProfile,
    LocationMeta,
    MeasurementCapture,
    SounderConfig,
)
from ..utils import angle_diff_deg, atomic_write, wrap_angle_deg

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CAPTURE_MAGIC = b"MMWCAP01"
CALIBRATION_MAGIC = b"MMWCAL01"
TEXT_MAGIC = "MMWTXT01"

_LENGTH = struct.Struct("<I")
_PAYLOAD_DTYPE = np.dtype("<c8")
_SECTOR_HALF_WIDTH_DEG = 45.0


def _read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise SounderIOError(f"cannot read {path}: {e}") from e


def _frame(magic: bytes, header: Dict[str, Any], payload: bytes) -> bytes:
    doc = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return magic + _LENGTH.pack(len(doc)) + doc + payload


def _unframe(blob: bytes, magic: bytes, path: PathLike) -> Tuple[Dict[str, Any], bytes]:
    """Split a framed file into its metadata document and payload bytes."""
    if blob[: len(magic)] != magic:
        raise FormatError(f"{path}: bad magic, expected {magic.decode()}")
    offset = len(magic)
    if len(blob) < offset + _LENGTH.size:
        raise FormatError(f"{path}: truncated header")
    (doc_len,) = _LENGTH.unpack_from(blob, offset)
    offset += _LENGTH.size
    if len(blob) < offset + doc_len:
        raise FormatError(f"{path}: truncated metadata document")
    try:
        header = json.loads(blob[offset:offset + doc_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: metadata is not valid JSON: {e}") from e
    if not isinstance(header, dict):
        raise FormatError(f"{path}: metadata must be a JSON object")
    return header, blob[offset + doc_len:]


def _decode_payload(payload: bytes, expected: int, path: PathLike) -> np.ndarray:
    if len(payload) % _PAYLOAD_DTYPE.itemsize:
        raise FormatError(f"{path}: payload is not a whole number of float32 pairs")
    count = len(payload) // _PAYLOAD_DTYPE.itemsize
    if count != expected:
        raise DimensionError(f"{path}: header declares {expected} samples, payload holds {count}")
    values = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).astype(np.complex64)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: payload contains NaN or Inf")
    return values


def _capture_header(c: MeasurementCapture) -> Dict[str, Any]:
    return {
        "config": c.config.model_dump(mode="json"),
        "grid": c.grid.model_dump(mode="json"),
        "meta": c.meta.model_dump(mode="json"),
        "shape": list(c.h.shape),
    }


def _check_savable(c: MeasurementCapture) -> None:
    if c.h.ndim != 3 or 0 in c.h.shape:
        raise DimensionError(f"cannot save capture with tensor shape {c.h.shape}")
    if not np.all(np.isfinite(c.h)):
        raise DataError("capture contains NaN or Inf")


def _capture_from_header(header: Dict[str, Any], h: np.ndarray, path: PathLike) -> MeasurementCapture:
    try:
        cfg = SounderConfig.model_validate(header["config"])
        grid = BeamGrid.model_validate(header["grid"])
        meta = LocationMeta.model_validate(header["meta"])
        shape = tuple(int(s) for s in header["shape"])
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        raise FormatError(f"{path}: invalid metadata: {e}") from e
    expected = (*grid.shape, cfg.num_tones)
    if shape != expected:
        raise DimensionError(f"{path}: declared shape {shape} disagrees with grid/config {expected}")
    return MeasurementCapture(config=cfg, grid=grid, h=h.reshape(shape), meta=meta)


def _declared_count(header: Dict[str, Any], path: PathLike) -> int:
    try:
        return int(np.prod([int(s) for s in header["shape"]]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: metadata lacks a tensor shape") from e


def save_capture(c: MeasurementCapture, path: PathLike) -> None:
    """Write a capture file.

    The payload holds little-endian float32 (re, im) pairs in C order
    [tx][rx][tone]; nothing is written if the capture is invalid.

    Args:
        c: Capture to store
        path: Destination file

    Raises:
        DataError: tensor contains NaN or Inf
        DimensionError: tensor is empty
        SounderIOError: destination cannot be written
    """
    _check_savable(c)
    payload = np.ascontiguousarray(c.h).astype(_PAYLOAD_DTYPE).tobytes()
    atomic_write(path, _frame(CAPTURE_MAGIC, _capture_header(c), payload))
    logger.debug("saved capture %s shape=%s to %s", c.meta.location_id, c.h.shape, path)


def load_capture(path: PathLike) -> MeasurementCapture:
    """Read a capture file written by save_capture.

    Args:
        path: Capture file

    Returns:
        Capture with a complex64 tensor

    Raises:
        FormatError: bad magic, truncated or unparsable header
        DimensionError: payload size disagrees with the declared shape
        DataError: payload contains NaN or Inf
    """
    header, payload = _unframe(_read_bytes(path), CAPTURE_MAGIC, path)
    h = _decode_payload(payload, _declared_count(header, path), path)
    capture = _capture_from_header(header, h, path)
    logger.debug("loaded capture %s shape=%s", capture.meta.location_id, capture.h.shape)
    return capture


def save_calibration(cal: CalibrationProfile, path: PathLike) -> None:
    """Write a calibration file (MMWCAL01 framing)."""
    payload = cal.h_cal.astype(_PAYLOAD_DTYPE).tobytes()
    atomic_write(path, _frame(CALIBRATION_MAGIC, {"num_tones": cal.num_tones}, payload))


def load_calibration(path: PathLike) -> CalibrationProfile:
    """Read a calibration file.

    Raises:
        FormatError: malformed header
        DimensionError: payload length differs from num_tones
        ConditioningError: response too small for division
    """
    header, payload = _unframe(_read_bytes(path), CALIBRATION_MAGIC, path)
    try:
        num_tones = int(header["num_tones"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: calibration metadata lacks num_tones") from e
    return CalibrationProfile(h_cal=_decode_payload(payload, num_tones, path))


def is_capture_file(path: PathLike) -> bool:
    """True when the file starts with the binary capture magic."""
    try:
        with open(path, "rb") as f:
            return f.read(len(CAPTURE_MAGIC)) == CAPTURE_MAGIC
    except OSError as e:
        raise SounderIOError(f"cannot read {path}: {e}") from e


def dump_capture_text(c: MeasurementCapture, path: PathLike) -> None:
    """Write the human-readable debug form of a capture.

    One magic line, one metadata JSON line, then one "tx rx tone re im"
    line per sample. Nine significant digits keep float32 values exact.
    """
    _check_savable(c)
    h = c.h.astype(np.complex64)
    idx = np.indices(h.shape).reshape(3, -1).T
    flat = h.reshape(-1)
    table = np.column_stack([idx, flat.real.astype(np.float64), flat.imag.astype(np.float64)])

    buf = io.StringIO()
    buf.write(TEXT_MAGIC + "\n")
    buf.write(json.dumps(_capture_header(c), sort_keys=True) + "\n")
    np.savetxt(buf, table, fmt=["%d", "%d", "%d", "%.9g", "%.9g"])
    atomic_write(path, buf.getvalue().encode("utf-8"))


def parse_capture_text(path: PathLike) -> MeasurementCapture:
    """Read the debug text form written by dump_capture_text.

    Raises:
        FormatError: bad magic line, metadata or sample lines
        DimensionError: sample indices do not cover the declared shape
    """
    text = _read_bytes(path).decode("utf-8", errors="replace")
    lines = text.split("\n", 2)
    if len(lines) < 2 or lines[0].strip() != TEXT_MAGIC:
        raise FormatError(f"{path}: not a {TEXT_MAGIC} text capture")
    try:
        header = json.loads(lines[1])
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: metadata is not valid JSON: {e}") from e
    if not isinstance(header, dict):
        raise FormatError(f"{path}: metadata must be a JSON object")

    count = _declared_count(header, path)
    shape = tuple(int(s) for s in header["shape"])
    body = lines[2] if len(lines) > 2 else ""
    try:
        table = np.loadtxt(io.StringIO(body), dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise FormatError(f"{path}: malformed sample line: {e}") from e
    if table.size and table.shape[1] != 5:
        raise FormatError(f"{path}: sample lines need 5 columns")
    if table.shape[0] != count:
        raise DimensionError(f"{path}: header declares {count} samples, found {table.shape[0]}")

    idx = table[:, :3].astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= np.asarray(shape)):
        raise DimensionError(f"{path}: sample index outside the declared shape")
    flat = np.ravel_multi_index(tuple(idx.T), shape)
    if np.unique(flat).size != count:
        raise DimensionError(f"{path}: duplicate sample indices")

    h = np.empty(count, dtype=np.complex64)
    h.real[flat] = table[:, 3].astype(np.float32)
    h.imag[flat] = table[:, 4].astype(np.float32)
    if not np.all(np.isfinite(h)):
        raise DataError(f"{path}: samples contain NaN or Inf")
    return _capture_from_header(header, h, path)


def average_snapshots(snapshots: np.ndarray) -> np.ndarray:
    """Coherent mean of repeated sweeps.

    Args:
        snapshots: Complex array [repetition][tx][rx][tone]

    Returns:
        Averaged tensor [tx][rx][tone]

    Raises:
        DimensionError: not 4-D or no repetitions
    """
    snapshots = np.asarray(snapshots)
    if snapshots.ndim != 4 or snapshots.shape[0] == 0:
        raise DimensionError(f"expected [rep][tx][rx][tone] with >=1 repetition, got {snapshots.shape}")
    return snapshots.mean(axis=0)


def merge_sector_captures(sectors: Sequence[Tuple[float, MeasurementCapture]]) -> MeasurementCapture:
    """Merge per-orientation RX sector sweeps into one capture.

    Each sector angle is rotated and wrapped to (-180, 180]. An angle seen by
    two sectors must sit on both sector boundaries; the copy from the sector
    whose boresight is nearer wins, ties going to the lower rotation.

    Args:
        sectors: (rotation_deg, capture) pairs

    Returns:
        Capture with the merged RX grid

    Raises:
        GridError: bad rotations or sector RX angles outside [-45, 45]
        GridConflictError: sectors overlap away from their boundaries
        DimensionError: sectors disagree on TX grid or tone count
    """
    if not sectors:
        raise DimensionError("no sector captures to merge")
    rotations = [float(r) for r, _ in sectors]
    if len(set(wrap_angle_deg(r) for r in rotations)) != len(rotations):
        raise GridError(f"sector rotations must be distinct, got {rotations}")
    if any(abs(r / 90.0 - round(r / 90.0)) > 1e-9 for r in rotations):
        raise GridError(f"sector rotations must be multiples of 90 deg, got {rotations}")

    first = sectors[0][1]
    for _, cap in sectors:
        if cap.grid.tx_azimuths_deg != first.grid.tx_azimuths_deg:
            raise DimensionError("sector captures disagree on the TX grid")
        if cap.config != first.config:
            raise DimensionError("sector captures disagree on the sounder configuration")
        rx = np.asarray(cap.grid.rx_azimuths_deg)
        if np.any(np.abs(rx) > _SECTOR_HALF_WIDTH_DEG + 1e-9):
            raise GridError("sector RX azimuths must lie within [-45, 45]")

    # angle -> (boresight distance, rotation, sector index, rx index)
    chosen: Dict[float, Tuple[float, float, int, int]] = {}
    for s, (rot, cap) in enumerate(sectors):
        for j, rx in enumerate(cap.grid.rx_azimuths_deg):
            angle = round(wrap_angle_deg(rx + rot), 9)
            dist = abs(angle_diff_deg(angle, rot))
            cand = (dist, float(rot), s, j)
            if angle in chosen:
                other = chosen[angle]
                on_boundary = abs(abs(rx) - _SECTOR_HALF_WIDTH_DEG) < 1e-9
                prev_rx = sectors[other[2]][1].grid.rx_azimuths_deg[other[3]]
                if not (on_boundary and abs(abs(prev_rx) - _SECTOR_HALF_WIDTH_DEG) < 1e-9):
                    raise GridConflictError(f"sectors overlap at {angle} deg away from their boundaries")
                chosen[angle] = min(other, cand)
            else:
                chosen[angle] = cand

    angles: List[float] = sorted(chosen)
    h = np.empty((len(first.grid.tx_azimuths_deg), len(angles), first.config.num_tones),
                 dtype=np.result_type(*(cap.h.dtype for _, cap in sectors)))
    for k, angle in enumerate(angles):
        _, _, s, j = chosen[angle]
        h[:, k, :] = sectors[s][1].h[:, j, :]

    grid = BeamGrid(
        tx_azimuths_deg=first.grid.tx_azimuths_deg,
        rx_azimuths_deg=angles,
        elevation_deg=first.grid.elevation_deg,
        step_deg=first.grid.step_deg,
    )
    meta = first.meta.model_copy(update={"rx_orientation_set": tuple(sorted(rotations))})
    logger.debug("merged %d sectors into %d RX angles", len(sectors), len(angles))
    return MeasurementCapture(config=first.config, grid=grid, h=h, meta=meta)
