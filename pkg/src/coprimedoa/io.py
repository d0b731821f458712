"""File formats: binary complex matrix dumps, spectrum CSV, estimate JSON."""

from __future__ import annotations

import json
import struct
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import DimensionError
from .spectrum import DoaEstimate, SpectrumGrid, PSEUDO_FLOOR

_MAGIC = b"CPDA"

#: column order of the spectrum CSV
CSV_COLUMNS = ("theta", "h_ab", "h_ac", "h_bc", "h_combined", "pseudo_combined")


def dump_complex_matrix(path, label: str, matrix: np.ndarray) -> None:
    """Write a complex matrix as little-endian complex64 pairs, row-major.

    The header carries a magic tag, the label and the shape, so snapshot
    blocks and cumulant matrices share one container format.
    """
    matrix = np.ascontiguousarray(np.asarray(matrix, dtype=np.complex64))
    if matrix.ndim != 2:
        raise DimensionError("only 2-D matrices can be dumped")
    encoded = label.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<H", len(encoded)))
        fh.write(encoded)
        fh.write(struct.pack("<II", *matrix.shape))
        fh.write(matrix.astype("<c8").tobytes(order="C"))


def load_complex_matrix(path) -> Tuple[str, np.ndarray]:
    """Read back a matrix written by :func:`dump_complex_matrix`."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise DimensionError(f"{path}: not a complex-matrix dump")
        (label_len,) = struct.unpack("<H", fh.read(2))
        label = fh.read(label_len).decode("utf-8")
        rows, cols = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<c8")
    return label, data.reshape(rows, cols)


def dump_snapshots(path, label: str, snapshots: np.ndarray) -> None:
    """Dump one array's snapshot block (sensor-major)."""
    dump_complex_matrix(path, label, snapshots)


def load_snapshots(path) -> Tuple[str, np.ndarray]:
    return load_complex_matrix(path)


def write_spectrum_csv(path, spectrum: SpectrumGrid, method: str = "") -> None:
    """Write the spectrum grid with one row per DOA grid point.

    Pair columns missing from the spectrum are written as nan.  The
    ``h_combined``/``pseudo_combined`` columns always carry the operative
    (combined or sole) spectrum.  A comment line tags the producing method.
    """
    primary = spectrum.primary
    pseudo = spectrum.pseudo()
    columns: Dict[str, np.ndarray] = {
        "theta": spectrum.thetas,
        "h_combined": primary,
        "pseudo_combined": pseudo,
    }
    for key in ("ab", "ac", "bc"):
        vals = spectrum.null_values.get(key)
        columns[f"h_{key}"] = vals if vals is not None else np.full(spectrum.thetas.shape, np.nan)

    with open(path, "w", encoding="utf-8") as fh:
        if method:
            fh.write(f"# method={method}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(spectrum.thetas.size):
            fh.write(",".join(repr(float(columns[c][i])) for c in CSV_COLUMNS) + "\n")


def read_spectrum_csv(path) -> Dict[str, np.ndarray]:
    """Read a spectrum CSV back into a column dict (comment lines skipped)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return {name: data[:, i] for i, name in enumerate(header)}


def write_estimates_json(path, estimates: Sequence[DoaEstimate]) -> None:
    """Write DOA estimates as a JSON list of {theta, pseudo_height}."""
    payload: List[dict] = [
        {"theta": float(e.theta), "pseudo_height": float(e.pseudo_height)} for e in estimates
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_meta_json(path, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_jsonify)
        fh.write("\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")
