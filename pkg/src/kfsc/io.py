"""File formats: matrix ingestion (CSV and raw binary), model persistence,
and label files.

Binary matrix format ("KFSCMAT1"): 8-byte magic, u32 little-endian m and n,
then m*n column-major little-endian float64 values.  NaN entries count as
missing and populate the mask.

Model format ("KFSCMDL1"): 8-byte magic, u32 little-endian m, k, d, float64
little-endian lambda and ridge, then k*m*d little-endian float64 dictionary
entries in block-major, column-major-within-block order.  Round-trips are
bit-exact.

CSV: one sample per row by default (transposed on load); empty fields or
"nan" mark missing entries and populate the mask.
"""

from __future__ import annotations

import struct

import numpy as np

from .exceptions import HeaderMismatchError, ParseError, ShapeMismatchError
from .types import DataMatrix, Dictionary

MATRIX_MAGIC = b"KFSCMAT1"
MODEL_MAGIC = b"KFSCMDL1"

_MATRIX_HEADER = struct.Struct("<8sII")
_MODEL_HEADER = struct.Struct("<8sIIIdd")

_FORMATS = {
    "csv-rows": "csv-rows",
    "csv-cols": "csv-cols",
    "binary": "binary",
    "csv_rows_are_samples": "csv-rows",
    "csv_cols_are_samples": "csv-cols",
    "f64le_binary": "binary",
}


def _canonical_format(fmt: str) -> str:
    try:
        return _FORMATS[fmt]
    except KeyError:
        raise ValueError(f"unknown matrix format {fmt!r}") from None


def _parse_csv(path: str):
    values_rows = []
    mask_rows = []
    width = None
    any_missing = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip() == "" and width is None:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(
                    lineno, min(len(fields), width) + 1,
                    f"expected {width} fields, got {len(fields)}",
                )
            vrow = np.zeros(width)
            mrow = np.ones(width)
            for col, field in enumerate(fields, start=1):
                text = field.strip()
                if text == "" or text.lower() == "nan":
                    vrow[col - 1] = 0.0
                    mrow[col - 1] = 0.0
                    any_missing = True
                    continue
                try:
                    vrow[col - 1] = float(text)
                except ValueError:
                    raise ParseError(lineno, col, f"cannot parse {text!r} as a number") from None
            values_rows.append(vrow)
            mask_rows.append(mrow)
    if not values_rows:
        raise ParseError(1, 1, "file contains no data rows")
    values = np.array(values_rows)
    mask = np.array(mask_rows) if any_missing else None
    return values, mask


def _read_binary(path: str):
    with open(path, "rb") as fh:
        header = fh.read(_MATRIX_HEADER.size)
        if len(header) != _MATRIX_HEADER.size:
            raise HeaderMismatchError("file too short for a matrix header")
        magic, m, n = _MATRIX_HEADER.unpack(header)
        if magic != MATRIX_MAGIC:
            raise HeaderMismatchError(f"bad magic {magic!r}")
        payload = fh.read()
    expected = 8 * m * n
    if len(payload) != expected:
        raise HeaderMismatchError(
            f"payload is {len(payload)} bytes, expected {expected} for {m}x{n}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape((m, n), order="F").copy()
    missing = np.isnan(values)
    if missing.any():
        mask = (~missing).astype(np.float64)
        values = np.where(missing, 0.0, values)
        return values, mask
    return values, None


def load_matrix(path: str, fmt: str = "csv-rows") -> DataMatrix:
    """Read a data matrix; the result always has samples as columns."""
    fmt = _canonical_format(fmt)
    if fmt == "binary":
        values, mask = _read_binary(path)
    else:
        values, mask = _parse_csv(path)
        if fmt == "csv-rows":
            values = values.T
            mask = mask.T if mask is not None else None
    return DataMatrix(values, mask=mask)


def save_matrix(X: DataMatrix, path: str, fmt: str = "binary") -> None:
    """Write a data matrix; missing entries are stored as NaN (empty in CSV)."""
    fmt = _canonical_format(fmt)
    values = X.values
    if X.mask is not None:
        values = np.where(X.mask == 1.0, values, np.nan)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MATRIX_HEADER.pack(MATRIX_MAGIC, X.m, X.n))
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes(order="F"))
        return
    out = values if fmt == "csv-cols" else values.T
    with open(path, "w", encoding="utf-8") as fh:
        for row in out:
            fh.write(",".join("" if np.isnan(v) else repr(float(v)) for v in row))
            fh.write("\n")


def save_model(path: str, D: Dictionary, lam: float, ridge: float) -> None:
    """Persist a dictionary with its regularization constants."""
    with open(path, "wb") as fh:
        fh.write(_MODEL_HEADER.pack(MODEL_MAGIC, D.m, D.k, D.d, float(lam), float(ridge)))
        for j in range(D.k):
            fh.write(np.ascontiguousarray(D.block(j), dtype="<f8").tobytes(order="F"))


def load_model(path: str):
    """Read a model file; returns ``(dictionary, lam, ridge)``."""
    with open(path, "rb") as fh:
        header = fh.read(_MODEL_HEADER.size)
        if len(header) != _MODEL_HEADER.size:
            raise HeaderMismatchError("file too short for a model header")
        magic, m, k, d, lam, ridge = _MODEL_HEADER.unpack(header)
        if magic != MODEL_MAGIC:
            raise HeaderMismatchError(f"bad magic {magic!r}")
        payload = fh.read()
    expected = 8 * k * m * d
    if len(payload) != expected:
        raise HeaderMismatchError(
            f"payload is {len(payload)} bytes, expected {expected} for k={k}, m={m}, d={d}"
        )
    flat = np.frombuffer(payload, dtype="<f8")
    blocks = [
        flat[j * m * d : (j + 1) * m * d].reshape((m, d), order="F") for j in range(k)
    ]
    return Dictionary.from_blocks(blocks), float(lam), float(ridge)


def write_labels(path: str, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for value in np.asarray(labels).ravel():
            fh.write(f"{int(value)}\n")


def read_labels(path: str) -> np.ndarray:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                out.append(int(text))
            except ValueError:
                raise ParseError(lineno, 1, f"cannot parse {text!r} as an integer") from None
    if not out:
        raise ParseError(1, 1, "label file is empty")
    return np.asarray(out, dtype=np.int64)
