"""CSV ingestion for external regression datasets.

The design file must carry a header row of feature names followed by
numeric rows; the response file is a single numeric column (an optional
non-numeric first line is treated as its header).  Columns that are
identically zero or exact duplicates of an earlier column are dropped and
reported, since they would make the Gram matrix singular; anything beyond
that (e.g. collinear combinations) still raises ``SingularGram`` from the
normalization step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .construction import DesignMatrix, normalize_design
from .errors import ParseError, ShapeMismatch, TooManyFeatures


@dataclass(frozen=True)
class LoadReport:
    """What survived ingestion: kept feature names and dropped (name, reason)."""

    feature_names: tuple[str, ...]
    dropped: tuple[tuple[str, str], ...]


def _read_design(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ShapeMismatch(f"{path}: empty design file")
    header = [cell.strip() for cell in rows[0]]
    width = len(header)
    data = np.empty((len(rows) - 1, width))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ShapeMismatch(
                f"{path}: line {i} has {len(row)} cells, header has {width}"
            )
        for j, cell in enumerate(row):
            try:
                data[i - 2, j] = float(cell)
            except ValueError:
                raise ParseError(i, j + 1, cell.strip()) from None
    return header, data


def _read_response(path) -> np.ndarray:
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader, start=1):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 1:
                raise ShapeMismatch(f"{path}: line {i} has {len(row)} columns, expected 1")
            cell = row[0].strip()
            try:
                values.append(float(cell))
            except ValueError:
                if i == 1 and not values:  # header line
                    continue
                raise ParseError(i, 1, cell) from None
    return np.array(values)


def load_dataset(
    design_path, response_path, center: bool = False
) -> tuple[DesignMatrix, np.ndarray, LoadReport]:
    """Parse, clean, and normalize an external (design, response) pair.

    With ``center=True`` the response and every design column are centered
    before normalization (the package has no intercept handling; centering
    is the caller's substitute for one).

    Raises
    ------
    ParseError
        On any non-numeric cell (with its 1-based line and column).
    ShapeMismatch
        If the response length differs from the design row count.
    TooManyFeatures
        If more features than observations remain after dropping columns.
    """
    header, data = _read_design(design_path)
    y = _read_response(response_path)
    if y.size != data.shape[0]:
        raise ShapeMismatch(
            f"response has {y.size} rows, design has {data.shape[0]}"
        )
    if center:
        data = data - data.mean(axis=0)
        y = y - y.mean()

    dropped: list[tuple[str, str]] = []
    keep: list[int] = []
    seen: dict[bytes, str] = {}
    for j, name in enumerate(header):
        col = data[:, j]
        if np.max(np.abs(col), initial=0.0) < 1e-12:
            dropped.append((name, "all-zero"))
            continue
        key = col.tobytes()
        if key in seen:
            dropped.append((name, f"duplicate of {seen[key]}"))
            continue
        seen[key] = name
        keep.append(j)

    if len(keep) > data.shape[0]:
        raise TooManyFeatures(
            f"{len(keep)} features exceed {data.shape[0]} observations"
        )
    design = normalize_design(data[:, keep])
    report = LoadReport(tuple(header[j] for j in keep), tuple(dropped))
    return design, y, report
