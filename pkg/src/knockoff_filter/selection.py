"""Data-dependent thresholding of W statistics.

The threshold scans the distinct nonzero |W_j| values and stops at the
smallest t whose estimated false discovery proportion

    (offset + #{j: W_j <= -t}) / max(#{j: W_j >= t}, 1)

drops to the target q, with offset 1 for the conservative ("plus")
variant and 0 otherwise.  Selected features are those with W_j >= t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stats import WVector

# |W| values this close (relatively) are treated as one threshold candidate
TIE_REL_TOL = 1e-12


def _w_array(w: WVector | np.ndarray) -> np.ndarray:
    if isinstance(w, WVector):
        return w.w
    return np.asarray(w, dtype=float)


@dataclass(frozen=True)
class SelectionResult:
    """Threshold, selected index set, and the FDP estimate at the threshold."""

    threshold: float
    selected: np.ndarray
    fdp_estimate_at_threshold: float
    plus: bool
    q: float

    @property
    def n_selected(self) -> int:
        return int(self.selected.size)


def fdp_hat(w: WVector | np.ndarray, t: float, plus: bool = False) -> float:
    """Knockoff estimate of the false discovery proportion at threshold t."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    w = _w_array(w)
    offset = 1 if plus else 0
    numer = offset + int(np.sum(w <= -t))
    denom = max(int(np.sum(w >= t)), 1)
    return numer / denom


def merge_close(values: np.ndarray, rel_tol: float = TIE_REL_TOL) -> np.ndarray:
    """Collapse an ascending array into group minima, merging near-duplicates.

    Adjacent values within ``rel_tol`` (relative) of each other join the
    same group; each group is represented by its smallest member so that
    every member still counts as >= the candidate.
    """
    if values.size == 0:
        return values
    out = [values[0]]
    for v in values[1:]:
        if not math.isclose(v, out[-1], rel_tol=rel_tol, abs_tol=0.0):
            out.append(v)
    return np.array(out)


def candidate_thresholds(w: WVector | np.ndarray) -> np.ndarray:
    """Distinct nonzero |W_j| values, ascending, near-duplicates merged."""
    magnitudes = np.abs(_w_array(w))
    magnitudes = np.unique(magnitudes[magnitudes > 0])
    return merge_close(magnitudes)


def threshold(w: WVector | np.ndarray, q: float, plus: bool = False) -> SelectionResult:
    """Select features by the knockoff (or knockoff+) data-dependent threshold.

    Returns threshold +inf and an empty selection when no candidate
    achieves an estimated FDP of at most q.
    """
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must lie in [0, 1], got {q}")
    arr = _w_array(w)
    for t in candidate_thresholds(arr):
        estimate = fdp_hat(arr, t, plus)
        if estimate <= q:
            selected = np.flatnonzero(arr >= t)
            return SelectionResult(float(t), selected, estimate, plus, q)
    return SelectionResult(math.inf, np.array([], dtype=int), 0.0, plus, q)


def write_selection_csv(
    path,
    w: WVector | np.ndarray,
    result: SelectionResult,
    extra_metadata: dict | None = None,
) -> None:
    """Write one row per feature: index, w_value, selected (0/1).

    The threshold and q (and any extra metadata) go into '#'-prefixed
    comment lines before the header.
    """
    arr = _w_array(w)
    chosen = np.zeros(arr.size, dtype=int)
    chosen[result.selected] = 1
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# threshold={result.threshold}\n")
        fh.write(f"# q={result.q}\n")
        fh.write(f"# plus={int(result.plus)}\n")
        for key, value in (extra_metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("index,w_value,selected\n")
        for j in range(arr.size):
            fh.write(f"{j},{arr[j]:.17g},{chosen[j]}\n")
