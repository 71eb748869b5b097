"""Lasso solutions over a penalty grid and path-entry extraction.

The path is discretized on a geometric grid (default 200 points spanning
three decades below the largest useful penalty).  A feature's entry value
is the largest grid penalty at which its coefficient is nonzero, i.e. a
grid-quantized version of the exact point where it would join the
continuous regularization path.

The solver is plain cyclic coordinate descent on the Gram formulation with
warm starts along the grid; columns are assumed unit-norm so each
coordinate update is an exact soft-threshold.  A numba-compiled kernel
carries the hot loop, with a pure-numpy mirror kept both as a fallback and
as an independent cross-check in the test suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, MaxIterations

CONVERGENCE_TOL = 1e-9
ACTIVE_EPS = 1e-9  # |coefficient| above this counts as "entered the path"
MAX_SWEEPS = 100_000
DEFAULT_GRID = (200, 1e-3)

try:  # pragma: no cover - exercised implicitly by which kernel runs
    if os.environ.get("KNOCKOFF_NO_NUMBA"):
        raise ImportError("numba disabled by KNOCKOFF_NO_NUMBA")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


@dataclass(frozen=True)
class LambdaGrid:
    """A strictly decreasing geometric penalty grid."""

    values: np.ndarray
    ratio: float
    count: int

    @classmethod
    def geometric(cls, lam_max: float, count: int, ratio: float) -> "LambdaGrid":
        if count < 2:
            raise ValueError("grid count must be at least 2")
        if not (0.0 < ratio < 1.0):
            raise ValueError("grid ratio must lie in (0, 1)")
        if lam_max <= 0.0:
            raise ValueError("lam_max must be positive")
        values = lam_max * ratio ** (np.arange(count) / (count - 1))
        values[0] = lam_max  # exact, not pow-rounded
        values = np.ascontiguousarray(values)
        values.flags.writeable = False
        return cls(values, ratio, count)


@dataclass(frozen=True)
class EntryProfile:
    """Entry penalties for each column of a design, on a fixed grid.

    ``z[j]`` is the largest grid value at which column j's coefficient is
    nonzero, or 0 if it never activates on the grid.
    """

    z: np.ndarray
    grid: LambdaGrid


def lambda_max(a: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which the Lasso solution is identically zero."""
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or a.shape[1] < 1:
        raise DimensionError(f"expected an n x m matrix with m >= 1, got shape {a.shape}")
    return float(np.max(np.abs(a.T @ y)))


@njit(cache=True, fastmath=True)
def _cd_path_kernel(gram, xty, lams, b0, tol, max_sweeps):  # pragma: no cover - jitted
    m = gram.shape[0]
    nlam = lams.shape[0]
    path = np.zeros((nlam, m))
    b = b0.copy()
    gb = gram @ b  # maintained incrementally from here on
    active = np.zeros(m, dtype=np.bool_)
    for li in range(nlam):
        lam = lams[li]
        sweeps = 0
        while True:
            # full cyclic sweep; also refreshes the active set
            max_delta = 0.0
            for j in range(m):
                cj = xty[j] - gb[j] + b[j]
                if cj > lam:
                    new = cj - lam
                elif cj < -lam:
                    new = cj + lam
                else:
                    new = 0.0
                d = new - b[j]
                if d != 0.0:
                    row = gram[j]
                    for i in range(m):
                        gb[i] += row[i] * d
                    b[j] = new
                    if abs(d) > max_delta:
                        max_delta = abs(d)
                active[j] = b[j] != 0.0
            sweeps += 1
            if max_delta < tol:
                break
            if sweeps > max_sweeps:
                return path, -1
            # cheap sweeps over the current active set until it stabilizes
            while True:
                amax = 0.0
                for j in range(m):
                    if not active[j]:
                        continue
                    cj = xty[j] - gb[j] + b[j]
                    if cj > lam:
                        new = cj - lam
                    elif cj < -lam:
                        new = cj + lam
                    else:
                        new = 0.0
                    d = new - b[j]
                    if d != 0.0:
                        row = gram[j]
                        for i in range(m):
                            gb[i] += row[i] * d
                        b[j] = new
                        if abs(d) > amax:
                            amax = abs(d)
                sweeps += 1
                if amax < tol:
                    break
                if sweeps > max_sweeps:
                    return path, -1
        path[li] = b
    return path, 0


def _cd_path_python(gram, xty, lams, b0, tol, max_sweeps, sweep_objectives=None, yty=0.0):
    """Pure-numpy mirror of the kernel; can record the objective per sweep."""
    m = gram.shape[0]
    path = np.zeros((len(lams), m))
    b = b0.copy()
    gb = gram @ b

    def objective(lam):
        return 0.5 * (yty - 2.0 * b @ xty + b @ gb) + lam * np.sum(np.abs(b))

    def sweep(lam, indices):
        worst = 0.0
        for j in indices:
            cj = xty[j] - gb[j] + b[j]
            new = np.sign(cj) * max(abs(cj) - lam, 0.0)
            d = new - b[j]
            if d != 0.0:
                gb[:] += gram[j] * d
                b[j] = new
                worst = max(worst, abs(d))
        return worst

    everything = range(m)
    for li, lam in enumerate(lams):
        sweeps = 0
        while True:
            max_delta = sweep(lam, everything)
            sweeps += 1
            if sweep_objectives is not None:
                sweep_objectives.append(objective(lam))
            if max_delta < tol:
                break
            if sweeps > max_sweeps:
                return path, -1
            while True:
                act = np.flatnonzero(b)
                amax = sweep(lam, act)
                sweeps += 1
                if sweep_objectives is not None:
                    sweep_objectives.append(objective(lam))
                if amax < tol:
                    break
                if sweeps > max_sweeps:
                    return path, -1
            if sweeps > max_sweeps:
                return path, -1
        path[li] = b
    return path, 0


def _run_path(gram, xty, lams, warm, tol, max_sweeps, sweep_objectives=None, yty=0.0):
    gram = np.ascontiguousarray(gram, dtype=float)
    xty = np.ascontiguousarray(xty, dtype=float)
    lams = np.ascontiguousarray(lams, dtype=float)
    b0 = np.zeros(gram.shape[0]) if warm is None else np.asarray(warm, dtype=float).copy()
    if b0.shape != xty.shape:
        raise DimensionError("warm start length does not match the column count")
    if _HAVE_NUMBA and sweep_objectives is None:
        path, status = _cd_path_kernel(gram, xty, lams, b0, tol, max_sweeps)
    else:
        path, status = _cd_path_python(
            gram, xty, lams, b0, tol, max_sweeps, sweep_objectives, yty
        )
    if status != 0:
        raise MaxIterations(f"coordinate descent did not converge in {max_sweeps} sweeps")
    return path


def lasso_solve(
    a: np.ndarray,
    y: np.ndarray,
    lam: float,
    warm: np.ndarray | None = None,
    *,
    tol: float = CONVERGENCE_TOL,
    max_sweeps: int = MAX_SWEEPS,
    sweep_objectives: list[float] | None = None,
) -> np.ndarray:
    """Minimize ``0.5*||y - A b||^2 + lam*||b||_1`` for unit-norm columns.

    Converged when the largest coefficient change in a full cyclic sweep
    drops below ``tol``.  If ``sweep_objectives`` is a list, the objective
    value after every sweep is appended to it (this forces the pure-python
    code path, which is slower but instrumentable).
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    gram = a.T @ a
    xty = a.T @ y
    path = _run_path(
        gram,
        xty,
        np.array([lam]),
        warm,
        tol,
        max_sweeps,
        sweep_objectives,
        yty=float(y @ y),
    )
    return path[0]


def entry_values(
    a: np.ndarray,
    y: np.ndarray,
    grid_spec: tuple[int, float] = DEFAULT_GRID,
    *,
    tol: float = CONVERGENCE_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> EntryProfile:
    """Entry penalty of every column of ``a`` along a geometric grid.

    The grid runs from ``lambda_max(a, y)`` down to ``ratio`` times it,
    swept large-to-small with warm starts.  A zero response yields an
    all-zero profile.
    """
    count, ratio = grid_spec
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    m = a.shape[1]
    lam_top = lambda_max(a, y)
    if lam_top <= 0.0:
        grid = LambdaGrid.geometric(1.0, count, ratio)
        z = np.zeros(m)
        z.flags.writeable = False
        return EntryProfile(z, grid)
    grid = LambdaGrid.geometric(lam_top, count, ratio)
    path = _run_path(a.T @ a, a.T @ y, grid.values, None, tol, max_sweeps)
    entered = np.abs(path) > ACTIVE_EPS
    z = np.zeros(m)
    any_entry = entered.any(axis=0)
    first = np.argmax(entered, axis=0)
    z[any_entry] = grid.values[first[any_entry]]

    # exactly identical columns cannot be ordered by the path (only their
    # combined coefficient is well defined), so they share one entry value;
    # downstream statistics then see a tie and assign W = 0
    groups: dict[bytes, list[int]] = {}
    for j in range(m):
        groups.setdefault(a[:, j].tobytes(), []).append(j)
    for cols in groups.values():
        if len(cols) > 1:
            z[cols] = z[cols].max()

    z.flags.writeable = False
    return EntryProfile(z, grid)
