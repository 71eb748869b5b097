"""Antisymmetric per-feature statistics W computed from an augmented design.

Every statistic here is a function of the augmented Gram matrix and the
feature-response inner products only, and flips the sign of W_j when the
original column j and its knockoff are swapped.  Large positive W_j is
evidence that feature j carries real signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .construction import AugmentedDesign
from .errors import DimensionError, SingularAugmentedGram
from .lasso import DEFAULT_GRID, EntryProfile, entry_values, lasso_solve


class StatisticKind(Enum):
    LASSO_SIGNED_MAX = "lasso-signed-max"
    LASSO_DIFFERENCE = "lasso-diff"
    INNER_PRODUCT_DIFF = "ip-diff"
    ABS_INNER_PRODUCT_DIFF = "abs-ip-diff"
    LEAST_SQUARES_ABS_DIFF = "ls-abs-diff"
    FIXED_PENALTY_DIFF = "fixed-penalty-diff"


@dataclass(frozen=True)
class WVector:
    w: np.ndarray
    kind: StatisticKind


def _frozen(w: np.ndarray, kind: StatisticKind) -> WVector:
    w = np.ascontiguousarray(w, dtype=float)
    w.flags.writeable = False
    return WVector(w, kind)


def _split(profile: EntryProfile) -> tuple[np.ndarray, np.ndarray]:
    z = profile.z
    if z.size % 2 != 0:
        raise DimensionError(f"entry profile length {z.size} is not even")
    p = z.size // 2
    return z[:p], z[p:]


def w_from_entries(profile: EntryProfile) -> WVector:
    """Signed-max statistic: W_j = max(Z_j, Zt_j) with the sign of the winner.

    Exact ties give W_j = 0, so such features can never be selected.
    """
    z, zt = _split(profile)
    w = np.maximum(z, zt) * np.sign(z - zt)
    return _frozen(w, StatisticKind.LASSO_SIGNED_MAX)


def w_entry_difference(profile: EntryProfile) -> WVector:
    """Difference statistic W_j = Z_j - Zt_j."""
    z, zt = _split(profile)
    return _frozen(z - zt, StatisticKind.LASSO_DIFFERENCE)


def _w_inner_product_matrix(aug_matrix: np.ndarray, y: np.ndarray, absolute: bool) -> np.ndarray:
    m = aug_matrix.shape[1]
    p = m // 2
    xy = aug_matrix.T @ y
    if absolute:
        return np.abs(xy[:p]) - np.abs(xy[p:])
    return xy[:p] - xy[p:]


def w_inner_product(aug: AugmentedDesign, y: np.ndarray, absolute: bool = True) -> WVector:
    """W from marginal correlations: X_j'y - Xt_j'y, optionally in magnitude."""
    w = _w_inner_product_matrix(aug.augmented_matrix(), np.asarray(y, dtype=float), absolute)
    kind = StatisticKind.ABS_INNER_PRODUCT_DIFF if absolute else StatisticKind.INNER_PRODUCT_DIFF
    return _frozen(w, kind)


def _w_least_squares_matrix(aug_matrix: np.ndarray, y: np.ndarray, squared: bool) -> np.ndarray:
    m = aug_matrix.shape[1]
    p = m // 2
    gram = aug_matrix.T @ aug_matrix
    if np.linalg.cond(gram) > 1e12:
        raise SingularAugmentedGram("augmented Gram condition number exceeds 1e12")
    beta = np.linalg.solve(gram, aug_matrix.T @ y)
    mag = beta**2 if squared else np.abs(beta)
    return mag[:p] - mag[p:]


def w_least_squares(aug: AugmentedDesign, y: np.ndarray, squared: bool = False) -> WVector:
    """W from the least-squares fit on [X Xt]: |b_j| - |b_{j+p}| (or squared)."""
    w = _w_least_squares_matrix(aug.augmented_matrix(), np.asarray(y, dtype=float), squared)
    return _frozen(w, StatisticKind.LEAST_SQUARES_ABS_DIFF)


def _w_fixed_penalty_matrix(aug_matrix: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    m = aug_matrix.shape[1]
    p = m // 2
    b = lasso_solve(aug_matrix, y, lam)
    return np.abs(b[:p]) - np.abs(b[p:])


def w_fixed_penalty(aug: AugmentedDesign, y: np.ndarray, lam: float) -> WVector:
    """W from Lasso coefficients at one fixed penalty: |b_j(lam)| - |b_{j+p}(lam)|.

    There is no principled default for ``lam``; it must be supplied.
    """
    w = _w_fixed_penalty_matrix(aug.augmented_matrix(), np.asarray(y, dtype=float), lam)
    return _frozen(w, StatisticKind.FIXED_PENALTY_DIFF)


def statistic_from_matrix(
    kind: StatisticKind,
    aug_matrix: np.ndarray,
    y: np.ndarray,
    grid_spec: tuple[int, float],
    lam: float | None,
) -> np.ndarray:
    if kind is StatisticKind.LASSO_SIGNED_MAX:
        return w_from_entries(entry_values(aug_matrix, y, grid_spec)).w
    if kind is StatisticKind.LASSO_DIFFERENCE:
        return w_entry_difference(entry_values(aug_matrix, y, grid_spec)).w
    if kind is StatisticKind.INNER_PRODUCT_DIFF:
        return _w_inner_product_matrix(aug_matrix, y, absolute=False)
    if kind is StatisticKind.ABS_INNER_PRODUCT_DIFF:
        return _w_inner_product_matrix(aug_matrix, y, absolute=True)
    if kind is StatisticKind.LEAST_SQUARES_ABS_DIFF:
        return _w_least_squares_matrix(aug_matrix, y, squared=False)
    if kind is StatisticKind.FIXED_PENALTY_DIFF:
        if lam is None:
            raise ValueError("the fixed-penalty statistic requires an explicit lam")
        return _w_fixed_penalty_matrix(aug_matrix, y, lam)
    raise ValueError(f"unknown statistic kind {kind!r}")


def compute_statistic(
    kind: StatisticKind | str,
    aug: AugmentedDesign,
    y: np.ndarray,
    grid_spec: tuple[int, float] = DEFAULT_GRID,
    lam: float | None = None,
) -> WVector:
    """Dispatch on the statistic kind (enum value or its CLI name)."""
    if isinstance(kind, str):
        kind = StatisticKind(kind)
    w = statistic_from_matrix(kind, aug.augmented_matrix(), np.asarray(y, dtype=float), grid_spec, lam)
    return _frozen(w, kind)


def swap_columns(aug_matrix: np.ndarray, swap: np.ndarray) -> np.ndarray:
    """Exchange column j and column j+p for every j in ``swap``."""
    m = aug_matrix.shape[1]
    p = m // 2
    out = aug_matrix.copy()
    swap = np.asarray(swap, dtype=int)
    out[:, swap], out[:, swap + p] = aug_matrix[:, swap + p], aug_matrix[:, swap]
    return out


def check_antisymmetry(
    kind: StatisticKind | str,
    aug: AugmentedDesign,
    y: np.ndarray,
    swap: np.ndarray,
    grid_spec: tuple[int, float] = DEFAULT_GRID,
    lam: float | None = None,
) -> float:
    """Max deviation from sign-flip behaviour under an original/knockoff swap.

    Recomputes W on the column-swapped augmented matrix and returns
    ``max_j |W_swapped_j - eps_j * W_j|`` where eps is -1 on the swapped
    indices and +1 elsewhere.  Exactly antisymmetric statistics give 0 up
    to floating-point noise; the grid-based ones additionally carry solver
    noise on the order of the convergence tolerance.
    """
    if isinstance(kind, str):
        kind = StatisticKind(kind)
    y = np.asarray(y, dtype=float)
    matrix = aug.augmented_matrix()
    w_base = statistic_from_matrix(kind, matrix, y, grid_spec, lam)
    w_swap = statistic_from_matrix(kind, swap_columns(matrix, swap), y, grid_spec, lam)
    eps = np.ones(w_base.size)
    eps[np.asarray(swap, dtype=int)] = -1.0
    return float(np.max(np.abs(w_swap - eps * w_base), initial=0.0))
