"""Construction of knockoff copies of a fixed design matrix.

The knockoff block ``Xt`` is built so that the 2p-column augmented design
``[X Xt]`` has Gram matrix

    [[Sigma, Sigma - diag(s)],
     [Sigma - diag(s), Sigma]]

for a nonnegative gap vector ``s`` with ``diag(s) <= 2*Sigma`` in the
semidefinite order.  Two gap choices are provided: the equicorrelated one
(all gaps equal to ``min(2*lambda_min, 1)``) and the SDP one that maximizes
``sum(s)`` over the feasible box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateResiduals,
    DimensionError,
    InfeasibleGap,
    SingularGram,
    SolverDiverged,
    ZeroColumn,
)

log = logging.getLogger(__name__)

# eigenvalues of Sigma below this are treated as exact singularity
SINGULAR_EIG = 1e-10
# feasibility slack for 2*Sigma - diag(s)
PSD_SLACK = 1e-8


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DesignMatrix:
    """A unit-column-norm design together with its Gram matrix.

    Attributes
    ----------
    values : (n, p) ndarray
        The design with every column scaled to Euclidean norm 1.
    gram : (p, p) ndarray
        ``values.T @ values`` (symmetric, unit diagonal, positive definite).
    column_norms_original : (p,) ndarray
        The column norms of the raw input, recorded before scaling.
    """

    values: np.ndarray
    gram: np.ndarray
    column_norms_original: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


class GapKind(Enum):
    EQUICORRELATED = "equi"
    SDP = "sdp"
    PARTIAL_DUPLICATE = "partial-duplicate"


@dataclass(frozen=True)
class GapVector:
    """Per-feature decorrelation amounts ``s`` with their provenance."""

    s: np.ndarray
    kind: GapKind


@dataclass(frozen=True)
class AugmentedDesign:
    """An original design, its knockoff block, and the gap that ties them."""

    original: DesignMatrix
    knockoffs: np.ndarray
    gap: GapVector
    seed: int

    def augmented_matrix(self) -> np.ndarray:
        """The n x 2p concatenation [X Xt]."""
        return np.hstack([self.original.values, self.knockoffs])

    def gram_deviations(self) -> tuple[float, float]:
        """Max entrywise errors of (Xt'Xt - Sigma, X'Xt - (Sigma - diag(s)))."""
        X = self.original.values
        Xt = self.knockoffs
        sigma = self.original.gram
        d1 = np.max(np.abs(Xt.T @ Xt - sigma))
        d2 = np.max(np.abs(X.T @ Xt - (sigma - np.diag(self.gap.s))))
        return float(d1), float(d2)


def normalize_design(raw: np.ndarray) -> DesignMatrix:
    """Scale each column of ``raw`` to unit norm and cache the Gram matrix.

    Raises
    ------
    ZeroColumn
        If a column has norm below 1e-12.
    SingularGram
        If the Gram matrix of the scaled design has an eigenvalue below 1e-10.
    DimensionError
        If the input is not an n x p matrix with n >= p >= 1.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise DimensionError(f"expected a 2-d design, got shape {raw.shape}")
    n, p = raw.shape
    if p < 1 or n < p:
        raise DimensionError(f"need n >= p >= 1, got n={n}, p={p}")
    norms = np.linalg.norm(raw, axis=0)
    small = np.flatnonzero(norms < 1e-12)
    if small.size:
        raise ZeroColumn(int(small[0]))
    values = raw / norms
    gram = values.T @ values
    gram = 0.5 * (gram + gram.T)
    if np.linalg.eigvalsh(gram)[0] < SINGULAR_EIG:
        raise SingularGram("smallest Gram eigenvalue below 1e-10")
    return DesignMatrix(_freeze(values), _freeze(gram), _freeze(norms))


def _check_sigma(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionError(f"Sigma must be square, got shape {sigma.shape}")
    if np.max(np.abs(sigma - sigma.T)) > 1e-10:
        raise DimensionError("Sigma must be symmetric")
    if np.max(np.abs(np.diag(sigma) - 1.0)) > 1e-8:
        raise DimensionError("Sigma must have unit diagonal")
    return 0.5 * (sigma + sigma.T)


def equicorrelated_s(sigma: np.ndarray) -> GapVector:
    """Gap vector ``s_j = min(2*lambda_min(Sigma), 1)`` for all j."""
    sigma = _check_sigma(sigma)
    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    if lam_min < SINGULAR_EIG:
        raise SingularGram("smallest Gram eigenvalue below 1e-10")
    s = np.full(sigma.shape[0], min(2.0 * lam_min, 1.0))
    return GapVector(_freeze(s), GapKind.EQUICORRELATED)


def _feasibility_shrink(sigma: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Largest gamma <= 1 (to 1e-10) making 2*Sigma - diag(gamma*s) PSD."""

    def lam_min(gamma: float) -> float:
        return float(np.linalg.eigvalsh(2.0 * sigma - np.diag(gamma * s))[0])

    if lam_min(1.0) >= 0.0:
        return s
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if lam_min(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo * s


def sdp_s(sigma: np.ndarray, tol: float = 1e-8) -> GapVector:
    """Gap vector maximizing ``sum(s)`` over ``0 <= s <= 1``, ``diag(s) <= 2*Sigma``.

    Solved with a log-det barrier interior-point method: minimize
    ``-t*sum(s) - log det(2*Sigma - diag(s)) - sum(log s) - sum(log(1-s))``
    by damped Newton steps, multiplying the barrier parameter ``t`` by 10
    per outer round until ``p/t < tol``.  The returned point is made exactly
    feasible by a final shrink step (bisection on the smallest eigenvalue),
    so it is always safe to hand to :func:`construct_knockoffs`.

    Raises
    ------
    SolverDiverged
        If Newton iterations stop making progress; callers are expected to
        fall back to :func:`equicorrelated_s` and log the substitution.
    """
    sigma = _check_sigma(sigma)
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = sigma.shape[0]
    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    if lam_min < SINGULAR_EIG:
        raise SingularGram("smallest Gram eigenvalue below 1e-10")

    # strictly feasible start just inside the equicorrelated point
    s = np.full(p, min(0.99 * 2.0 * lam_min, 1.0 - 1e-6))
    two_sigma = 2.0 * sigma

    def strictly_feasible(v: np.ndarray) -> bool:
        if np.any(v <= 0.0) or np.any(v >= 1.0):
            return False
        try:
            np.linalg.cholesky(two_sigma - np.diag(v))
        except np.linalg.LinAlgError:
            return False
        return True

    if not strictly_feasible(s):
        raise SolverDiverged("could not find a strictly feasible start")

    def barrier_value(v: np.ndarray, t: float) -> float:
        sign, logdet = np.linalg.slogdet(two_sigma - np.diag(v))
        if sign <= 0:
            return math.inf
        return -t * float(np.sum(v)) - logdet - float(np.sum(np.log(v))) - float(
            np.sum(np.log1p(-v))
        )

    t = 1.0
    while True:
        # Newton centering at the current barrier parameter
        for _ in range(200):
            m_inv = np.linalg.inv(two_sigma - np.diag(s))
            grad = -t + np.diag(m_inv) - 1.0 / s + 1.0 / (1.0 - s)
            hess = m_inv * m_inv + np.diag(1.0 / s**2 + 1.0 / (1.0 - s) ** 2)
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError as exc:
                raise SolverDiverged("singular Newton system") from exc
            decrement_sq = float(-grad @ step)
            if decrement_sq < 0:  # numerics: Hessian lost definiteness
                raise SolverDiverged("indefinite Newton system")
            if decrement_sq / 2.0 <= 1e-11:
                break
            f0 = barrier_value(s, t)
            alpha = 1.0
            while alpha > 1e-14:
                cand = s + alpha * step
                if strictly_feasible(cand) and barrier_value(cand, t) <= f0 - 1e-4 * alpha * decrement_sq:
                    break
                alpha *= 0.5
            if alpha <= 1e-14:
                break  # stalled at this centering accuracy; the outer loop decides
            s = s + alpha * step
        if p / t < tol:
            break
        t *= 10.0

    s = np.clip(s, 0.0, 1.0)
    s = _feasibility_shrink(sigma, s)
    return GapVector(_freeze(s), GapKind.SDP)


def _orthonormal_complement(X: np.ndarray, ncols: int, seed: int) -> np.ndarray:
    """Seeded orthonormal n x ncols block orthogonal to the span of X."""
    n, p = X.shape
    rng = np.random.default_rng(seed)
    qx, _ = np.linalg.qr(X)
    g = rng.standard_normal((n, ncols))
    y = g - qx @ (qx.T @ g)
    q, _ = np.linalg.qr(y)
    # one re-orthogonalization pass against X to scrub rounding leakage
    q = q - qx @ (qx.T @ q)
    q, _ = np.linalg.qr(q)
    return q[:, :ncols]


def construct_knockoffs(design: DesignMatrix, gap: GapVector, seed: int) -> AugmentedDesign:
    """Build the knockoff block ``Xt = X(I - Sigma^-1 diag(s)) + U C``.

    ``C`` is a factor of the Schur complement
    ``A = 2 diag(s) - diag(s) Sigma^-1 diag(s)`` obtained from a symmetric
    eigendecomposition with eigenvalues below 1e-10 clamped to zero, and
    ``U`` is a seeded orthonormal block orthogonal to the span of ``X``.

    Requires ``n >= 2p`` for full gap vectors.  Gap vectors of kind
    ``PARTIAL_DUPLICATE`` may have many zero entries; then only
    ``rank(A) <= n - p`` is needed, which enables the duplicate-cycling
    rounds in the p <= n < 2p regime.

    Raises
    ------
    InfeasibleGap
        If ``2*Sigma - diag(s)`` has an eigenvalue below -1e-8.
    DimensionError
        If the orthogonal complement of X is too small for the factor rank.
    """
    X = design.values
    sigma = design.gram
    n, p = X.shape
    s = np.asarray(gap.s, dtype=float)
    if s.shape != (p,):
        raise DimensionError(f"gap vector has length {s.size}, expected {p}")
    if np.linalg.eigvalsh(2.0 * sigma - np.diag(s))[0] < -PSD_SLACK:
        raise InfeasibleGap("2*Sigma - diag(s) is not positive semidefinite")

    sigma_inv_s = np.linalg.solve(sigma, np.diag(s))
    a = 2.0 * np.diag(s) - np.diag(s) @ sigma_inv_s
    a = 0.5 * (a + a.T)
    eigvals, eigvecs = np.linalg.eigh(a)
    eigvals = np.where(eigvals < SINGULAR_EIG, 0.0, eigvals)

    if gap.kind is GapKind.PARTIAL_DUPLICATE:
        keep = eigvals > 0.0
        rank = int(np.sum(keep))
        if n - p < rank:
            raise DimensionError(
                f"need n - p >= rank(A) = {rank} for partial-duplicate gaps, got n - p = {n - p}"
            )
        c = (eigvecs[:, keep] * np.sqrt(eigvals[keep])).T  # rank x p
        u = _orthonormal_complement(X, rank, seed)
    else:
        if n < 2 * p:
            raise DimensionError(f"need n >= 2p for knockoff construction, got n={n}, p={p}")
        c = (eigvecs * np.sqrt(eigvals)).T  # p x p
        u = _orthonormal_complement(X, p, seed)

    knockoffs = X @ (np.eye(p) - sigma_inv_s) + u @ c
    # a zero gap means "duplicate this feature"; snap to the exact copy the
    # limit prescribes instead of keeping eigendecomposition dust
    duplicated = np.flatnonzero(s == 0.0)
    if duplicated.size:
        knockoffs[:, duplicated] = X[:, duplicated]
    return AugmentedDesign(design, _freeze(knockoffs), gap, seed)


def row_augment(
    design: DesignMatrix, y: np.ndarray, seed: int
) -> tuple[DesignMatrix, np.ndarray]:
    """Extend (X, y) to 2p rows for the p <= n < 2p regime.

    The residual variance of the full least-squares fit estimates the noise
    level; the response gains ``2p - n`` fresh draws from N(0, sigma_hat^2)
    and the design gains ``2p - n`` rows of zeros.  Column norms and the
    Gram matrix are unchanged, so the returned design reuses them exactly.

    Raises
    ------
    DimensionError
        If n < p or n >= 2p (no augmentation applicable).
    DegenerateResiduals
        If n == p, leaving no degrees of freedom for the noise estimate.
    """
    X = design.values
    n, p = X.shape
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DimensionError(f"response has shape {y.shape}, expected ({n},)")
    if n < p or n >= 2 * p:
        raise DimensionError(f"row augmentation applies to p <= n < 2p, got n={n}, p={p}")
    if n == p:
        raise DegenerateResiduals("n == p leaves zero residual degrees of freedom")

    beta_ls = np.linalg.solve(design.gram, X.T @ y)
    rss = float(np.sum((y - X @ beta_ls) ** 2))
    sigma_hat = math.sqrt(rss / (n - p))

    extra = 2 * p - n
    rng = np.random.default_rng(seed)
    y_new = np.concatenate([y, sigma_hat * rng.standard_normal(extra)])
    x_new = np.vstack([X, np.zeros((extra, p))])
    augmented = DesignMatrix(
        _freeze(x_new), design.gram, design.column_norms_original
    )
    return augmented, y_new


@dataclass(frozen=True)
class CycleRound:
    """One round of the duplicate-cycling scheme.

    ``budget_fraction`` is the share of the overall FDR target spent in this
    round (q per round = budget_fraction * q).
    """

    duplicated: tuple[int, ...]
    knockoffed: tuple[int, ...]
    budget_fraction: float


def duplicate_cycle_plan(p: int, n: int) -> list[CycleRound]:
    """Partition features into rounds so each is knockoffed exactly once.

    Each round can knockoff at most ``n - p`` features (the dimension left
    over for the orthogonal block); the remaining features are duplicated.
    Splitting the FDR budget equally across rounds keeps the overall level
    by a union bound.  ``n >= 2p`` trivially yields a single full round.
    """
    if p < 1 or n < p:
        raise DimensionError(f"need n >= p >= 1, got n={n}, p={p}")
    if n >= 2 * p:
        return [CycleRound((), tuple(range(p)), 1.0)]
    per_round = n - p
    if per_round == 0:
        raise DimensionError("n == p leaves no room to knockoff any feature")
    rounds = math.ceil(p / per_round)
    plan = []
    indices = list(range(p))
    # the first round duplicates the leading block and knockoffs the tail,
    # later rounds walk the knockoffed chunk toward the front
    for r in range(rounds):
        chunk = indices[max(0, p - (r + 1) * per_round) : p - r * per_round]
        rest = tuple(i for i in indices if i not in chunk)
        plan.append(CycleRound(rest, tuple(chunk), 1.0 / rounds))
    return plan


def fallback_gap(sigma: np.ndarray, kind: str, tol: float = 1e-8) -> GapVector:
    """Resolve a gap-kind name, falling back to equicorrelated on SDP failure.

    The fallback is logged, never silent.
    """
    if kind == "equi":
        return equicorrelated_s(sigma)
    if kind == "sdp":
        try:
            return sdp_s(sigma, tol)
        except SolverDiverged as exc:
            log.warning("SDP gap solver diverged (%s); falling back to equicorrelated", exc)
            return equicorrelated_s(sigma)
    raise ValueError(f"unknown knockoff kind {kind!r} (expected 'equi' or 'sdp')")
