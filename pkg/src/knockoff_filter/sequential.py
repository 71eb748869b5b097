"""Generic sequential FDR testing over an ordered p-value list.

Two procedure families act on p-values p_1..p_m (ordered externally, the
order must not depend on the values themselves) with a cutoff c and an
admissible stopping set K:

* first kind: pick the largest k in K with
  (offset + #{j <= k: p_j > c}) / (offset + k)   <= (1-c) * q
  (the 0-offset variant divides by max(k, 1)) and reject H_1..H_k;
* second kind: pick the largest k in K with
  (offset + #{j <= k: p_j > c}) / max(#{j <= k: p_j <= c}, 1) <= (1-c)/c * q
  and reject those H_j with j <= k and p_j <= c.

The knockoff selection rule is exactly the second procedure applied to
one-bit p-values (1/2 for W_j > 0, 1 for W_j < 0) ordered by decreasing
|W_j| with c = 1/2; :func:`one_bit_reduction` performs that mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .selection import TIE_REL_TOL
from .stats import WVector

VARIANTS = ("fstp0", "fstp1", "sstp0", "sstp1")


@dataclass(frozen=True)
class PValueSequence:
    """Ordered p-values with an admissible stopping set and cutoff.

    ``K`` holds 1-based prefix lengths; ``k in K`` means "stopping after
    the first k entries is admissible".  An empty sequence (m = 0, empty K)
    is allowed as the degenerate reduction of an all-zero W vector.
    """

    p: np.ndarray
    K: np.ndarray
    c: float

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=float)
        K = np.unique(np.asarray(self.K, dtype=int))
        if not (0.0 < self.c < 1.0):
            raise ValueError("cutoff c must lie in (0, 1)")
        if p.size and (np.min(p) <= 0.0 or np.max(p) > 1.0):
            raise ValueError("p-values must lie in (0, 1]")
        if p.size == 0:
            if K.size:
                raise ValueError("empty sequence cannot have stopping points")
        elif K.size == 0 or K[0] < 1 or K[-1] > p.size:
            raise ValueError("K must be a nonempty subset of {1..m}")
        p.flags.writeable = False
        K.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "K", K)


@dataclass(frozen=True)
class SequentialResult:
    k_hat: int
    rejected: np.ndarray  # 0-based positions within the sequence
    variant: str


def _check_q(q: float) -> None:
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must lie in [0, 1], got {q}")


def fstp(seq: PValueSequence, q: float, plus: bool = False) -> SequentialResult:
    """First sequential procedure: reject every hypothesis up to k_hat."""
    _check_q(q)
    offset = 1 if plus else 0
    above = np.cumsum(seq.p > seq.c)
    k_hat = 0
    for k in seq.K:
        denom = offset + k if plus else max(k, 1)
        if (offset + above[k - 1]) / denom <= (1.0 - seq.c) * q:
            k_hat = int(k)
    rejected = np.arange(k_hat)
    return SequentialResult(k_hat, rejected, "fstp1" if plus else "fstp0")


def sstp(seq: PValueSequence, q: float, plus: bool = False) -> SequentialResult:
    """Second sequential procedure: reject the small p-values up to k_hat."""
    _check_q(q)
    offset = 1 if plus else 0
    below = np.cumsum(seq.p <= seq.c)
    above = np.arange(1, seq.p.size + 1) - below
    bound = (1.0 - seq.c) / seq.c * q
    k_hat = 0
    for k in seq.K:
        if (offset + above[k - 1]) / max(below[k - 1], 1) <= bound:
            k_hat = int(k)
    rejected = np.flatnonzero(seq.p[:k_hat] <= seq.c)
    return SequentialResult(k_hat, rejected, "sstp1" if plus else "sstp0")


def one_bit_reduction(w: WVector | np.ndarray) -> tuple[PValueSequence, np.ndarray]:
    """Map a W vector to one-bit p-values ordered by decreasing |W|.

    Zero entries are dropped (they can never be selected).  Ties in |W| are
    ordered by ascending original index, and the stopping set K contains
    exactly the positions where |W| strictly decreases (plus the last), so
    the rejection set does not depend on the tie order.  Magnitudes within
    a relative 1e-12 of each other count as tied, matching the candidate
    merging of :mod:`knockoff_filter.selection`.

    Returns the sequence (cutoff 1/2) and the original indices in sequence
    order.
    """
    arr = w.w if isinstance(w, WVector) else np.asarray(w, dtype=float)
    nonzero = np.flatnonzero(arr != 0.0)
    if nonzero.size == 0:
        return (
            PValueSequence(np.array([]), np.array([], dtype=int), 0.5),
            np.array([], dtype=int),
        )
    magnitudes = np.abs(arr[nonzero])
    order = nonzero[np.lexsort((nonzero, -magnitudes))]
    sorted_mag = np.abs(arr[order])
    m = order.size
    stops = [
        k
        for k in range(1, m)
        if not math.isclose(sorted_mag[k - 1], sorted_mag[k], rel_tol=TIE_REL_TOL, abs_tol=0.0)
    ]
    stops.append(m)
    p = np.where(arr[order] > 0, 0.5, 1.0)
    return PValueSequence(p, np.array(stops, dtype=int), 0.5), order


@dataclass(frozen=True)
class SequentialExperimentResult:
    variant: str
    metric: str  # "fdr" for the 1-variants, "modified-fdr" otherwise
    mean: float
    se: float
    mean_rejections: float
    trials: int


def null_experiment(
    variant: str,
    m: int,
    trials: int,
    q: float,
    c: float = 0.5,
    nonnulls: int = 0,
    nonnull_p: float = 0.01,
    seed: int = 0,
) -> SequentialExperimentResult:
    """Monte-Carlo error rates of one procedure on synthetic p-values.

    Each trial draws uniform null p-values with ``nonnulls`` entries pinned
    to ``nonnull_p`` at seeded-random positions, runs the chosen variant
    with K = {1..m}, and records false/total rejections.  The 1-variants
    report plain FDR; the 0-variants report the modified FDR they provably
    control, V / (R + c/((1-c)q)) for sstp0 and V / (R + 1/((1-c)q)) for
    fstp0.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not (0 <= nonnulls <= m):
        raise ValueError("nonnulls must lie in [0, m]")
    rng = np.random.default_rng(seed)
    run = fstp if variant.startswith("fstp") else sstp
    plus = variant.endswith("1")
    K = np.arange(1, m + 1)
    ratios = np.empty(trials)
    rejections = np.empty(trials)
    if plus:
        offset = 0.0
    elif variant == "sstp0":
        offset = math.inf if q == 0 else c / ((1.0 - c) * q)
    else:
        offset = math.inf if q == 0 else 1.0 / ((1.0 - c) * q)
    for t in range(trials):
        p = rng.uniform(0.0, 1.0, size=m)
        p[p == 0.0] = np.nextafter(0.0, 1.0)  # p-values live in (0, 1]
        positions = rng.choice(m, size=nonnulls, replace=False)
        p[positions] = nonnull_p
        is_null = np.ones(m, dtype=bool)
        is_null[positions] = False
        result = run(PValueSequence(p, K, c), q, plus)
        rejected = result.rejected
        v = int(np.sum(is_null[rejected]))
        r = rejected.size
        if plus:
            ratios[t] = v / max(r, 1)
        else:
            ratios[t] = 0.0 if math.isinf(offset) else v / (r + offset)
        rejections[t] = r
    se = float(np.std(ratios, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SequentialExperimentResult(
        variant,
        "fdr" if plus else "modified-fdr",
        float(np.mean(ratios)),
        se,
        float(np.mean(rejections)),
        trials,
    )


def binomial_ratio_expectation(n_trials: int, c: float) -> float:
    """Exact E[Y / (1 + N - Y)] for Y ~ Binomial(N, c), N <= 60.

    Enumerated term by term in extended precision.  This quantity is
    bounded by c / (1 - c) for every N, which is the inequality the
    sequential procedures' FDR control rests on.
    """
    if n_trials < 0:
        raise ValueError("N must be nonnegative")
    if not (0.0 < c < 1.0):
        raise ValueError("c must lie in (0, 1)")
    if n_trials > 60:
        raise OverflowError("enumeration supported only for N <= 60")
    cc = np.longdouble(c)
    one_minus = np.longdouble(1.0) - cc
    total = np.longdouble(0.0)
    for i in range(1, n_trials + 1):
        prob = math.comb(n_trials, i) * cc**i * one_minus ** (n_trials - i)
        total += prob * np.longdouble(i) / np.longdouble(1 + n_trials - i)
    return float(total)
