"""Comparison selectors: BHq on least-squares z-scores and variants, plus
the permuted-design pseudo-knockoff construction.

The BHq baselines assume a known noise level sigma; the simulation harness
passes the true sigma = 1.  The log-factor correction divides q by the
harmonic sum S(p) = 1 + 1/2 + ... + 1/p, buying FDR control under
arbitrary dependence at a steep power cost.  The whitened variant adds
just enough independent noise to decorrelate the coefficient estimates
before applying plain BHq.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erfc

from .construction import SINGULAR_EIG, DesignMatrix
from .errors import DimensionError, SingularGram


class ZSource(Enum):
    LEAST_SQUARES = "least-squares"
    WHITENED = "whitened"


@dataclass(frozen=True)
class ZScores:
    z: np.ndarray
    sigma: float
    source: ZSource


def normal_sf(z: np.ndarray | float) -> np.ndarray | float:
    """Upper tail of the standard normal, via the complementary error function."""
    return 0.5 * erfc(np.asarray(z) / np.sqrt(2.0))


def _ls_fit(design: DesignMatrix, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and the inverse Gram matrix."""
    eigvals = np.linalg.eigvalsh(design.gram)
    if eigvals[0] < SINGULAR_EIG:
        raise SingularGram("smallest Gram eigenvalue below 1e-10")
    sigma_inv = np.linalg.inv(design.gram)
    beta = sigma_inv @ (design.values.T @ y)
    return beta, sigma_inv


def ls_zscores(design: DesignMatrix, y: np.ndarray, sigma: float) -> ZScores:
    """Marginal z-scores of the least-squares fit: beta_j / (sigma * sqrt((Sigma^-1)_jj))."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        raise DimensionError(f"response has shape {y.shape}, expected ({design.n},)")
    beta, sigma_inv = _ls_fit(design, y)
    z = beta / (sigma * np.sqrt(np.diag(sigma_inv)))
    z.flags.writeable = False
    return ZScores(z, sigma, ZSource.LEAST_SQUARES)


class Correction(Enum):
    NONE = "none"
    LOG_FACTOR = "log-factor"


def harmonic_sum(p: int) -> float:
    return float(np.sum(1.0 / np.arange(1, p + 1)))


def bhq_select(z: ZScores, q: float, correction: Correction = Correction.NONE) -> np.ndarray:
    """Step-up rule on two-sided normal p-values; returns rejected indices.

    Equivalent to thresholding |z| at the smallest t where
    p * P(|N(0,1)| >= t) / #{|z_j| >= t} <= q_eff.
    """
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must lie in [0, 1], got {q}")
    zv = z.z
    p = zv.size
    q_eff = q / harmonic_sum(p) if correction is Correction.LOG_FACTOR else q
    pvals = 2.0 * normal_sf(np.abs(zv))
    order = np.argsort(pvals, kind="stable")
    ranked = pvals[order]
    passing = np.flatnonzero(ranked <= (np.arange(1, p + 1) * q_eff / p))
    if passing.size == 0:
        return np.array([], dtype=int)
    cutoff = ranked[passing[-1]]
    return np.flatnonzero(pvals <= cutoff)


def whitening_root(sigma_inv: np.ndarray, lam0: float, sigma: float) -> np.ndarray:
    """Symmetric square root of sigma^2 * (lam0^-1 I - Sigma^-1), clamped PSD."""
    cov = sigma**2 * (np.eye(sigma_inv.shape[0]) / lam0 - sigma_inv)
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.where(eigvals < 1e-12, 0.0, eigvals)
    return eigvecs @ (np.sqrt(eigvals)[:, None] * eigvecs.T)


def bhq_whitened(
    design: DesignMatrix, y: np.ndarray, sigma: float, q: float, seed: int
) -> np.ndarray:
    """BHq after whitening: add noise making the coefficient estimates independent.

    Draws Z' ~ N(0, sigma^2 (lam0^-1 I - Sigma^-1)) with lam0 the smallest
    Gram eigenvalue, then applies the plain step-up rule to
    (beta_hat + Z') / (sigma / sqrt(lam0)).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    y = np.asarray(y, dtype=float)
    beta, sigma_inv = _ls_fit(design, y)
    lam0 = float(np.linalg.eigvalsh(design.gram)[0])
    root = whitening_root(sigma_inv, lam0, sigma)
    rng = np.random.default_rng(seed)
    z_prime = root @ rng.standard_normal(design.p)
    z = (beta + z_prime) / (sigma / np.sqrt(lam0))
    z.flags.writeable = False
    scores = ZScores(z, sigma, ZSource.WHITENED)
    return bhq_select(scores, q, Correction.NONE)


def permute_design(design: DesignMatrix, seed: int) -> np.ndarray:
    """Apply one uniformly drawn row permutation to every column of the design.

    The permuted matrix keeps the exact Gram of the original (the same rows
    in a different order), but breaks any association with the response,
    which is precisely why it fails as a knockoff substitute outside the
    global null.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(design.n)
    return design.values[perm, :]
