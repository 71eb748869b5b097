"""Reproducible Monte-Carlo comparisons of the selection methods.

Synthetic instances follow the standard benchmark recipe: draw a design
(iid Gaussian, equal-correlation, tapered-correlation, or exactly
orthogonal), normalize columns, plant k coefficients of magnitude A at
random positions, and add unit-variance Gaussian noise.  Each trial's seed
is derived from the master seed with a stable mixing hash, so experiments
are bit-reproducible and methods can be compared on shared instances
("paired" mode, the default).
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import IO, Iterable

import numpy as np

from .baselines import Correction, bhq_select, bhq_whitened, ls_zscores, permute_design
from .construction import (
    DesignMatrix,
    construct_knockoffs,
    fallback_gap,
    normalize_design,
    row_augment,
)
from .errors import DimensionError
from .lasso import DEFAULT_GRID
from .selection import threshold
from .stats import StatisticKind, statistic_from_matrix

KNOCKOFF_METHODS = ("knockoff", "knockoff-plus")
BASELINE_METHODS = ("bhq", "bhq-log", "bhq-white", "permutation")
METHODS = KNOCKOFF_METHODS + BASELINE_METHODS

DESIGN_KINDS = ("iid", "equal", "tapered", "orthogonal")

NOISE_SIGMA = 1.0  # the harness generates unit-variance noise and tells BHq so


def frozen_array(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def mix_seed(*parts) -> int:
    """Stable 64-bit seed from heterogeneous parts (never Python's salted hash)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete description of one Monte-Carlo experiment.

    ``signs`` is "random" for fair-coin coefficient signs or "positive" for
    all +A (the equal-correlation permutation-failure setup uses the
    latter).  ``paired`` derives trial seeds without the method name so
    different methods see identical instances.
    """

    n: int
    p: int
    k: int
    amplitude: float
    design: str = "iid"
    rho: float = 0.0
    q: float = 0.2
    trials: int = 1
    method: str = "knockoff-plus"
    statistic: str = StatisticKind.LASSO_SIGNED_MAX.value
    knockoff: str = "equi"
    seed: int = 0
    grid_count: int = DEFAULT_GRID[0]
    grid_ratio: float = DEFAULT_GRID[1]
    paired: bool = True
    signs: str = "random"

    def __post_init__(self):
        if self.n < self.p:
            raise DimensionError(f"need n >= p, got n={self.n}, p={self.p}")
        if not (0 <= self.k <= self.p):
            raise ValueError(f"k must lie in [0, p], got {self.k}")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.design not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.design!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.signs not in ("random", "positive"):
            raise ValueError(f"signs must be 'random' or 'positive', got {self.signs!r}")
        StatisticKind(self.statistic)  # validates the name

    @property
    def grid_spec(self) -> tuple[int, float]:
        return (self.grid_count, self.grid_ratio)

    def trial_seed(self, index: int) -> int:
        if self.paired:
            return mix_seed(self.seed, index)
        return mix_seed(self.seed, index, self.method)


@dataclass(frozen=True)
class TrialOutcome:
    fdp: float
    power: float | None
    n_selected: int
    n_false: int
    threshold: float


def _draw_design(spec: ExperimentSpec, rng: np.random.Generator) -> DesignMatrix:
    n, p = spec.n, spec.p
    if spec.design == "orthogonal":
        q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        return DesignMatrix(
            frozen_array(q), frozen_array(np.eye(p)), frozen_array(np.ones(p))
        )
    if spec.design == "iid":
        raw = rng.standard_normal((n, p))
    elif spec.design == "equal":
        chol = np.linalg.cholesky(
            (1.0 - spec.rho) * np.eye(p) + spec.rho * np.ones((p, p))
        )
        raw = rng.standard_normal((n, p)) @ chol.T
        raw = raw - raw.mean(axis=0)  # centered before normalization
    elif spec.design == "tapered":
        idx = np.arange(p)
        theta = spec.rho ** np.abs(idx[:, None] - idx[None, :]) if spec.rho > 0 else np.eye(p)
        raw = rng.standard_normal((n, p)) @ np.linalg.cholesky(theta).T
    else:  # pragma: no cover - guarded by __post_init__
        raise ValueError(spec.design)
    return normalize_design(raw)


def generate_instance(
    spec: ExperimentSpec, trial_seed: int
) -> tuple[DesignMatrix, np.ndarray, np.ndarray, np.ndarray]:
    """One (design, response, true support, coefficient signs) draw."""
    rng = np.random.default_rng(trial_seed)
    design = _draw_design(spec, rng)
    support = np.sort(rng.choice(spec.p, size=spec.k, replace=False))
    if spec.signs == "positive":
        signs = np.ones(spec.k)
    else:
        signs = rng.choice([-1.0, 1.0], size=spec.k)
    beta = np.zeros(spec.p)
    beta[support] = spec.amplitude * signs
    y = design.values @ beta + NOISE_SIGMA * rng.standard_normal(spec.n)
    return design, y, support, signs


def _knockoff_selection(spec: ExperimentSpec, design, y, trial_seed: int, plus: bool):
    if design.n < 2 * design.p:
        design, y = row_augment(design, y, mix_seed(trial_seed, "augment"))
    gap = fallback_gap(design.gram, spec.knockoff)
    aug = construct_knockoffs(design, gap, mix_seed(trial_seed, "complement"))
    w = statistic_from_matrix(
        StatisticKind(spec.statistic), aug.augmented_matrix(), y, spec.grid_spec, None
    )
    return threshold(w, spec.q, plus)


def _permutation_selection(spec: ExperimentSpec, design, y, trial_seed: int):
    permuted = permute_design(design, mix_seed(trial_seed, "permute"))
    matrix = np.hstack([design.values, permuted])
    w = statistic_from_matrix(
        StatisticKind(spec.statistic), matrix, y, spec.grid_spec, None
    )
    return threshold(w, spec.q, plus=False)


def run_trial(spec: ExperimentSpec, trial_seed: int) -> TrialOutcome:
    """Run one full pipeline (instance -> statistic -> selection) draw.

    A failure anywhere aborts the trial (and hence the experiment); trials
    are never silently skipped.
    """
    design, y, support, _ = generate_instance(spec, trial_seed)
    if spec.method in ("knockoff", "knockoff-plus"):
        result = _knockoff_selection(
            spec, design, y, trial_seed, plus=spec.method == "knockoff-plus"
        )
        selected, thr = result.selected, result.threshold
    elif spec.method == "permutation":
        result = _permutation_selection(spec, design, y, trial_seed)
        selected, thr = result.selected, result.threshold
    elif spec.method == "bhq":
        selected = bhq_select(ls_zscores(design, y, NOISE_SIGMA), spec.q)
        thr = math.nan
    elif spec.method == "bhq-log":
        selected = bhq_select(
            ls_zscores(design, y, NOISE_SIGMA), spec.q, Correction.LOG_FACTOR
        )
        thr = math.nan
    elif spec.method == "bhq-white":
        selected = bhq_whitened(
            design, y, NOISE_SIGMA, spec.q, mix_seed(trial_seed, "whiten")
        )
        thr = math.nan
    else:  # pragma: no cover - guarded by __post_init__
        raise ValueError(spec.method)

    n_selected = int(selected.size)
    n_false = int(np.setdiff1d(selected, support).size)
    fdp = n_false / max(n_selected, 1)
    power = None if spec.k == 0 else (n_selected - n_false) / spec.k
    return TrialOutcome(fdp, power, n_selected, n_false, float(thr))


@dataclass(frozen=True)
class ExperimentSummary:
    spec: ExperimentSpec
    outcomes: tuple[TrialOutcome, ...]
    mean_fdr: float
    se_fdr: float
    mean_power: float | None
    se_power: float | None


def _sample_se(values: np.ndarray) -> float:
    if values.size <= 1:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def _run_trial_star(args) -> TrialOutcome:
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentSummary:
    """All trials of one spec, aggregated in fixed trial-index order."""
    jobs = [(spec, spec.trial_seed(i)) for i in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial_star, jobs, chunksize=8))
    else:
        outcomes = [run_trial(spec, seed) for _, seed in jobs]
    fdps = np.array([o.fdp for o in outcomes])
    mean_power = se_power = None
    if spec.k > 0:
        powers = np.array([o.power for o in outcomes])
        mean_power = float(np.mean(powers))
        se_power = _sample_se(powers)
    return ExperimentSummary(
        spec, tuple(outcomes), float(np.mean(fdps)), _sample_se(fdps), mean_power, se_power
    )


def run_methods(
    base: ExperimentSpec, methods: Iterable[str], workers: int = 1
) -> list[ExperimentSummary]:
    """Run several methods off one base spec (shared instances when paired)."""
    return [run_experiment(replace(base, method=m), workers) for m in methods]


def spec_metadata(spec: ExperimentSpec) -> list[str]:
    pairs = [
        ("n", spec.n),
        ("p", spec.p),
        ("k", spec.k),
        ("amplitude", spec.amplitude),
        ("design", spec.design),
        ("rho", spec.rho),
        ("q", spec.q),
        ("trials", spec.trials),
        ("method", spec.method),
        ("statistic", spec.statistic),
        ("knockoff", spec.knockoff),
        ("seed", spec.seed),
        ("grid_count", spec.grid_count),
        ("grid_ratio", spec.grid_ratio),
        ("paired", int(spec.paired)),
        ("signs", spec.signs),
    ]
    return [f"# {key}={value}" for key, value in pairs]


def write_results_csv(fh: IO[str], summaries: list[ExperimentSummary]) -> None:
    """One row per (trial, method); '#' metadata lines carry the full specs."""
    for summary in summaries:
        for line in spec_metadata(summary.spec):
            fh.write(line + "\n")
    fh.write("trial,method,n_selected,false_selected,fdp,power,threshold\n")
    n_trials = max(s.spec.trials for s in summaries) if summaries else 0
    for trial in range(n_trials):
        for summary in summaries:
            if trial >= len(summary.outcomes):
                continue
            o = summary.outcomes[trial]
            power = "" if o.power is None else f"{o.power:.10g}"
            thr = "" if math.isnan(o.threshold) else f"{o.threshold:.10g}"
            fh.write(
                f"{trial},{summary.spec.method},{o.n_selected},{o.n_false},"
                f"{o.fdp:.10g},{power},{thr}\n"
            )
