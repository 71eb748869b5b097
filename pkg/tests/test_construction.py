import numpy as np
import pytest

from knockoff_filter import (
    DegenerateResiduals,
    DimensionError,
    GapKind,
    GapVector,
    InfeasibleGap,
    SingularGram,
    ZeroColumn,
    construct_knockoffs,
    duplicate_cycle_plan,
    equicorrelated_s,
    normalize_design,
    row_augment,
    sdp_s,
)


def random_design(n, p, seed):
    rng = np.random.default_rng(seed)
    return normalize_design(rng.standard_normal((n, p)))


def exchangeable_sigma(p, rho):
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))


# ---------------------------------------------------------------- normalize


def test_normalize_identity_columns_unchanged():
    design = normalize_design(np.eye(3))
    assert np.allclose(design.values, np.eye(3))
    assert np.allclose(design.gram, np.eye(3))
    assert np.allclose(design.column_norms_original, 1.0)


def test_normalize_records_original_norms():
    raw = np.array([[3.0, 0.0], [4.0, 1.0], [0.0, 0.0]])
    design = normalize_design(raw)
    assert np.allclose(design.values[:, 0], [0.6, 0.8, 0.0])
    assert design.column_norms_original[0] == pytest.approx(5.0)


def test_normalize_rejects_duplicate_columns():
    col = np.array([[1.0], [2.0], [3.0]])
    with pytest.raises(SingularGram):
        normalize_design(np.hstack([col, col]))


def test_normalize_rejects_zero_column():
    raw = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ZeroColumn) as err:
        normalize_design(raw)
    assert err.value.column == 1


def test_normalize_rejects_wide_matrix():
    with pytest.raises(DimensionError):
        normalize_design(np.ones((2, 3)))


def test_normalize_invariants_on_random_input():
    design = random_design(50, 20, seed=0)
    assert np.allclose(np.linalg.norm(design.values, axis=0), 1.0, atol=1e-10)
    assert np.allclose(design.gram, design.values.T @ design.values, atol=1e-10)
    assert np.allclose(np.diag(design.gram), 1.0, atol=1e-10)
    assert np.linalg.eigvalsh(design.gram)[0] > 0


# ---------------------------------------------------------- equicorrelated


def test_equicorrelated_identity():
    gap = equicorrelated_s(np.eye(4))
    assert gap.kind is GapKind.EQUICORRELATED
    assert np.allclose(gap.s, 1.0)


@pytest.mark.parametrize("rho,expected", [(0.6, 0.8), (0.8, 0.4)])
def test_equicorrelated_2x2_closed_form(rho, expected):
    # eigenvalues of a 2x2 exchangeable matrix are 1 +- rho, so s = 2(1-rho)
    gap = equicorrelated_s(exchangeable_sigma(2, rho))
    assert np.allclose(gap.s, expected, atol=1e-12)


def test_equicorrelated_rejects_singular():
    sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularGram):
        equicorrelated_s(sigma)


def test_equicorrelated_always_feasible():
    for seed in range(10):
        design = random_design(60, 12, seed)
        s = equicorrelated_s(design.gram).s
        lam = np.linalg.eigvalsh(2 * design.gram - np.diag(s))[0]
        assert lam >= -1e-8


# ----------------------------------------------------------------- sdp gap


def sdp_grid_oracle_2x2(rho, step=1e-3):
    """Brute-force maximizer of s1+s2 over the 1e-3 grid with a PSD check."""
    vals = np.arange(0.0, 1.0 + step / 2, step)
    s1, s2 = np.meshgrid(vals, vals, indexing="ij")
    # principal minors of 2*Sigma - diag(s)
    feasible = (2 - s1 >= 0) & (2 - s2 >= 0) & ((2 - s1) * (2 - s2) >= 4 * rho**2)
    obj = np.where(feasible, s1 + s2, -np.inf)
    i, j = np.unravel_index(np.argmax(obj), obj.shape)
    return np.array([vals[i], vals[j]])


def test_sdp_identity_is_maximal():
    gap = sdp_s(np.eye(5))
    assert gap.kind is GapKind.SDP
    assert np.allclose(gap.s, 1.0, atol=1e-6)


@pytest.mark.parametrize("rho", [0.8, 0.5])
def test_sdp_2x2_matches_grid_oracle(rho):
    oracle = sdp_grid_oracle_2x2(rho)
    gap = sdp_s(exchangeable_sigma(2, rho))
    assert np.max(np.abs(gap.s - oracle)) < 1e-3
    # spot values: (2-s)^2 >= 4 rho^2 under symmetry gives s = min(1, 2-2rho)
    assert np.allclose(oracle, min(1.0, 2 - 2 * rho), atol=1e-9)


def test_sdp_output_feasible_and_dominant():
    for seed in range(8):
        design = random_design(80, 10, seed)
        sdp = sdp_s(design.gram)
        equi = equicorrelated_s(design.gram)
        assert np.all(sdp.s >= -1e-12) and np.all(sdp.s <= 1 + 1e-12)
        lam = np.linalg.eigvalsh(2 * design.gram - np.diag(sdp.s))[0]
        assert lam >= -1e-8
        assert np.sum(sdp.s) >= np.sum(equi.s) - 1e-6


def test_sdp_rejects_bad_tol():
    with pytest.raises(ValueError):
        sdp_s(np.eye(2), tol=0.0)


# ------------------------------------------------------------ construction


def test_construct_orthogonal_design_gives_orthogonal_knockoffs():
    # Sigma = I with s = 1 collapses the construction to Xt = U
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.standard_normal((30, 10)))
    design = normalize_design(q)
    aug = construct_knockoffs(design, equicorrelated_s(design.gram), seed=1)
    assert np.max(np.abs(design.values.T @ aug.knockoffs)) < 1e-10
    assert np.max(np.abs(aug.knockoffs.T @ aug.knockoffs - np.eye(10))) < 1e-10


def test_construct_gram_identities_random_designs():
    for seed in range(5):
        design = random_design(50, 15, seed)
        for gap in (equicorrelated_s(design.gram), sdp_s(design.gram)):
            aug = construct_knockoffs(design, gap, seed=seed)
            d1, d2 = aug.gram_deviations()
            assert d1 <= 1e-8 and d2 <= 1e-8


def test_construct_full_swap_gram_invariance():
    # swapping any original/knockoff pairs leaves the 2p x 2p Gram unchanged
    design = random_design(40, 8, seed=3)
    aug = construct_knockoffs(design, sdp_s(design.gram), seed=0)
    matrix = aug.augmented_matrix()
    gram = matrix.T @ matrix
    rng = np.random.default_rng(11)
    for _ in range(5):
        swap = rng.choice(8, size=rng.integers(1, 9), replace=False)
        swapped = matrix.copy()
        swapped[:, swap], swapped[:, swap + 8] = matrix[:, swap + 8], matrix[:, swap]
        assert np.max(np.abs(swapped.T @ swapped - gram)) <= 1e-8


def test_construct_rejects_infeasible_gap():
    design = normalize_design(np.eye(4))
    bad = GapVector(np.array([10.0, 1.0, 1.0, 1.0]), GapKind.EQUICORRELATED)
    with pytest.raises(InfeasibleGap):
        construct_knockoffs(design, bad, seed=0)


def test_construct_rejects_small_n():
    design = random_design(20, 12, seed=1)
    with pytest.raises(DimensionError):
        construct_knockoffs(design, equicorrelated_s(design.gram), seed=0)


def test_construct_deterministic_in_seed():
    design = random_design(60, 20, seed=9)
    gap = sdp_s(design.gram)
    a = construct_knockoffs(design, gap, seed=123)
    b = construct_knockoffs(design, gap, seed=123)
    c = construct_knockoffs(design, gap, seed=124)
    assert np.array_equal(a.knockoffs, b.knockoffs)
    assert not np.array_equal(a.knockoffs, c.knockoffs)


def test_construct_partial_duplicate_in_small_n_regime():
    # p <= n < 2p works when the gap is zero on the duplicated block
    design = random_design(9, 6, seed=2)
    lam_min = np.linalg.eigvalsh(design.gram)[0]
    s = np.zeros(6)
    s[3:] = min(2 * lam_min, 1.0) * 0.9
    aug = construct_knockoffs(
        design, GapVector(s, GapKind.PARTIAL_DUPLICATE), seed=4
    )
    d1, d2 = aug.gram_deviations()
    assert d1 <= 1e-8 and d2 <= 1e-8
    # zero-gap features are duplicated exactly
    assert np.max(np.abs(aug.knockoffs[:, :3] - design.values[:, :3])) < 1e-8


# ------------------------------------------------------------- row_augment


def test_row_augment_boundary_dimensions():
    design = random_design(8, 4, seed=0)
    y = np.zeros(8)
    with pytest.raises(DimensionError):
        row_augment(design, y, seed=0)  # n == 2p already


def test_row_augment_degenerate_residuals():
    design = random_design(4, 4, seed=0)
    with pytest.raises(DegenerateResiduals):
        row_augment(design, np.ones(4), seed=0)


def test_row_augment_pads_with_zero_rows():
    design = random_design(3, 2, seed=1)
    y = np.array([1.0, -2.0, 0.5])
    augmented, y2 = row_augment(design, y, seed=7)
    assert augmented.values.shape == (4, 2)
    assert np.all(augmented.values[3] == 0.0)
    assert y2.shape == (4,)
    assert np.array_equal(y2[:3], y)


def test_row_augment_preserves_gram_exactly():
    design = random_design(30, 20, seed=4)
    augmented, _ = row_augment(design, np.arange(30.0), seed=0)
    assert augmented.gram is design.gram


def test_row_augment_noise_scale_tracks_residuals():
    # residual variance of the LS fit drives the appended draws
    rng = np.random.default_rng(0)
    design = random_design(150, 100, seed=5)
    sigma = 3.0
    y = sigma * rng.standard_normal(150)
    draws = np.array(
        [row_augment(design, y, seed=s)[1][150:] for s in range(200)]
    ).ravel()
    beta = np.linalg.solve(design.gram, design.values.T @ y)
    sigma_hat = np.sqrt(np.sum((y - design.values @ beta) ** 2) / 50)
    assert np.std(draws) == pytest.approx(sigma_hat, rel=0.1)


# ---------------------------------------------------------- cycling plans


def test_cycle_plan_two_rounds():
    plan = duplicate_cycle_plan(4, 6)
    assert len(plan) == 2
    assert plan[0].knockoffed == (0, 1) and plan[0].duplicated == (2, 3)
    assert plan[1].knockoffed == (2, 3) and plan[1].duplicated == (0, 1)
    assert plan[0].budget_fraction == pytest.approx(0.5)


def test_cycle_plan_trivial_when_n_is_2p():
    plan = duplicate_cycle_plan(4, 8)
    assert len(plan) == 1
    assert plan[0].knockoffed == (0, 1, 2, 3)
    assert plan[0].duplicated == ()
    assert plan[0].budget_fraction == 1.0


def test_cycle_plan_three_rounds():
    plan = duplicate_cycle_plan(6, 8)
    assert len(plan) == 3
    knockoffed = [r.knockoffed for r in plan]
    assert knockoffed == [(0, 1), (2, 3), (4, 5)]
    for r in plan:
        assert r.budget_fraction == pytest.approx(1 / 3)
        assert len(r.knockoffed) <= 2
        assert sorted(r.knockoffed + r.duplicated) == list(range(6))


def test_cycle_plan_covers_every_index_once():
    for p, n in [(7, 10), (5, 6), (9, 17)]:
        plan = duplicate_cycle_plan(p, n)
        seen = [j for r in plan for j in r.knockoffed]
        assert sorted(seen) == list(range(p))
        assert all(len(r.knockoffed) <= n - p for r in plan)


def test_cycle_plan_rejects_bad_dimensions():
    with pytest.raises(DimensionError):
        duplicate_cycle_plan(4, 3)
    with pytest.raises(DimensionError):
        duplicate_cycle_plan(4, 4)
