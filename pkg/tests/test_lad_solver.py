import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l1sysid.errors import InvalidDimensionError, NonConvergenceError, RankDeficiencyError
from l1sysid.lad_solver import check_optimality, objective, solve_lad
from l1sysid.signal_model import build_matrix, generate_sequence, sample_outliers

from oracles import lad_lp, lad_vertex_bruteforce, weighted_median_fit

H3 = np.array([[1.0], [2.0], [1.0]])
Y3 = np.array([1.0, 2.0, 5.0])


def random_problem(n, m, seed, k=None, noise=0.0):
    rng = np.random.default_rng(seed)
    H = build_matrix(generate_sequence(n, m, seed)).array
    x = rng.standard_normal(m)
    k = n // 3 if k is None else k
    e = sample_outliers(n, k, 10.0, seed + 1).to_dense()
    return H, x, H @ x + e + noise * rng.standard_normal(n)


def test_weighted_median_example():
    sol = solve_lad(H3, Y3)
    assert sol.x_hat[0] == pytest.approx(1.0, abs=1e-14)
    assert sol.objective == pytest.approx(4.0, abs=1e-13)
    assert weighted_median_fit(H3[:, 0], Y3) == 1.0
    assert not sol.degenerate


def test_objective_examples():
    assert objective(H3, Y3, [0.0]) == 8.0
    assert objective(H3, np.zeros(3), [0.0]) == 0.0
    assert objective(H3, 3 * H3[:, 0], [3.0]) == 0.0
    with pytest.raises(InvalidDimensionError):
        objective(H3, Y3, [0.0, 1.0])


@pytest.mark.parametrize("n, m", [(30, 1), (40, 3), (200, 5)])
def test_exact_fit_is_recovered(n, m):
    H, x, _ = random_problem(n, m, 3)
    sol = solve_lad(H, H @ x)
    np.testing.assert_allclose(sol.x_hat, x, atol=1e-10)
    assert sol.objective < 1e-10
    assert check_optimality(H, H @ x, sol.x_hat).valid


def test_square_system():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((4, 4))
    y = rng.standard_normal(4)
    sol = solve_lad(H, y)
    np.testing.assert_allclose(sol.x_hat, np.linalg.solve(H, y), atol=1e-12)
    assert sol.objective < 1e-12


def test_residual_bookkeeping():
    H, _, y = random_problem(60, 4, 2, noise=0.5)
    sol = solve_lad(H, y)
    np.testing.assert_array_equal(sol.residual, y - H @ sol.x_hat)
    assert sol.objective == pytest.approx(np.abs(sol.residual).sum(), rel=1e-14)
    assert sol.zero_residual_count >= 4
    assert len(sol.basis) == 4


@pytest.mark.parametrize("seed", range(8))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = 9, 1 + seed % 3
    H = rng.standard_normal((n, m))
    y = rng.standard_normal(n) * 3
    best, _ = lad_vertex_bruteforce(H, y)
    assert solve_lad(H, y).objective == pytest.approx(best, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_matches_highs(seed):
    H, _, y = random_problem(300, 5, 100 + seed, noise=1.0)
    ref, _ = lad_lp(H, y)
    sol = solve_lad(H, y)
    assert sol.objective <= ref * (1 + 1e-9)
    assert sol.objective == pytest.approx(ref, rel=1e-7)


@given(
    h=st.lists(st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3), min_size=2, max_size=15),
    seed=st.integers(0, 1000),
)
@settings(max_examples=60, deadline=None)
def test_scalar_case_is_weighted_median(h, seed):
    h = np.array(h)
    y = np.random.default_rng(seed).normal(size=h.size) * 4
    sol = solve_lad(h[:, None], y)
    ref = weighted_median_fit(h, y)
    assert objective(h[:, None], y, sol.x_hat) <= objective(h[:, None], y, [ref]) + 1e-10


@given(n=st.integers(6, 60), m=st.integers(1, 4), seed=st.integers(0, 10_000), frac=st.floats(0, 0.6))
@settings(max_examples=40, deadline=None)
def test_optimality_against_probes(n, m, seed, frac):
    H, _, y = random_problem(n, m, seed, k=int(frac * n), noise=0.1)
    sol = solve_lad(H, y)
    rng = np.random.default_rng(seed)
    probes = sol.x_hat + rng.standard_normal((100, m)) * rng.choice([1e-3, 1e-1, 1.0], size=(100, 1))
    vals = np.abs(y[None, :] - probes @ H.T).sum(axis=1)
    assert np.all(sol.objective <= vals + 1e-9)
    assert check_optimality(H, y, sol.x_hat).valid


@given(seed=st.integers(0, 10_000), c=st.floats(1e-3, 1e3))
@settings(max_examples=30, deadline=None)
def test_positive_homogeneity(seed, c):
    H, _, y = random_problem(40, 3, seed, noise=0.3)
    base = solve_lad(H, y)
    scaled = solve_lad(H, c * y)
    if not base.degenerate:
        np.testing.assert_allclose(scaled.x_hat, c * base.x_hat, rtol=1e-8, atol=1e-12 * c)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_permutation_invariance(seed):
    H, _, y = random_problem(35, 3, seed, noise=0.2)
    perm = np.random.default_rng(seed).permutation(35)
    a, b = solve_lad(H, y), solve_lad(H[perm], y[perm])
    assert a.objective == b.objective
    if not a.degenerate:
        np.testing.assert_array_equal(a.x_hat, b.x_hat)


def test_degenerate_flag():
    # y = (0, 1) with H = (1, 1): every x in [0, 1] is optimal
    sol = solve_lad(np.ones((2, 1)), np.array([0.0, 1.0]))
    assert sol.degenerate
    assert sol.objective == pytest.approx(1.0)


def test_duplicate_rows_do_not_break_the_pivots():
    H = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, -1.0]])
    y = np.array([1.0, 1.0, 3.0, 0.0, 0.0, 7.0])
    best, _ = lad_vertex_bruteforce(H, y)
    sol = solve_lad(H, y)
    assert sol.objective == pytest.approx(best, abs=1e-12)
    assert check_optimality(H, y, sol.x_hat).valid


def test_rank_deficient():
    with pytest.raises(RankDeficiencyError):
        solve_lad(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]), np.arange(3.0))
    with pytest.raises(RankDeficiencyError):
        solve_lad(np.ones((1, 2)), np.ones(1))


def test_iteration_cap():
    H, _, y = random_problem(200, 5, 7, noise=1.0)
    with pytest.raises(NonConvergenceError) as info:
        solve_lad(H, y, max_iter=1)
    best = info.value.best
    assert best is not None and best.x_hat.shape == (5,)


def test_certificate_weighted_median():
    cert = check_optimality(H3, Y3, [1.0])
    assert cert.valid
    s = cert.dual_signs
    # residual (0, 0, 4): s_3 = sign(4); the free pair balances H^T s = 0
    assert s[2] == 1.0
    assert s[0] + 2 * s[1] == pytest.approx(-1.0, abs=1e-12)
    assert np.all(np.abs(s) <= 1)


def test_certificate_rejects_perturbed_point():
    H, _, y = random_problem(80, 3, 11, noise=0.5)
    sol = solve_lad(H, y)
    assert check_optimality(H, y, sol.x_hat).valid
    bumped = sol.x_hat.copy()
    bumped[1] += 0.1
    assert not check_optimality(H, y, bumped).valid
    # the oracle agrees that the bumped point is worse
    assert objective(H, y, bumped) > lad_lp(H, y)[0]
