import itertools

import numpy as np
import pytest

from l1sysid.certifier import (
    adversarial_error,
    balancedness_margin,
    certification_report,
    certify_all_supports,
    certify_support,
)
from l1sysid.errors import (
    DegenerateSupportError,
    EnumerationLimitError,
    InvalidInputError,
    InvalidWitnessError,
)
from l1sysid.lad_solver import solve_lad
from l1sysid.signal_model import build_matrix, generate_sequence

from oracles import balanced_m1, balanced_m2, lad_lp


def hankel(n, m, seed):
    return build_matrix(generate_sequence(n, m, seed)).array


def test_empty_support():
    res = certify_support(np.ones((4, 1)), ())
    assert res.certified and res.min_lp_value == np.inf


def test_single_column_examples():
    h = np.array([[1.0], [1.0], [1.0]])
    res = certify_support(h, [0])
    assert res.certified and res.min_lp_value == pytest.approx(2.0)
    tie = certify_support(np.array([[1.0], [1.0]]), [0])
    assert not tie.certified and tie.marginal
    assert tie.min_lp_value == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(6))
def test_m1_matches_closed_form(seed):
    H = hankel(9, 1, seed)
    for K in itertools.combinations(range(9), 3):
        res = certify_support(H, K)
        assert res.certified == balanced_m1(H[:, 0], K)
        hK, hKc = np.abs(H[list(K), 0]).sum(), np.abs(np.delete(H[:, 0], K)).sum()
        assert res.min_lp_value == pytest.approx(hKc / hK, rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_m2_matches_direction_enumeration(seed):
    H = hankel(8, 2, seed)
    for K in itertools.combinations(range(8), 2):
        res = certify_support(H, K)
        ok, _ = balanced_m2(H, K)
        assert res.certified == ok


def test_witness_is_unbalanced():
    H = hankel(6, 2, 4)
    report = certification_report(H, 3)
    bad = [r for r in report if not r.certified]
    assert bad, "expected at least one failing support at k = n/2"
    for r in bad:
        assert balancedness_margin(H, r.support, r.witness_z) <= 1e-8 * np.abs(H @ r.witness_z).sum()


def test_adversarial_error_defeats_recovery():
    H = hankel(6, 2, 4)
    r = next(r for r in certification_report(H, 3) if not r.certified)
    e = adversarial_error(H, r.support, r.witness_z)
    x = np.array([0.5, -1.0])
    y = H @ x + e.to_dense()
    ref, _ = lad_lp(H, y)
    # x + z is at least as good as x, so x is not the unique minimiser
    alt = np.abs(y - H @ (x + r.witness_z)).sum()
    assert alt <= np.abs(e.to_dense()).sum() + 1e-9
    sol = solve_lad(H, y)
    assert sol.objective == pytest.approx(ref, abs=1e-9)
    assert sol.degenerate or np.linalg.norm(sol.x_hat - x) > 1e-6


def test_adversarial_error_rejects_balanced_direction():
    H = np.ones((5, 1))
    with pytest.raises(InvalidWitnessError):
        adversarial_error(H, [0], [1.0])
    with pytest.raises(InvalidInputError):
        balancedness_margin(H, [0], [0.0])


def test_all_supports_first_failure_is_lexicographic():
    H = hankel(8, 1, 2)
    ok, K = certify_all_supports(H, 3)
    report = certification_report(H, 3)
    first = next((r.support for r in report if not r.certified), None)
    assert ok == (first is None)
    assert K == first


def test_certify_all_supports_clean_case():
    H = np.ones((5, 1))
    assert certify_all_supports(H, 2) == (True, None)
    assert certify_all_supports(H, 3)[0] is False


def test_limits():
    H = np.ones((30, 1))
    with pytest.raises(EnumerationLimitError):
        certify_support(H, range(21))
    with pytest.raises(EnumerationLimitError):
        certify_all_supports(H, 10, max_lps=1000)
    with pytest.raises(DegenerateSupportError):
        certify_support(np.array([[0.0], [1.0], [2.0]]), [0])
