"""Exact recoverability certificates for small instances.

l1 decoding recovers every state from every error supported on ``K`` iff

    ||(H z)_K||_1 < ||(H z)_Kc||_1   for all z != 0.

:func:`certify_support` decides this by enumerating sign patterns ``s`` on
``K`` and solving

    minimise ||(H z)_Kc||_1   subject to   sum_{i in K} s_i (H z)_i = 1,

which is itself an l1 regression after eliminating one degree of freedom
of ``z`` through the equality.  The support is certified iff every pattern
has optimum strictly above 1.  Patterns ``s`` and ``-s`` give the same
value, so only those with ``s_0 = +1`` are solved.

A failing pattern yields a witness ``z``; :func:`adversarial_error` turns it
into an outlier vector that l1 decoding cannot uniquely correct.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import (
    DegenerateSupportError,
    EnumerationLimitError,
    InvalidInputError,
    InvalidWitnessError,
    RankDeficiencyError,
)
from .lad_solver import solve_lad
from .signal_model import SparseVector

__all__ = [
    "CertResult",
    "balancedness_margin",
    "certify_support",
    "certify_all_supports",
    "certification_report",
    "adversarial_error",
    "MAX_SUPPORT",
    "MAX_LPS",
    "TIE_MARGIN",
]

MAX_SUPPORT = 20
MAX_LPS = 10**6
TIE_MARGIN = 1e-8


@dataclass(frozen=True)
class CertResult:
    """Verdict for one support.

    ``marginal`` flags an optimum within ``TIE_MARGIN`` of 1; such supports
    are reported as not certified (ties mean non-unique minimisers).
    """

    support: tuple[int, ...]
    certified: bool
    min_lp_value: float
    worst_sign_pattern: np.ndarray
    witness_z: np.ndarray | None
    marginal: bool = False


def _matrix(H):
    H = np.asarray(H, dtype=float)
    return H[:, None] if H.ndim == 1 else H


def balancedness_margin(H, K, z) -> float:
    """``||(H z)_Kc||_1 - ||(H z)_K||_1``; positive means ``z`` is balanced on ``K``."""
    H = _matrix(H)
    z = np.asarray(z, dtype=float).reshape(-1)
    if not np.any(z):
        raise InvalidInputError("z must be nonzero")
    v = np.abs(H @ z)
    inside = np.zeros(H.shape[0], dtype=bool)
    inside[list(K)] = True
    return math.fsum(v[~inside]) - math.fsum(v[inside])


def _pattern_lp(HK, HKc, signs):
    """Minimise ``||HKc z||_1`` subject to ``signs . (HK z) = 1``.

    Returns ``(value, z)`` or ``None`` when the constraint is infeasible.
    """
    c = HK.T @ signs
    cc = float(c @ c)
    if cc <= 1e-24 * max(1.0, float(np.abs(HK).max(initial=0.0)) ** 2):
        return None
    z0 = c / cc
    m = c.size
    if m == 1 or HKc.shape[0] == 0:
        z = z0
    else:
        N = linalg.null_space(c[None, :])
        # ||HKc (z0 + N u)||_1 = ||b - A u||_1 with b = HKc z0, A = -HKc N
        sol = solve_lad(-HKc @ N, HKc @ z0)
        z = z0 + N @ sol.x_hat
    return math.fsum(np.abs(HKc @ z)), z


def certify_support(H, K) -> CertResult:
    """Decide exact recoverability of every error supported on ``K``.

    Raises
    ------
    EnumerationLimitError
        ``|K| > MAX_SUPPORT``.
    DegenerateSupportError
        No sign pattern admits the normalisation (``H_K`` is zero).
    RankDeficiencyError
        The reduced regression on the complement is rank deficient.
    """
    H = _matrix(H)
    n, m = H.shape
    K = tuple(sorted(int(i) for i in K))
    k = len(K)
    if k > MAX_SUPPORT:
        raise EnumerationLimitError(f"|K| = {k} exceeds the enumeration bound {MAX_SUPPORT}")
    if k == 0:
        return CertResult(K, True, math.inf, np.empty(0), None)
    inside = np.zeros(n, dtype=bool)
    inside[list(K)] = True
    HK, HKc = H[inside], H[~inside]
    if HKc.shape[0] < m - 1:
        raise RankDeficiencyError("complement of K has too few rows for the reduced problem")

    best_val, best_signs, best_z = math.inf, None, None
    for tail in itertools.product((1.0, -1.0), repeat=k - 1):
        signs = np.array((1.0,) + tail)
        out = _pattern_lp(HK, HKc, signs)
        if out is None:
            continue
        val, z = out
        if val < best_val:
            best_val, best_signs, best_z = val, signs, z
    if best_signs is None:
        raise DegenerateSupportError(f"no sign pattern on {K} admits a normalised direction")

    certified = best_val > 1.0 + TIE_MARGIN
    marginal = abs(best_val - 1.0) <= TIE_MARGIN
    return CertResult(
        K, certified, best_val, best_signs, None if certified else best_z, marginal
    )


def _check_budget(n, k, max_lps):
    lps = math.comb(n, k) * (2 ** (k - 1) if k else 1)
    if lps > max_lps:
        raise EnumerationLimitError(
            f"C({n},{k}) * 2^{max(k - 1, 0)} = {lps} linear programs exceeds the budget {max_lps}"
        )


def certify_all_supports(H, k: int, max_lps: int = MAX_LPS):
    """Check every size-``k`` support in lexicographic order.

    Returns ``(True, None)`` or ``(False, K)`` with ``K`` the first failing
    support.
    """
    H = _matrix(H)
    n = H.shape[0]
    _check_budget(n, k, max_lps)
    for K in itertools.combinations(range(n), k):
        if not certify_support(H, K).certified:
            return False, K
    return True, None


def certification_report(H, k: int, max_lps: int = MAX_LPS) -> list[CertResult]:
    """:func:`certify_support` for every size-``k`` support, lexicographic order."""
    H = _matrix(H)
    n = H.shape[0]
    _check_budget(n, k, max_lps)
    return [certify_support(H, K) for K in itertools.combinations(range(n), k)]


def adversarial_error(H, K, z, tol: float = TIE_MARGIN) -> SparseVector:
    """Outlier vector ``e`` with ``e_K = (H z)_K`` that defeats unique recovery.

    For any state ``x`` and ``y = H x + e`` the candidate ``x + z`` has
    residual ``-(H z)_Kc``, so its objective ``||(H z)_Kc||_1`` does not
    exceed ``||e||_1``, the objective at ``x``.

    ``z`` must satisfy ``balancedness_margin(H, K, z) <= 0``; a positive
    margin up to ``tol * ||H z||_1`` is tolerated so that marginal
    witnesses are accepted.
    """
    H = _matrix(H)
    K = sorted(int(i) for i in K)
    margin = balancedness_margin(H, K, z)
    Hz = H @ np.asarray(z, dtype=float).reshape(-1)
    if margin > tol * math.fsum(np.abs(Hz)):
        raise InvalidWitnessError(f"z is balanced on K (margin {margin:.3g} > 0)")
    return SparseVector(H.shape[0], K, Hz[K])
