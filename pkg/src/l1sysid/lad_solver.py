"""Least-absolute-deviation decoding, ``min_x ||y - H x||_1``.

The solver is a descent simplex over vertices of the l1 objective, in the
Barrodale-Roberts style.  A vertex is indexed by a *basis* ``B`` of ``m``
rows whose residuals are zero; the iterate is ``x = H_B^{-1} y_B``.  At
each vertex the dual multipliers of the basic rows are

    s_B = -H_B^{-T} H_N^T sign(r_N),

and the vertex is optimal iff ``|s_B| <= 1``.  Otherwise a basic row ``j``
with ``|s_Bj| > 1`` is released and the objective is minimised exactly
along the edge that keeps the other basic residuals at zero.  That
one-dimensional problem is a weighted median over the breakpoints
``r_i / a_i``, so a single pivot may pass several vertices.

Degenerate vertices (extra zero residuals, which occur whenever ``y``
contains an exact fit on more than ``m`` rows) are resolved by running
the pivots on a copy of ``y`` nudged by a deterministic per-row
perturbation of relative size 1e-10.  The optimal basis of the nudged
problem is then evaluated on the original ``y``.  The nudge depends only
on the *content* of each row of ``H``, which keeps the path equivariant
under joint row permutations, and it scales with ``||y||_inf``, which
keeps the path invariant under ``y -> c y``.

Optimality of the returned point is independently checkable through
:func:`check_optimality`, which builds a dual vector ``s`` (``s_i =
sign(r_i)`` on nonzero residuals, ``|s_i| <= 1`` elsewhere, ``H^T s = 0``)
by a small linear program.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from .errors import InvalidDimensionError, NonConvergenceError, RankDeficiencyError

__all__ = [
    "LadSolution",
    "OptimalityCertificate",
    "solve_lad",
    "check_optimality",
    "objective",
    "uniqueness_margin",
]

PIVOT_TOL = 1e-11
CERT_TOL = 1e-9
_NUDGE = 1e-10


@dataclass(frozen=True)
class LadSolution:
    """Result of :func:`solve_lad`.

    ``zero_residual_count`` counts residuals with ``|r_i| <= tol * ||y||_inf``.
    ``basis`` lists the rows that define the returned vertex.
    """

    x_hat: np.ndarray
    objective: float
    residual: np.ndarray
    zero_residual_count: int
    iterations: int
    degenerate: bool
    basis: tuple[int, ...] = ()


@dataclass(frozen=True)
class OptimalityCertificate:
    """Dual certificate for an l1 regression point.

    ``gradient_norm`` is ``||H^T s||_inf``; ``valid`` requires it to be at
    most ``tol`` times the largest column l1 norm of ``H`` (floored at 1).
    """

    dual_signs: np.ndarray
    gradient_norm: float
    tol: float
    valid: bool


def _as_problem(H, y):
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if H.ndim == 1:
        H = H[:, None]
    if H.ndim != 2 or H.shape[0] != y.size:
        raise InvalidDimensionError(f"H has shape {H.shape} but y has length {y.size}")
    return H, y


def objective(H, y, x) -> float:
    """``||y - H x||_1``, summed with :func:`math.fsum` (order independent)."""
    H, y = _as_problem(H, y)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != H.shape[1]:
        raise InvalidDimensionError(f"x has length {x.size}, H has {H.shape[1]} columns")
    return math.fsum(np.abs(y - H @ x))


def _row_nudge(H):
    """Deterministic values in +-[0.5, 1) derived from each row's bit pattern."""
    n, m = H.shape
    bits = np.ascontiguousarray(H).view(np.uint64)
    mult = (np.arange(1, m + 1, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)) | np.uint64(1)
    with np.errstate(over="ignore"):
        h = (bits * mult).sum(axis=1, dtype=np.uint64)
        h ^= h >> np.uint64(33)
        h *= np.uint64(0xFF51AFD7ED558CCD)
        h ^= h >> np.uint64(33)
        h *= np.uint64(0xC4CEB9FE1A85EC53)
        h ^= h >> np.uint64(33)
    mag = 0.5 + 0.5 * (h >> np.uint64(11)).astype(float) / 2.0**53
    sign = np.where(h & np.uint64(1), 1.0, -1.0)
    return sign * mag


def _initial_basis(H):
    n, m = H.shape
    if n < m:
        raise RankDeficiencyError(f"need n >= m, got {n} x {m}")
    _, R, piv = linalg.qr(H.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < m or diag[0] == 0 or diag[m - 1] <= max(n, m) * np.finfo(float).eps * diag[0]:
        raise RankDeficiencyError("H does not have full column rank")
    return piv[:m].copy()


def _signs(r, tiny):
    s = np.sign(r)
    s[np.abs(r) <= tiny] = 0.0
    return s


def _pivot(H, yp, B, tiny, pivot_tol, bland):
    """One simplex pivot on the nudged problem.

    Returns ``(x, status)`` where status is ``"optimal"``, ``"moved"`` or
    ``"stuck"`` (no basic row admits descent).
    """
    lu = linalg.lu_factor(H[B], check_finite=False)
    x = linalg.lu_solve(lu, yp[B], check_finite=False)
    r = yp - H @ x
    r[B] = 0.0
    s = _signs(r, tiny)
    s[B] = 0.0
    sB = -linalg.lu_solve(lu, H.T @ s, trans=1, check_finite=False)
    excess = np.abs(sB) - 1.0
    viol = np.flatnonzero(excess > pivot_tol)
    if viol.size == 0:
        return x, "optimal"
    if bland:
        viol = viol[np.argsort(B[viol], kind="stable")]
    else:
        viol = viol[np.argsort(-excess[viol], kind="stable")]
    zero_nb = s == 0.0
    zero_nb[B] = False
    for jpos in viol:
        sigma = -math.copysign(1.0, sB[jpos])
        unit = np.zeros(len(B))
        unit[jpos] = sigma
        d = linalg.lu_solve(lu, unit, check_finite=False)
        a = H @ d
        a[B] = 0.0
        a[B[jpos]] = sigma
        g0 = 1.0 - abs(sB[jpos]) + np.abs(a[zero_nb]).sum()
        if g0 >= -pivot_tol:
            continue
        cand = np.flatnonzero((s != 0.0) & (a != 0.0))
        t = r[cand] / a[cand]
        keep = t > 0
        cand, t = cand[keep], t[keep]
        if cand.size == 0:
            continue
        order = np.lexsort((cand, t))
        slope = g0 + np.cumsum(2.0 * np.abs(a[cand[order]]))
        hit = np.flatnonzero(slope >= 0.0)
        k = hit[0] if hit.size else order.size - 1
        B[jpos] = cand[order[k]]
        return x, "moved"
    return x, "stuck"


def _lp_fallback(H, y):
    """Generic LP reformulation, used only when the pivots stall."""
    n, m = H.shape
    c = np.concatenate([np.zeros(m), np.ones(2 * n)])
    A_eq = np.hstack([H, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * m + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs-ds")
    if res.status != 0:
        return None
    x = res.x[:m]
    r = np.abs(y - H @ x)
    return np.sort(np.argsort(r, kind="stable")[:m])


def _basis_margin(H, B, r, r_nudged, ztol):
    """``1 - max|s_B|`` for the dual vector of basis ``B``, taking the signs of
    extra zero residuals from the nudged problem.

    A positive value proves uniqueness: along a flat direction ``d`` every
    row with ``|s_i| < 1`` needs ``H_i d = 0``, and the basic rows alone
    already force ``d = 0``.
    """
    s = np.sign(r)
    Z = np.abs(r) <= ztol
    s[Z] = np.sign(r_nudged[Z])
    s[list(B)] = 0.0
    sB = -np.linalg.solve(H[B].T, H.T @ s)
    return 1.0 - float(np.max(np.abs(sB)))


def uniqueness_margin(H, residual, ztol) -> float:
    """Largest ``eps`` such that a dual vector with ``|s_i| <= 1 - eps`` on the
    zero residuals exists.  Positive means the minimiser is unique; returns
    ``-inf`` when the zero rows do not span ``R^m`` or no dual vector exists.
    """
    H = np.asarray(H, dtype=float)
    r = np.asarray(residual, dtype=float)
    m = H.shape[1]
    Z = np.abs(r) <= ztol
    sig = np.sign(r[~Z])
    g = H[~Z].T @ sig
    HZ = H[Z]
    if HZ.shape[0] < m or np.linalg.matrix_rank(HZ) < m:
        return -math.inf
    if not sig.size:
        return 1.0
    if HZ.shape[0] == m:
        sZ = -np.linalg.solve(HZ.T, g)
        return 1.0 - float(np.max(np.abs(sZ)))
    nz = HZ.shape[0]
    # variables: s_Z (nz), eps ; maximise eps
    c = np.zeros(nz + 1)
    c[-1] = -1.0
    A_eq = np.hstack([HZ.T, np.zeros((m, 1))])
    eye = np.eye(nz)
    col = np.ones((nz, 1))
    A_ub = np.vstack([np.hstack([eye, col]), np.hstack([-eye, col])])
    b_ub = np.ones(2 * nz)
    bounds = [(-1, 1)] * nz + [(None, 1)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=-g, bounds=bounds, method="highs")
    if res.status != 0:
        return -math.inf
    return float(res.x[-1])


def solve_lad(H, y, tol: float = CERT_TOL, pivot_tol: float = PIVOT_TOL, max_iter=None) -> LadSolution:
    """Exact minimiser of ``||y - H x||_1`` at a vertex.

    Parameters
    ----------
    H : (n, m) array_like
        Full column rank observation matrix.
    y : (n,) array_like
        Observations.
    tol : float
        Relative threshold (against ``||y||_inf``) below which a residual
        counts as zero when reporting and classifying the solution.
    pivot_tol : float
        Slack allowed on ``|s_B| <= 1`` before a pivot is taken.
    max_iter : int, optional
        Pivot cap, ``50 * (n + m)`` by default.

    Raises
    ------
    RankDeficiencyError
        ``H`` is not of full column rank.
    NonConvergenceError
        The pivot cap was hit; ``exc.best`` holds the last vertex.
    """
    H, y = _as_problem(H, y)
    n, m = H.shape
    B = _initial_basis(H)
    scale = float(np.max(np.abs(y))) if n else 0.0
    if max_iter is None:
        max_iter = 50 * (n + m)

    def finish(B, iterations, yp=None):
        x = np.linalg.solve(H[B], y[B])
        r = y - H @ x
        ztol = tol * scale
        margin = -math.inf
        if yp is not None:
            margin = _basis_margin(H, B, r, yp - H @ np.linalg.solve(H[B], yp[B]), ztol)
        if margin <= tol:
            margin = uniqueness_margin(H, r, ztol)
        return LadSolution(
            x_hat=x,
            objective=math.fsum(np.abs(r)),
            residual=r,
            zero_residual_count=int(np.count_nonzero(np.abs(r) <= ztol)),
            iterations=iterations,
            degenerate=bool(margin <= tol),
            basis=tuple(int(b) for b in B),
        )

    if scale == 0.0:
        return finish(B, 0)
    x0 = np.linalg.solve(H[B], y[B])
    if np.max(np.abs(y - H @ x0)) <= tol * scale:
        return finish(B, 0)

    yp = y + _NUDGE * scale * _row_nudge(H)
    tiny = 1e-14 * scale
    bland = False
    prev_obj = math.inf
    for it in range(max_iter):
        x, status = _pivot(H, yp, B, tiny, pivot_tol, bland)
        if status == "optimal":
            return finish(B, it, yp)
        if status == "stuck":
            alt = _lp_fallback(H, y)
            if alt is None:
                break
            return finish(alt, it)
        obj = float(np.abs(yp - H @ x).sum())
        # switch to lowest-index selection once progress stalls
        bland = bland or obj >= prev_obj * (1 - 1e-15)
        prev_obj = obj
    raise NonConvergenceError(
        f"l1 simplex did not converge within {max_iter} pivots", best=finish(B, max_iter)
    )


def check_optimality(H, y, x_hat, tol: float = CERT_TOL) -> OptimalityCertificate:
    """Search for a dual certificate proving ``x_hat`` minimises ``||y - H x||_1``.

    Residuals with ``|r_i| <= tol * max(||y||_inf, ||H x_hat||_inf)`` are
    treated as zero; their multipliers are chosen in ``[-1, 1]`` by a linear
    program minimising ``||H^T s||_inf``, then polished by a least-squares
    correction on the multipliers that are not at a bound.
    """
    H, y = _as_problem(H, y)
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    r = y - H @ x_hat
    scale = max(float(np.max(np.abs(y), initial=0.0)), float(np.max(np.abs(H @ x_hat), initial=0.0)))
    ztol = tol * (scale if scale > 0 else 1.0)
    Z = np.abs(r) <= ztol
    s = np.sign(r)
    s[Z] = 0.0
    g = H.T @ s
    nz = int(Z.sum())
    if nz:
        HZt = H[Z].T
        m = H.shape[1]
        c = np.zeros(nz + 1)
        c[-1] = 1.0
        ones = np.ones((m, 1))
        A_ub = np.vstack([np.hstack([HZt, -ones]), np.hstack([-HZt, -ones])])
        b_ub = np.concatenate([-g, g])
        bounds = [(-1, 1)] * nz + [(0, None)]
        res = linprog(
            c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        if res.status == 0:
            sZ = np.clip(res.x[:nz], -1.0, 1.0)
            free = np.abs(sZ) < 1.0 - 1e-9
            if free.any():
                resid = g + HZt @ sZ
                delta = np.linalg.lstsq(HZt[:, free], -resid, rcond=None)[0]
                polished = sZ.copy()
                polished[free] += delta
                if np.max(np.abs(polished)) <= 1.0:
                    sZ = polished
            s[Z] = sZ
    grad = float(np.max(np.abs(H.T @ s), initial=0.0))
    gscale = max(1.0, float(np.max(np.abs(H).sum(axis=0), initial=0.0)))
    valid = grad <= tol * gscale and bool(np.all(np.abs(s) <= 1.0))
    return OptimalityCertificate(s, grad, tol, bool(valid))
