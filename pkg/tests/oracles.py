"""Independent reference computations used by the tests.

None of these share code with the package: special functions come from
mpmath quadrature, l1 regression from vertex enumeration or HiGHS, and
balancedness from direct geometric arguments.
"""
import itertools
import math

import mpmath as mp
import numpy as np
from scipy.optimize import linprog

mp.mp.dps = 20


def _phi(t):
    return mp.exp(-t * t / 2) / mp.sqrt(2 * mp.pi)


def normal_cdf_quad(u):
    """Phi(u) = 1/2 +- integral of the density over [0, |u|]."""
    u = mp.mpf(u)
    half = mp.quad(_phi, [0, abs(u)], method="gauss-legendre")
    return mp.mpf("0.5") + half if u >= 0 else mp.mpf("0.5") - half


def log_tail_quad(u):
    """log(1 - Phi(u)); for u >= 0 via log phi(u) + log int_0^inf exp(-u s - s^2/2) ds."""
    u = mp.mpf(u)
    if u < 0:
        return mp.log(1 - normal_cdf_quad(u))
    integral = mp.quad(lambda s: mp.exp(-u * s - s * s / 2), [0, 1, mp.inf])
    return -u * u / 2 - mp.log(mp.sqrt(2 * mp.pi)) + mp.log(integral)


def feasibility_lhs_mp(m, beta, mu, delta):
    """The correctable-fraction expression evaluated at 20 digits."""
    m, beta, mu, delta = int(m), mp.mpf(beta), mp.mpf(mu), mp.mpf(delta)
    ent = beta * mp.log(1 / beta) + (1 - beta) * mp.log(1 / (1 - beta))
    head = mp.log(2) + m * mu**2 / 2 + mp.log(normal_cdf_quad(mu * mp.sqrt(m)))
    u = mu * (1 - delta)
    tail = mp.log(2) + u**2 / 2 + log_tail_quad(u)
    return ent + m * beta * head + (mp.mpf(1) / (2 * m - 1) - beta) * tail


def expected_gain_quad(l, t, sigma):
    """E|l + tX| - |l| for X ~ N(0, sigma^2) by direct quadrature."""
    l, s = mp.mpf(l), mp.mpf(t) * mp.mpf(sigma)
    f = lambda x: (abs(l + s * x) - abs(l)) * _phi(x)  # noqa: E731
    pts = sorted({-mp.inf, -l / s, 0, mp.inf}) if l != 0 else [-mp.inf, 0, mp.inf]
    return mp.quad(f, pts)


def lad_vertex_bruteforce(H, y):
    """Minimum of ||y - Hx||_1 over all vertices defined by m rows."""
    H = np.asarray(H, float)
    n, m = H.shape
    best, best_x = math.inf, None
    for rows in itertools.combinations(range(n), m):
        Hb = H[list(rows)]
        if abs(np.linalg.det(Hb)) < 1e-12:
            continue
        x = np.linalg.solve(Hb, y[list(rows)])
        val = float(np.abs(y - H @ x).sum())
        if val < best:
            best, best_x = val, x
    return best, best_x


def lad_lp(H, y):
    """HiGHS solution of min sum(u + v) s.t. Hx + u - v = y."""
    H = np.asarray(H, float)
    n, m = H.shape
    c = np.r_[np.zeros(m), np.ones(2 * n)]
    A = np.hstack([H, np.eye(n), -np.eye(n)])
    res = linprog(c, A_eq=A, b_eq=y, bounds=[(None, None)] * m + [(0, None)] * (2 * n), method="highs")
    assert res.status == 0
    return res.fun, res.x[:m]


def weighted_median_fit(h, y):
    """argmin_x sum |y_i - h_i x| for scalar x: weighted median of y_i/h_i, weights |h_i|."""
    h, y = np.asarray(h, float), np.asarray(y, float)
    keep = h != 0
    r, w = y[keep] / h[keep], np.abs(h[keep])
    order = np.argsort(r)
    r, w = r[order], w[order]
    c = np.cumsum(w)
    return float(r[np.searchsorted(c, 0.5 * c[-1])])


def balanced_m1(h, K):
    """Balancedness for m = 1: ||h_K||_1 < ||h_Kc||_1."""
    h = np.abs(np.asarray(h, float).reshape(-1))
    inside = np.zeros(h.size, bool)
    inside[list(K)] = True
    return h[inside].sum() < h[~inside].sum()


def balanced_m2(H, K):
    """Balancedness for m = 2.

    The margin ||(Hz)_Kc||_1 - ||(Hz)_K||_1 is linear on each cone between
    consecutive directions where some (Hz)_i vanishes, so it is positive
    everywhere iff it is positive on all those boundary directions.
    """
    H = np.asarray(H, float)
    inside = np.zeros(H.shape[0], bool)
    inside[list(K)] = True
    worst = math.inf
    for row in H:
        if not row.any():
            continue
        z = np.array([-row[1], row[0]])
        for sgn in (1.0, -1.0):
            v = np.abs(H @ (sgn * z)) / np.linalg.norm(z)
            worst = min(worst, v[~inside].sum() - v[inside].sum())
    return worst > 0, worst
