"""Correctable-fraction thresholds for l1 decoding with the sliding-window
Gaussian matrix.

A fraction ``beta`` of arbitrary outliers is provably correctable (for all
supports at once, with overwhelming probability) whenever some ``mu > 0``
and ``0 < delta < 1`` make

    H(beta) + m beta [log 2 + m mu^2 / 2 + log Phi(mu sqrt(m))]
            + (1/(2m - 1) - beta) [log 2 + mu^2 (1 - delta)^2 / 2
                                   + log(1 - Phi(mu (1 - delta)))]

negative, where ``H(beta)`` is the binary entropy in nats.  The first
bracket is nonnegative and the second nonpositive, so no ``beta >=
1/(2m - 1)`` can qualify.  :func:`strong_threshold` finds the largest
qualifying ``beta`` by bisection over a fixed ``(mu, delta)`` lattice with
coordinate refinement.

The tail term ``log(1 - Phi(u))`` is evaluated from the Mills-ratio
continued fraction for ``u >= 3`` so it stays accurate where ``1 - Phi``
underflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import InvalidParameterError

__all__ = [
    "std_normal_cdf",
    "log_gauss_tail",
    "log_std_normal_cdf",
    "mills_ratio",
    "ThresholdParams",
    "theorem1_lhs",
    "lhs_grid",
    "Lattice",
    "Feasibility",
    "is_feasible",
    "ThresholdResult",
    "strong_threshold",
    "expected_abs_gain",
]

_SQRT2 = math.sqrt(2.0)
_LOG2 = math.log(2.0)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_CF_START = 3.0
_CF_DEPTH = 60


def std_normal_cdf(u):
    """Standard normal CDF, ``0.5 * erfc(-u / sqrt(2))``."""
    out = 0.5 * erfc(-np.asarray(u, dtype=float) / _SQRT2)
    return out if out.ndim else float(out)


def mills_ratio(u):
    """``(1 - Phi(u)) / phi(u)`` for ``u >= 0``.

    Uses the continued fraction ``1/(u + 1/(u + 2/(u + 3/(u + ...))))`` at
    ``u >= 3`` (60 terms, full double precision there) and the erfc ratio
    below that.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    far = u >= _CF_START
    if np.any(far):
        uf = u[far]
        t = uf.copy()
        for k in range(_CF_DEPTH, 0, -1):
            t = uf + k / t
        out[far] = 1.0 / t
    near = ~far
    if np.any(near):
        un = u[near]
        out[near] = 0.5 * erfc(un / _SQRT2) * math.sqrt(2 * math.pi) * np.exp(0.5 * un * un)
    return out if out.ndim else float(out)


def log_gauss_tail(u):
    """``log(1 - Phi(u))`` without forming ``1 - Phi(u)`` by subtraction."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    neg = u < 0
    mid = (u >= 0) & (u < _CF_START)
    far = u >= _CF_START
    if np.any(neg):
        out[neg] = np.log1p(-0.5 * erfc(-u[neg] / _SQRT2))
    if np.any(mid):
        out[mid] = np.log(0.5 * erfc(u[mid] / _SQRT2))
    if np.any(far):
        uf = u[far]
        out[far] = -0.5 * uf * uf - _HALF_LOG_2PI + np.log(mills_ratio(uf))
    return out if out.ndim else float(out)


def log_std_normal_cdf(u):
    """``log Phi(u)``."""
    return log_gauss_tail(-np.asarray(u, dtype=float))


@dataclass(frozen=True)
class ThresholdParams:
    m: int
    beta: float
    mu: float
    delta: float

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameterError(f"m must be a positive integer, got {self.m}")
        if not 0 < self.beta < 1:
            raise InvalidParameterError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.mu > 0:
            raise InvalidParameterError(f"mu must be positive, got {self.mu}")
        if not 0 < self.delta < 1:
            raise InvalidParameterError(f"delta must lie in (0, 1), got {self.delta}")


def lhs_grid(m: int, beta: float, mu, delta):
    """Vectorised feasibility expression; ``mu`` and ``delta`` broadcast."""
    mu = np.asarray(mu, dtype=float)
    delta = np.asarray(delta, dtype=float)
    entropy = beta * math.log(1.0 / beta) + (1.0 - beta) * math.log(1.0 / (1.0 - beta))
    head = _LOG2 + 0.5 * m * mu * mu + log_std_normal_cdf(mu * math.sqrt(m))
    u = mu * (1.0 - delta)
    tail = _LOG2 + 0.5 * u * u + log_gauss_tail(u)
    return entropy + m * beta * head + (1.0 / (2 * m - 1) - beta) * tail


def theorem1_lhs(p: ThresholdParams) -> float:
    """Value of the feasibility expression at ``p`` (natural logarithms)."""
    return float(lhs_grid(p.m, p.beta, p.mu, p.delta))


@dataclass(frozen=True)
class Lattice:
    """Search lattice over ``(mu, delta)`` plus local refinement settings.

    Each refinement round shrinks the step by ``refine_factor`` and scans
    ``+-refine_span`` steps along ``mu`` and then ``delta`` around the
    incumbent.
    """

    mu_values: tuple = field(default_factory=lambda: tuple(np.round(0.05 * np.arange(1, 201), 10)))
    delta_values: tuple = field(
        default_factory=lambda: (0.001,) + tuple(np.round(0.01 * np.arange(1, 100), 10))
    )
    mu_step: float = 0.05
    delta_step: float = 0.01
    refine_rounds: int = 3
    refine_factor: float = 10.0
    refine_span: int = 10

    def describe(self) -> str:
        mu, de = self.mu_values, self.delta_values
        return (
            f"mu {len(mu)} pts [{mu[0]:g}, {mu[-1]:g}] x delta {len(de)} pts "
            f"[{de[0]:g}, {de[-1]:g}]; {self.refine_rounds} refinement rounds "
            f"x{self.refine_factor:g}, span {self.refine_span}"
        )


DEFAULT_LATTICE = Lattice()


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    mu: float
    delta: float
    lhs: float

    def __bool__(self):
        return self.feasible


def _minimise_lhs(m, beta, lattice):
    mu = np.asarray(lattice.mu_values, dtype=float)
    de = np.asarray(lattice.delta_values, dtype=float)
    vals = lhs_grid(m, beta, mu[:, None], de[None, :])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    best_mu, best_de, best = float(mu[i]), float(de[j]), float(vals[i, j])
    offsets = np.arange(-lattice.refine_span, lattice.refine_span + 1, dtype=float)
    h_mu, h_de = lattice.mu_step, lattice.delta_step
    for _ in range(lattice.refine_rounds):
        h_mu /= lattice.refine_factor
        h_de /= lattice.refine_factor
        cand = best_mu + h_mu * offsets
        cand = cand[cand > 0.5 * h_mu]
        v = lhs_grid(m, beta, cand, best_de)
        k = int(np.argmin(v))
        if v[k] < best:
            best_mu, best = float(cand[k]), float(v[k])
        cand = best_de + h_de * offsets
        cand = cand[(cand > 0) & (cand < 1)]
        v = lhs_grid(m, beta, best_mu, cand)
        k = int(np.argmin(v))
        if v[k] < best:
            best_de, best = float(cand[k]), float(v[k])
    return best_mu, best_de, best


def is_feasible(m: int, beta: float, lattice: Lattice = DEFAULT_LATTICE) -> Feasibility:
    """Whether some lattice point certifies ``beta`` for dimension ``m``.

    The returned :class:`Feasibility` is truthy when feasible and carries
    the minimising ``(mu, delta)`` and the expression value there.
    """
    if not 0 < beta < 1:
        raise InvalidParameterError(f"beta must lie in (0, 1), got {beta}")
    if m < 1:
        raise InvalidParameterError(f"m must be a positive integer, got {m}")
    mu, delta, value = _minimise_lhs(m, beta, lattice)
    return Feasibility(value < 0.0, mu, delta, value)


@dataclass(frozen=True)
class ThresholdResult:
    m: int
    beta_star: float
    mu_star: float
    delta_star: float
    lhs_at_star: float
    grid_resolution: str


def strong_threshold(
    m: int, tol_beta: float = 1e-5, lattice: Lattice = DEFAULT_LATTICE, floor: float = 1e-6
) -> ThresholdResult:
    """Largest feasible ``beta`` in ``(0, 1/(2m - 1))``, to within ``tol_beta``.

    Bisection assumes feasibility is monotone in ``beta``; afterwards the
    candidate is pushed up in ``tol_beta`` steps while the next step is
    still feasible, so ``beta_star + tol_beta`` is always infeasible.
    """
    if m < 1:
        raise InvalidParameterError(f"m must be a positive integer, got {m}")
    if not tol_beta > 0:
        raise InvalidParameterError("tol_beta must be positive")
    ceiling = 1.0 / (2 * m - 1)
    lo, hi = floor, min(ceiling, 1.0 - 1e-12)
    best = is_feasible(m, lo, lattice)
    if not best:
        raise InvalidParameterError(f"no feasible beta above the floor {floor:g} for m={m}")
    while hi - lo > tol_beta:
        mid = 0.5 * (lo + hi)
        f = is_feasible(m, mid, lattice)
        if f:
            lo, best = mid, f
        else:
            hi = mid
    while lo + tol_beta < ceiling:
        f = is_feasible(m, lo + tol_beta, lattice)
        if not f:
            break
        lo, best = lo + tol_beta, f
    return ThresholdResult(m, lo, best.mu, best.delta, best.lhs, lattice.describe())


def expected_abs_gain(l, t, sigma=1.0):
    """``E|l + t X| - |l|`` for ``X ~ N(0, sigma^2)``.

    Closed form ``sqrt(2/pi) t sigma exp(-l^2 / (2 t^2 sigma^2))
    - 2 |l| (1 - Phi(|l| / (t sigma)))``, evaluated as
    ``2 s phi(u) (1 - u R(u))`` with ``s = t sigma``, ``u = |l| / s`` and
    ``R`` the Mills ratio, which avoids cancellation for large ``|l|``.
    Nonnegative and nonincreasing in ``|l|``.
    """
    t = np.asarray(t, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(t <= 0) or np.any(sigma <= 0):
        raise InvalidParameterError("t and sigma must be positive")
    s = t * sigma
    u = np.abs(np.asarray(l, dtype=float)) / s
    phi = np.exp(-0.5 * u * u - _HALF_LOG_2PI)
    out = np.maximum(2.0 * s * phi * (1.0 - u * mills_ratio(u)), 0.0)
    return out if out.ndim else float(out)
