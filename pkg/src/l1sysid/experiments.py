"""Monte Carlo experiments: recovery trials, weak-recovery and consistency
curves, the l1-norm concentration probe and the threshold curve, plus CSV
and SVG writers.

Every trial is keyed by ``(master_seed, trial_index)``.  Per-trial seeds
come from :class:`numpy.random.SeedSequence`, so results do not depend on
how trials are scheduled; with ``threads > 1`` trials run in a process
pool and are gathered back in index order, which keeps output files
byte-identical across thread counts.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, NonConvergenceError, RankDeficiencyError
from .lad_solver import solve_lad
from .signal_model import (
    NoiseSpec,
    build_matrix,
    generate_sequence,
    sample_noise,
    sample_outliers,
)
from .thresholds import ThresholdResult, strong_threshold

__all__ = [
    "split_seed",
    "TrialConfig",
    "TrialResult",
    "CurvePoint",
    "run_recovery_trial",
    "weak_recovery_curve",
    "consistency_experiment",
    "concentration_probe",
    "threshold_curve",
    "weak_curve_rows",
    "consistency_rows",
    "concentration_rows",
    "threshold_rows",
    "emit_csv",
    "emit_svg_lineplot",
    "WEAK_HEADER",
    "CONSISTENCY_HEADER",
    "THRESHOLD_HEADER",
    "CONCENTRATION_HEADER",
    "DEFAULT_FAMILIES",
    "EXACT_TOL",
]

WEAK_HEADER = ("n", "m", "beta", "trials", "successes", "success_rate", "failed_solves", "master_seed")
CONSISTENCY_HEADER = (
    "family", "n", "trials", "median_err_l2", "mean_err_l2", "iqr_err_l2", "failed_solves", "master_seed",
)
THRESHOLD_HEADER = ("m", "beta_star", "mu_star", "delta_star", "lhs_at_star")
CONCENTRATION_HEADER = ("n", "m", "trials", "mean_ratio", "std_ratio", "master_seed")

DEFAULT_FAMILIES = ("gamma", "gaussian", "exponential")
EXACT_TOL = 1e-6
_E_ABS = math.sqrt(2.0 / math.pi)


def split_seed(seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from ``seed`` and integer ``keys``."""
    ss = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class TrialConfig:
    """Parameters shared by all trials of one curve point.

    The seed stored inside ``noise`` is ignored; each trial derives its own.
    """

    n: int
    m: int
    outlier_fraction: float = 0.0
    outlier_sigma: float = 10.0
    noise: NoiseSpec = field(default_factory=NoiseSpec.none)
    trials: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < self.m:
            raise InvalidParameterError(f"need n >= m >= 1, got n={self.n}, m={self.m}")
        if not 0 <= self.outlier_fraction <= 1:
            raise InvalidParameterError("outlier_fraction must lie in [0, 1]")
        if not self.outlier_sigma > 0:
            raise InvalidParameterError("outlier_sigma must be positive")
        if self.trials < 1:
            raise InvalidParameterError("trials must be at least 1")

    @property
    def k(self) -> int:
        return int(round(self.outlier_fraction * self.n))


@dataclass(frozen=True)
class TrialResult:
    seed: int
    err_l2: float
    objective: float
    exact_recovery: bool
    degenerate: bool


@dataclass(frozen=True)
class CurvePoint:
    """One aggregated point.

    ``statistic`` is a success rate or a median error depending on the
    curve; ``spread`` is the binomial standard error, the interquartile
    range or the standard deviation respectively.  ``count`` trials
    contributed and ``failed`` more were dropped after a solver failure.
    """

    abscissa: float
    statistic: float
    spread: float
    count: int
    failed: int = 0
    mean: float = math.nan
    successes: int = 0


def run_recovery_trial(cfg: TrialConfig, trial_index: int) -> TrialResult:
    """Draw ``H``, ``x ~ N(0, I)``, outliers and noise for one trial and decode."""
    seed = split_seed(cfg.master_seed, trial_index)
    s_seq, s_x, s_e, s_w = np.random.SeedSequence(seed).generate_state(4, np.uint64)
    H = build_matrix(generate_sequence(cfg.n, cfg.m, s_seq)).array
    x = np.random.default_rng(int(s_x)).standard_normal(cfg.m)
    e = sample_outliers(cfg.n, cfg.k, cfg.outlier_sigma, s_e)
    w = sample_noise(cfg.n, cfg.noise.with_seed(int(s_w)))
    y = H @ x + e.to_dense() + w
    sol = solve_lad(H, y)
    err = float(np.linalg.norm(sol.x_hat - x))
    return TrialResult(seed, err, sol.objective, err <= EXACT_TOL, sol.degenerate)


def _safe_trial(args):
    cfg, i = args
    try:
        return run_recovery_trial(cfg, i)
    except (NonConvergenceError, RankDeficiencyError):
        return None


def _run_all(jobs, threads):
    if threads is None or threads <= 1 or len(jobs) < 2:
        return [_safe_trial(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_safe_trial, jobs, chunksize=chunk))


def weak_recovery_curve(n_grid, m: int, beta: float, trials: int, master_seed: int, threads: int = 1):
    """Exact-recovery rate versus ``n`` for a random support of fraction ``beta``, no noise.

    Each trial draws its own support.  ``spread`` is the binomial standard
    error of the rate.
    """
    if not 0 <= beta < 1:
        raise InvalidParameterError("beta must lie in [0, 1)")
    cfgs = [
        TrialConfig(int(n), m, beta, 10.0, NoiseSpec.none(), trials, split_seed(master_seed, int(n)))
        for n in n_grid
    ]
    jobs = [(cfg, i) for cfg in cfgs for i in range(trials)]
    results = _run_all(jobs, threads)
    points = []
    for j, cfg in enumerate(cfgs):
        chunk = [r for r in results[j * trials:(j + 1) * trials] if r is not None]
        count = len(chunk)
        succ = sum(r.exact_recovery for r in chunk)
        rate = succ / count if count else math.nan
        se = math.sqrt(rate * (1 - rate) / count) if count else math.nan
        points.append(CurvePoint(cfg.n, rate, se, count, trials - count, successes=succ))
    return points


def _error_point(n, chunk, trials):
    errs = np.array([r.err_l2 for r in chunk])
    if not errs.size:
        return CurvePoint(n, math.nan, math.nan, 0, trials)
    q1, med, q3 = np.percentile(errs, [25, 50, 75])
    return CurvePoint(n, float(med), float(q3 - q1), errs.size, trials - errs.size, float(errs.mean()))


def consistency_experiment(
    n_grid,
    noise_families=DEFAULT_FAMILIES,
    trials: int = 50,
    master_seed: int = 0,
    m: int = 5,
    outlier_fraction: float = 0.5,
    outlier_sigma: float = 10.0,
    threads: int = 1,
):
    """Estimation error versus ``n`` under outliers plus unit-energy noise.

    Returns ``{family: [CurvePoint, ...]}`` with median error as
    ``statistic``, IQR as ``spread`` and the mean in ``mean``.  All
    families share the same matrices, states and outliers at each
    ``(n, trial)``; only the noise law differs.
    """
    cfgs = []
    for fam in noise_families:
        for n in n_grid:
            cfgs.append(
                TrialConfig(
                    int(n), m, outlier_fraction, outlier_sigma, NoiseSpec.unit_energy(fam),
                    trials, split_seed(master_seed, int(n)),
                )
            )
    jobs = [(cfg, i) for cfg in cfgs for i in range(trials)]
    results = _run_all(jobs, threads)
    table = {fam: [] for fam in noise_families}
    for j, cfg in enumerate(cfgs):
        chunk = [r for r in results[j * trials:(j + 1) * trials] if r is not None]
        table[cfg.noise.family].append(_error_point(cfg.n, chunk, trials))
    return table


def concentration_probe(n: int, m: int, z, trials: int, master_seed: int) -> CurvePoint:
    """Statistics of ``||H z||_1 / (n sqrt(2/pi))`` over fresh matrices.

    Each ``(H z)_i`` is standard normal for a unit ``z``, so the ratio has
    mean 1 and concentrates as ``n`` grows.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != m or abs(np.linalg.norm(z) - 1.0) > 1e-9:
        raise InvalidInputError("z must be a unit vector of length m")
    ratios = np.empty(trials)
    for i in range(trials):
        H = build_matrix(generate_sequence(n, m, split_seed(master_seed, n, i))).array
        ratios[i] = np.abs(H @ z).sum() / (n * _E_ABS)
    std = float(ratios.std(ddof=1)) if trials > 1 else 0.0
    return CurvePoint(n, float(ratios.mean()), std, trials, mean=float(ratios.mean()))


def threshold_curve(m_min: int = 1, m_max: int = 10, tol_beta: float = 1e-5) -> list[ThresholdResult]:
    """Strong threshold for each ``m`` in ``m_min..m_max``."""
    if not 1 <= m_min <= m_max <= 20:
        raise InvalidParameterError("need 1 <= m_min <= m_max <= 20")
    return [strong_threshold(m, tol_beta) for m in range(m_min, m_max + 1)]


# --- tables --------------------------------------------------------------------


def weak_curve_rows(points, m, beta, trials, master_seed):
    return [
        (int(p.abscissa), m, beta, trials, p.successes, p.statistic, p.failed, master_seed)
        for p in points
    ]


def consistency_rows(table, trials, master_seed):
    return [
        (fam, int(p.abscissa), trials, p.statistic, p.mean, p.spread, p.failed, master_seed)
        for fam, points in table.items()
        for p in points
    ]


def concentration_rows(points, m, master_seed):
    return [(int(p.abscissa), m, p.count, p.statistic, p.spread, master_seed) for p in points]


def threshold_rows(results):
    return [(r.m, r.beta_star, r.mu_star, r.delta_star, r.lhs_at_star) for r in results]


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(rows, path, header) -> Path:
    """Write ``rows`` under ``header``; floats use ``repr`` for exact round trips."""
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to write an empty table")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"could not write CSV to {path}: {exc}") from exc
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def emit_svg_lineplot(series, path, xlabel="", ylabel="", title="", logy=False) -> Path:
    """Minimal 800x500 SVG line chart, one polyline per entry of ``series``.

    ``series`` maps a label to ``(xs, ys)``.  With ``logy`` the y axis is
    log10; nonpositive values are dropped.
    """
    series = {k: (np.asarray(x, float), np.asarray(y, float)) for k, (x, y) in dict(series).items()}
    if not series or all(x.size == 0 for x, _ in series.values()):
        raise ValueError("refusing to plot an empty table")
    tf = (lambda v: np.log10(v)) if logy else (lambda v: v)
    clean = {}
    for label, (x, y) in series.items():
        keep = np.isfinite(y) & ((y > 0) if logy else True)
        clean[label] = (x[keep], tf(y[keep]))
    xs = np.concatenate([x for x, _ in clean.values()])
    ys = np.concatenate([y for _, y in clean.values()])
    if xs.size == 0:
        raise ValueError("no finite points to plot")
    W, Hh, L, R, T, B = 800, 500, 80, 160, 40, 60
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px = lambda v: L + (v - x0) / (x1 - x0) * (W - L - R)  # noqa: E731
    py = lambda v: Hh - B - (v - y0) / (y1 - y0) * (Hh - T - B)  # noqa: E731
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{Hh}" '
        f'viewBox="0 0 {W} {Hh}">',
        f'<rect x="0" y="0" width="{W}" height="{Hh}" fill="white"/>',
        f'<line x1="{L}" y1="{Hh - B}" x2="{W - R}" y2="{Hh - B}" stroke="black"/>',
        f'<line x1="{L}" y1="{T}" x2="{L}" y2="{Hh - B}" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        out.append(
            f'<text x="{px(v):.1f}" y="{Hh - B + 18}" font-size="12" text-anchor="middle">{v:.4g}</text>'
        )
    for v in _ticks(y0, y1):
        lab = f"{10 ** v:.3g}" if logy else f"{v:.4g}"
        out.append(
            f'<text x="{L - 6}" y="{py(v) + 4:.1f}" font-size="12" text-anchor="end">{lab}</text>'
        )
    out.append(
        f'<text x="{(L + W - R) / 2:.1f}" y="{Hh - 15}" font-size="14" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="20" y="{(T + Hh - B) / 2:.1f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 20 {(T + Hh - B) / 2:.1f})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{W / 2:.1f}" y="24" font-size="16" text-anchor="middle">{escape(title)}</text>')
    for i, (label, (x, y)) in enumerate(clean.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = T + 20 * i + 10
        out.append(f'<line x1="{W - R + 15}" y1="{ly}" x2="{W - R + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - R + 46}" y="{ly + 4}" font-size="12">{escape(str(label))}</text>')
    out.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"could not write SVG to {path}: {exc}") from exc
    return path
