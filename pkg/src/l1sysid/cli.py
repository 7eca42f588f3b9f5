"""Command-line entry point.

Every subcommand writes its data files plus ``run-manifest.txt`` (the fully
resolved configuration, reusable through ``--config``) into
``--output-dir`` and prints one summary line on stdout.  Progress goes to
stderr.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from .certifier import certification_report
from .errors import (
    DegenerateSupportError,
    EnumerationLimitError,
    NonConvergenceError,
    RankDeficiencyError,
)
from .lad_solver import check_optimality, solve_lad
from .signal_model import (
    NOISE_FAMILIES,
    NoiseSpec,
    build_matrix,
    generate_sequence,
    observe,
    read_instance,
    sample_noise,
    sample_outliers,
    write_instance,
)

MANIFEST = "run-manifest.txt"


def _int_list(text):
    return [int(tok) for tok in str(text).replace(" ", "").split(",") if tok]


def _str_list(text):
    return [tok for tok in str(text).replace(" ", "").split(",") if tok]


def _family(text):
    if text not in NOISE_FAMILIES:
        raise argparse.ArgumentTypeError(f"noise must be one of {', '.join(NOISE_FAMILIES)}")
    return text


def _families(text):
    fams = _str_list(text)
    for f in fams:
        _family(f)
    return fams


def _fmt_list(values):
    return ",".join(str(v) for v in values)


# name -> (type, default, help); shared options first
COMMON = {
    "seed": (int, 0, "master seed"),
    "output_dir": (str, ".", "directory for all output files"),
    "threads": (int, os.cpu_count() or 1, "worker processes for Monte Carlo trials"),
}

COMMANDS = {
    "gen": (
        "generate and serialise one problem instance",
        {
            "n": (int, 100, "number of observations"),
            "m": (int, 5, "state dimension"),
            "k": (int, 0, "number of outliers"),
            "outlier_sigma": (float, 10.0, "outlier standard deviation"),
            "noise": (_family, "none", "noise family: none, gaussian, exponential, gamma"),
            "noise_param": (float, 0.0, "family parameter; 0 selects the unit-energy member"),
            "out": (str, "instance.txt", "instance file name"),
        },
    ),
    "solve": (
        "decode a serialised instance by l1 minimisation",
        {
            "instance": (str, "instance.txt", "instance file to replay"),
            "tol": (float, 1e-9, "zero-residual and certificate tolerance"),
            "out": (str, "solution.csv", "solution file name"),
        },
    ),
    "threshold": (
        "strong correctable fraction versus m",
        {
            "m_min": (int, 1, "smallest m"),
            "m_max": (int, 10, "largest m"),
            "tol_beta": (float, 1e-5, "bisection tolerance on beta"),
        },
    ),
    "certify": (
        "exact recoverability of every size-k support of one random matrix",
        {
            "n": (int, 12, "number of observations"),
            "m": (int, 1, "state dimension"),
            "k": (int, 1, "support size"),
            "max_lps": (int, 10**6, "budget on the number of linear programs"),
        },
    ),
    "weak-curve": (
        "exact-recovery rate versus n for a random outlier support",
        {
            "n_grid": (_int_list, [100, 200, 300, 400, 500], "comma-separated n values"),
            "m": (int, 5, "state dimension"),
            "beta": (float, 0.2, "outlier fraction"),
            "trials": (int, 200, "trials per n"),
        },
    ),
    "consistency": (
        "estimation error versus n under outliers plus noise",
        {
            "n_grid": (_int_list, list(range(100, 1001, 100)), "comma-separated n values"),
            "families": (_families, list(ex.DEFAULT_FAMILIES), "comma-separated noise families"),
            "trials": (int, 50, "trials per point"),
            "m": (int, 5, "state dimension"),
            "outlier_fraction": (float, 0.5, "fraction of corrupted observations"),
            "outlier_sigma": (float, 10.0, "outlier standard deviation"),
        },
    ),
    "concentration": (
        "concentration of ||Hz||_1 / (n sqrt(2/pi)) for z = ones/sqrt(m)",
        {
            "n_grid": (_int_list, [100, 1000], "comma-separated n values"),
            "m": (int, 5, "state dimension"),
            "trials": (int, 200, "matrices per n"),
        },
    ),
}


@dataclass
class RunConfig:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: Path = Path(".")


def _options(cmd):
    return {**COMMON, **COMMANDS[cmd][1]}


def _show(value):
    return _fmt_list(value) if isinstance(value, list) else str(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l1sysid", description="Robust system identification by l1 decoding."
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for cmd, (doc, _) in COMMANDS.items():
        p = sub.add_parser(cmd, help=doc, description=doc)
        p.add_argument(
            "--config", default=argparse.SUPPRESS,
            help="file of key=value lines (# comments); flags override it (default: none)",
        )
        for name, (typ, default, text) in _options(cmd).items():
            p.add_argument(
                "--" + name.replace("_", "-"), dest=name, type=typ, default=argparse.SUPPRESS,
                help=f"{text} (default: {_show(default)})",
            )
    return parser


def _read_config(path, cmd, parser):
    opts = _options(cmd)
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        parser.error(f"cannot read config {path}: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "subcommand":
            if val != cmd:
                parser.error(f"{path}:{lineno}: config is for {val!r}, not {cmd!r}")
            continue
        if key not in opts:
            parser.error(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = opts[key][0](val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def parse_args(argv=None) -> RunConfig:
    """Resolve defaults < config file < command-line flags.  Exits with 2 on bad input."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    cmd = ns.pop("subcommand")
    params = {name: default for name, (_, default, _) in _options(cmd).items()}
    if "config" in ns:
        params.update(_read_config(ns.pop("config"), cmd, parser))
    params.update(ns)
    return RunConfig(cmd, params, int(params["seed"]), Path(params["output_dir"]))


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _write_manifest(cfg: RunConfig):
    lines = [f"subcommand={cfg.subcommand}"]
    lines += [f"{k}={_show(v)}" for k, v in sorted(cfg.parameters.items())]
    (cfg.output_dir / MANIFEST).write_text("\n".join(lines) + "\n")


def _gen(p, out):
    n, m, seed = p["n"], p["m"], p["seed"]
    s_seq, s_x, s_e, s_w = (ex.split_seed(seed, i) for i in range(4))
    seq = generate_sequence(n, m, s_seq)
    x = np.random.default_rng(s_x).standard_normal(m)
    e = sample_outliers(n, p["k"], p["outlier_sigma"], s_e)
    if p["noise_param"] > 0:
        spec = NoiseSpec(p["noise"], p["noise_param"], s_w)
    else:
        spec = NoiseSpec.unit_energy(p["noise"], s_w)
    inst = observe(build_matrix(seq), x, e, sample_noise(n, spec))
    path = write_instance(inst, out / p["out"])
    return f"gen: wrote {path} (n={n}, m={m}, k={p['k']}, noise={p['noise']})"


def _solve(p, out):
    inst = read_instance(p["instance"])
    H = inst.H.array
    sol = solve_lad(H, inst.y, tol=p["tol"])
    cert = check_optimality(H, inst.y, sol.x_hat, tol=p["tol"])
    rows = [(i, sol.x_hat[i], inst.x[i]) for i in range(inst.m)]
    ex.emit_csv(rows, out / p["out"], ("index", "x_hat", "x_true"))
    err = float(np.linalg.norm(sol.x_hat - inst.x))
    return (
        f"solve: objective={sol.objective!r} err_l2={err!r} certificate="
        f"{'valid' if cert.valid else 'INVALID'} degenerate={str(sol.degenerate).lower()}"
    )


def _threshold(p, out):
    results = []
    for m in range(p["m_min"], p["m_max"] + 1):
        _log(f"threshold: m={m}")
        results.extend(ex.threshold_curve(m, m, p["tol_beta"]))
    ex.emit_csv(ex.threshold_rows(results), out / "threshold.csv", ex.THRESHOLD_HEADER)
    ex.emit_svg_lineplot(
        {"beta*": ([r.m for r in results], [r.beta_star for r in results])},
        out / "threshold.svg", "m", "correctable fraction beta*", "Strong threshold", logy=True,
    )
    return "threshold: " + " ".join(f"m={r.m}:{r.beta_star:.6g}" for r in results)


def _certify(p, out):
    n, m, k = p["n"], p["m"], p["k"]
    H = build_matrix(generate_sequence(n, m, p["seed"])).array
    report = certification_report(H, k, p["max_lps"])
    rows = [
        (
            n, m, k, " ".join(str(i) for i in r.support), r.certified, r.min_lp_value,
            " ".join(str(int(s)) for s in r.worst_sign_pattern),
        )
        for r in report
    ]
    ex.emit_csv(rows, out / "certify.csv", ("n", "m", "k", "support", "certified", "min_lp_value", "worst_signs"))
    good = sum(r.certified for r in report)
    return f"certify: {good}/{len(report)} supports certified (n={n}, m={m}, k={k})"


def _weak(p, out):
    pts = ex.weak_recovery_curve(p["n_grid"], p["m"], p["beta"], p["trials"], p["seed"], p["threads"])
    rows = ex.weak_curve_rows(pts, p["m"], p["beta"], p["trials"], p["seed"])
    ex.emit_csv(rows, out / "weak_curve.csv", ex.WEAK_HEADER)
    ex.emit_svg_lineplot(
        {f"beta={p['beta']}": ([q.abscissa for q in pts], [q.statistic for q in pts])},
        out / "weak_curve.svg", "n", "exact recovery rate", "Weak recovery",
    )
    return "weak-curve: " + " ".join(f"n={int(q.abscissa)}:{q.statistic:.3f}" for q in pts)


def _consistency(p, out):
    table = ex.consistency_experiment(
        p["n_grid"], p["families"], p["trials"], p["seed"], p["m"],
        p["outlier_fraction"], p["outlier_sigma"], p["threads"],
    )
    ex.emit_csv(ex.consistency_rows(table, p["trials"], p["seed"]), out / "consistency.csv", ex.CONSISTENCY_HEADER)
    ex.emit_svg_lineplot(
        {f: ([q.abscissa for q in pts], [q.statistic for q in pts]) for f, pts in table.items()},
        out / "consistency.svg", "n", "median ||x_hat - x||_2", "Outliers plus noise", logy=True,
    )
    last = {f: pts[-1].statistic for f, pts in table.items()}
    return "consistency: " + " ".join(f"{f}:{v:.4g}" for f, v in last.items())


def _concentration(p, out):
    m = p["m"]
    z = np.ones(m) / math.sqrt(m)
    pts = [ex.concentration_probe(n, m, z, p["trials"], p["seed"]) for n in p["n_grid"]]
    ex.emit_csv(ex.concentration_rows(pts, m, p["seed"]), out / "concentration.csv", ex.CONCENTRATION_HEADER)
    return "concentration: " + " ".join(
        f"n={int(q.abscissa)}:{q.statistic:.4f}+-{q.spread:.4f}" for q in pts
    )


HANDLERS = {
    "gen": _gen,
    "solve": _solve,
    "threshold": _threshold,
    "certify": _certify,
    "weak-curve": _weak,
    "consistency": _consistency,
    "concentration": _concentration,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``; returns the process exit code."""
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        _write_manifest(cfg)
        summary = HANDLERS[cfg.subcommand](cfg.parameters, cfg.output_dir)
    except (NonConvergenceError, EnumerationLimitError, DegenerateSupportError, RankDeficiencyError) as exc:
        _log(f"error: {exc}")
        return 1
    except (ValueError, OSError) as exc:
        _log(f"usage error: {exc}")
        return 2
    print(summary)
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
