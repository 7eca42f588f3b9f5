"""
How many errors can always be corrected?
========================================

The strong threshold beta*(m) is the largest fraction of corrupted outputs
for which the probabilistic bound still guarantees recovery of every state
from every error pattern.  It falls quickly with the filter length.
"""
from pathlib import Path

from l1sysid import is_feasible, strong_threshold
from l1sysid.experiments import emit_svg_lineplot

out = Path("demo_output")
out.mkdir(exist_ok=True)

ms, betas = [], []
for m in range(1, 11):
    r = strong_threshold(m)
    ms.append(m)
    betas.append(r.beta_star)
    print(f"m={m:2d}  beta*={r.beta_star:.6f}  at mu={r.mu_star:.3f}, delta={r.delta_star:.2g}")

# just above beta* the bound no longer closes anywhere on the lattice
print("feasible just above beta*(3)?", bool(is_feasible(3, betas[2] + 1e-4)))

emit_svg_lineplot({"beta*": (ms, betas)}, out / "threshold.svg", "m", "beta*", "Strong threshold", logy=True)
print("wrote", out / "threshold.svg")
