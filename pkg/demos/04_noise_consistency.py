"""
Outliers plus dense noise
=========================

Half of the outputs are gross errors and every output also carries
unit-energy noise.  Exact recovery is lost but the estimate still
converges as n grows; the speed depends on the noise density near zero.
"""
from pathlib import Path

from l1sysid.experiments import consistency_experiment, emit_svg_lineplot

out = Path("demo_output")
out.mkdir(exist_ok=True)

grid = [100, 200, 400, 800]
table = consistency_experiment(grid, trials=30, master_seed=0)

for fam, pts in table.items():
    row = "  ".join(f"{p.statistic:.3f}" for p in pts)
    print(f"{fam:12s} median error at n={grid}: {row}")

emit_svg_lineplot(
    {fam: ([p.abscissa for p in pts], [p.statistic for p in pts]) for fam, pts in table.items()},
    out / "consistency.svg", "n", "median error", "Outliers plus noise", logy=True,
)
print("wrote", out / "consistency.svg")
