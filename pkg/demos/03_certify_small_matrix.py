"""
Exact certificates on a small matrix
====================================

For small n every support of size k can be checked exactly: recovery from
all errors on K holds iff ||(Hz)_K||_1 < ||(Hz)_Kc||_1 for every z != 0.
A failing support comes with a direction z that an adversary can exploit.
"""
import numpy as np

from l1sysid import adversarial_error, build_matrix, certification_report, generate_sequence, solve_lad

n, m, k = 8, 2, 3
H = build_matrix(generate_sequence(n, m, seed=4)).array
report = certification_report(H, k)
bad = [r for r in report if not r.certified]
print(f"{len(report) - len(bad)} of {len(report)} supports of size {k} certified")

for r in report[:5]:
    print(r.support, "certified" if r.certified else "FAILS", f"min LP value {r.min_lp_value:.4f}")

#%% the adversary
if bad:
    r = bad[0]
    e = adversarial_error(H, r.support, r.witness_z)
    x = np.array([1.0, -0.5])
    y = H @ x + e.to_dense()
    sol = solve_lad(H, y)
    print("support", r.support, "-> decoded error", np.linalg.norm(sol.x_hat - x))
    print("objective at truth", np.abs(e.entries).sum(), " at x + z", np.abs(y - H @ (x + r.witness_z)).sum())
