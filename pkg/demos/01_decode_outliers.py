"""
Decoding a FIR system through gross errors
==========================================

A length-m filter is driven by a Gaussian input; a third of the outputs are
overwritten by large errors.  Least squares is ruined, l1 decoding is not.
"""
import numpy as np

from l1sysid import build_matrix, generate_sequence, sample_outliers, observe, solve_lad, check_optimality

n, m = 200, 5
H = build_matrix(generate_sequence(n, m, seed=1))
x = np.random.default_rng(2).standard_normal(m)

# 60 of the 200 observations carry N(0, 100) errors
e = sample_outliers(n, 60, 10.0, seed=3)
inst = observe(H, x, e)

#%% least squares for comparison
x_ls = np.linalg.lstsq(H.array, inst.y, rcond=None)[0]
print("least squares error:", np.linalg.norm(x_ls - x))

#%% l1 decoding
sol = solve_lad(H.array, inst.y)
print("l1 error:           ", np.linalg.norm(sol.x_hat - x))
print("pivots:", sol.iterations, " zero residuals:", sol.zero_residual_count)

# the dual signs prove optimality independently of the solver path
cert = check_optimality(H.array, inst.y, sol.x_hat)
print("certificate valid:", cert.valid, " |H^T s|_inf =", cert.gradient_norm)

# residuals vanish off the corrupted rows and reproduce e on them
clean = np.setdiff1d(np.arange(n), e.support)
print("max clean residual:", np.abs(sol.residual[clean]).max())
