"""Top-k empirical kernel against an exponential process with known law.

Run with ``python3 demos/03_kernel_convergence.py``.
"""
# %%
import numpy as np

from gknn.kernel import SyntheticProcess, convergence_experiment, default_grid

sp = SyntheticProcess()
grid, intervals = default_grid()
print("v grid:", grid)
print("intervals:", intervals)

# %%
rows = convergence_experiment(sp, [400, 2500, 10000], range(5))
for n in (400, 2500, 10000):
    sup = [r.sup_error for r in rows if r.N == n]
    mean = [r.mean_error for r in rows if r.N == n]
    print(f"N={n:6d}  k_N={int(np.sqrt(n)):4d}  sup={np.mean(sup):.4f}  mean={np.mean(mean):.4f}")
