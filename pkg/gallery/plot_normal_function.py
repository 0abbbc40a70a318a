"""
The inhomogeneity g(b) two ways
===============================

Integrate the 2-form over the square 0 <= Z <= 1, 0 <= X < oo, then compare
D_PF applied to that integral by finite differences with the integral of
D_PF applied under the integral sign.
"""

import numpy as np

from pfworkbench import numerics as num

nb = num.normal_function(1j)
print(f"nu_bar(i) = {nb.value.real:.12f}  (+- {nb.error_estimate:.1e}, {nb.nodes} nodes)")

g = num.g_direct(1j)
fd = num.pf_fd(1j)
print(f"g(i) direct       = {g.value.real:.12f}")
print(f"D_PF nu_bar at i  = {fd.value.real:.12f}  (h = {fd.h})")

# the same finite-difference machinery on a closed-cycle period gives ~0
for b in (6, 8, 12):
    r = num.pf_fd(b, f=lambda bb: num.period_series(bb, 400))
    print(f"b = {b:>2}: |D_PF I| / largest term = {abs(r.value) / r.scale:.1e}")

# g along the imaginary axis, for plotting elsewhere
ys = np.arange(5, 17)
rows = [{"b": f"{y}j", "nu_bar": num.normal_function(1j * y).value, "g_direct": num.g_direct(1j * y).value} for y in ys]
print(num.results_csv(rows, fields=("b", "nu_bar", "g_direct")))
