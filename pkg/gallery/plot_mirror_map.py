"""
Mirror map and the 2F1 square
=============================

Frobenius solutions of the u-operator at u = 0, the inverse series u(q),
and an affine comparison of 1/u(q) with the listed q-series.
"""

from pfworkbench import numerics as num

ms = num.mirror_series(12)
print("omega0:", [str(c) for c in ms.omega0[:5]])
print("u(q):  ", [str(c) for c in ms.u_of_q[:5]])

cmp = num.mirror_comparison(ms)
print(f"T(q) = {cmp['beta']}/u({cmp['beta']} q) + ({cmp['gamma']})")
for row in cmp["rows"]:
    flag = "" if row["match"] else f"   <- reference {row['reference']}"
    print(f"  q^{row['power']:>2}: {row['computed']}{flag}")

cl = num.clausen_check(ms)
print(f"omega0 = 2F1({cl['parameters'][0]}, {cl['parameters'][1]}; 1; u)^2 through u^{cl['order']}: {cl['agrees']}")
