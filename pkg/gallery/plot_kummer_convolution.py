"""
Combining two Legendre systems
==============================

Two order-2 inhomogeneous systems on E1 and E2 give an order-3 system for
the product form w(s)^w(t).  The combinator returns A, B, C and the 1-form
beta, then re-checks the identity from scratch.
"""

from pfworkbench import families as fam

sys_s, sys_t = fam.build_legendre_systems()
print("E1 closes:", sys_s.verify(), " E2 closes:", sys_t.verify())

res = fam.pf_convolve(sys_s, sys_t)
print("A =", res.A)
print("B =", res.B)
print("C =", res.C)
print("compatibility residual:", res.residual)
print("D(w(s)^w(t)) = d_rel(beta):", res.identity_ok)

rep = fam.verify_kummer_beta(res)
for key, status in rep["terms"]:
    print(f"  reference {key:6s} {status}")

# break compatibility on purpose
bad = fam.InhomSystem2(sys_t.A, sys_t.B + 1, sys_t.beta, sys_t.ctx)
try:
    fam.pf_convolve(sys_s, bad)
except fam.CompatibilityError as e:
    print("perturbed input:", e)
