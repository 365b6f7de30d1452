"""Dev scratch: contour orientation, accuracy, angle independence."""
import numpy as np
import scipy.linalg as sla

from maxreglab.fractional import ContourSpec, J_operator, frac_power_contour, power_eig
from scratch_boundary import heat_system
from maxreglab.boundary import realize_A, k_on_ker_g

# scalar orientation check: A=-4, beta=1/2 -> 0.5
out = frac_power_contour(np.array([[-4.0]]), 0.5)
print("scalar (-A)^{-1/2} for A=-4:", out[0, 0], "want 0.5")
out = frac_power_contour(np.array([[-1.0]]), 0.37)
print("scalar beta=0.37 for A=-1:", out[0, 0], "want 1.0")

# shifted Neumann N=32 via heat system
bs = heat_system(32)
gen = realize_A(bs)
A = gen.A - np.eye(32)
ref = power_eig(-A, -0.6, weights=bs.weights)  # (-A)^{-0.6} via eig... theta=-0.6
print("power_eig check vs direct eigh:", end=" ")
d = np.sqrt(bs.weights)
S = (A * (1.0/d)[None, :]) * d[:, None]
print("sym err:", np.max(np.abs(S - S.T)))
w, V = np.linalg.eigh(-S)
ref2 = (V * w**-0.6) @ V.T
ref2 = (ref2 * d[None, :]) * (1.0/d)[:, None]
print("  power_eig vs manual:", np.linalg.norm(ref - ref2) / np.linalg.norm(ref2))

got = frac_power_contour(A, 0.6)
print("contour beta=0.6 rel err vs eig:", np.linalg.norm(got - ref2) / np.linalg.norm(ref2))

# angle independence
g1 = frac_power_contour(A, 0.6, ContourSpec(psi=0.6 * np.pi))
g2 = frac_power_contour(A, 0.6, ContourSpec(psi=0.75 * np.pi))
print("angle independence:", np.linalg.norm(g1 - g2) / np.linalg.norm(g1))

# semigroup of powers
b1, b2 = 0.3, 0.45
p1 = frac_power_contour(A, b1) @ frac_power_contour(A, b2)
p12 = frac_power_contour(A, b1 + b2)
print("semigroup law:", np.linalg.norm(p1 - p12) / np.linalg.norm(p12))

# beta = 1 vs inverse
inv = np.linalg.inv(-A)
print("beta=1 vs inverse:", np.linalg.norm(frac_power_contour(A, 1.0) - inv) / np.linalg.norm(inv))

# J operator with the heat observation row
K = k_on_ker_g(bs)
J = J_operator(K, A, 0.75, p=2.0)
print("J row norm:", sla.svdvals(J)[0])
J2 = J_operator(K, A, 0.75, ContourSpec(n_per_leg=2 * 1008), p=2.0)
print("J doubling stability:", abs(sla.svdvals(J)[0] - sla.svdvals(J2)[0]) / sla.svdvals(J)[0])

import time
t0 = time.time()
frac_power_contour(A, 0.6)
print("one contour power timing:", time.time() - t0, "s")
