"""Dev scratch: verify boundary identities with an inline heat system."""
import numpy as np
import scipy.linalg as sla

from maxreglab.boundary import (
    BoundarySystem, control_vector, dirichlet, extend_hom, extend_pert,
    k_dirichlet, k_on_domain, k_on_ker_g, realize_A, realize_perturbed,
    resolvent_identity_check,
)
from maxreglab.semigroup import yosida_split_check


def heat_system(N, r=2.0):
    h = 1.0 / (N - 1)
    n_ext = N + 2
    gl, gr = N, N + 1  # ghost indices: left ghost, right ghost
    Am = np.zeros((N, n_ext))
    for i in range(N):
        Am[i, i] = -2.0 / h**2
        Am[i, i - 1 if i > 0 else gl] = 1.0 / h**2
        Am[i, i + 1 if i < N - 1 else gr] = 1.0 / h**2
    z = np.zeros((1, n_ext))  # w'(0) = 0 built into the maximal domain
    z[0, 1] = 1.0 / (2 * h)
    z[0, gl] = -1.0 / (2 * h)
    G = np.zeros((1, n_ext))  # w'(1)
    G[0, gr] = 1.0 / (2 * h)
    G[0, N - 2] = -1.0 / (2 * h)
    K = np.zeros((1, n_ext))  # w(1) - w(0)
    K[0, N - 1] = 1.0
    K[0, 0] = -1.0
    w = np.full(N, h)
    w[0] = w[-1] = h / 2
    return BoundarySystem(Am_ext=Am, domain_rows=z, G=G, K=K,
                          ghost_idx=(gl, gr), weights=w, label="heat")


N = 64
bs = heat_system(N)
gen_a = realize_A(bs)
gen_c = realize_perturbed(bs)
print("omega0 free:", gen_a.omega0, " coupled:", gen_c.omega0)
w = np.sort(np.linalg.eigvals(gen_a.A).real)[::-1]
print("free eigs:", w[:4], " (expect 0, -pi^2=-9.8696, -4pi^2=-39.478)")
wc = np.linalg.eigvals(gen_c.A)
print("coupled eigs (top by real):", np.sort_complex(wc)[-4:])
print("coupled eigs max |imag|:", np.abs(wc.imag).max())

# Dirichlet oracle at lambda=1: d(s) = cosh(sqrt(l) s)/(sqrt(l) sinh sqrt(l))
dop = dirichlet(bs, 1.0)
s = np.linspace(0, 1, N)
oracle = np.cosh(s) / np.sinh(1.0)
print("dirichlet λ=1 rel err:", np.linalg.norm(dop.D[:, 0] - oracle) / np.linalg.norm(oracle))
print("  d(1):", dop.D[-1, 0], "vs coth(1) =", np.cosh(1)/np.sinh(1))
print("  residuals:", dop.residuals)

# identities
chk = resolvent_identity_check(bs, 5.0, second_lam=20.0)
print("identity check:", chk)
for lam in (5.0, 1 + 1j, 10 + 3j):
    c = resolvent_identity_check(bs, lam)
    print(f"  λ={lam}: factorization={c['resolvent_factorization']:.3e} "
          f"generator={c['generator_equality']:.3e}")

# control vector: R(mu,A) B = D_mu
cv = control_vector(bs, 5.0, gen=gen_a)
print("control vector check residual:", cv.check_residual)
print("B support:", np.nonzero(np.abs(cv.B[:, 0]) > 1e-8 * np.abs(cv.B).max())[0])

# Yosida split
for n in (20.0, 50.0, 100.0, 500.0):
    print(f"yosida split n={n}: {yosida_split_check(bs, n):.3e}")

# K=0 variant: realize_perturbed == realize_A bit for bit
bs0 = heat_system(N)
bs0 = BoundarySystem(Am_ext=bs0.Am_ext, domain_rows=bs0.domain_rows, G=bs0.G,
                     K=np.zeros_like(bs0.K.toarray() if hasattr(bs0.K, 'toarray') else bs0.K),
                     ghost_idx=bs0.ghost_idx, weights=bs0.weights, label="heat0")
print("K=0 bit-for-bit:", np.array_equal(realize_perturbed(bs0).A, realize_A(bs0).A))

# G-K residual on coupled extension columns
Ep = extend_pert(bs)
print("max |(G-K) E_pert|:", np.abs((bs.G - bs.K) @ Ep).max())

# Favard feasibility: slope of ||D_lambda||_{L^r} for r=2 at N=512
bs512 = heat_system(512)
lams = np.logspace(1, 4, 16)
vals = []
for lam in lams:
    d = dirichlet(bs512, lam).D[:, 0]
    vals.append((np.sum(bs512.weights * np.abs(d) ** 2)) ** 0.5)
slope = np.polyfit(np.log(lams), np.log(vals), 1)[0]
print("favard slope r=2 (want -0.75):", slope)
lams2 = np.logspace(1, np.log10(3000), 14)
vals2 = [
    (np.sum(bs512.weights * np.abs(dirichlet(bs512, lam).D[:, 0]) ** 1.5)) ** (1/1.5)
    for lam in lams2
]
print("favard slope r=1.5 (want -0.8333):", np.polyfit(np.log(lams2), np.log(vals2), 1)[0])

# N=200 eigenvalue example
bs200 = heat_system(200)
w200 = np.sort(np.linalg.eigvals(realize_A(bs200).A).real)[::-1]
print("N=200 two smallest-magnitude eigs:", w200[:2])
