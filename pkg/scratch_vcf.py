"""Dev scratch: VCF residual orders and the DS fixed-point identity forms."""
import numpy as np

from scratch_boundary import heat_system
from maxreglab.boundary import (
    control_vector, dirichlet, k_on_domain, k_on_ker_g, realize_A,
    realize_perturbed,
)
from maxreglab.evolution import (
    BochnerSignal, TimeGrid, closed_loop_vcf_residual, evolve, exp_conv,
    miyadera_fixed_point, perturbed_vcf_residual, semigroup_trajectory,
    step_operators,
)
from maxreglab.semigroup import Generator

bs = heat_system(64)
gen_a = realize_A(bs)
gen_c = realize_perturbed(bs)
B = control_vector(bs, 5.0, gen=gen_a).B
Kdom = k_on_domain(bs)
Khom = k_on_ker_g(bs)

s = np.linspace(0, 1, 64)
x0 = np.cos(np.pi * s)

print("== closed-loop VCF, T=0.5 ==")
prev = {}
for n in (128, 256, 512):
    res = closed_loop_vcf_residual(gen_a, B, Kdom, gen_c, x0, TimeGrid(0.5, n),
                                   C_free=Khom)
    ratio = {k: (prev[k] / v if prev else float('nan')) for k, v in res.items()}
    print(f"n={n}: {res}  ratios={ratio}")
    prev = res

print("== perturbed VCF with forcing ==")
rng = np.random.default_rng(0)
field = rng.standard_normal(64)
for n in (128, 256, 512):
    grid = TimeGrid(1.0, n)
    f = BochnerSignal(grid, np.tile(field, (n + 1, 1)))
    r = perturbed_vcf_residual(gen_a, B, Kdom, gen_c, f)
    print(f"n={n}: residual={r:.3e}")

print("== miyadera with fractional row block ==")
from maxreglab.linalg import matrix_function
negA = -gen_c.A
P13 = matrix_function(negA, lambda w: np.power(np.abs(w) + 0j, 1.0 / 3).real
                      if np.isrealobj(w) else np.power(w + 0j, 1.0 / 3))
# eigenvalues of -A_c are real >= 0; use principal cube root on complex dtype
P13 = matrix_function(negA, lambda w: np.power(w.astype(complex), 1.0 / 3))
P13 = P13.real if np.max(np.abs(P13.imag)) < 1e-9 else P13
print("P13 imag max:", np.max(np.abs(np.asarray(P13).imag)) if np.iscomplexobj(P13) else 0.0)
for n in (128, 512):
    grid = TimeGrid(1.0, n)
    f = BochnerSignal(grid, np.tile(field, (n + 1, 1)))
    z, r = miyadera_fixed_point(gen_c, 0.1 * np.asarray(P13).real, f)
    print(f"n={n}: residual={r:.3e}")

print("== DS fixed-point forms, small dense sanity ==")
# A 4x4 stable, D (4x1), bounded K (1x4): calA = A + B K with B = (mu-A)D
rng = np.random.default_rng(1)
n_dim = 4
A = rng.standard_normal((n_dim, n_dim)) - 4 * np.eye(n_dim)
gen = Generator.from_matrix(A)
mu = 8.0
Dmu = rng.standard_normal((n_dim, 1)) * 0.3
K = rng.standard_normal((1, n_dim)) * 0.4
Bds = (mu * np.eye(n_dim) - A) @ Dmu
calA = A + Bds @ K
gen_cl = Generator.from_matrix(calA)

def ds_forms(nsteps, T=1.0):
    grid = TimeGrid(T, nsteps)
    f = BochnerSignal.from_function(grid, lambda t: np.array(
        [np.sin(3 * t), np.cos(t), 1.0, np.exp(-t)]))
    E_a, P_a = step_operators(gen, grid)
    z = evolve(gen_cl, np.zeros(n_dim), f).samples      # nodes
    rclf = z @ calA.T                                    # R^cl f at nodes
    def R_A(sig):
        return exp_conv(E_a, P_a, sig) @ A.T
    DK = Dmu @ K                                         # (n,n)
    F_of = lambda g: R_A(g @ DK.T)
    # corrected identity: (I + F) rcl = R[(I - DK) f + mu DK z] + mu DK z
    lhs = rclf + F_of(rclf)
    rhs = R_A(f.samples - f.samples @ DK.T + mu * (z @ DK.T)) + mu * (z @ DK.T)
    num = np.max(np.linalg.norm(lhs - rhs, axis=1))
    den = np.max(np.linalg.norm(lhs, axis=1))
    res_fixed = num / den
    # paper form with the insertion: (I - F) rcl = R[(I + DK) f + mu DK z]
    lhs2 = rclf - F_of(rclf)
    rhs2 = R_A(f.samples + f.samples @ DK.T + mu * (z @ DK.T))
    res_paper = np.max(np.linalg.norm(lhs2 - rhs2, axis=1)) / den
    return res_fixed, res_paper

for nsteps in (256, 512, 1024, 2048):
    rf, rp = ds_forms(nsteps)
    print(f"n={nsteps}: corrected={rf:.4e}  paper-inserted={rp:.4e}")
