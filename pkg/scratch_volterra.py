"""Dev scratch: bergman closed form, companion cross-check accuracy/timing."""
import time

import numpy as np

from scratch_boundary import heat_system
from maxreglab.boundary import realize_A, realize_perturbed
from maxreglab.evolution import BochnerSignal, TimeGrid
from maxreglab.fractional import power_eig
from maxreglab.volterra import (
    BergmanNorm, SectorSpec, VolterraSpec, bergman_norm, bergman_trace_check,
    companion_assemble, companion_evolve, companion_vs_direct, direct_solve,
    make_kernel, sector_quadrature, upsilon_admissibility,
)

spec = SectorSpec()  # theta=pi/4, p=2, s=2 -> q=4
bn = bergman_norm(np.exp and (lambda z: np.exp(-z)), spec)
print("bergman e^{-z} q=4:", bn.value, "want", 0.125 ** 0.25, "tail", bn.tail_bound)

tc = bergman_trace_check(lambda z: np.exp(-z), 1.0, 2.0, spec)
print("trace lhs:", tc["lhs"], "want", (1 - np.exp(-2)) / 2, "ratio", tc["ratio"])

# companion collapse: a == 0
bs = heat_system(16)
gen0 = realize_A(bs)
vs0 = VolterraSpec(kernel=lambda z: 0.0 * z, F=np.zeros((16, 16)), S_max=2.0,
                   n_mem=8, n_tail=4)
grid = TimeGrid(0.5, 64)
f = BochnerSignal.from_function(grid, lambda t: np.sin(np.pi * np.linspace(0, 1, 16)) * np.exp(-t))
res0 = companion_vs_direct(gen0, vs0, f)
print("a=0 collapse max err:", res0["max_rel_error"], "flagged:", res0["flagged"])

# heat PIDE-style cross-check, N=32
bs32 = heat_system(32)
genA = realize_A(bs32)
genC = realize_perturbed(bs32)
F = 0.1 * power_eig(-genA.A, 0.3, weights=bs32.weights)
print("F imag:", np.max(np.abs(np.asarray(F).imag)) if np.iscomplexobj(F) else 0.0)
vs = VolterraSpec(kernel=make_kernel("exp"), F=F, S_max=25.0, n_mem=128, n_tail=48)

for n in (256, 512, 1024):
    grid = TimeGrid(1.0, n)
    f = BochnerSignal.from_function(
        grid, lambda t: np.cos(np.pi * np.linspace(0, 1, 32)) * (1 + 0.3 * np.sin(2 * t)))
    t0 = time.time()
    res = companion_vs_direct(genC, vs, f)
    print(f"n={n}: rel err={res['max_rel_error']:.4e} n_total={res['n_total']} "
          f"flagged={res['flagged']} time={time.time() - t0:.1f}s")

# upsilon admissibility
ua = upsilon_admissibility(genA, vs, spec, alpha=1.0, p=2.0, n_time=128, n_probes=4)
print("upsilon:", {k: (round(v, 6) if isinstance(v, float) else v)
                   for k, v in ua.items()})

print("== joint refinement ==")
prev = None
for n, nm in ((256, 64), (512, 128), (1024, 256)):
    grid = TimeGrid(1.0, n)
    f = BochnerSignal.from_function(
        grid, lambda t: np.cos(np.pi * np.linspace(0, 1, 32)) * (1 + 0.3 * np.sin(2 * t)))
    vsn = VolterraSpec(kernel=make_kernel("exp"), F=F, S_max=25.0, n_mem=nm, n_tail=48)
    t0 = time.time()
    res = companion_vs_direct(genC, vsn, f)
    r = (prev / res["max_rel_error"]) if prev else float("nan")
    print(f"n={n},n_mem={nm}: err={res['max_rel_error']:.4e} ratio={r:.2f} "
          f"time={time.time()-t0:.1f}s n_total={res['n_total']}")
    prev = res["max_rel_error"]
