"""Maximal-regularity constants as norms of discrete convolution operators.

The regularity operator maps a forcing signal to the generator applied to
its mild convolution; with piecewise-constant forcing and the exact
exponential integrator it is a lower-triangular block Toeplitz matrix that
is never formed for large problems: norms are computed through matrix-free
recursions (exact singular values for p = 2 via iterative SVD, Boyd ascent
otherwise).  "Has maximal regularity" is operationalized as: the norm is
finite and moves at most 10% across two successive grid refinements.  The
constant combines the operator norms through the equation itself, so the
time derivative is recovered algebraically and never differenced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from maxreglab.boundary import BoundarySystem, dirichlet, realize_A, realize_perturbed
from maxreglab.evolution import BochnerSignal, TimeGrid, evolve, exp_conv, step_operators
from maxreglab.linalg import pq_norm_estimate
from maxreglab.semigroup import Generator

DENSE_CAP = 1200  # assemble the block matrix densely up to this total size


@dataclass
class MaxRegReport:
    p: float
    T: float
    n: int
    C_est: float
    norm_R: float
    norm_Z: float
    terms: dict
    method: str              # "svd-exact" | "power-probe"
    converged: bool = True
    label: str = ""

    def summary(self) -> dict:
        return {
            "label": self.label,
            "p": self.p,
            "T": self.T,
            "n": self.n,
            "C_est": self.C_est,
            "norm_R": self.norm_R,
            "norm_Z": self.norm_Z,
            "terms": self.terms,
            "method": self.method,
            "converged": self.converged,
        }

    def to_json(self, path) -> None:
        from maxreglab.reports import write_json

        write_json(path, self.summary())


class _ConvOperator:
    """Matrix-free lower-triangular block Toeplitz convolution map.

    Output cell j holds L @ sum_{k<=j} E^{j-k} P f_k; L = A gives the
    regularity operator, L = I the forcing-to-state map.  Uniform cell
    weights cancel between domain and range, so the L^p operator norm is
    the plain block-matrix p-norm.
    """

    def __init__(self, E, P, L, n):
        self.E, self.P, self.L, self.n = E, P, L, n
        self.N = E.shape[0]
        self.dtype = np.result_type(E, P, L)
        self.shape = (n * self.N, n * self.N)

    def matvec(self, f):
        f = np.asarray(f).reshape(self.n, self.N)
        out = np.empty((self.n, self.N), dtype=self.dtype)
        acc = np.zeros(self.N, dtype=self.dtype)
        for j in range(self.n):
            acc = self.E @ acc if j else acc
            acc = acc + self.P @ f[j]
            out[j] = self.L @ acc
        return out.reshape(-1)

    def rmatvec(self, g):
        g = np.asarray(g).reshape(self.n, self.N)
        EH, PH, LH = self.E.conj().T, self.P.conj().T, self.L.conj().T
        out = np.empty((self.n, self.N), dtype=self.dtype)
        acc = np.zeros(self.N, dtype=self.dtype)
        for j in range(self.n - 1, -1, -1):
            acc = EH @ acc if j < self.n - 1 else acc
            acc = acc + LH @ g[j]
            out[j] = PH @ acc
        return out.reshape(-1)

    def dense(self) -> np.ndarray:
        n, N = self.n, self.N
        kernel = np.empty((n, N, N), dtype=self.dtype)
        cur = self.P.astype(self.dtype)
        for i in range(n):
            kernel[i] = self.L @ cur
            cur = self.E @ cur
        M = np.zeros(self.shape, dtype=self.dtype)
        for j in range(n):
            for k in range(j + 1):
                M[j * N:(j + 1) * N, k * N:(k + 1) * N] = kernel[j - k]
        return M

    def norm(self, p: float, seed: int = 0):
        if p == 2.0:
            if self.shape[0] <= DENSE_CAP:
                return float(sla.svdvals(self.dense())[0]), "svd-exact", True
            linop = spla.LinearOperator(self.shape, matvec=self.matvec,
                                        rmatvec=self.rmatvec, dtype=self.dtype)
            s = spla.svds(linop, k=1, which="LM", return_singular_vectors=False,
                          maxiter=5000, tol=1e-9)
            return float(s[0]), "svd-exact", True
        est = pq_norm_estimate(self.matvec, self.rmatvec, self.shape, p, p,
                               seed=seed, dtype=complex)
        return est.value, "power-probe", est.converged


def regularity_operator(gen: Generator, grid: TimeGrid) -> _ConvOperator:
    E, P = step_operators(gen, grid)
    return _ConvOperator(E, P, gen.A, grid.n)


def state_operator(gen: Generator, grid: TimeGrid) -> _ConvOperator:
    E, P = step_operators(gen, grid)
    return _ConvOperator(E, P, np.eye(gen.n), grid.n)


def assemble_R(gen: Generator, grid: TimeGrid, p: float = 2.0):
    """Dense regularity operator with its L^p norm (small grids only)."""
    op = regularity_operator(gen, grid)
    if op.shape[0] > 4096:
        raise ValueError(
            f"dense assembly of size {op.shape} refused; use maxreg_constant"
        )
    M = op.dense()
    norm, method, converged = op.norm(p)
    return M, {"norm": norm, "method": method, "converged": converged}


def maxreg_constant(gen: Generator, grid: TimeGrid, p: float = 2.0,
                    witnesses: int = 3, seed: int = 0,
                    label: str = "") -> MaxRegReport:
    """Estimate the constant bounding derivative, state, and generator terms
    of the solution by the forcing in L^p.

    C = ||R|| + 1 + ||Z|| dominates every witness ratio by the triangle
    inequality because the derivative is recovered through the equation.
    """
    if not (1.0 < p < np.inf):
        raise ValueError("maximal-regularity exponent must lie in (1, inf)")
    r_op = regularity_operator(gen, grid)
    z_op = state_operator(gen, grid)
    norm_R, method, conv_R = r_op.norm(p, seed=seed)
    norm_Z, _, conv_Z = z_op.norm(p, seed=seed + 1)
    C_est = norm_R + 1.0 + norm_Z

    rng = np.random.default_rng(seed)
    h = grid.h
    terms = {}
    for j in range(witnesses):
        f_cells = rng.standard_normal((grid.n, gen.n))
        f = BochnerSignal(grid, np.vstack([f_cells, f_cells[-1:]]))
        z = evolve(gen, np.zeros(gen.n), f).samples[:-1]
        gz = z @ gen.A.T
        dz = gz + f_cells
        norm = lambda a: float((h * np.sum(
            np.linalg.norm(np.atleast_2d(a), axis=1) ** p)) ** (1 / p))
        entry = {
            "norm_dz": norm(dz),
            "norm_z": norm(z),
            "norm_Gz": norm(gz),
            "norm_f": norm(f_cells),
        }
        ratio = (entry["norm_dz"] + entry["norm_z"] + entry["norm_Gz"]) / \
            entry["norm_f"]
        if ratio > C_est * (1 + 1e-9):
            raise AssertionError(
                f"witness ratio {ratio} exceeded the estimated constant {C_est}"
            )
        if j == 0:
            terms = entry
    return MaxRegReport(p=p, T=grid.T, n=grid.n, C_est=C_est, norm_R=norm_R,
                        norm_Z=norm_Z, terms=terms, method=method,
                        converged=bool(conv_R and conv_Z), label=label)


def maxreg_stability(gen: Generator, grid: TimeGrid, p: float = 2.0,
                     tol: float = 0.10, seed: int = 0) -> dict:
    """Refinement probe behind the operational definition: the constant on
    the grid and on its halving, with the relative move."""
    rep1 = maxreg_constant(gen, grid, p, witnesses=1, seed=seed)
    rep2 = maxreg_constant(gen, grid.halved(), p, witnesses=1, seed=seed)
    move = abs(rep2.C_est - rep1.C_est) / rep1.C_est
    return {
        "C_est": rep1.C_est,
        "C_est_refined": rep2.C_est,
        "relative_move": move,
        "stable": bool(np.isfinite(rep1.C_est) and move <= tol),
        "report": rep1,
        "report_refined": rep2,
    }


def perturbation_comparison(entries, grid: TimeGrid, p: float = 2.0,
                            tol_stable: float = 0.10, seed: int = 0) -> dict:
    """Side-by-side constants for a family of generators, with the verdict
    "preserved" iff every member is finite and refinement-stable."""
    rows = []
    preserved = True
    for label, gen in entries:
        stab = maxreg_stability(gen, grid, p, tol=tol_stable, seed=seed)
        rep = stab["report"]
        ok = bool(np.isfinite(rep.C_est)) and stab["stable"]
        preserved = preserved and ok
        rows.append({
            "label": label,
            "p": p,
            "T": grid.T,
            "n": grid.n,
            "C_est": rep.C_est,
            "method": rep.method,
            "converged": rep.converged,
            "relative_move": stab["relative_move"],
            "stable": stab["stable"],
        })
    return {"rows": rows, "verdict": "preserved" if preserved else "not-preserved"}


def comparison_to_csv(result: dict, path) -> None:
    from maxreglab.reports import write_csv

    cols = ("label", "p", "T", "n", "C_est", "method", "converged")
    write_csv(path, cols, [tuple(row[c] for c in cols) for row in result["rows"]])


def _lp_cells(a: np.ndarray, h: float, p: float) -> float:
    return float((h * np.sum(np.linalg.norm(np.atleast_2d(a), axis=1) ** p))
                 ** (1 / p))


def ds_fixed_point_check(bs: BoundarySystem, K_state, f: BochnerSignal,
                         mu: float | None = None, p: float = 2.0,
                         mu_grid=None, seed: int = 0) -> dict:
    """Fixed-point identity for the regularity operator of the boundary-coupled
    generator under a bounded perturbing functional.

    The displayed form of the identity in the source analysis does not close
    dimensionally (a boundary-space term is added to a state-space signal);
    the check therefore evaluates two candidates and reports which one holds
    to discretization order:

      * corrected: (I + F) R_cl f = R[(I - DK) f + mu DK z] + mu DK z,
        where F g = R(DK g), D the boundary solve at mu, z the solution;
        derived by routing the control vectors through the boundary solve
        and integrating by parts (the boundary term mu DK z survives).
      * as-printed (with the boundary solve inserted to make it typable):
        (I - F) R_cl f = R[(I + DK) f + mu DK z].

    mu defaults to the smallest grid value making c_T ||DK|| <= 1/2, the
    contraction condition; a caller-supplied mu violating it is rejected.
    """
    grid = f.grid
    gen_a = realize_A(bs)
    K_state = np.atleast_2d(np.asarray(K_state))
    bs_k = bs.with_perturbation(K_state)
    gen_c = realize_perturbed(bs_k)

    c_T, _, _ = regularity_operator(gen_a, grid).norm(p, seed=seed)

    if mu_grid is None:
        mu_grid = np.logspace(1, 5, 41)
    chosen, DK = None, None
    for cand in ([mu] if mu is not None else list(mu_grid)):
        D = dirichlet(bs, cand).D
        DK_c = D @ K_state
        bound = c_T * float(sla.svdvals(DK_c)[0])
        if bound <= 0.5:
            chosen, DK, contraction_bound = float(cand), DK_c, bound
            break
    if chosen is None:
        raise ValueError(
            "mu too small for contraction: increase mu until "
            "c_T * ||D_mu K|| drops below 1/2"
        )

    E_a, P_a = step_operators(gen_a, grid)
    z = evolve(gen_c, np.zeros(gen_c.n), f).samples  # nodes 0..n
    f_cells = f.samples[:-1]
    z_cells = z[:-1]
    z_nodes = z[1:]                                  # right-endpoint output rows

    def R_A(cells):
        return exp_conv(E_a, P_a, np.vstack([cells, cells[-1:]]))[1:] @ gen_a.A.T

    rcl = z_nodes @ gen_c.A.T
    F_of = lambda out_rows: R_A(out_rows @ DK.T)

    lhs_corr = rcl + F_of(rcl)
    rhs_corr = R_A(f_cells - f_cells @ DK.T + chosen * (z_cells @ DK.T)) \
        + chosen * (z_nodes @ DK.T)
    den = _lp_cells(lhs_corr, grid.h, p)
    res_corrected = _lp_cells(lhs_corr - rhs_corr, grid.h, p) / den

    lhs_paper = rcl - F_of(rcl)
    rhs_paper = R_A(f_cells + f_cells @ DK.T + chosen * (z_cells @ DK.T))
    res_paper = _lp_cells(lhs_paper - rhs_paper, grid.h, p) / \
        _lp_cells(lhs_paper, grid.h, p)

    # measured contraction on random signals (lower estimate of ||F||)
    rng = np.random.default_rng(seed)
    probe = 0.0
    for _ in range(4):
        g = rng.standard_normal((grid.n, gen_a.n))
        probe = max(probe, _lp_cells(F_of(g), grid.h, p) /
                    _lp_cells(g, grid.h, p))

    satisfied = "corrected" if res_corrected <= res_paper else "as-printed"
    return {
        "mu": chosen,
        "c_T": c_T,
        "contraction_bound": contraction_bound,
        "contraction_probe": probe,
        "residual": min(res_corrected, res_paper),
        "residual_corrected": res_corrected,
        "residual_as_printed": res_paper,
        "form": satisfied,
        "form_finding": (
            "literal displayed form is ill-typed (boundary-space term added "
            "to a state-space signal); the dimensionally consistent variants "
            f"give corrected={res_corrected:.3e}, as-printed={res_paper:.3e}; "
            f"the {satisfied} form holds to discretization order"
        ),
    }
