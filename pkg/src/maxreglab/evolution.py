"""Mild solutions and variation-of-constants residuals.

Forcing signals are piecewise constant on the cells of a uniform time grid
and integrated exactly with the exponential step z_{k+1} = E z_k + P f_k,
E = e^{hA}, P = integral of e^{sA} over one cell.  Every convolution against
a control vector reuses the same weight P, so the identities relating the
free and coupled pictures are checked with discretely consistent operators
and their residuals measure the algebra, not quadrature noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from maxreglab.linalg import expm, lp_norm, phi1
from maxreglab.semigroup import Generator


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int

    def __post_init__(self):
        if self.T <= 0 or self.n < 1:
            raise ValueError("grid needs T > 0 and at least one step")

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)

    def halved(self) -> "TimeGrid":
        return TimeGrid(self.T, 2 * self.n)


@dataclass
class BochnerSignal:
    """Node samples of a time-dependent state, one row per grid node.

    Interpreted as piecewise constant on [t_k, t_{k+1}); the last sample is
    carried for plotting but does not enter integrals.
    """

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim == 1:
            s = s[:, np.newaxis]
        if s.shape[0] != self.grid.n + 1:
            raise ValueError(
                f"expected {self.grid.n + 1} samples, got {s.shape[0]}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("signal contains non-finite samples")
        self.samples = s

    @classmethod
    def from_function(cls, grid: TimeGrid, fn) -> "BochnerSignal":
        rows = [np.atleast_1d(fn(t)) for t in grid.nodes]
        return cls(grid=grid, samples=np.asarray(rows))

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def lp_norm(self, p: float, space_weights=None) -> float:
        vals = np.array([
            lp_norm(row, p if space_weights is not None else 2.0, space_weights)
            if space_weights is not None else np.linalg.norm(row)
            for row in self.samples[:-1]
        ])
        return float((self.grid.h * np.sum(vals**p)) ** (1.0 / p))

    def to_csv(self, path) -> None:
        from maxreglab.reports import write_csv

        header = ["t"] + [f"x{j}" for j in range(self.dim)]
        rows = [(t, *row) for t, row in zip(self.grid.nodes, self.samples)]
        write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, path) -> "BochnerSignal":
        import csv

        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[complex(x) for x in row] for row in rows[1:]])
        t = data[:, 0].real
        grid = TimeGrid(T=float(t[-1]), n=len(t) - 1)
        samples = data[:, 1:]
        if np.max(np.abs(samples.imag)) == 0.0:
            samples = samples.real
        return cls(grid=grid, samples=samples)


def step_operators(gen: Generator, grid: TimeGrid):
    """One-step propagator and integrator weight for the grid cell."""
    return expm(gen.A, grid.h), phi1(gen.A, grid.h)


def evolve(gen: Generator, x0, f: BochnerSignal) -> BochnerSignal:
    """March the mild solution with the exact piecewise-constant integrator."""
    E, P = step_operators(gen, f.grid)
    x0 = np.zeros(gen.n) if x0 is None else np.atleast_1d(np.asarray(x0))
    if x0.shape[0] != gen.n or f.dim != gen.n:
        raise ValueError(
            f"dimension mismatch: generator {gen.n}, state {x0.shape[0]}, "
            f"forcing {f.dim}"
        )
    out = np.empty((f.grid.n + 1, gen.n), dtype=np.result_type(E, x0, f.samples))
    out[0] = x0
    for k in range(f.grid.n):
        out[k + 1] = E @ out[k] + P @ f.samples[k]
    return BochnerSignal(grid=f.grid, samples=out)


def exp_conv(E: np.ndarray, P: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Discrete convolution sum_{j<k} E^{k-1-j} P u_j at every node."""
    n = u.shape[0] - 1
    out = np.empty((n + 1, E.shape[0]), dtype=np.result_type(E, P, u))
    out[0] = 0.0
    acc = np.zeros(E.shape[0], dtype=out.dtype)
    for k in range(n):
        acc = E @ acc + P @ u[k]
        out[k + 1] = acc
    return out


def semigroup_trajectory(gen_or_E, grid: TimeGrid, x0) -> np.ndarray:
    if isinstance(gen_or_E, Generator):
        E = expm(gen_or_E.A, grid.h)
    else:
        E = gen_or_E
    out = np.empty((grid.n + 1, E.shape[0]), dtype=np.result_type(E, x0))
    out[0] = np.atleast_1d(x0)
    for k in range(grid.n):
        out[k + 1] = E @ out[k]
    return out


def _max_rel(diff: np.ndarray, ref: np.ndarray) -> float:
    scale = max(np.max(np.linalg.norm(ref, axis=1)), 1e-300)
    return float(np.max(np.linalg.norm(diff, axis=1)) / scale)


def closed_loop_vcf_residual(gen: Generator, B, C_domain, gen_closed: Generator,
                             x0, grid: TimeGrid, C_free=None) -> dict:
    """Residuals of the closed-loop variation-of-constants identity.

    ``closed_loop``: the closed-loop snapshot against the free snapshot plus
    the convolution of B with the feedback output of the closed-loop
    trajectory (the perturbing functional applied on the coupled domain).
    ``swapped``: the ordering with the closed-loop semigroup outside and the
    free trajectory observed (functional applied on the free domain).  Both
    discretize the same identity and must vanish at first order in the step.
    """
    B = np.atleast_2d(np.asarray(B))
    if B.shape[0] == 1 and gen.n > 1:
        B = B.T
    C_domain = np.atleast_2d(np.asarray(C_domain))
    C_free = C_domain if C_free is None else np.atleast_2d(np.asarray(C_free))
    E_a, P_a = step_operators(gen, grid)
    E_c, P_c = step_operators(gen_closed, grid)
    free = semigroup_trajectory(E_a, grid, x0)
    closed = semigroup_trajectory(E_c, grid, x0)

    y_closed = closed @ C_domain.T
    rhs1 = free + exp_conv(E_a, P_a, y_closed @ B.T)
    res1 = _max_rel(closed - rhs1, closed)

    y_free = free @ C_free.T
    rhs2 = free + exp_conv(E_c, P_c, y_free @ B.T)
    res2 = _max_rel(closed - rhs2, closed)
    return {"closed_loop": res1, "swapped": res2}


def perturbed_vcf_residual(gen: Generator, B, C_domain,
                           gen_closed: Generator, f: BochnerSignal,
                           grid: TimeGrid | None = None, x0=None) -> float:
    """Residual of the forced closed-loop solution against the free picture:
    the solution must equal free flow of the state plus the B-convolution of
    its own feedback output plus the free convolution of the forcing."""
    grid = f.grid if grid is None else grid
    B = np.atleast_2d(np.asarray(B))
    if B.shape[0] == 1 and gen.n > 1:
        B = B.T
    C_domain = np.atleast_2d(np.asarray(C_domain))
    E_a, P_a = step_operators(gen, grid)
    x0 = np.zeros(gen.n) if x0 is None else np.atleast_1d(x0)
    z = evolve(gen_closed, x0, f).samples
    rhs = (
        semigroup_trajectory(E_a, grid, x0)
        + exp_conv(E_a, P_a, (z @ C_domain.T) @ B.T)
        + exp_conv(E_a, P_a, f.samples)
    )
    return _max_rel(z - rhs, z)


def miyadera_fixed_point(gen_closed: Generator, P_obs, f: BochnerSignal,
                         x0=None) -> tuple[BochnerSignal, float]:
    """Solve the additively perturbed problem and check its fixed-point form.

    The solution is computed directly from the summed generator; the
    residual compares it with the closed-loop convolution of (P z + f).
    """
    P_obs = np.atleast_2d(np.asarray(P_obs))
    gen_sum = Generator.from_matrix(gen_closed.A + P_obs,
                                    label=f"{gen_closed.label}+obs")
    grid = f.grid
    x0 = np.zeros(gen_closed.n) if x0 is None else np.atleast_1d(x0)
    z = evolve(gen_sum, x0, f)
    E_c, P_c = step_operators(gen_closed, grid)
    rhs = semigroup_trajectory(E_c, grid, x0) + exp_conv(
        E_c, P_c, z.samples @ P_obs.T + f.samples
    )
    return z, _max_rel(z.samples - rhs, z.samples)
