"""Dense complex linear algebra kernels shared by every other module.

Matrices are plain ``numpy.ndarray`` objects (real or complex).  This module
adds validation, the matrix exponential and its first integrator weight, the
resolvent solve with spectrum detection, eigendecompositions, and operator
p-norm estimation.  The exponential is scaling-and-squaring with a diagonal
Pade approximant (delegated to scipy, which implements exactly that); the
integrator weight uses the augmented-block trick to avoid cancellation for
stiff inputs; general-p operator norms use a Boyd-style power method with
random restarts and are reported as lower-bound estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class SpectrumError(ValueError):
    """A shifted system ``lambda*I - A`` is numerically singular.

    Carries the smallest singular value of the shifted matrix so callers can
    distinguish an exact spectral hit from roundoff.
    """

    def __init__(self, message: str, smallest_sv: float):
        super().__init__(message)
        self.smallest_sv = float(smallest_sv)


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate a 2-d array with finite entries and return it as ndarray."""
    A = np.asarray(M)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if A.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_square(M, name: str = "matrix") -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def expm(A, t: float = 1.0) -> np.ndarray:
    """Semigroup snapshot e^{tA} for t >= 0.

    t = 0 returns the identity exactly.
    """
    A = as_square(A, "generator")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if t == 0:
        return np.eye(A.shape[0], dtype=A.dtype)
    return sla.expm(t * A)


def phi1(A, t: float = 1.0) -> np.ndarray:
    """Exact integrator weight: the integral of e^{sA} for s in [0, t].

    Computed as the top-right block of the exponential of the augmented
    matrix [[A, I], [0, 0]], which satisfies A*phi1 = e^{tA} - I without
    forming an explicit inverse of A.
    """
    A = as_square(A, "generator")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    n = A.shape[0]
    if t == 0:
        return np.zeros_like(A)
    aug = np.zeros((2 * n, 2 * n), dtype=np.result_type(A.dtype, float))
    aug[:n, :n] = t * A
    aug[:n, n:] = t * np.eye(n)
    return sla.expm(aug)[:n, n:]


def resolvent(A, lam: complex, cond_cap: float = 1e12) -> np.ndarray:
    """Solve for (lambda*I - A)^{-1}.

    Rejects lambda numerically in the spectrum: if the 1-norm condition
    estimate of the shifted system exceeds ``cond_cap`` a SpectrumError is
    raised carrying the smallest singular value.
    """
    A = as_square(A, "generator")
    n = A.shape[0]
    M = lam * np.eye(n, dtype=np.result_type(A.dtype, type(lam))) - A
    with warnings.catch_warnings():
        # exact singularity is detected below via the condition estimate
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M)
        X = sla.lu_solve((lu, piv), np.eye(n, dtype=M.dtype))
    cond1 = np.linalg.norm(M, 1) * np.linalg.norm(X, 1)
    if not np.isfinite(cond1) or cond1 > cond_cap:
        smin = sla.svdvals(M)[-1]
        raise SpectrumError(
            f"lambda in spectrum: shift {lam} leaves smallest singular value "
            f"{smin:.3e} (condition estimate {cond1:.3e} above cap {cond_cap:.1e})",
            smin,
        )
    return X


def eig(A, hermitian: bool | None = None):
    """Eigenvalues and eigenvectors.

    Symmetric/Hermitian inputs (detected unless forced) get the orthogonal
    decomposition from eigh; everything else the general solver.
    """
    A = as_square(A)
    if hermitian is None:
        scale = np.linalg.norm(A, np.inf) or 1.0
        hermitian = bool(np.all(np.abs(A - A.conj().T) <= 1e-13 * scale))
    if hermitian:
        return np.linalg.eigh(A)
    return np.linalg.eig(A)


def spectral_abscissa(A) -> float:
    """Largest real part of the spectrum (the growth bound at desk scale)."""
    w = eig(as_square(A))[0]
    return float(np.max(w.real))


def matrix_function(A, fn, hermitian: bool | None = None) -> np.ndarray:
    """Apply a scalar function to a matrix through its eigendecomposition."""
    A = as_square(A)
    if hermitian is None:
        scale = np.linalg.norm(A, np.inf) or 1.0
        hermitian = bool(np.all(np.abs(A - A.conj().T) <= 1e-13 * scale))
    if hermitian:
        w, V = np.linalg.eigh(A)
        F = (V * fn(w)) @ V.conj().T
        return F
    w, V = np.linalg.eig(A)
    F = np.linalg.solve(V.T, (V * fn(w)).T).T
    return F


def lp_norm(v, p: float, weights=None) -> float:
    """Vector p-norm, optionally against nonnegative quadrature weights."""
    v = np.asarray(v).ravel()
    a = np.abs(v)
    if weights is not None:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != a.shape:
            raise ValueError("weights do not match vector length")
        return float(np.sum(w * a**p) ** (1.0 / p))
    if p == 2:
        return float(np.linalg.norm(v))
    return float(np.sum(a**p) ** (1.0 / p))


@dataclass(frozen=True)
class LpSpec:
    """Exponent pair and optional per-node quadrature weights for L^p norms."""

    p: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not (1.0 <= self.p < math.inf):
            raise ValueError(f"p must lie in [1, inf), got {self.p}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ValueError("quadrature weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    @property
    def q(self) -> float:
        """Dual exponent with 1/p + 1/q = 1."""
        if self.p == 1.0:
            return math.inf
        return self.p / (self.p - 1.0)


@dataclass
class OpNormEstimate:
    """Operator-norm value plus how it was obtained."""

    value: float
    method: str
    iterations: int = 0
    restarts: int = 0
    converged: bool = True

    def __float__(self) -> float:
        return self.value


def _dual_vector(y: np.ndarray, r: float) -> np.ndarray:
    # gradient direction of ||.||_r at y: |y|^(r-1) * sign(y)
    a = np.abs(y)
    out = np.zeros_like(y)
    nz = a > 0
    out[nz] = a[nz] ** (r - 1.0) * (y[nz] / a[nz])
    return out


def pq_norm_estimate(
    matvec,
    rmatvec,
    shape: tuple[int, int],
    p_range: float,
    p_domain: float,
    restarts: int = 16,
    tol: float = 1e-6,
    maxiter: int = 300,
    seed: int = 0,
    dtype=complex,
) -> OpNormEstimate:
    """Boyd-style power method for the domain-p to range-p operator norm.

    Ascent on the range norm with dual-vector back-projection; each restart
    only increases the estimate, so the result is a certified lower bound.
    """
    n_out, n_in = shape
    if p_domain <= 1.0:
        raise ValueError("power method requires domain exponent > 1")
    q_domain = p_domain / (p_domain - 1.0)
    rng = np.random.default_rng(seed)

    starts = [np.ones(n_in, dtype=dtype)]
    ei = np.zeros(n_in, dtype=dtype)
    ei[0] = 1.0
    starts.append(ei)
    while len(starts) < restarts:
        x = rng.standard_normal(n_in)
        if np.dtype(dtype).kind == "c":
            x = x + 1j * rng.standard_normal(n_in)
        starts.append(x.astype(dtype))

    best = 0.0
    total_iters = 0
    converged = False
    for x in starts:
        nx = lp_norm(x, p_domain)
        if nx == 0:
            continue
        x = x / nx
        gamma_prev = -1.0
        for _ in range(maxiter):
            total_iters += 1
            y = matvec(x)
            gamma = lp_norm(y, p_range)
            if gamma == 0.0:
                converged = True
                break
            z = rmatvec(_dual_vector(np.asarray(y), p_range))
            xn = _dual_vector(np.asarray(z), q_domain)
            nxn = lp_norm(xn, p_domain)
            if nxn == 0:
                break
            x = xn / nxn
            if gamma_prev > 0 and abs(gamma - gamma_prev) <= tol * gamma:
                converged = True
                break
            gamma_prev = gamma
        best = max(best, gamma_prev if gamma_prev > 0 else 0.0, gamma)
    return OpNormEstimate(
        value=float(best),
        method="power-probe",
        iterations=total_iters,
        restarts=len(starts),
        converged=converged,
    )


def opnorm(M, spec: LpSpec | float = 2.0, **kw) -> OpNormEstimate:
    """Operator p-norm of a matrix.

    p = 2 is exact (largest singular value); other p use the power method
    and report a converged lower-bound estimate.  Weights in the spec are
    interpreted as a shared quadrature on both sides and applied through
    the diagonal similarity D^{1/p} M D^{-1/p}.
    """
    M = as_matrix(M)
    if not isinstance(spec, LpSpec):
        spec = LpSpec(float(spec))
    if spec.weights is not None:
        if M.shape[0] != M.shape[1] or spec.weights.size != M.shape[0]:
            raise ValueError("shared weights require a square matrix of matching size")
        d = spec.weights ** (1.0 / spec.p)
        with np.errstate(divide="ignore"):
            dinv = np.where(d > 0, 1.0 / d, 0.0)
        M = (M * dinv[np.newaxis, :]) * d[:, np.newaxis]
    if spec.p == 2.0:
        return OpNormEstimate(value=float(sla.svdvals(M)[0]), method="svd-exact")
    MH = M.conj().T
    return pq_norm_estimate(
        M.dot, MH.dot, M.shape, spec.p, spec.p, dtype=M.dtype, **kw
    )
