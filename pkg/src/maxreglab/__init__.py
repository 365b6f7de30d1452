"""Finite-dimensional laboratory for boundary-perturbed evolution equations.

Realizes boundary triples on ghost-node grids, estimates admissibility and
maximal L^p-regularity constants, verifies the closed-loop operator
identities as residual checks, and runs the worked heat and
integro-differential examples end to end.
"""

from maxreglab.linalg import (
    LpSpec,
    OpNormEstimate,
    SpectrumError,
    eig,
    expm,
    lp_norm,
    matrix_function,
    opnorm,
    phi1,
    resolvent,
    spectral_abscissa,
)

__all__ = [
    "LpSpec",
    "OpNormEstimate",
    "SpectrumError",
    "eig",
    "expm",
    "lp_norm",
    "matrix_function",
    "opnorm",
    "phi1",
    "resolvent",
    "spectral_abscissa",
]

__version__ = "0.1.0"
