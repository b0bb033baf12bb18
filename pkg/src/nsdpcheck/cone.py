"""Variational geometry of the positive semidefinite cone.

Membership, projection and distance are eigenvalue based (numpy's LAPACK
eigensolver; these are plumbing).  The tangent/normal cone tests evaluate the
closed-form block criteria in the eigenbasis of the base point, and
``tangent_cone_contains_oracle`` checks the defining difference quotient
directly so the two routes stay independent.
"""

from __future__ import annotations

import numpy as np

from .symmat import OrderedEigenDecomposition, SymMat, block

DEFAULT_TOL = 1e-8

# Oracle default: decreasing step sizes for the difference quotient.
ORACLE_T_GRID = tuple(10.0**-k for k in range(1, 7))


def is_psd(a: SymMat, tol: float = DEFAULT_TOL) -> bool:
    """True iff the smallest eigenvalue is >= -tol."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    lam_min = float(np.linalg.eigvalsh(a.dense())[0])
    return lam_min >= -tol


def project_psd(a: SymMat) -> SymMat:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    lam, q = np.linalg.eigh(a.dense())
    clipped = np.maximum(lam, 0.0)
    return SymMat.from_dense((q * clipped) @ q.T, check_symmetry=False)


def dist_psd(a: SymMat) -> float:
    """Frobenius distance to the PSD cone: sqrt(sum of squared negative eigenvalues)."""
    lam = np.linalg.eigvalsh(a.dense())
    return float(np.sqrt(np.sum(np.minimum(lam, 0.0) ** 2)))


def tangent_cone_contains(
    d: OrderedEigenDecomposition, v: SymMat, tol: float = DEFAULT_TOL
) -> bool:
    """Tangent-cone membership at d.source: the omega-omega block of v in
    d's eigenbasis must be PSD within tol.  Empty omega means an interior
    base point, where the tangent cone is the whole space."""
    if not d.psd:
        raise ValueError("tangent cone is defined at PSD base points only")
    if not d.omega:
        return True
    vb = block(v, d, d.omega, d.omega)
    return float(np.linalg.eigvalsh(vb)[0]) >= -tol


def normal_cone_contains(
    d: OrderedEigenDecomposition, ystar: SymMat, tol: float = DEFAULT_TOL
) -> bool:
    """Normal-cone membership at d.source: in d's eigenbasis the pi-pi and
    pi-omega blocks of ystar vanish and the omega-omega block is negative
    semidefinite, all within tol."""
    if not d.psd:
        raise ValueError("normal cone is defined at PSD base points only")
    pi, omega = d.pi, d.omega
    if np.linalg.norm(block(ystar, d, pi, pi)) > tol:
        return False
    if pi and omega and np.linalg.norm(block(ystar, d, pi, omega)) > tol:
        return False
    if not omega:
        return True
    wb = block(ystar, d, omega, omega)
    return float(np.linalg.eigvalsh(wb)[-1]) <= tol


def tangent_cone_contains_oracle(
    y: SymMat,
    v: SymMat,
    t_grid=ORACLE_T_GRID,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Definition-based tangent test: dist(y + t*v) / t must fall below
    max(tol, 10 * t_min) at the two smallest grid steps.

    This distinguishes the O(t) decay of a tangent direction from the
    constant quotient of a non-tangent one without claiming a limit.  Used
    as an independent test oracle for tangent_cone_contains.
    """
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid or t_grid[0] <= 0:
        raise ValueError("t_grid must contain positive step sizes")
    if not is_psd(y, tol):
        raise ValueError("oracle base point must be PSD within tol")
    slack = max(tol, 10.0 * t_grid[0])
    for t in t_grid[: min(2, len(t_grid))]:
        if dist_psd(y + t * v) / t > slack:
            return False
    return True
