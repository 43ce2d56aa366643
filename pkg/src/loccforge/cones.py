"""Convex cones generated by finite sets of PSD operators.

All tests reduce to LP feasibility over nonnegative combination coefficients:
membership, non-trivial pairwise intersection (witnessed), extreme rays, and
singular rays. The intersection test excludes the origin by normalizing one
side's coefficients to sum to 1, which is valid because the generators are
PSD and nonzero: a nonnegative combination vanishes only if all coefficients
do.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DimMismatchError, InvalidOperatorError, ZeroOperatorError
from .hermitian import LP_TOL, asmat, devectorize, is_psd, proportional, vectorize
from .simplex import feasible_point


class Cone:
    """Cone of nonnegative combinations of validated PSD, nonzero generators."""

    __slots__ = ("dim", "generators", "_vecs")

    def __init__(self, generators, tol: float = LP_TOL):
        mats = [asmat(g) for g in generators]
        if not mats:
            raise InvalidOperatorError("a cone needs at least one generator")
        d = mats[0].shape[0]
        frozen = []
        for g in mats:
            if g.shape != (d, d):
                raise DimMismatchError("cone generators must share one dimension")
            if not is_psd(g):
                raise InvalidOperatorError("cone generator is not PSD")
            if float(np.abs(g).max(initial=0.0)) <= tol:
                raise ZeroOperatorError("cone generator is numerically zero")
            g = g.copy()
            g.flags.writeable = False
            frozen.append(g)
        self.dim = int(d)
        self.generators = tuple(frozen)
        self._vecs = np.column_stack([vectorize(g) for g in frozen])

    def __len__(self):
        return len(self.generators)

    def __repr__(self):
        return f"Cone(dim={self.dim}, generators={len(self.generators)})"


@dataclasses.dataclass(frozen=True)
class FeasibilityWitness:
    """A common nonzero point of two cones: sum(a_i A_i) = sum(b_j B_j) = point."""

    coefficients_a: np.ndarray
    coefficients_b: np.ndarray
    point: np.ndarray
    residual: float


def member(X, C: Cone, tol: float = LP_TOL) -> np.ndarray | None:
    """Nonnegative c with sum(c_i G_i) = X within tolerance, or None."""
    x = asmat(X)
    if x.shape != (C.dim, C.dim):
        raise DimMismatchError("operator and cone dimensions differ")
    return feasible_point(C._vecs, vectorize(x), tol=tol)


def nontrivial_intersection(A: Cone, B: Cone, tol: float = LP_TOL) -> FeasibilityWitness | None:
    """Witness a common nonzero point of two cones, or None if only 0 is shared."""
    if A.dim != B.dim:
        raise DimMismatchError("cones live on different dimensions")
    ka, kb = len(A), len(B)
    rows = np.hstack([A._vecs, -B._vecs])
    # sum of a-coefficients = 1 rules out the origin
    norm_row = np.concatenate([np.ones(ka), np.zeros(kb)])
    M = np.vstack([rows, norm_row])
    rhs = np.zeros(M.shape[0])
    rhs[-1] = 1.0
    sol = feasible_point(M, rhs, tol=tol)
    if sol is None:
        return None
    a, b = sol[:ka], sol[ka:]
    pa = A._vecs @ a
    pb = B._vecs @ b
    residual = float(np.abs(pa - pb).max(initial=0.0))
    return FeasibilityWitness(a, b, devectorize(pa, A.dim), residual)


def is_singular_ray(k: int, generators, tol: float = LP_TOL) -> bool:
    """True iff generator k is proportional to no other generator in the list."""
    mats = [asmat(g) for g in generators]
    gk = mats[k]
    for i, g in enumerate(mats):
        if i != k and proportional(g, gk, tol) is not None:
            return False
    return True


def is_extreme_ray(k: int, C: Cone, tol: float = LP_TOL) -> bool:
    """True iff generator k is not a combination of the generators off its ray.

    Generators proportional to G_k are excluded from the test set; they lie on
    the same ray and would make the membership test vacuous.
    """
    gk = C.generators[k]
    rest = [g for i, g in enumerate(C.generators)
            if i != k and proportional(g, gk, tol) is None]
    if not rest:
        return True
    return member(gk, Cone(rest), tol) is None
