"""The self-adjoint boundary-value problem on [0, N] with angle conditions
f1(0) sin(alpha) + f2(0) cos(alpha) = 0 and f1(N) sin(beta) + f2(N) cos(beta) = 0.

Eigenvalues are the real zeros of the characteristic function
chi(lam) = beta-residual of T(N, lam) (cos alpha, -sin alpha).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import DEFAULTS
from .errors import NotAnEigenvalue, OutOfRange, OverflowGuard
from .hamiltonian import HamiltonianField, QuadratureRule, truncate
from .transfer import Trajectory, h_inner_product, transfer_at
from .weyl import BoundaryAngle

__all__ = ["SelfAdjointBVP", "EigenList", "Eigenfunction", "char_function", "eigenvalues_in", "eigenfunction"]


@dataclass(frozen=True)
class SelfAdjointBVP:
    field: HamiltonianField
    N: float
    alpha: BoundaryAngle
    beta: BoundaryAngle

    def __init__(self, field: HamiltonianField, N: float | None = None, alpha=np.pi, beta=np.pi):
        N = field.total_length if N is None else float(N)
        if not 0 < N <= field.total_length * (1 + 1e-15):
            raise OutOfRange(f"N={N} outside (0, {field.total_length}]")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "N", min(N, field.total_length))
        object.__setattr__(self, "alpha", BoundaryAngle(alpha))
        object.__setattr__(self, "beta", BoundaryAngle(beta))

    @cached_property
    def restricted(self) -> HamiltonianField:
        """The field on [0, N]."""
        if self.N >= self.field.total_length:
            return self.field
        return truncate(self.field, self.N)

    def solution_at_end(self, lam) -> np.ndarray:
        return transfer_at(self.restricted, lam, self.N) @ self.alpha.vector


def char_function(bvp: SelfAdjointBVP, lam):
    """chi(lam) for real lam (scalar or array).  Imaginary round-off is discarded."""
    lam_arr = np.asarray(lam, dtype=float)
    end = bvp.solution_at_end(lam_arr.astype(complex))
    chi = end[..., 0] * bvp.beta.sin + end[..., 1] * bvp.beta.cos
    out = chi.real
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EigenList:
    values: tuple[float, ...]
    residuals: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _guard(bvp: SelfAdjointBVP, lo: float, hi: float, limit: float) -> None:
    scale = max(abs(lo), abs(hi)) * bvp.restricted.trace_integral()
    if scale > limit:
        raise OverflowGuard(
            f"|lambda| * integral(tr H) = {scale:.3g} exceeds the safe propagation range {limit:.3g}"
        )


def _bisect(bvp: SelfAdjointBVP, lo: float, hi: float, flo: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = char_function(bvp, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eigenvalues_in(
    bvp: SelfAdjointBVP,
    window: tuple[float, float],
    grid_points: int = DEFAULTS["grid_points"],
    tol: float = DEFAULTS["root_tol"],
    max_lambda_length: float = DEFAULTS["max_lambda_length"],
) -> EigenList:
    """Eigenvalues in [lo, hi] from sign changes of chi on a uniform grid, refined by bisection.

    Double roots without a sign change are not detected here.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"empty window [{lo}, {hi}]")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    _guard(bvp, lo, hi, max_lambda_length)
    grid = np.linspace(lo, hi, int(grid_points))
    chi = char_function(bvp, grid)
    roots = []
    for k in range(len(grid)):
        if chi[k] == 0.0:
            roots.append(grid[k])
        elif k + 1 < len(grid) and chi[k + 1] != 0.0 and (chi[k] < 0) != (chi[k + 1] < 0):
            roots.append(_bisect(bvp, grid[k], grid[k + 1], chi[k], tol))
    values = tuple(float(r) for r in roots)
    residuals = tuple(abs(char_function(bvp, r)) for r in values)
    return EigenList(values, residuals)


class Eigenfunction(Trajectory):
    """Trajectory started at (cos alpha, -sin alpha) at an eigenvalue."""

    def __init__(self, bvp: SelfAdjointBVP, eigenvalue: float, residual: float, quad: QuadratureRule | None = None):
        super().__init__(bvp.restricted, eigenvalue, bvp.alpha.vector)
        self.bvp = bvp
        self.eigenvalue = float(eigenvalue)
        self.residual = residual
        self.norm2 = float(h_inner_product(self.field, self, self, quad).real)
        self.zero_norm = self.norm2 <= 1e-14 * max(1.0, self.field.trace_integral())


def eigenfunction(
    bvp: SelfAdjointBVP,
    lam: float,
    tol: float = DEFAULTS["eigen_residual_tol"],
    quad: QuadratureRule | None = None,
) -> Eigenfunction:
    """The eigenfunction at ``lam``; raises NotAnEigenvalue if the boundary residual exceeds ``tol``."""
    end = bvp.solution_at_end(complex(lam))
    residual = abs(bvp.beta.residual(end))
    if residual > tol * max(1.0, float(np.abs(end).max())):
        raise NotAnEigenvalue(f"lambda={lam} leaves boundary residual {residual:.3g} at N={bvp.N}")
    return Eigenfunction(bvp, lam, residual, quad)
