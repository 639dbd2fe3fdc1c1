"""Exact propagation of Ju' = zHu across piecewise-constant cells.

On a cell with constant H the system reads u' = A u with the trace-free
generator A = z J^{-1} H, so the cell propagator is a closed-form 2x2
exponential and T(x, z) is an ordered product of those.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import DEFAULTS
from .hamiltonian import Cell, HamiltonianField, QuadratureRule
from .errors import OutOfRange

J = np.array([[0.0, -1.0], [1.0, 0.0]])
J_INV = -J

__all__ = [
    "J",
    "TransferMatrix",
    "Trajectory",
    "cell_generator",
    "cell_exponential",
    "propagate",
    "transfer_at",
    "solution",
    "h_inner_product",
    "gram_matrix",
]


def cell_generator(cell: Cell | np.ndarray, z: complex) -> np.ndarray:
    """A = z J^{-1} H.  Built entrywise so that tr A == 0 holds exactly."""
    if isinstance(cell, Cell):
        h11, h12, h22 = cell.h11, cell.h12, cell.h22
    else:
        m = np.asarray(cell)
        h11, h12, h22 = m[0, 0], m[0, 1], m[1, 1]
    a = np.array([[h12, h22], [-h11, -h12]], dtype=complex) * z
    assert a[0, 0] + a[1, 1] == 0
    return a


def _generators(field: HamiltonianField, z) -> np.ndarray:
    """Generators for every cell; shape (K, 2, 2) for scalar z, (K, *z.shape, 2, 2) otherwise."""
    h = field.matrices
    base = np.stack(
        [np.stack([h[:, 0, 1], h[:, 1, 1]], -1), np.stack([-h[:, 0, 0], -h[:, 0, 1]], -1)], -2
    ).astype(complex)
    z = np.asarray(z, dtype=complex)
    return base.reshape((len(h),) + (1,) * z.ndim + (2, 2)) * z[..., None, None]


def cell_exponential(a, delta, threshold: float = DEFAULTS["series_threshold"]) -> np.ndarray:
    """exp(A * delta) for trace-free A: cosh(s) I + sinh(s)/s * A delta, s^2 = -det(A delta).

    Broadcasts over leading axes of ``a`` and over ``delta``.
    """
    a = np.asarray(a, dtype=complex)
    delta = np.asarray(delta, dtype=float)
    tr = a[..., 0, 0] + a[..., 1, 1]
    if np.any(np.abs(tr) > 1e-12 * (1.0 + np.abs(a).max(initial=0.0))):
        raise ValueError("cell_exponential requires a trace-free generator")
    m = a * delta[..., None, None]
    s2 = -(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    s = np.sqrt(s2)
    small = np.abs(s) < threshold
    s_safe = np.where(small, 1.0, s)
    ch = np.where(small, 1 + s2 / 2 + s2**2 / 24 + s2**3 / 720, np.cosh(s_safe))
    shc = np.where(small, 1 + s2 / 6 + s2**2 / 120 + s2**3 / 5040, np.sinh(s_safe) / s_safe)
    out = shc[..., None, None] * m
    out[..., 0, 0] += ch
    out[..., 1, 1] += ch
    return out


@dataclass(frozen=True)
class TransferMatrix:
    value: np.ndarray
    x: float
    z: complex

    @property
    def det(self) -> complex:
        v = self.value
        return v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]

    def __matmul__(self, other):
        return self.value @ other


def _check_x(field: HamiltonianField, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    total = field.total_length
    if np.any(x < 0) or np.any(x > total * (1 + 1e-15)) or np.any(~np.isfinite(x)):
        raise OutOfRange(f"x outside [0, {total}]")
    return np.minimum(x, total)


def _breakpoint_transfers(field: HamiltonianField, z) -> np.ndarray:
    """T at every breakpoint: shape (K + 1, *z.shape, 2, 2)."""
    gens = _generators(field, z)
    cells = cell_exponential(gens, field.lengths.reshape((-1,) + (1,) * (gens.ndim - 3)))
    out = np.empty((len(field) + 1,) + gens.shape[1:], dtype=complex)
    out[0] = np.eye(2)
    for k in range(len(field)):
        out[k + 1] = cells[k] @ out[k]
    return out


def transfer_at(field: HamiltonianField, z, x: float) -> np.ndarray:
    """T(x, z) for scalar x; z may be an array (result shape z.shape + (2, 2))."""
    x = float(_check_x(field, x))
    z = np.asarray(z, dtype=complex)
    t = np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2)).copy()
    for (a, b), cell in zip(field.intervals(x), field.cells):
        if b > a:
            t = cell_exponential(cell_generator(cell, 1.0) * z[..., None, None], np.full(z.shape, b - a)) @ t
    return t


def propagate(field: HamiltonianField, z: complex, x: float) -> TransferMatrix:
    """T(x, z) with T(0, z) = I."""
    return TransferMatrix(transfer_at(field, complex(z), x), float(x), complex(z))


def solution(field: HamiltonianField, z: complex, c0, x: float) -> np.ndarray:
    return transfer_at(field, complex(z), x) @ np.asarray(c0, dtype=complex)


class Trajectory:
    """The solution x -> T(x, z) c0 on [0, total_length], evaluated lazily."""

    def __init__(self, field: HamiltonianField, z: complex, initial=(1.0, 0.0)):
        self.field = field
        self.z = complex(z)
        self.initial = np.asarray(initial, dtype=complex).reshape(2)

    @cached_property
    def _starts(self) -> np.ndarray:
        # solution value at the left end of every cell
        return _breakpoint_transfers(self.field, self.z) @ self.initial

    @cached_property
    def _gens(self) -> np.ndarray:
        return _generators(self.field, self.z)

    def transfer(self, x) -> np.ndarray:
        """T(x, z) for an array of x; shape x.shape + (2, 2)."""
        x = _check_x(self.field, x)
        k = self.field.cell_index(x)
        tb = _breakpoint_transfers(self.field, self.z)
        return cell_exponential(self._gens[k], x - self.field.breakpoints[k]) @ tb[k]

    def __call__(self, x) -> np.ndarray:
        x = _check_x(self.field, x)
        k = self.field.cell_index(x)
        e = cell_exponential(self._gens[k], x - self.field.breakpoints[k])
        return np.einsum("...ij,...j->...i", e, self._starts[k])

    def scaled(self, factor: complex) -> "Trajectory":
        return Trajectory(self.field, self.z, self.initial * factor)


def h_inner_product(field: HamiltonianField, f, g, quad: QuadratureRule | None = None, upto: float | None = None) -> complex:
    """<f, g> = integral of f(x)^* H(x) g(x) over [0, upto], Gauss-Legendre per cell.

    ``f`` and ``g`` are callables mapping an array of x to an array of 2-vectors.
    """
    quad = quad or QuadratureRule()
    upto = field.total_length if upto is None else upto
    _check_x(field, upto)
    x, w, k = quad.field_nodes(field, upto)
    if len(x) == 0:
        return 0j
    fv = np.asarray(f(x), dtype=complex)
    gv = np.asarray(g(x), dtype=complex)
    hg = np.einsum("nij,nj->ni", field.matrices[k], gv)
    return complex(np.sum(w * np.einsum("ni,ni->n", fv.conj(), hg)))


def gram_matrix(field: HamiltonianField, z: complex, upto: float | None = None, quad: QuadratureRule | None = None) -> np.ndarray:
    """Integral of T(x,z)^* H T(x,z) over [0, upto]: the quadratic form c -> ||T c||^2."""
    quad = quad or QuadratureRule()
    upto = field.total_length if upto is None else upto
    x, w, k = quad.field_nodes(field, upto)
    if len(x) == 0:
        return np.zeros((2, 2), dtype=complex)
    t = Trajectory(field, z).transfer(x)
    integrand = np.conj(np.swapaxes(t, -1, -2)) @ field.matrices[k] @ t
    g = np.einsum("n,nij->ij", w, integrand)
    return 0.5 * (g + g.conj().T)
