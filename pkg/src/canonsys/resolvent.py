"""Green's kernel of the boundary-value problem, the Green integral, its
residual check, and the Hilbert-Schmidt (Nystrom) cross-check against shooting.

Kernel::

    G(x, t, z) = f(x, z) w(t, conj z)^*   for t <= x
                 w(x, z) f(t, conj z)^*   for t >  x

with f = u + m v (beta-condition at N) and w the alpha-solution normalized by
sin(alpha) + m cos(alpha).  The jump G(x, x-) - G(x, x+) equals J, so
y = int G H h solves J y' = z H y - H h; that is, the Green integral inverts
z - T.  The resolvent (T - z)^{-1} is its negative, with eigenvalues
1 / (E - z) at the eigenvalues E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import DEFAULTS
from .errors import IndefiniteMatrix, InResolventSetError, NormalizationZero, OverflowGuard
from .extension import SelfAdjointBVP, char_function, eigenvalues_in
from .hamiltonian import HamiltonianField, QuadratureRule
from .linalg import jacobi_eigh
from .transfer import J, Trajectory, _check_x
from .weyl import BoundaryAngle, m_function

__all__ = [
    "GreenKernel",
    "ResolventSolution",
    "HSMatrix",
    "HSComparison",
    "w_alpha",
    "psd_sqrt",
    "apply_resolvent",
    "resolvent_residual",
    "hs_matrix",
    "hs_eigen_compare",
]


def _normalization(alpha: BoundaryAngle, m: complex) -> complex:
    d = alpha.sin + m * alpha.cos
    if abs(d) <= 1e-14 * max(1.0, abs(m)):
        raise NormalizationZero(f"sin(alpha) + m cos(alpha) vanishes (m={m})")
    return d


def w_alpha(field: HamiltonianField, z: complex, alpha, m: complex, x):
    """T(x, z) (cos a, -sin a) / (sin a + m cos a)."""
    alpha = BoundaryAngle(alpha)
    traj = Trajectory(field, z, alpha.vector / _normalization(alpha, complex(m)))
    return traj(x)


def psd_sqrt(m, tol_psd: float = DEFAULTS["tol_psd"]) -> np.ndarray:
    """Positive semi-definite square root of a real symmetric PSD 2x2 matrix (closed form)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    scale = max(abs(tr), 1.0)
    lam_min = 0.5 * tr - math.hypot(0.5 * (m[0, 0] - m[1, 1]), m[0, 1])
    if lam_min < -tol_psd * scale or abs(m[0, 1] - m[1, 0]) > tol_psd * scale:
        raise IndefiniteMatrix(f"matrix is not symmetric positive semi-definite: {m.tolist()}")
    if tr <= 0.0:
        return np.zeros((2, 2))
    sd = math.sqrt(max(det, 0.0))
    return (m + sd * np.eye(2)) / math.sqrt(tr + 2.0 * sd)


class GreenKernel:
    """G(x, t, z) for a boundary-value problem at a point z of the resolvent set.

    ``swapped=True`` exchanges the two branches (t <= x uses the second
    formula); it exists only as a negative control.
    """

    def __init__(self, bvp: SelfAdjointBVP, z: complex, swapped: bool = False):
        self.bvp = bvp
        self.z = complex(z)
        self.swapped = swapped
        field = bvp.restricted
        self.m = m_function(field, self.z, bvp.beta, bvp.N)
        m_bar = m_function(field, self.z.conjugate(), bvp.beta, bvp.N)
        alpha = bvp.alpha
        try:
            norm = _normalization(alpha, self.m)
            norm_bar = _normalization(alpha, m_bar)
        except NormalizationZero as exc:
            raise InResolventSetError(f"z={z} is an eigenvalue of the boundary-value problem") from exc
        self.f = Trajectory(field, self.z, (1.0, self.m))
        self.w = Trajectory(field, self.z, alpha.vector / norm)
        self.f_bar = Trajectory(field, self.z.conjugate(), (1.0, m_bar))
        self.w_bar = Trajectory(field, self.z.conjugate(), alpha.vector / norm_bar)

    @property
    def field(self) -> HamiltonianField:
        return self.bvp.restricted

    def lower(self, x, t) -> np.ndarray:
        """Branch f(x, z) w(t, conj z)^*."""
        return np.einsum("...i,...j->...ij", self.f(x), np.conj(self.w_bar(t)))

    def upper(self, x, t) -> np.ndarray:
        """Branch w(x, z) f(t, conj z)^*."""
        return np.einsum("...i,...j->...ij", self.w(x), np.conj(self.f_bar(t)))

    def __call__(self, x, t) -> np.ndarray:
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        first = t <= x
        if self.swapped:
            first = ~first
        return np.where(first[..., None, None], self.lower(x, t), self.upper(x, t))

    def jump(self, x) -> np.ndarray:
        """G(x, x-) - G(x, x+); equals J away from the swapped control."""
        d = self.lower(x, x) - self.upper(x, x)
        return -d if self.swapped else d


def _cell_integrals(field: HamiltonianField, integrand, quad: QuadratureRule) -> np.ndarray:
    """Integral of integrand(x, k) over each full cell (k = cell index)."""
    out = np.zeros(len(field), dtype=complex)
    x, w, k = quad.field_nodes(field)
    np.add.at(out, k, w * integrand(x, k))
    return out


def _partial(field: HamiltonianField, integrand, k: int, a: float, b: float, quad: QuadratureRule) -> complex:
    if b <= a:
        return 0j
    panels = max(1, math.ceil((b - a) / quad.max_panel - 1e-9))
    edges = np.linspace(a, b, panels + 1)
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = quad.nodes(lo, hi)
        total += np.sum(w * integrand(x, np.full(len(x), k)))
    return total


def _running_integral(field: HamiltonianField, integrand, xs, quad: QuadratureRule) -> np.ndarray:
    """Integral of integrand over [0, x] for each x, split at cell boundaries."""
    full = _cell_integrals(field, integrand, quad)
    before = np.concatenate([[0j], np.cumsum(full)])
    bp = field.breakpoints
    ks = field.cell_index(xs)
    return np.array([before[k] + _partial(field, integrand, k, bp[k], x, quad) for x, k in zip(xs, ks)])


class ResolventSolution:
    """y(x) = integral over [0, N] of G(x, t, z) H(t) h(t) dt, evaluated on demand."""

    def __init__(self, kernel: GreenKernel, h, quad: QuadratureRule | None = None):
        self.kernel = kernel
        self.h = h
        self.quad = quad or QuadratureRule()
        field = kernel.field
        mats = field.matrices

        def against(traj):
            def integrand(x, k):
                hh = np.einsum("nij,nj->ni", mats[k], np.asarray(h(x), dtype=complex))
                return np.einsum("ni,ni->n", np.conj(traj(x)), hh)

            return integrand

        self._w_int = against(kernel.w_bar)
        self._f_int = against(kernel.f_bar)
        self._w_total = complex(np.sum(_cell_integrals(field, self._w_int, self.quad)))
        self._f_total = complex(np.sum(_cell_integrals(field, self._f_int, self.quad)))

    def __call__(self, x) -> np.ndarray:
        field = self.kernel.field
        xs = np.atleast_1d(_check_x(field, x)).astype(float)
        a = _running_integral(field, self._w_int, xs, self.quad)
        b = _running_integral(field, self._f_int, xs, self.quad)
        k = self.kernel
        if k.swapped:
            y = k.f(xs) * (self._w_total - a)[:, None] + k.w(xs) * b[:, None]
        else:
            y = k.f(xs) * a[:, None] + k.w(xs) * (self._f_total - b)[:, None]
        return y.reshape(np.shape(x) + (2,))


def apply_resolvent(kernel: GreenKernel, h, quad: QuadratureRule | None = None) -> ResolventSolution:
    """The Green integral of h: the solution of J y' = z H y - H h meeting both conditions.

    ``h`` is any callable mapping an array of x to an array of 2-vectors.
    """
    return ResolventSolution(kernel, h, quad)


def resolvent_residual(
    kernel: GreenKernel,
    h,
    y,
    mesh: int = DEFAULTS["residual_mesh_per_cell"],
    step: float = DEFAULTS["residual_step"],
) -> float:
    """max |J y' - z H y + H h| over mesh midpoints (centered differences), and
    the two boundary residuals of y."""
    bvp = kernel.bvp
    field = kernel.field
    bp = field.breakpoints
    residual = 0.0
    for k, (a, b) in enumerate(zip(bp[:-1], bp[1:])):
        width = (b - a) / mesh
        xm = a + (np.arange(mesh) + 0.5) * width
        d = min(step, 0.25 * width)
        deriv = (y(xm + d) - y(xm - d)) / (2 * d)
        hmat = field.matrices[k]
        r = deriv @ J.T - kernel.z * y(xm) @ hmat.T + np.asarray(h(xm), dtype=complex) @ hmat.T
        residual = max(residual, float(np.abs(r).max()))
    y0 = np.asarray(y(0.0))
    y_end = np.asarray(y(bvp.N))
    residual = max(residual, abs(bvp.alpha.residual(y0)), abs(bvp.beta.residual(y_end)))
    return residual


@dataclass
class HSMatrix:
    """Nystrom discretization of L(x, t) = H^{1/2}(x) G(x, t, z) H^{1/2}(t).

    ``matrix`` is the symmetrized form sqrt(w_i) L(x_i, x_j) sqrt(w_j) as a
    (2n, 2n) array; diagonal blocks use the mean of the two kernel branches.
    """

    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    z: float

    @property
    def hermitian_deviation(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    @property
    def nystrom(self) -> np.ndarray:
        """The unsymmetrized matrix L(x_i, x_j) w_j."""
        rw = np.repeat(np.sqrt(self.weights), 2)
        return self.matrix / rw[:, None] * rw[None, :]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return jacobi_eigh(self.matrix.real)


def hs_matrix(
    bvp: SelfAdjointBVP,
    z: float,
    quad: QuadratureRule | None = None,
    hermitian_tol: float = DEFAULTS["hermitian_tol"],
) -> HSMatrix:
    """Hilbert-Schmidt kernel matrix at a real z in a spectral gap."""
    if isinstance(z, complex) and z.imag != 0.0:
        raise ValueError("hs_matrix is defined for real z only")
    z = float(np.real(z))
    quad = quad or QuadratureRule()
    kernel = GreenKernel(bvp, z)
    field = kernel.field
    x, w, k = quad.field_nodes(field)
    roots = np.array([psd_sqrt(m) for m in field.matrices])[k]
    xi, tj = np.meshgrid(x, x, indexing="ij")
    g = kernel(xi, tj)
    diag = 0.5 * (kernel.lower(x, x) + kernel.upper(x, x))
    g[np.arange(len(x)), np.arange(len(x))] = diag
    lk = np.einsum("iab,ijbc,jcd->ijad", roots, g, roots)
    sw = np.sqrt(w)
    lk = lk * sw[:, None, None, None] * sw[None, :, None, None]
    mat = lk.transpose(0, 2, 1, 3).reshape(2 * len(x), 2 * len(x))
    if np.abs(mat.imag).max(initial=0.0) > hermitian_tol:
        raise ValueError("HS matrix has a non-negligible imaginary part at real z")
    out = HSMatrix(x, w, mat.real, z)
    dev = out.hermitian_deviation
    if dev > hermitian_tol:
        raise ValueError(f"HS matrix fails the Hermitian check (deviation {dev:.3g})")
    return out


@dataclass
class HSComparison:
    pairs: list
    hs_count: int
    shooting_count: int
    floor: float

    @property
    def counts_match(self) -> bool:
        return self.hs_count == self.shooting_count

    @property
    def max_gap(self) -> float:
        return max((g for _, _, g in self.pairs), default=0.0)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def _nearest_eigenvalues(bvp: SelfAdjointBVP, z: float, count: int, grid_points: int) -> list[float]:
    radius = 1.0
    while True:
        try:
            found = eigenvalues_in(bvp, (z - radius, z + radius), grid_points).values
        except OverflowGuard:
            raise
        if len(found) >= count:
            return sorted(found, key=lambda e: abs(e - z))[:count]
        radius *= 2.0


def hs_eigen_compare(
    bvp: SelfAdjointBVP,
    z: float,
    k: int,
    quad: QuadratureRule | None = None,
    grid_points: int = DEFAULTS["grid_points"],
) -> HSComparison:
    """Pair the k largest resolvent eigenvalues from the HS matrix with 1/(E - z)
    for the k shooting eigenvalues E nearest z.

    The HS matrix discretizes the Green integral, which inverts z - T; the
    resolvent (T - z)^{-1} eigenvalues are therefore the negated HS eigenvalues.
    The count check uses a floor halfway (geometrically) between the k-th and
    the (k+1)-th expected magnitudes.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return HSComparison([], 0, 0, math.inf)
    if abs(char_function(bvp, z)) <= 1e-12:
        raise InResolventSetError(f"z={z} is an eigenvalue")
    hs = hs_matrix(bvp, z, quad)
    mu = -hs.eigenvalues
    energies = _nearest_eigenvalues(bvp, z, k + 1, grid_points)
    targets = [1.0 / (e - z) for e in energies]
    floor = math.sqrt(abs(targets[k - 1]) * abs(targets[k]))
    largest = sorted(mu, key=abs, reverse=True)[:k]
    pool = list(largest)
    pairs = []
    for e, target in sorted(zip(energies[:k], targets[:k]), key=lambda p: -abs(p[1])):
        j = int(np.argmin([abs(m - target) for m in pool]))
        m = pool.pop(j)
        pairs.append((float(m), float(e), float(abs(m - target))))
    hs_count = int(np.sum(np.abs(mu) >= floor))
    return HSComparison(pairs, hs_count, k, floor)
