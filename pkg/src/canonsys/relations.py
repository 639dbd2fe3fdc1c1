"""Finite-dimensional linear relations: subspaces of C^n (+) C^n.

A relation is stored as an orthonormal basis (columns of a 2n x d matrix);
the top n rows are the f-parts and the bottom n rows the g-parts of the
pairs (f, g).  Subspace equality and inclusion are decided by comparing
orthogonal projectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
from scipy import linalg as sla

from .config import DEFAULTS
from .errors import NotSelfAdjoint

RTOL = DEFAULTS["rank_rtol"]
SUBSPACE_TOL = DEFAULTS["subspace_tol"]

__all__ = [
    "LinearRelation",
    "RelationReport",
    "ExtensionReport",
    "adjoint",
    "is_symmetric",
    "is_selfadjoint",
    "defect_index",
    "in_regularity_domain",
    "in_resolvent_set",
    "spectral_kernel",
    "spectrum_selfadjoint",
    "resolvent_operator",
    "range_spans",
    "extension_dimension_check",
    "random_selfadjoint",
    "random_symmetric",
    "report",
]


def _rank(a: np.ndarray, rtol: float = RTOL, scale: float = 0.0) -> int:
    """Numerical rank; singular values below rtol * max(s_max, scale) count as zero."""
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    ref = max(s[0], scale)
    if ref == 0.0:
        return 0
    return int(np.sum(s > rtol * ref))


def _orth(a: np.ndarray, rtol: float = RTOL) -> np.ndarray:
    """Orthonormal basis of the column span (SVD, so the result is pivot-order independent)."""
    if a.size == 0 or a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    r = int(np.sum(s > rtol * s[0]))
    return u[:, :r].astype(complex)


def _null(a: np.ndarray, rtol: float = RTOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the null space of a (columns)."""
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    ref = max(s[0], scale) if s.size else 0.0
    r = int(np.sum(s > rtol * ref)) if ref > 0 else 0
    return vh[r:].conj().T.astype(complex)


class LinearRelation:
    """A subspace of C^n (+) C^n spanned by the pairs (f_i, g_i)."""

    def __init__(self, n: int, pairs: np.ndarray | None = None):
        self.n = int(n)
        if pairs is None:
            pairs = np.zeros((2 * self.n, 0))
        pairs = np.asarray(pairs, dtype=complex)
        if pairs.ndim != 2 or pairs.shape[0] != 2 * self.n:
            raise ValueError(f"pairs must be a (2n, d) array with n={self.n}")
        self.basis = _orth(pairs)

    @classmethod
    def from_pairs(cls, fs, gs) -> "LinearRelation":
        fs = np.atleast_2d(np.asarray(fs, dtype=complex))
        gs = np.atleast_2d(np.asarray(gs, dtype=complex))
        return cls(fs.shape[1], np.vstack([fs.T, gs.T]))

    @classmethod
    def graph(cls, a) -> "LinearRelation":
        a = np.asarray(a, dtype=complex)
        n = a.shape[0]
        return cls(n, np.vstack([np.eye(n), a]))

    @classmethod
    def multivalued(cls, n: int, subspace=None) -> "LinearRelation":
        """{0} (+) M, with M = C^n unless a spanning set is given."""
        m = np.eye(n) if subspace is None else np.asarray(subspace, dtype=complex).reshape(n, -1)
        return cls(n, np.vstack([np.zeros_like(m), m]))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def f_part(self) -> np.ndarray:
        return self.basis[: self.n]

    @property
    def g_part(self) -> np.ndarray:
        return self.basis[self.n :]

    @cached_property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def contains(self, other: "LinearRelation", tol: float = SUBSPACE_TOL) -> bool:
        if other.dim == 0:
            return True
        return float(np.abs(self.projector @ other.basis - other.basis).max()) <= tol

    def equals(self, other: "LinearRelation", tol: float = SUBSPACE_TOL) -> bool:
        return self.n == other.n and float(np.abs(self.projector - other.projector).max(initial=0.0)) <= tol

    def __add__(self, other: "LinearRelation") -> "LinearRelation":
        return LinearRelation(self.n, np.hstack([self.basis, other.basis]))

    def multivalued_part(self) -> np.ndarray:
        """Orthonormal basis of {g : (0, g) in R}."""
        c = _null(self.f_part)
        return _orth(self.g_part @ c) if c.shape[1] else np.zeros((self.n, 0), dtype=complex)

    def domain(self) -> np.ndarray:
        return _orth(self.f_part)

    def __repr__(self) -> str:
        return f"LinearRelation(n={self.n}, dim={self.dim})"


def adjoint(r: LinearRelation) -> LinearRelation:
    """R* = {(h, k) : <g, h> = <f, k> for all (f, g) in R} = {(g, -f)}^perp."""
    flipped = np.vstack([r.g_part, -r.f_part])
    return LinearRelation(r.n, _null(flipped.conj().T) if r.dim else np.eye(2 * r.n))


def is_symmetric(r: LinearRelation, tol: float = SUBSPACE_TOL) -> bool:
    return adjoint(r).contains(r, tol)


def is_selfadjoint(r: LinearRelation, tol: float = SUBSPACE_TOL) -> bool:
    return r.equals(adjoint(r), tol)


def _range_matrix(r: LinearRelation, z: complex) -> np.ndarray:
    return z * r.f_part - r.g_part


def defect_index(r: LinearRelation, z: complex) -> int:
    """dim {z f - g : (f, g) in R}^perp."""
    return r.n - _rank(_range_matrix(r, z), scale=abs(z) + 1.0)


def range_spans(r: LinearRelation, z: complex) -> bool:
    return defect_index(r, z) == 0


def in_regularity_domain(r: LinearRelation, z: complex) -> bool:
    """True iff no nonzero f has (f, z f) in R."""
    c = _null(_range_matrix(r, z), scale=abs(z) + 1.0)
    if c.shape[1] == 0:
        return True
    return float(np.abs(r.f_part @ c).max()) <= RTOL


def in_resolvent_set(r: LinearRelation, z: complex) -> bool:
    """True iff R = {(T h, z T h - h)} for an everywhere defined operator T.

    The candidate operator is the relation {(z f - g, f)}: it must have full
    domain and trivial multivalued part.
    """
    m = _range_matrix(r, z)
    onto = _rank(m, scale=abs(z) + 1.0) == r.n
    c = _null(m, scale=abs(z) + 1.0)
    single_valued = c.shape[1] == 0 or float(np.abs(r.f_part @ c).max()) <= RTOL
    return onto and single_valued


def _require_selfadjoint(t: LinearRelation) -> None:
    if not is_selfadjoint(t):
        raise NotSelfAdjoint("operation requires a self-adjoint relation")


def spectral_kernel(t: LinearRelation) -> list[float]:
    """Points outside the regularity domain, via the operator part on dom T."""
    _require_selfadjoint(t)
    dom = t.domain()
    d = dom.shape[1]
    if d == 0:
        return []
    # (q, g) in T for each domain basis vector q; the operator part is P_dom g
    coeffs, *_ = np.linalg.lstsq(t.f_part, dom, rcond=None)
    a = dom.conj().T @ (t.g_part @ coeffs)
    a = 0.5 * (a + a.conj().T)
    return sorted(float(v) for v in np.linalg.eigvalsh(a))


def spectrum_selfadjoint(t: LinearRelation) -> list[float]:
    """Points where the resolvent-set test fails.

    Candidates are the finite eigenvalues of the pencil g = z f over a basis of
    T; a candidate is kept only if :func:`in_resolvent_set` fails there.
    """
    _require_selfadjoint(t)
    if t.dim == 0:
        return []
    vals = sla.eigvals(t.g_part, t.f_part, homogeneous_eigvals=True)
    alpha, beta = vals
    out = []
    for a, b in zip(alpha, beta):
        if abs(b) <= RTOL * max(abs(a), 1.0):
            continue
        lam = a / b
        if abs(lam.imag) > 1e-8 * max(1.0, abs(lam)):
            continue
        lam = float(lam.real)
        if not in_resolvent_set(t, lam):
            out.append(lam)
    return sorted(out)


def resolvent_operator(t: LinearRelation, z: complex) -> np.ndarray:
    """The matrix T_z with t = {(T_z h, z T_z h - h) : h}."""
    if not in_resolvent_set(t, z):
        raise ValueError(f"z={z} is not in the resolvent set")
    # h = z f - g over the basis; T_z h = f
    m = _range_matrix(t, z)
    return t.f_part @ np.linalg.pinv(m)


@dataclass
class RelationReport:
    symmetric: bool
    selfadjoint: bool
    defect: dict = dc_field(default_factory=dict)
    spectrum: list = dc_field(default_factory=list)
    spectral_kernel: list = dc_field(default_factory=list)


def report(r: LinearRelation, points=(1j, -1j)) -> RelationReport:
    sym = is_symmetric(r)
    sa = sym and is_selfadjoint(r)
    rep = RelationReport(sym, sa, {complex(z): defect_index(r, z) for z in points})
    if sa:
        rep.spectrum = spectrum_selfadjoint(r)
        rep.spectral_kernel = spectral_kernel(r)
    return rep


# -- extensions -----------------------------------------------------------------


@dataclass
class ExtensionReport:
    base_dim: int
    defect: tuple[int, int]
    trials: int
    selfadjoint_dims: list = dc_field(default_factory=list)
    symmetric_dims: list = dc_field(default_factory=list)
    rejected: int = 0

    @property
    def found(self) -> bool:
        return bool(self.selfadjoint_dims)

    @property
    def dimension_rule_holds(self) -> bool:
        """Every self-adjoint extension is a d-dimensional enlargement, and no
        symmetric enlargement of another size is self-adjoint."""
        d = self.defect[0]
        return all(k == self.base_dim + d for k in self.selfadjoint_dims) and all(
            k < self.base_dim + d for k in self.symmetric_dims
        )

    @property
    def search_exhausted(self) -> bool:
        return not self.found


def _boundary_form(b: np.ndarray, n: int) -> np.ndarray:
    """Omega_ij = <g_i, h_j> - <f_i, k_j> over the columns of b."""
    f, g = b[:n], b[n:]
    return g.conj().T @ f - f.conj().T @ g


def _random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def extension_dimension_check(s: LinearRelation, trials: int = 50, seed: int = 0) -> ExtensionReport:
    """Randomized search over enlargements of a symmetric relation.

    Candidate enlargements are drawn from the boundary space S* (-) S.  The
    boundary form is non-degenerate there with signature (d, d); random
    unitaries between its positive and negative eigenspaces give maximal
    neutral subspaces, and random sub- and super-spaces of those give
    further candidates.  Every candidate is classified with is_symmetric /
    is_selfadjoint; the dimensions of the self-adjoint ones are recorded.
    """
    if not is_symmetric(s):
        raise ValueError("extension_dimension_check needs a symmetric relation")
    d_plus, d_minus = defect_index(s, 1j), defect_index(s, -1j)
    rep = ExtensionReport(s.dim, (d_plus, d_minus), trials)
    star = adjoint(s)
    bnd = _orth(star.basis - s.projector @ star.basis)
    if bnd.shape[1] == 0:
        if is_selfadjoint(s):
            rep.selfadjoint_dims.append(s.dim)
        return rep
    omega = _boundary_form(bnd, s.n)
    evals, evecs = np.linalg.eigh(1j * omega)
    pos = bnd @ evecs[:, evals > 0]
    neg = bnd @ evecs[:, evals < 0]
    scale_pos = np.sqrt(np.abs(evals[evals > 0]))
    scale_neg = np.sqrt(np.abs(evals[evals < 0]))
    pos, neg = pos / scale_pos, neg / scale_neg
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        if d_plus != d_minus:
            break
        d = d_plus
        u = _random_unitary(rng, d)
        neutral = pos + neg @ u
        kind = rng.integers(3)
        if kind == 1 and d > 1:
            keep = rng.integers(1, d)
            extra = neutral @ _random_unitary(rng, d)[:, :keep]
        elif kind == 2:
            extra = np.hstack([neutral, bnd @ (rng.normal(size=(bnd.shape[1], 1)) + 0j)])
        else:
            extra = neutral
        cand = LinearRelation(s.n, np.hstack([s.basis, extra]))
        if is_selfadjoint(cand):
            rep.selfadjoint_dims.append(cand.dim)
        elif is_symmetric(cand):
            rep.symmetric_dims.append(cand.dim)
        else:
            rep.rejected += 1
    return rep


# -- random instances ---------------------------------------------------------------


def random_selfadjoint(n: int, seed: int, mul_dim: int | None = None) -> LinearRelation:
    """Graph of a random Hermitian operator on a random subspace D, plus D^perp as multivalued part."""
    rng = np.random.default_rng(seed)
    if mul_dim is None:
        mul_dim = int(rng.integers(0, n))
    r = n - mul_dim
    q = _random_unitary(rng, n)
    qd, qm = q[:, :r], q[:, r:]
    h = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    h = 0.5 * (h + h.conj().T)
    fs = np.hstack([qd, np.zeros((n, n - r))])
    gs = np.hstack([qd @ h, qm])
    return LinearRelation(n, np.vstack([fs, gs]))


def random_symmetric(n: int, seed: int, dim: int | None = None) -> LinearRelation:
    """A random subspace of a random self-adjoint relation (hence symmetric)."""
    rng = np.random.default_rng(seed)
    t = random_selfadjoint(n, int(rng.integers(2**31)))
    if dim is None:
        dim = int(rng.integers(0, n + 1))
    coeff = rng.normal(size=(t.dim, dim)) + 1j * rng.normal(size=(t.dim, dim))
    return LinearRelation(n, t.basis @ coeff)
