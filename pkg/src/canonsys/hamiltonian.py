"""Piecewise-constant Hamiltonians H(x): cells, validation, builtins, JSON I/O.

A :class:`HamiltonianField` is an ordered list of :class:`Cell` objects, each
carrying a length and a real symmetric 2x2 matrix ``[[h11, h12], [h12, h22]]``.
The field lives on ``[0, total_length]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import DEFAULTS
from .errors import (
    HamiltonianFormatError,
    InvalidHamiltonian,
    NotTraceNormalized,
    OutOfRange,
)

__all__ = [
    "Cell",
    "HamiltonianField",
    "QuadratureRule",
    "ValidationResult",
    "validate",
    "builtin",
    "BUILTIN_NAMES",
    "trace_normalize",
    "truncate",
    "load",
    "save",
    "dumps",
    "loads",
    "is_trace_normalized",
]


@dataclass(frozen=True)
class Cell:
    length: float
    h11: float
    h12: float
    h22: float

    @classmethod
    def from_matrix(cls, length, matrix) -> "Cell":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (2, 2):
            raise InvalidHamiltonian(f"cell matrix must be 2x2, got shape {m.shape}")
        if abs(m[0, 1] - m[1, 0]) > 1e-14 * max(np.abs(m).max(), 1.0):
            raise InvalidHamiltonian("cell matrix must be symmetric")
        return cls(float(length), float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h12, self.h22]])

    @property
    def trace(self) -> float:
        return self.h11 + self.h22

    @property
    def det(self) -> float:
        return self.h11 * self.h22 - self.h12 * self.h12

    @property
    def min_eigenvalue(self) -> float:
        half = 0.5 * (self.h11 + self.h22)
        rad = math.hypot(0.5 * (self.h11 - self.h22), self.h12)
        return half - rad

    @property
    def is_zero(self) -> bool:
        return self.h11 == 0.0 and self.h12 == 0.0 and self.h22 == 0.0


@dataclass(frozen=True)
class HamiltonianField:
    cells: tuple[Cell, ...]

    def __init__(self, cells: Iterable[Cell]):
        object.__setattr__(self, "cells", tuple(cells))
        if not self.cells:
            raise InvalidHamiltonian("a Hamiltonian needs at least one cell")

    def __len__(self) -> int:
        return len(self.cells)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.cells])

    @cached_property
    def matrices(self) -> np.ndarray:
        return np.array([c.matrix for c in self.cells])

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Cumulative cell boundaries ``[0, x_1, ..., total_length]``."""
        return np.concatenate([[0.0], np.cumsum(self.lengths)])

    @property
    def total_length(self) -> float:
        return float(self.breakpoints[-1])

    def trace_integral(self, upto: float | None = None) -> float:
        """Integral of tr H over [0, upto] (exact piecewise sum)."""
        upto = self.total_length if upto is None else upto
        total = 0.0
        for (a, b), cell in zip(self.intervals(upto), self.cells):
            total += (b - a) * cell.trace
        return total

    def intervals(self, upto: float | None = None):
        """Yield ``(a, b)`` per cell clipped to [0, upto]; stops after the cell containing upto."""
        upto = self.total_length if upto is None else upto
        if upto < 0 or upto > self.total_length * (1 + 1e-15):
            raise OutOfRange(f"x={upto} outside [0, {self.total_length}]")
        bp = self.breakpoints
        for k in range(len(self.cells)):
            a = bp[k]
            if a >= upto and k > 0:
                return
            yield a, min(bp[k + 1], upto)

    def cell_index(self, x) -> np.ndarray:
        """Index of the cell containing each x (right-closed, x=0 maps to cell 0)."""
        idx = np.searchsorted(self.breakpoints, x, side="left") - 1
        return np.clip(idx, 0, len(self.cells) - 1)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule with ``order`` points per panel.

    Cells longer than ``max_panel`` are split into equal panels so that long
    cells carrying exponentially growing solutions stay resolved.
    """

    order: int = DEFAULTS["quad_order"]
    max_panel: float = DEFAULTS["quad_max_panel"]

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"quadrature order must be a positive integer, got {self.order}")
        if not self.max_panel > 0:
            raise ValueError(f"max_panel must be positive, got {self.max_panel}")

    @cached_property
    def reference(self) -> tuple[np.ndarray, np.ndarray]:
        return leggauss(self.order)

    def nodes(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        x, w = self.reference
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * x, half * w

    def field_nodes(self, field: HamiltonianField, upto: float | None = None):
        """Nodes, weights and cell indices covering [0, upto] cell by cell."""
        xs, ws, ks = [], [], []
        for k, (a, b) in enumerate(field.intervals(upto)):
            if b <= a:
                continue
            panels = max(1, math.ceil((b - a) / self.max_panel - 1e-9))
            edges = np.linspace(a, b, panels + 1)
            pieces = [self.nodes(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
            x = np.concatenate([p[0] for p in pieces])
            w = np.concatenate([p[1] for p in pieces])
            xs.append(x)
            ws.append(w)
            ks.append(np.full(len(x), k))
        if not xs:
            return np.empty(0), np.empty(0), np.empty(0, dtype=int)
        return np.concatenate(xs), np.concatenate(ws), np.concatenate(ks)


@dataclass
class ValidationResult:
    ok: bool
    cell: int | None = None
    deficit: float = 0.0
    diagnostics: list[str] = dc_field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate(field: HamiltonianField, tol_psd: float = DEFAULTS["tol_psd"]) -> ValidationResult:
    """Check cell invariants; never raises.

    ``deficit`` is minus the smallest eigenvalue of the first offending cell
    (zero when that cell fails for another reason).
    """
    diagnostics: list[str] = []
    first: int | None = None
    deficit = 0.0
    for k, cell in enumerate(field.cells):
        problem = None
        lam = 0.0
        if not all(math.isfinite(v) for v in (cell.length, cell.h11, cell.h12, cell.h22)):
            problem = f"cell {k}: non-finite entry"
        elif not cell.length > 0:
            problem = f"cell {k}: length {cell.length!r} is not positive"
        else:
            lam = cell.min_eigenvalue
            if lam < -tol_psd * max(abs(cell.trace), 1.0):
                problem = (
                    f"cell {k}: matrix not positive semi-definite "
                    f"(det={cell.det:.6g}, min eigenvalue {lam:.6g}, deficit {-lam:.6g})"
                )
        if problem is None:
            continue
        diagnostics.append(problem)
        if first is None:
            first = k
            deficit = max(-lam, 0.0)
    if all(c.is_zero for c in field.cells):
        diagnostics.append("every cell has the zero matrix")
    return ValidationResult(ok=not diagnostics, cell=first, deficit=deficit, diagnostics=diagnostics)


def _require_valid(field: HamiltonianField) -> None:
    res = validate(field)
    if not res.ok:
        raise InvalidHamiltonian("; ".join(res.diagnostics))


BUILTIN_NAMES = ("identity", "half-identity", "rank-one", "exp-decay", "random-psd")

_BUILTIN_PARAMS = {
    "identity": {"length", "count"},
    "half-identity": {"length", "count"},
    "rank-one": {"length", "count"},
    "exp-decay": {"length", "count", "rate"},
    "random-psd": {"length", "count", "seed"},
}


def _uniform_cells(matrix, length: float, count: int) -> HamiltonianField:
    h = length / count
    return HamiltonianField(Cell.from_matrix(h, matrix) for _ in range(count))


def builtin(name: str, params: dict | None = None, **kwargs) -> HamiltonianField:
    """Construct a named example Hamiltonian.

    Parameters (all optional): ``length`` (default 1), ``count`` number of
    cells (default 1; 200 for exp-decay, 16 for random-psd), ``rate`` for
    exp-decay (default 1), ``seed`` for random-psd (default 0).
    """
    p = dict(params or {})
    p.update(kwargs)
    if name not in _BUILTIN_PARAMS:
        raise InvalidHamiltonian(f"unknown builtin {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    unknown = set(p) - _BUILTIN_PARAMS[name]
    if unknown:
        raise InvalidHamiltonian(f"invalid parameters for {name}: {sorted(unknown)}")

    default_count = {"exp-decay": 200, "random-psd": 16}.get(name, 1)
    length = float(p.get("length", 1.0))
    count = p.get("count", default_count)
    if not (math.isfinite(length) and length > 0):
        raise InvalidHamiltonian(f"length must be positive, got {length}")
    if int(count) != count or count < 1:
        raise InvalidHamiltonian(f"count must be a positive integer, got {count}")
    count = int(count)

    if name == "identity":
        return _uniform_cells(np.eye(2), length, count)
    if name == "half-identity":
        return _uniform_cells(0.5 * np.eye(2), length, count)
    if name == "rank-one":
        return _uniform_cells([[1.0, 0.0], [0.0, 0.0]], length, count)
    if name == "exp-decay":
        rate = float(p.get("rate", 1.0))
        if not (math.isfinite(rate) and rate >= 0):
            raise InvalidHamiltonian(f"rate must be non-negative, got {rate}")
        h = length / count
        mids = (np.arange(count) + 0.5) * h
        return HamiltonianField(Cell.from_matrix(h, math.exp(-rate * xm) * np.eye(2)) for xm in mids)

    seed = p.get("seed", 0)
    if int(seed) != seed:
        raise InvalidHamiltonian(f"seed must be an integer, got {seed}")
    rng = np.random.default_rng(int(seed))
    raw = rng.uniform(0.5, 1.5, size=count)
    lengths = raw * (length / raw.sum())
    cells = []
    for h in lengths:
        theta = rng.uniform(0.0, math.pi)
        lam = rng.uniform(0.0, 1.0, size=2)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        m = rot @ np.diag(lam) @ rot.T
        m = 0.5 * (m + m.T)
        cells.append(Cell(float(h), float(m[0, 0]), float(m[0, 1]), float(m[1, 1])))
    return HamiltonianField(cells)


def trace_normalize(field: HamiltonianField) -> HamiltonianField:
    """Reparametrize by the running integral of tr H so that tr H = 1 on every cell."""
    cells = []
    for cell in field.cells:
        tr = cell.trace
        if tr == 0.0:
            continue
        if tr == 1.0:
            cells.append(cell)
        else:
            cells.append(Cell(cell.length * tr, cell.h11 / tr, cell.h12 / tr, cell.h22 / tr))
    if not cells:
        raise InvalidHamiltonian("every cell has zero trace; nothing to normalize")
    return HamiltonianField(cells)


def is_trace_normalized(field: HamiltonianField, tol: float = DEFAULTS["trace_tol"]) -> bool:
    return all(abs(c.trace - 1.0) <= tol for c in field.cells)


def require_trace_normalized(field: HamiltonianField, tol: float = DEFAULTS["trace_tol"]) -> None:
    for k, c in enumerate(field.cells):
        if abs(c.trace - 1.0) > tol:
            raise NotTraceNormalized(f"cell {k} has trace {c.trace!r}, expected 1")


def truncate(field: HamiltonianField, upto: float) -> HamiltonianField:
    """Restriction of the field to [0, upto]."""
    if not upto > 0:
        raise OutOfRange(f"truncation point must be positive, got {upto}")
    cells = []
    for (a, b), cell in zip(field.intervals(upto), field.cells):
        if b > a:
            cells.append(cell if b - a == cell.length else Cell(b - a, cell.h11, cell.h12, cell.h22))
    return HamiltonianField(cells)


# -- JSON ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(field: HamiltonianField) -> str:
    rows = [
        '    {"length": %s, "h": [%s, %s, %s]}' % (_fmt(c.length), _fmt(c.h11), _fmt(c.h12), _fmt(c.h22))
        for c in field.cells
    ]
    return '{"cells": [\n' + ",\n".join(rows) + "\n]}\n"


def _reject_constant(name):
    raise HamiltonianFormatError(f"non-finite number {name} is not allowed")


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise HamiltonianFormatError(f"{what} must be a number, got {value!r}")
    return float(value)


def loads(text: str, tol_psd: float = DEFAULTS["tol_psd"], check: bool = True) -> HamiltonianField:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise HamiltonianFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("cells"), list):
        raise HamiltonianFormatError('expected an object with a "cells" list')
    cells = []
    for k, item in enumerate(doc["cells"]):
        if not isinstance(item, dict) or "length" not in item or "h" not in item:
            raise HamiltonianFormatError(f'cell {k}: expected {{"length": ..., "h": [h11, h12, h22]}}')
        h = item["h"]
        if not isinstance(h, list) or len(h) != 3:
            raise HamiltonianFormatError(f"cell {k}: h must list exactly three numbers [h11, h12, h22]")
        vals = [_number(v, f"cell {k} entry") for v in h]
        cells.append(Cell(_number(item["length"], f"cell {k} length"), *vals))
    if not cells:
        raise HamiltonianFormatError("no cells")
    field = HamiltonianField(cells)
    res = validate(field, tol_psd)
    if check and not res.ok:
        raise InvalidHamiltonian("; ".join(res.diagnostics))
    return field


def save(field: HamiltonianField, path) -> None:
    _require_valid(field)
    Path(path).write_text(dumps(field))


def load(path, tol_psd: float = DEFAULTS["tol_psd"], check: bool = True) -> HamiltonianField:
    """Read a Hamiltonian file.  ``check=False`` skips the invariant check (parse errors still raise)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise HamiltonianFormatError(f"cannot read {path}: {exc}") from exc
    return loads(text, tol_psd, check)


def from_matrices(lengths: Sequence[float], matrices) -> HamiltonianField:
    return HamiltonianField(Cell.from_matrix(h, m) for h, m in zip(lengths, matrices))
