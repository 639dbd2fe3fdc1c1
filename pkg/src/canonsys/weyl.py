"""Weyl m-functions on [0, N], limit-point / limit-circle classification,
defect-index estimates and the trace-normalized limit-point check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence, Union

import numpy as np

from .config import DEFAULTS
from .errors import DenominatorZero, ScheduleError
from .hamiltonian import HamiltonianField, QuadratureRule, require_trace_normalized
from .transfer import Trajectory, gram_matrix, h_inner_product, transfer_at

__all__ = [
    "BoundaryAngle",
    "Verdict",
    "ClassificationReport",
    "DefectScan",
    "DeBrangesReport",
    "m_function",
    "classify",
    "defect_constancy_scan",
    "debranges_check",
    "default_schedule",
]

FieldSource = Union[HamiltonianField, Callable[[float], HamiltonianField]]


class BoundaryAngle(float):
    """An angle in (0, pi] selecting the condition f1 sin(a) + f2 cos(a) = 0.

    sin and cos are exact at pi/2 and pi so that the classical Dirichlet and
    Neumann-type conditions do not pick up 1e-16 residue.
    """

    def __new__(cls, value):
        v = float(value)
        if not (0.0 < v <= math.pi):
            raise ValueError(f"boundary angle must lie in (0, pi], got {v}")
        return super().__new__(cls, v)

    @property
    def sin(self) -> float:
        if self == math.pi:
            return 0.0
        if self == math.pi / 2:
            return 1.0
        return math.sin(self)

    @property
    def cos(self) -> float:
        if self == math.pi:
            return -1.0
        if self == math.pi / 2:
            return 0.0
        return math.cos(self)

    @property
    def vector(self) -> np.ndarray:
        """Initial vector (cos a, -sin a); it satisfies the condition identically."""
        return np.array([self.cos, -self.sin])

    def residual(self, f) -> complex:
        return f[0] * self.sin + f[1] * self.cos


def m_function(field: HamiltonianField, z: complex, beta, N: float | None = None) -> complex:
    """The m making u + m v satisfy the beta-condition at N."""
    beta = BoundaryAngle(beta)
    N = field.total_length if N is None else N
    t = transfer_at(field, complex(z), N)
    num = t[0, 0] * beta.sin + t[1, 0] * beta.cos
    den = t[0, 1] * beta.sin + t[1, 1] * beta.cos
    if abs(den) <= 1e-14 * max(1.0, np.abs(t).max()):
        raise DenominatorZero(f"v fails to leave the boundary condition at N={N}: z={z} is an eigenvalue")
    return complex(-num / den)


class Verdict(str, enum.Enum):
    LIMIT_POINT = "LimitPoint"
    LIMIT_CIRCLE = "LimitCircle"
    UNDETERMINED = "Undetermined"


@dataclass
class ClassificationReport:
    verdict: Verdict
    z: complex
    schedule: list[float]
    norms_u: list[float]
    norms_v: list[float]
    min_form: list[float]
    max_form: list[float]
    defect_estimate: int
    zero_norm_class: bool = False

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "z": self.z,
            "schedule": list(self.schedule),
            "norms_u": list(self.norms_u),
            "norms_v": list(self.norms_v),
            "min_form": list(self.min_form),
            "max_form": list(self.max_form),
            "defect_estimate": self.defect_estimate,
            "zero_norm_class": self.zero_norm_class,
        }


def default_schedule(k: int = 4, base: float = 5.0) -> list[float]:
    return [base * 2**j for j in range(k)]


def _field_for(source: FieldSource, N: float) -> HamiltonianField:
    f = source if isinstance(source, HamiltonianField) else source(N)
    if f.total_length < N * (1 - 1e-15):
        raise ScheduleError(f"schedule point N={N} exceeds field length {f.total_length}")
    return f


def _check_schedule(schedule: Sequence[float]) -> list[float]:
    sched = [float(n) for n in schedule]
    if len(sched) < 4:
        raise ScheduleError("classification needs at least four schedule points")
    if any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] <= 0:
        raise ScheduleError("schedule must be positive and strictly increasing")
    return sched


def _cauchy_converged(values: Sequence[float], rel_tol: float) -> bool:
    """Last three increments non-increasing and the final one below rel_tol of the value."""
    s = np.asarray(values, dtype=float)
    if s[-1] == 0.0:
        return bool(np.all(s == 0.0))
    d = np.diff(s)[-3:]
    noise = 1e-13 * np.abs(s).max()
    contracting = bool(np.all(d[1:] <= d[:-1] + noise))
    return contracting and abs(d[-1]) <= rel_tol * abs(s[-1]) + noise


def _diverged(values: Sequence[float], schedule: Sequence[float], factor: float) -> bool:
    """Growth by ``factor`` across the last doubling of the schedule."""
    last = schedule[-1]
    refs = [j for j, n in enumerate(schedule[:-1]) if n <= 0.5 * last * (1 + 1e-12)]
    if not refs:
        return False
    ref = values[refs[-1]]
    if ref <= 0.0:
        return False
    return values[-1] / ref >= factor * (1 - 1e-9)


def classify(
    source: FieldSource,
    z: complex,
    schedule: Sequence[float] | None = None,
    rel_tol: float = DEFAULTS["classify_rel_tol"],
    quad: QuadratureRule | None = None,
    growth_factor: float = DEFAULTS["growth_factor"],
) -> ClassificationReport:
    """Limit-point / limit-circle verdict from truncated norms of u and v.

    ``source`` is either a field long enough for the whole schedule or a
    callable ``N -> field on [0, N]``.  Besides the u and v norms, the
    quadratic form c -> ||T c||^2 is tracked through its smallest and largest
    eigenvalues; the number of those sequences that converge is the defect
    estimate.  The smallest one is re-integrated along its own eigenvector
    trajectory, since reading it off a Gram matrix dominated by an
    exponentially large eigenvalue loses all digits.
    """
    sched = _check_schedule(schedule if schedule is not None else DEFAULTS["classify_schedule"])
    quad = quad or QuadratureRule()
    z = complex(z)
    norms_u, norms_v, min_form, max_form = [], [], [], []
    trace_last = 0.0
    for N in sched:
        f = _field_for(source, N)
        g = gram_matrix(f, z, N, quad)
        norms_u.append(float(g[0, 0].real))
        norms_v.append(float(g[1, 1].real))
        vals, vecs = np.linalg.eigh(g)
        max_form.append(float(vals[-1]))
        traj = Trajectory(f, z, vecs[:, 0])
        min_form.append(float(h_inner_product(f, traj, traj, quad, N).real))
        trace_last = f.trace_integral(N)

    u_conv = _cauchy_converged(norms_u, rel_tol)
    v_conv = _cauchy_converged(norms_v, rel_tol)
    if u_conv and v_conv:
        verdict = Verdict.LIMIT_CIRCLE
    elif _diverged(norms_u, sched, growth_factor) or _diverged(norms_v, sched, growth_factor):
        verdict = Verdict.LIMIT_POINT
    else:
        verdict = Verdict.UNDETERMINED

    if _cauchy_converged(max_form, rel_tol):
        defect = 2
    elif _cauchy_converged(min_form, rel_tol):
        defect = 1
    else:
        defect = 0
    zero_norm = bool(min_form[-1] <= 1e-12 * max(trace_last, 1.0))
    return ClassificationReport(verdict, z, sched, norms_u, norms_v, min_form, max_form, defect, zero_norm)


@dataclass
class DefectScan:
    estimates: dict = dc_field(default_factory=dict)
    verdicts: dict = dc_field(default_factory=dict)

    @property
    def violations(self) -> list:
        """Points classified limit-circle whose defect estimate is not 2."""
        return [z for z, v in self.verdicts.items() if v is Verdict.LIMIT_CIRCLE and self.estimates[z] != 2]

    @property
    def constant(self) -> bool:
        return len(set(self.estimates.values())) <= 1


def defect_constancy_scan(
    source: FieldSource,
    z_list: Sequence[complex],
    schedule: Sequence[float] | None = None,
    rel_tol: float = DEFAULTS["classify_rel_tol"],
    quad: QuadratureRule | None = None,
) -> DefectScan:
    scan = DefectScan()
    for z in z_list:
        rep = classify(source, z, schedule, rel_tol, quad)
        scan.estimates[complex(z)] = rep.defect_estimate
        scan.verdicts[complex(z)] = rep.verdict
    return scan


@dataclass
class DeBrangesReport:
    schedule: list[float]
    trace_integrals: list[float]
    constant_solution_norms: list[float]
    trace_ok: bool
    norm_identity_ok: bool
    classification: ClassificationReport

    @property
    def limit_point(self) -> bool:
        return self.classification.verdict is Verdict.LIMIT_POINT

    @property
    def passed(self) -> bool:
        return self.trace_ok and self.norm_identity_ok and self.limit_point


def debranges_check(
    field: HamiltonianField,
    schedule: Sequence[float] | None = None,
    rel_tol: float = 1e-12,
    quad: QuadratureRule | None = None,
) -> DeBrangesReport:
    """For tr H = 1: integral of tr H equals N, ||u||^2 + ||v||^2 at z = 0 equals it
    too, and the system is classified limit point at z = i."""
    require_trace_normalized(field)
    sched = _check_schedule(schedule if schedule is not None else DEFAULTS["classify_schedule"])
    if sched[-1] > field.total_length * (1 + 1e-15):
        raise ScheduleError(f"schedule reaches {sched[-1]} but the field ends at {field.total_length}")
    quad = quad or QuadratureRule()
    traces, norms = [], []
    for N in sched:
        traces.append(field.trace_integral(N))
        g = gram_matrix(field, 0.0, N, quad)
        norms.append(float((g[0, 0] + g[1, 1]).real))
    trace_ok = all(abs(t - N) <= rel_tol * N for t, N in zip(traces, sched))
    norm_ok = all(abs(n - t) <= rel_tol * t for n, t in zip(norms, traces))
    rep = classify(field, 1j, sched, quad=quad)
    return DeBrangesReport(sched, traces, norms, trace_ok, norm_ok, rep)
