"""Spectral toolkit for 2x2 canonical systems J u' = z H u with piecewise-constant H."""

from .errors import CanonicalSystemError
from .extension import SelfAdjointBVP, char_function, eigenfunction, eigenvalues_in
from .hamiltonian import (
    Cell,
    HamiltonianField,
    QuadratureRule,
    builtin,
    load,
    save,
    trace_normalize,
    validate,
)
from .resolvent import GreenKernel, apply_resolvent, hs_eigen_compare, hs_matrix, resolvent_residual
from .transfer import J, Trajectory, h_inner_product, propagate, solution
from .weyl import BoundaryAngle, Verdict, classify, debranges_check, defect_constancy_scan, m_function

__version__ = "0.1.0"
