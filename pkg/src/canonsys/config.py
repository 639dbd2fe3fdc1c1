"""Default tolerances and sizes shared by the library and the CLI."""

DEFAULTS = {
    "tol_psd": 1e-12,
    "quad_order": 8,
    "quad_max_panel": 0.5,
    "series_threshold": 1e-4,
    "classify_rel_tol": 1e-6,
    "classify_schedule": (5.0, 10.0, 20.0, 40.0),
    "growth_factor": 2.0,
    "trace_tol": 1e-12,
    "grid_points": 2048,
    "root_tol": 1e-12,
    "eigen_residual_tol": 1e-8,
    "max_lambda_length": 1e5,
    "residual_mesh_per_cell": 200,
    "residual_step": 1e-4,
    "hs_nodes_order": 64,
    "jacobi_offdiag_tol": 1e-12,
    "jacobi_max_sweeps": 60,
    "hermitian_tol": 1e-10,
    "rank_rtol": 1e-9,
    "subspace_tol": 1e-10,
}


def default(name):
    return DEFAULTS[name]
