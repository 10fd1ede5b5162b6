"""Perspective shape-from-shading with a point light at the optical center.

The light attenuates with distance, which pins the absolute scale of the
surface and makes the reconstruction unique; this package renders the four
supported reflectance models, solves the resulting Hamilton-Jacobi equations
with a monotone grid scheme under several boundary conditions, and probes
the structural hypotheses that the uniqueness theory rests on.
"""

import os as _os

# honor the worker-thread cap before numpy configures its thread pools
_cap = _os.environ.get("PSFS_MAX_THREADS")
if _cap:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _cap)

from .camera import CameraRig
from .errors import IncompatibleProblemError, PsfsError, SolverError, ValidationError
from .estimator import ShapeFromShading
from .hamiltonian import (
    HamiltonianSample,
    effective_intensity,
    gradient_bound,
    hamiltonian,
    hamiltonian_grad_p,
    q_factor,
    w_grad_p,
    w_grad_x,
    w_term,
)
from .probes import (
    ProbeReport,
    check_h1,
    check_h2_h3,
    check_h4_coercivity,
    check_h5_growth,
    check_lemma3_supersolution,
    fd_oracle,
    run_all_checks,
)
from .reflectance import (
    BlinnPhong,
    Lambertian,
    OrenNayar,
    Phong,
    ReflectanceModel,
    make_model,
    oren_nayar_coefficients,
)
from .scene import (
    HeightField,
    RenderedImage,
    analytic_surface,
    basin,
    dome,
    light_direction,
    plane,
    render,
    ridge,
    surface_normal,
    surface_point,
)
from .solver import (
    BoundaryCondition,
    SolveReport,
    SolverConfig,
    numerical_hamiltonian,
    residual_field,
    solve,
    state_constraint_constant,
)

__version__ = "0.1.0"

__all__ = [
    "BlinnPhong",
    "BoundaryCondition",
    "CameraRig",
    "HamiltonianSample",
    "HeightField",
    "IncompatibleProblemError",
    "Lambertian",
    "OrenNayar",
    "Phong",
    "ProbeReport",
    "PsfsError",
    "ReflectanceModel",
    "RenderedImage",
    "ShapeFromShading",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "ValidationError",
    "analytic_surface",
    "basin",
    "check_h1",
    "check_h2_h3",
    "check_h4_coercivity",
    "check_h5_growth",
    "check_lemma3_supersolution",
    "dome",
    "effective_intensity",
    "fd_oracle",
    "gradient_bound",
    "hamiltonian",
    "hamiltonian_grad_p",
    "light_direction",
    "make_model",
    "numerical_hamiltonian",
    "oren_nayar_coefficients",
    "plane",
    "q_factor",
    "render",
    "residual_field",
    "ridge",
    "run_all_checks",
    "solve",
    "state_constraint_constant",
    "surface_normal",
    "surface_point",
    "w_grad_p",
    "w_grad_x",
    "w_term",
]
