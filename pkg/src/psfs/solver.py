"""Monotone finite-difference solver for the shading Hamilton-Jacobi equation.

The scheme is an explicit Lax-Friedrichs pseudo-time iteration on log-heights:

    v <- v - tau * [ H(x, v, (p- + p+)/2)
                     - sigma_x (p+_1 - p-_1)/2 - sigma_y (p+_2 - p-_2)/2 ]

with one-sided difference gradients p-, p+.  With sigma_* at least the
uniform bound on |dH/dp_i| and tau <= cfl / (sigma_x/h_x + sigma_y/h_y +
2 e^{2 R0}), every nodal update is nondecreasing in its own and its
neighbors' values, and the sweep is a sup-norm contraction with factor
1 - 2 tau e^{-2 R0}: the fixed point is unique and iterates from ordered
data stay ordered, which is the discrete face of the comparison principle.

Boundary handling:
  * pointwise Dirichlet pins v = datum at boundary nodes each sweep;
  * weak Dirichlet updates boundary nodes too (missing one-sided gradients
    taken as zero) and clamps v <- min(v, datum), so at the fixed point each
    boundary node satisfies either the scheme equation or the datum;
  * homogeneous Neumann reflects ghost values across the boundary;
  * state constraints delegate to weak Dirichlet with the constant datum M
    returned by `state_constraint_constant`, which makes the constant field
    a supersolution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .camera import CameraRig
from .errors import IncompatibleProblemError, SolverError, ValidationError
from .hamiltonian import effective_intensity, gradient_bound, hamiltonian
from .reflectance import BlinnPhong, Lambertian, OrenNayar, Phong, ReflectanceModel
from .scene import RenderedImage
from .validation import as_grid, check_in_range, check_positive_scalar

DIRICHLET = "dirichlet"
DIRICHLET_WEAK = "dirichlet_weak"
NEUMANN = "neumann"
STATE_CONSTRAINTS = "state_constraints"
BC_KINDS = (DIRICHLET, DIRICHLET_WEAK, NEUMANN, STATE_CONSTRAINTS)

HEIGHT = "height"
LOG_HEIGHT = "log_height"


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary data for the reconstruction.

    ``values`` is a scalar or full-grid array whose boundary entries supply
    the trace; ``space`` says whether they are heights u (converted via ln)
    or log-heights v.  State constraints carry no datum; Neumann supports
    only the homogeneous case.
    """

    kind: str
    values: Union[None, float, np.ndarray] = None
    space: str = HEIGHT

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValidationError(f"unknown boundary kind {self.kind!r}; expected one of {BC_KINDS}")
        if self.space not in (HEIGHT, LOG_HEIGHT):
            raise ValidationError(f"datum space must be {HEIGHT!r} or {LOG_HEIGHT!r}")
        if self.kind == STATE_CONSTRAINTS and self.values is not None:
            raise ValidationError("state constraints take no boundary datum")
        if self.kind == NEUMANN:
            if self.values is not None and np.any(np.asarray(self.values) != 0.0):
                raise ValidationError("only the homogeneous Neumann condition is supported")
        elif self.kind in (DIRICHLET, DIRICHLET_WEAK) and self.values is None:
            raise ValidationError(f"{self.kind} requires a boundary datum")

    @classmethod
    def dirichlet(cls, values, space: str = HEIGHT) -> "BoundaryCondition":
        return cls(DIRICHLET, values, space)

    @classmethod
    def dirichlet_weak(cls, values, space: str = HEIGHT) -> "BoundaryCondition":
        return cls(DIRICHLET_WEAK, values, space)

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(NEUMANN)

    @classmethod
    def state_constraints(cls) -> "BoundaryCondition":
        return cls(STATE_CONSTRAINTS)

    def log_datum(self, rig: CameraRig) -> np.ndarray:
        """Full-grid datum in log-height space (boundary entries are the trace)."""
        g = as_grid(self.values, rig.shape, "boundary datum")
        if self.space == HEIGHT:
            if np.any(g <= 0):
                raise ValidationError("height-space boundary datum must be strictly positive")
            g = np.log(g)
        return g


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the pseudo-time iteration; defaults are safe for all models."""

    cfl: float = 0.9
    sigma_x: Optional[float] = None
    sigma_y: Optional[float] = None
    tol: float = 1e-8
    max_iters: int = 1_000_000
    init: Union[str, np.ndarray] = "auto"  # auto | boundary | constant | flat | array
    init_value: Optional[float] = None
    delta_min: float = 1e-6
    band_width: int = 3
    range_refresh: int = 1000

    def __post_init__(self):
        check_in_range(self.cfl, "cfl", 0.0, 1.0, include_lo=False)
        check_positive_scalar(self.tol, "tol")
        check_positive_scalar(self.delta_min, "delta_min")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if isinstance(self.init, str) and self.init not in ("auto", "boundary", "constant", "flat"):
            raise ValidationError(f"unknown init policy {self.init!r}")


@dataclass(frozen=True)
class SolveReport:
    """Immutable snapshot of how a solve went."""

    iterations: int
    converged: bool
    max_update: float
    scheme_residual: float
    residual: float
    wall_time: float
    bc_kind: str
    model_kind: str
    clamped_pixels: int
    delta_band: float
    monotone_ok: bool
    sigma_x: float
    sigma_y: float
    tau: float
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "max_update": self.max_update,
            "scheme_residual": self.scheme_residual,
            "residual": self.residual,
            "wall_time": self.wall_time,
            "bc_kind": self.bc_kind,
            "model_kind": self.model_kind,
            "clamped_pixels": self.clamped_pixels,
            "delta_band": self.delta_band,
            "monotone_ok": self.monotone_ok,
            "sigma_x": self.sigma_x,
            "sigma_y": self.sigma_y,
            "tau": self.tau,
            "message": self.message,
        }


def state_constraint_constant(model: ReflectanceModel, delta: float, f: float) -> float:
    """Constant M whose flat field is a supersolution when intensity >= delta.

    M = -ln(delta f^2)/2 for the diffuse model; the glossy models divide the
    intensity floor by (k_diffuse + k_specular) first.  The rough-diffuse
    model is refused: its bounded transfer function cannot dominate an
    arbitrarily large datum, so only Neumann or pointwise Dirichlet data make
    its reconstruction well-posed.
    """
    check_positive_scalar(delta, "intensity floor delta")
    check_positive_scalar(f, "focal length f")
    if isinstance(model, Lambertian):
        return -0.5 * float(np.log(delta * f * f))
    if isinstance(model, (Phong, BlinnPhong)):
        return -0.5 * float(np.log(delta * f * f / (model.k_diffuse + model.k_specular)))
    raise IncompatibleProblemError(
        f"no state-constraint bound for model {model.kind!r}: the transfer function "
        "saturates, so a constant supersolution of arbitrary height does not exist"
    )


def numerical_hamiltonian(model, x, v, p_minus, p_plus, intensity, f,
                          sigma_x, sigma_y, ambient=None):
    """Lax-Friedrichs numerical Hamiltonian.

    H(x, v, (p- + p+)/2) - sigma_x (p+_1 - p-_1)/2 - sigma_y (p+_2 - p-_2)/2.
    Exact when p- = p+; nonincreasing in each neighbor value whenever
    sigma_* dominates |dH/dp_*|.
    """
    p_minus = np.asarray(p_minus, dtype=np.float64)
    p_plus = np.asarray(p_plus, dtype=np.float64)
    p_bar = 0.5 * (p_minus + p_plus)
    h = hamiltonian(model, x, v, p_bar, intensity, f, ambient)
    return (
        h
        - 0.5 * sigma_x * (p_plus[..., 0] - p_minus[..., 0])
        - 0.5 * sigma_y * (p_plus[..., 1] - p_minus[..., 1])
    )


def residual_field(model: ReflectanceModel, image: RenderedImage, v, ambient=None) -> np.ndarray:
    """|H(x, v, grad v)| on the grid, gradients by central differences.

    Interior nodes use centered stencils, edges second-order one-sided ones;
    reports quote the interior maximum.
    """
    image = image.physical()
    rig = image.rig
    v = as_grid(v, rig.shape, "v")
    if ambient is None:
        ambient = model.ambient if model.ambient is not None else 0.0
    amb = as_grid(ambient, rig.shape, "ambient")
    eff = effective_intensity(model, image.intensity, amb)
    gy, gx = np.gradient(v, rig.hy, rig.hx, edge_order=2)
    grad = np.stack([gx, gy], axis=-1)
    h = hamiltonian(model, rig.points(), v, grad, eff, rig.f, ambient=0.0)
    return np.abs(h)


def _check_model_bc(model: ReflectanceModel, bc: BoundaryCondition) -> bool:
    if isinstance(model, OrenNayar):
        if not model.monotone:
            a, b = model.coefficients
            raise IncompatibleProblemError(
                f"rough-diffuse model with sigma={model.sigma} has A/2 = {a / 2:.4f} <= "
                f"B = {b:.4f}: the transfer function is not increasing and the "
                "reconstruction is refused"
            )
        if bc.kind in (DIRICHLET_WEAK, STATE_CONSTRAINTS):
            raise IncompatibleProblemError(
                "the rough-diffuse transfer function is bounded, so boundary data cannot "
                "be enforced in the weak (viscosity) sense; uniqueness is only guaranteed "
                "under a homogeneous Neumann condition (or pointwise Dirichlet data)"
            )
    return True


def _initial_field(policy, config, rig, bc, datum_v, eff, model):
    shape = rig.shape
    if isinstance(policy, np.ndarray) or not isinstance(policy, str):
        return as_grid(policy, shape, "initial field").copy()
    if policy == "auto":
        if bc.kind in (DIRICHLET, DIRICHLET_WEAK):
            policy = "boundary"
        elif bc.kind == STATE_CONSTRAINTS:
            policy = "constant"
        else:
            policy = "flat"
    if policy == "boundary":
        if datum_v is None:
            raise ValidationError("boundary-extension init needs a Dirichlet datum")
        bmask = rig.boundary_mask()
        v0 = np.full(shape, float(datum_v[bmask].mean()))
        if bc.kind == DIRICHLET:
            v0[bmask] = datum_v[bmask]
        return v0
    if policy == "constant":
        if config.init_value is not None:
            return np.full(shape, float(config.init_value))
        if datum_v is None:
            raise ValidationError("constant init needs init_value when there is no datum")
        bmask = rig.boundary_mask()
        return np.full(shape, float(datum_v[bmask].mean()))
    if policy == "flat":
        # zero-gradient photometric inversion: exp(-2v) = E f^2 F(0)
        return -0.5 * np.log(eff * rig.f**2 * model.f_zero)
    raise ValidationError(f"unknown init policy {policy!r}")


def solve(model: ReflectanceModel, image: RenderedImage, bc: BoundaryCondition,
          config: Optional[SolverConfig] = None):
    """Reconstruct log-heights v and heights u = e^v from a physical image.

    Returns ``(v, u, report)``.  Non-convergence within ``max_iters`` is not
    an exception: the report comes back with ``converged=False``.  NaN or Inf
    in the iterate aborts with ``SolverError``.
    """
    config = config if config is not None else SolverConfig()
    image = image.physical()
    rig = image.rig
    f = rig.f
    ny, nx = rig.shape
    _check_model_bc(model, bc)

    ambient = model.ambient if model.ambient is not None else 0.0
    amb = as_grid(ambient, rig.shape, "ambient")
    # nonpositive interior values are clamped below, so skip the entry check
    eff = np.asarray(effective_intensity(model, image.intensity, amb, check=False),
                     dtype=np.float64).copy()

    band = rig.band_mask(config.band_width)
    delta_band = float(eff[band].min())
    if delta_band < config.delta_min:
        raise ValidationError(
            f"effective intensity drops to {delta_band} within {config.band_width} cells of "
            f"the boundary (floor {config.delta_min}); the data violate the positivity "
            "assumption needed near the boundary"
        )
    interior = rig.interior_mask()
    clamp_mask = interior & (eff < config.delta_min)
    clamped_pixels = int(clamp_mask.sum())
    if clamped_pixels:
        eff[clamp_mask] = config.delta_min
    delta_global = float(eff.min())

    lp = gradient_bound(model, rig, float(eff.max()))
    sigma_auto = 1.1 * lp
    sigma_x = sigma_auto if config.sigma_x is None else float(config.sigma_x)
    sigma_y = sigma_auto if config.sigma_y is None else float(config.sigma_y)
    if sigma_x < sigma_auto or sigma_y < sigma_auto:
        raise ValidationError(
            f"artificial viscosity ({sigma_x}, {sigma_y}) is below the monotonicity "
            f"estimate {sigma_auto}; the scheme would lose monotonicity"
        )

    if bc.kind in (DIRICHLET, DIRICHLET_WEAK):
        datum_v = bc.log_datum(rig)
    elif bc.kind == STATE_CONSTRAINTS:
        m_const = state_constraint_constant(model, delta_global, f)
        datum_v = np.full(rig.shape, m_const)
    else:
        datum_v = None

    v = _initial_field(config.init, config, rig, bc, datum_v, eff, model)

    X, Y = rig.nodes()
    f2 = f * f
    geom = (f2 + X * X + Y * Y) / f2
    ef2 = eff * f2
    hx, hy = rig.hx, rig.hy
    bmask = rig.boundary_mask()
    vp = np.zeros((ny + 2, nx + 2))

    monotone_ok = model.monotone
    tau = np.nan
    rate = np.nan
    update = np.inf
    scheme_res = np.inf
    converged = False
    message = ""
    start = time.perf_counter()
    iterations = 0

    for it in range(config.max_iters):
        if it % config.range_refresh == 0:
            r0 = float(np.abs(v).max())
            tau = config.cfl / (sigma_x / hx + sigma_y / hy + 2.0 * np.exp(2.0 * r0))
            # sup-norm contraction factor of the sweep is 1 - rate
            rate = 2.0 * tau * np.exp(-2.0 * r0)

        vp[1:-1, 1:-1] = v
        if bc.kind == NEUMANN:
            vp[0, 1:-1] = v[1, :]
            vp[-1, 1:-1] = v[-2, :]
            vp[1:-1, 0] = v[:, 1]
            vp[1:-1, -1] = v[:, -2]
        else:
            vp[0, 1:-1] = v[0, :]
            vp[-1, 1:-1] = v[-1, :]
            vp[1:-1, 0] = v[:, 0]
            vp[1:-1, -1] = v[:, -1]

        core = vp[1:-1, 1:-1]
        pxm = (core - vp[1:-1, :-2]) / hx
        pxp = (vp[1:-1, 2:] - core) / hx
        pym = (core - vp[:-2, 1:-1]) / hy
        pyp = (vp[2:, 1:-1] - core) / hy

        pbx = 0.5 * (pxm + pxp)
        pby = 0.5 * (pym + pyp)
        dot = pbx * X + pby * Y
        w = (f2 * (pbx * pbx + pby * pby) + dot * dot) * geom
        h_hat = (
            -np.exp(-2.0 * v)
            + ef2 * model.f_value(w)
            - 0.5 * sigma_x * (pxp - pxm)
            - 0.5 * sigma_y * (pyp - pym)
        )

        v_new = v - tau * h_hat
        if bc.kind == DIRICHLET:
            v_new[bmask] = datum_v[bmask]
        elif datum_v is not None:
            v_new[bmask] = np.minimum(v_new[bmask], datum_v[bmask])

        update = float(np.abs(v_new - v).max())
        scheme_res = float(np.abs(h_hat[1:-1, 1:-1]).max())
        v = v_new
        iterations = it + 1

        if not np.isfinite(update):
            raise SolverError(f"non-finite update at iteration {iterations}; aborting")
        # the geometric-series tail bound keeps the iterate within ~5 tol of
        # the discrete fixed point, not just the last step below tol
        distance_estimate = update * (1.0 - rate) / rate
        if (update <= config.tol and scheme_res <= 100.0 * config.tol
                and distance_estimate <= 5.0 * config.tol):
            converged = True
            break

    wall_time = time.perf_counter() - start
    if not converged:
        message = (
            f"no fixed point within {config.max_iters} iterations "
            f"(update {update:.3e}, scheme residual {scheme_res:.3e}); "
            "the data may be inconsistent with the model"
        )

    # central-difference PDE residual against the (possibly clamped) intensity
    gy, gx = np.gradient(v, hy, hx, edge_order=2)
    grad = np.stack([gx, gy], axis=-1)
    res = np.abs(hamiltonian(model, rig.points(), v, grad, eff, f, ambient=0.0))
    residual = float(res[1:-1, 1:-1].max())

    report = SolveReport(
        iterations=iterations,
        converged=converged,
        max_update=update,
        scheme_residual=scheme_res,
        residual=residual,
        wall_time=wall_time,
        bc_kind=bc.kind,
        model_kind=model.kind,
        clamped_pixels=clamped_pixels,
        delta_band=delta_band,
        monotone_ok=monotone_ok,
        sigma_x=sigma_x,
        sigma_y=sigma_y,
        tau=float(tau),
        message=message,
    )
    return v, np.exp(v), report
