"""Scikit-learn style front door for the reconstruction.

`ShapeFromShading` wraps the grid solver behind the usual fit/transform
surface so it drops into pipelines, grid search and `clone()`.  `fit(X)`
treats X as a single physical-intensity image on the configured camera and
stores the reconstructed log-heights/heights; `transform(X)` reconstructs
further images with the same configuration.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .camera import CameraRig
from .errors import ValidationError
from .reflectance import Lambertian, ReflectanceModel
from .scene import RenderedImage
from .solver import (
    BC_KINDS,
    HEIGHT,
    STATE_CONSTRAINTS,
    BoundaryCondition,
    SolverConfig,
    solve,
)


class ShapeFromShading(TransformerMixin, BaseEstimator):
    """Reconstruct a height field from a single shaded image.

    Parameters
    ----------
    model : ReflectanceModel, default Lambertian()
        Reflectance model the image is assumed to follow.
    f : float, default 1.0
        Focal length of the pinhole camera.
    domain : tuple, default (-0.5, 0.5, -0.5, 0.5)
        Image rectangle (x_min, x_max, y_min, y_max); grid resolution comes
        from the image shape at fit time.
    boundary : str, default "state_constraints"
        One of "dirichlet", "dirichlet_weak", "neumann", "state_constraints".
    datum : scalar or array, optional
        Boundary trace for the Dirichlet conditions, in `datum_space`.
    datum_space : str, default "height"
        "height" (u values, converted via ln) or "log_height".
    tol, max_iters, cfl, sigma_x, sigma_y, init, init_value, delta_min
        Forwarded to the solver configuration.

    Attributes
    ----------
    u_ : ndarray of shape (ny, nx)
        Reconstructed heights for the fitted image.
    v_ : ndarray of shape (ny, nx)
        Reconstructed log-heights.
    report_ : SolveReport
        Convergence diagnostics of the fit.
    rig_ : CameraRig
        Camera grid assembled from `f`, `domain` and the image shape.
    n_iter_ : int
        Iterations used by the fit.
    """

    def __init__(self, model=None, f=1.0, domain=(-0.5, 0.5, -0.5, 0.5),
                 boundary=STATE_CONSTRAINTS, datum=None, datum_space=HEIGHT,
                 tol=1e-8, max_iters=1_000_000, cfl=0.9, sigma_x=None, sigma_y=None,
                 init="auto", init_value=None, delta_min=1e-6):
        self.model = model
        self.f = f
        self.domain = domain
        self.boundary = boundary
        self.datum = datum
        self.datum_space = datum_space
        self.tol = tol
        self.max_iters = max_iters
        self.cfl = cfl
        self.sigma_x = sigma_x
        self.sigma_y = sigma_y
        self.init = init
        self.init_value = init_value
        self.delta_min = delta_min

    # -- assembly ----------------------------------------------------------

    def _resolved_model(self) -> ReflectanceModel:
        model = self.model if self.model is not None else Lambertian()
        if not isinstance(model, ReflectanceModel):
            raise ValidationError(f"model must be a ReflectanceModel, got {type(model).__name__}")
        return model

    def _boundary_condition(self) -> BoundaryCondition:
        if isinstance(self.boundary, BoundaryCondition):
            return self.boundary
        if self.boundary not in BC_KINDS:
            raise ValidationError(f"boundary must be one of {BC_KINDS}, got {self.boundary!r}")
        return BoundaryCondition(self.boundary, self.datum, self.datum_space)

    def _config(self) -> SolverConfig:
        return SolverConfig(cfl=self.cfl, sigma_x=self.sigma_x, sigma_y=self.sigma_y,
                            tol=self.tol, max_iters=self.max_iters, init=self.init,
                            init_value=self.init_value, delta_min=self.delta_min)

    def _solve_image(self, X):
        X = check_array(X, dtype=np.float64, ensure_min_samples=3, ensure_min_features=3)
        ny, nx = X.shape
        rig = CameraRig.from_domain(self.f, self.domain, nx, ny)
        model = self._resolved_model()
        image = RenderedImage(rig, X, model)
        return rig, solve(model, image, self._boundary_condition(), self._config())

    # -- sklearn surface -----------------------------------------------------

    def fit(self, X, y=None):
        """Reconstruct the surface seen in the image X (physical intensities)."""
        rig, (v, u, report) = self._solve_image(X)
        self.rig_ = rig
        self.v_ = v
        self.u_ = u
        self.report_ = report
        self.n_iter_ = report.iterations
        return self

    def transform(self, X):
        """Reconstruct heights for a new image with the fitted configuration."""
        check_is_fitted(self, "u_")
        _, (_, u, _) = self._solve_image(X)
        return u

    def fit_transform(self, X, y=None):
        return self.fit(X).u_
