"""Surfaces, perspective geometry and forward rendering.

A scene is a strictly positive height field u over the image rectangle; the
3D surface point seen through pixel x is

    S(x) = f u(x) / sqrt(|x|^2 + f^2) * (x, -f),      |S(x)| = f u(x),

so the light (at the optical center) attenuates by 1/(f u)^2.  The incidence
cosine against the light direction w(x) = (-x, f)/sqrt(|x|^2+f^2) works out
to cos(theta) = u Q / |n| = 1 / sqrt(W(x, grad u / u) + 1), which is what ties
the renders below to the Hamiltonians in `psfs.hamiltonian`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .camera import CameraRig
from .errors import ValidationError
from .hamiltonian import q_factor
from .reflectance import BlinnPhong, Lambertian, OrenNayar, Phong, ReflectanceModel
from .validation import as_grid


def surface_point(x, u, f):
    """3D surface point S(x); its Euclidean norm equals f * u."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    scale = f * u / np.sqrt(x1 * x1 + x2 * x2 + f * f)
    return np.stack([scale * x1, scale * x2, -f * scale], axis=-1)


def surface_normal(x, u, grad_u, f):
    """Unnormalized surface normal n(x) and its magnitude |n(x)|.

    n = (f grad u - (f u / (|x|^2 + f^2)) x,  grad u . x + f^2 u / (|x|^2 + f^2))
    |n| = sqrt(f^2 |grad u|^2 + (grad u . x)^2 + u^2 f^2 / (f^2 + |x|^2))
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    g = np.asarray(grad_u, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    g1, g2 = g[..., 0], g[..., 1]
    rad2 = x1 * x1 + x2 * x2
    pin = f * u / (rad2 + f * f)
    n = np.stack([f * g1 - pin * x1, f * g2 - pin * x2, g1 * x1 + g2 * x2 + f * pin], axis=-1)
    dot = g1 * x1 + g2 * x2
    mag = np.sqrt(f * f * (g1 * g1 + g2 * g2) + dot * dot + u * u * f * f / (f * f + rad2))
    return n, mag


def light_direction(x, f):
    """Unit vector from the surface point toward the optical center."""
    x = np.asarray(x, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    denom = np.sqrt(x1 * x1 + x2 * x2 + f * f)
    return np.stack([-x1 / denom, -x2 / denom, np.broadcast_to(f, x1.shape) / denom], axis=-1)


@dataclass(frozen=True)
class HeightField:
    """Grid-sampled heights with an optional analytic gradient.

    Heights must be strictly positive (the surface sits in front of the
    camera).  When no analytic gradient is attached, `gradient()` falls back
    to central differences with second-order one-sided stencils at the edges.
    """

    rig: CameraRig
    u: np.ndarray
    grad_u: Optional[np.ndarray] = None  # (ny, nx, 2) when present

    def __post_init__(self):
        u = as_grid(self.u, self.rig.shape, "heights u")
        if np.any(u <= 0):
            raise ValidationError(f"heights must be strictly positive, min is {u.min()}")
        object.__setattr__(self, "u", u)
        if self.grad_u is not None:
            g = np.asarray(self.grad_u, dtype=np.float64)
            if g.shape != self.rig.shape + (2,):
                raise ValidationError(
                    f"grad_u has shape {g.shape}, expected {self.rig.shape + (2,)}"
                )
            object.__setattr__(self, "grad_u", g)

    def gradient(self) -> np.ndarray:
        if self.grad_u is not None:
            return self.grad_u
        gy, gx = np.gradient(self.u, self.rig.hy, self.rig.hx, edge_order=2)
        return np.stack([gx, gy], axis=-1)

    def log_height(self) -> tuple[np.ndarray, np.ndarray]:
        """v = ln u and its gradient grad v = grad u / u."""
        v = np.log(self.u)
        return v, self.gradient() / self.u[..., None]

    def mesh_points(self) -> np.ndarray:
        """3D surface points S(x) at every node, shape (ny, nx, 3)."""
        return surface_point(self.rig.points(), self.u, self.rig.f)


# -- analytic test surfaces --------------------------------------------------

SURFACE_NAMES = ("plane", "dome", "basin", "ridge")


def plane(rig: CameraRig, u0: float = 1.0) -> HeightField:
    u = np.full(rig.shape, float(u0))
    return HeightField(rig, u, np.zeros(rig.shape + (2,)))


def _bump(rig: CameraRig, u0: float, amplitude: float, width: float, sign: float) -> HeightField:
    X, Y = rig.nodes()
    r2 = X * X + Y * Y
    w2 = width * width
    bump = np.exp(-r2 / w2)
    u = u0 + sign * amplitude * bump
    coeff = -sign * 2.0 * amplitude / w2 * bump
    grad = np.stack([coeff * X, coeff * Y], axis=-1)
    return HeightField(rig, u, grad)


def dome(rig: CameraRig, u0: float = 1.0, amplitude: float = 0.2, width: float = 0.3) -> HeightField:
    """u = u0 + a exp(-|x|^2 / w^2), a smooth bump toward the camera."""
    if amplitude <= 0 or width <= 0:
        raise ValidationError("dome needs positive amplitude and width")
    return _bump(rig, u0, amplitude, width, +1.0)


def basin(rig: CameraRig, u0: float = 1.0, amplitude: float = 0.2, width: float = 0.3) -> HeightField:
    """Mirror image of the dome: u = u0 - a exp(-|x|^2 / w^2)."""
    if amplitude <= 0 or width <= 0:
        raise ValidationError("basin needs positive amplitude and width")
    if u0 - amplitude <= 0:
        raise ValidationError(f"basin floor u0 - a = {u0 - amplitude} must stay positive")
    return _bump(rig, u0, amplitude, width, -1.0)


def ridge(rig: CameraRig, u0: float = 1.0, amplitude: float = 0.2, width: float = 0.5) -> HeightField:
    """u = u0 + a cos(pi x1 / w), constant along x2."""
    if amplitude <= 0 or width <= 0:
        raise ValidationError("ridge needs positive amplitude and width")
    if u0 - amplitude <= 0:
        raise ValidationError(f"ridge trough u0 - a = {u0 - amplitude} must stay positive")
    X, _ = rig.nodes()
    u = u0 + amplitude * np.cos(np.pi * X / width)
    gx = -amplitude * np.pi / width * np.sin(np.pi * X / width)
    grad = np.stack([gx, np.zeros_like(gx)], axis=-1)
    return HeightField(rig, u, grad)


def analytic_surface(name: str, rig: CameraRig, **params) -> HeightField:
    try:
        builder = {"plane": plane, "dome": dome, "basin": basin, "ridge": ridge}[name]
    except KeyError:
        raise ValidationError(f"unknown surface {name!r}; expected one of {SURFACE_NAMES}") from None
    return builder(rig, **params)


# -- forward rendering --------------------------------------------------------

@dataclass(frozen=True)
class RenderedImage:
    """Physical image intensities plus the provenance needed to undo scaling."""

    rig: CameraRig
    intensity: np.ndarray
    model: ReflectanceModel
    normalization: float = 1.0

    def __post_init__(self):
        arr = as_grid(self.intensity, self.rig.shape, "intensity")
        object.__setattr__(self, "intensity", arr)

    def normalized(self) -> "RenderedImage":
        """Rescale to max 1 for display; the factor is recorded for undoing."""
        peak = float(self.intensity.max())
        return replace(self, intensity=self.intensity / peak,
                       normalization=self.normalization * peak)

    def physical(self) -> "RenderedImage":
        if self.normalization == 1.0:
            return self
        return replace(self, intensity=self.intensity * self.normalization, normalization=1.0)


def render(model: ReflectanceModel, heights: HeightField, ambient=None) -> RenderedImage:
    """Evaluate the model's brightness equation pixel by pixel.

    Every model shares cos(theta) = u Q / |n| and the 1/(f u)^2 attenuation;
    the glossy models add an ambient share k_A * I_A and their specular lobes
    (the mirrored-lobe cosine 2 cos^2(theta) - 1 is clamped at zero before
    exponentiation).
    """
    rig = heights.rig
    f = rig.f
    pts = rig.points()
    u = heights.u
    grad = heights.gradient()
    q = q_factor(pts, f)
    _, mag = surface_normal(pts, u, grad, f)
    cos_i = u * q / mag
    atten = 1.0 / (f * u) ** 2

    if isinstance(model, Lambertian):
        intensity = atten * cos_i
    elif isinstance(model, OrenNayar):
        a, b = model.coefficients
        intensity = atten * (a * cos_i + b * (1.0 - cos_i * cos_i))
    elif isinstance(model, (Phong, BlinnPhong)):
        if ambient is None:
            ambient = model.ambient if model.ambient is not None else 0.0
        amb = as_grid(ambient, rig.shape, "ambient")
        if np.any(amb < 0):
            raise ValidationError("ambient field must be nonnegative")
        if isinstance(model, Phong):
            lobe = np.clip(2.0 * cos_i * cos_i - 1.0, 0.0, None) ** model.alpha
        else:
            lobe = cos_i**model.c
        bundle = model.k_diffuse * cos_i + model.k_specular * lobe
        intensity = model.k_ambient * amb + atten * bundle
        if np.any(intensity - model.k_ambient * amb <= 0):
            raise ValidationError("render produced a nonpositive effective intensity")
    else:
        raise ValidationError(f"cannot render unknown model {model!r}")

    if np.any(intensity <= 0):
        raise ValidationError("render produced a nonpositive intensity")
    return RenderedImage(rig, intensity, model)
