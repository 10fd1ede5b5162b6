"""The unified Hamiltonian of the attenuated perspective shading equation.

In log-height v = ln u the four brightness equations collapse to

    H(x, r, p) = -exp(-2 r) + E(x) * f^2 * F(W(x, p)) = 0

with the gradient energy

    Q(x) = f / sqrt(f^2 + |x|^2)
    W(x, p) = (f^2 |p|^2 + (p . x)^2) / Q(x)^2

and E the effective intensity (the image with any ambient share removed).
All functions broadcast: points and gradients are arrays whose last axis has
length 2, the remaining axes broadcast against r and intensity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .reflectance import ReflectanceModel


def _split(x):
    x = np.asarray(x, dtype=np.float64)
    return x[..., 0], x[..., 1]


def q_factor(x, f):
    """Q(x) = f / sqrt(f^2 + |x|^2); lies in (0, 1]."""
    x1, x2 = _split(x)
    return f / np.sqrt(f * f + x1 * x1 + x2 * x2)


def w_term(x, p, f):
    """W(x, p) = (f^2 |p|^2 + (p.x)^2) / Q(x)^2, the squared-gradient energy."""
    x1, x2 = _split(x)
    p1, p2 = _split(p)
    dot = p1 * x1 + p2 * x2
    rad2 = x1 * x1 + x2 * x2
    f2 = f * f
    return (f2 * (p1 * p1 + p2 * p2) + dot * dot) * (f2 + rad2) / f2


def w_grad_x(x, p, f):
    """Gradient of W in the spatial argument.

    D_x W = 2 (p.x) p (|x|^2 + f^2)/f^2 + ((p.x)^2 + f^2 |p|^2) (2 x / f^2)
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    x1, x2 = _split(x)
    p1, p2 = _split(p)
    dot = p1 * x1 + p2 * x2
    rad2 = x1 * x1 + x2 * x2
    f2 = f * f
    coeff1 = 2.0 * dot * (rad2 + f2) / f2
    coeff2 = 2.0 * (dot * dot + f2 * (p1 * p1 + p2 * p2)) / f2
    return coeff1[..., None] * p + coeff2[..., None] * x


def w_grad_p(x, p, f):
    """Gradient of W in the gradient argument.

    D_p W = 2 (f^2 + |x|^2) p + 2 ((|x|^2 + f^2)/f^2) (x.p) x
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    x1, x2 = _split(x)
    p1, p2 = _split(p)
    dot = p1 * x1 + p2 * x2
    s = x1 * x1 + x2 * x2 + f * f
    return 2.0 * s[..., None] * p + (2.0 * s * dot / (f * f))[..., None] * x


@dataclass(frozen=True)
class HamiltonianSample:
    """A point (x, r, p) at which the Hamiltonian is probed."""

    x: tuple
    r: float
    p: tuple

    def validate(self, rig) -> "HamiltonianSample":
        if not np.all(rig.contains(np.asarray(self.x, dtype=np.float64))):
            raise ValidationError(f"sample point {self.x} lies outside the closed domain")
        return self


def effective_intensity(model: ReflectanceModel, intensity, ambient=None, *, check: bool = True):
    """E = I - k_ambient * I_ambient; rejected when nonpositive anywhere."""
    eff = model.effective_intensity(intensity, ambient)
    if check and np.any(np.asarray(eff) <= 0.0):
        raise ValidationError(
            f"{model.kind}: effective intensity must be positive "
            f"(min {np.min(eff)}); the image datum is incompatible with the model"
        )
    return eff


def hamiltonian(model: ReflectanceModel, x, r, p, intensity, f, ambient=None):
    """H(x, r, p) = -exp(-2 r) + E(x) f^2 F(W(x, p)).

    Strictly increasing in r with modulus 2 exp(-2 R) on |r| <= R.
    """
    eff = effective_intensity(model, intensity, ambient)
    w = w_term(x, p, f)
    return -np.exp(-2.0 * np.asarray(r, dtype=np.float64)) + eff * f * f * model.f_value(w)


def hamiltonian_grad_p(model: ReflectanceModel, x, r, p, intensity, f, ambient=None):
    """D_p H = E(x) f^2 F'(W(x, p)) D_p W(x, p).

    Uniformly bounded in p by gradient_bound(), since F'(W) <= C/sqrt(W+1)
    and sqrt(W+1) >= f |p| soak up the |p| growth of D_p W.
    """
    eff = effective_intensity(model, intensity, ambient)
    w = w_term(x, p, f)
    scale = np.asarray(eff * f * f * model.f_derivative(w), dtype=np.float64)
    return scale[..., None] * w_grad_p(x, p, f)


def gradient_bound(model: ReflectanceModel, rig, intensity_max: float) -> float:
    """Uniform bound on |D_p H| over the closed domain and all gradients.

    L_p = max E * f * C_F * C_W with C_F the F'-decay constant and C_W the
    D_p W growth constant of the rig.  Supplies the artificial viscosity.
    """
    return float(intensity_max) * rig.f * model.f_prime_bound * rig.dpw_constant
