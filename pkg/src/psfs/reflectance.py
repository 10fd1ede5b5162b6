"""Reflectance models and their brightness-to-gradient transfer functions.

Each model M turns the squared-gradient energy ``r = W(x, p)`` into a factor
``F_M(r)`` so that the shading equation in log-height ``v = ln u`` reads

    -exp(-2 v) + (effective intensity) * f^2 * F_M(W(x, grad v)) = 0.

The transfer functions:

    diffuse (point light at the optical center):  F(r) = sqrt(r + 1)
    rough diffuse:    F(r) = (r + 1) / (A sqrt(r + 1) + B r)
    glossy, mirrored specular lobe, exponent a (integer >= 1):
                      F(r) = sqrt(r+1)/kd                         for r >= 1
                      F(r) = (r+1)^(a+1/2) /
                             (kd (r+1)^a + ks sqrt(r+1) (1-r)^a)  for r < 1
    glossy, halfway-vector lobe, exponent c (real >= 1):
                      F(r) = (r+1)^(c/2) / (kd (r+1)^((c-1)/2) + ks)

All are strictly increasing except the rough-diffuse one, which increases
only when A/2 > B and saturates at 1/B; that difference is what breaks
gradient coercivity for rough surfaces and is surfaced via ``monotone`` /
``f_sup``.  ``f_prime_bound`` gives C with 0 < F'(r) <= C / sqrt(r + 1),
the quantity the solver turns into its artificial-viscosity estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ValidationError
from .validation import check_in_range

AmbientLike = Union[None, float, np.ndarray]

_KSUM_TOL = 1e-12


def oren_nayar_coefficients(sigma: float) -> tuple[float, float]:
    """Cavity-statistics coefficients (A, B) for roughness sigma in [0, pi/2)."""
    sigma = check_in_range(sigma, "roughness sigma", 0.0, np.pi / 2, include_hi=False)
    s2 = sigma * sigma
    a = 1.0 - 0.5 * s2 / (s2 + 0.33)
    b = 0.45 * s2 / (s2 + 0.09)
    return a, b


def _elementwise(r, fn):
    """Apply fn to a float array view of r, returning a scalar for scalar input."""
    arr = np.asarray(r, dtype=np.float64)
    scalar = arr.ndim == 0
    out = fn(np.atleast_1d(arr))
    return float(out[0]) if scalar else out.reshape(arr.shape)


class ReflectanceModel:
    """Common surface shared by the four models."""

    kind: str = "?"
    k_ambient: float = 0.0
    ambient: AmbientLike = None

    # -- transfer function -------------------------------------------------

    def f_value(self, r):
        raise NotImplementedError

    def f_derivative(self, r):
        raise NotImplementedError

    @property
    def f_prime_bound(self) -> float:
        """C with F'(r) <= C / sqrt(r + 1) for all r >= 0."""
        raise NotImplementedError

    @property
    def f_upper_coeff(self) -> float:
        """a with F(r) <= a * sqrt(r + 1) for all r >= 0."""
        raise NotImplementedError

    @property
    def f_zero(self) -> float:
        """F(0), the flat-surface value."""
        raise NotImplementedError

    @property
    def f_sup(self) -> float:
        """sup of F over [0, inf); inf for the coercive models."""
        return np.inf

    @property
    def monotone(self) -> bool:
        return True

    def f_inverse(self, s: float) -> float:
        """The r >= 0 with F(r) = s.  Requires s >= F(0) (and s < sup F)."""
        s = float(s)
        if not self.monotone:
            raise ValidationError(f"{self.kind}: transfer function is not increasing, no inverse")
        if s < self.f_zero - 1e-12:
            raise ValidationError(f"{self.kind}: {s} is below the range of F (F(0) = {self.f_zero})")
        if s >= self.f_sup:
            raise ValidationError(f"{self.kind}: F is bounded above by {self.f_sup}, cannot reach {s}")
        from scipy.optimize import brentq

        if s <= self.f_zero:
            return 0.0
        hi = 1.0
        while self.f_value(hi) < s:
            hi *= 2.0
            if hi > 1e300:  # pragma: no cover - unreachable for valid s
                raise ValidationError(f"{self.kind}: failed to bracket F^-1({s})")
        return float(brentq(lambda r: self.f_value(r) - s, 0.0, hi, xtol=1e-13, rtol=1e-14))

    # -- ambient / effective intensity -------------------------------------

    def effective_intensity(self, intensity, ambient: AmbientLike = None):
        """Intensity with the ambient share removed (identity for pure diffuse)."""
        intensity = np.asarray(intensity, dtype=np.float64)
        if self.k_ambient == 0.0:
            return intensity
        if ambient is None:
            ambient = self.ambient if self.ambient is not None else 0.0
        return intensity - self.k_ambient * np.asarray(ambient, dtype=np.float64)

    # -- misc ---------------------------------------------------------------

    @property
    def params(self) -> dict:
        return {}

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


@dataclass(frozen=True, eq=False, repr=False)
class Lambertian(ReflectanceModel):
    kind = "L"

    def f_value(self, r):
        return _elementwise(r, lambda a: np.sqrt(a + 1.0))

    def f_derivative(self, r):
        return _elementwise(r, lambda a: 0.5 / np.sqrt(a + 1.0))

    @property
    def f_prime_bound(self):
        return 0.5

    @property
    def f_upper_coeff(self):
        return 1.0

    @property
    def f_zero(self):
        return 1.0

    def f_inverse(self, s: float) -> float:
        s = float(s)
        if s < 1.0 - 1e-12:
            raise ValidationError(f"L: {s} is below the range of F (F(0) = 1)")
        return max(s * s - 1.0, 0.0)


@dataclass(frozen=True, eq=False, repr=False)
class OrenNayar(ReflectanceModel):
    """Rough diffuse model; roughness sigma in radians, sigma in [0, pi/2)."""

    sigma: float = 0.0
    kind = "ON"

    def __post_init__(self):
        a, b = oren_nayar_coefficients(self.sigma)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)

    @property
    def coefficients(self) -> tuple[float, float]:
        return self._a, self._b

    @property
    def monotone(self) -> bool:
        return self._a / 2.0 > self._b

    def f_value(self, r):
        a, b = self._a, self._b
        return _elementwise(r, lambda t: (t + 1.0) / (a * np.sqrt(t + 1.0) + b * t))

    def f_derivative(self, r):
        a, b = self._a, self._b

        def fn(t):
            s = np.sqrt(t + 1.0)
            return (a * s - 2.0 * b) / (2.0 * (a * s + b * t) ** 2)

        return _elementwise(r, fn)

    @property
    def f_prime_bound(self):
        return 0.5 / self._a

    @property
    def f_upper_coeff(self):
        return 1.0 / self._a

    @property
    def f_zero(self):
        return 1.0 / self._a

    @property
    def f_sup(self):
        return np.inf if self._b == 0.0 else 1.0 / self._b

    @property
    def params(self):
        return {"sigma": self.sigma}


def _check_shares(k_ambient, k_diffuse, k_specular):
    for name, k in (("k_ambient", k_ambient), ("k_diffuse", k_diffuse), ("k_specular", k_specular)):
        check_in_range(k, name, 0.0, 1.0)
    if abs(k_ambient + k_diffuse + k_specular - 1.0) > _KSUM_TOL:
        raise ValidationError(
            f"component shares must sum to 1, got {k_ambient + k_diffuse + k_specular}"
        )
    if k_diffuse <= 0:
        raise ValidationError("k_diffuse must be positive")


@dataclass(frozen=True, eq=False, repr=False)
class Phong(ReflectanceModel):
    """Glossy model with a mirrored specular lobe; integer exponent alpha >= 1.

    ``ambient`` is the ambient light field (scalar or grid), weighted by
    ``k_ambient`` both at render time and when removing it again for solving.
    """

    k_ambient: float = 0.0
    k_diffuse: float = 1.0
    k_specular: float = 0.0
    alpha: int = 1
    ambient: AmbientLike = field(default=None)
    kind = "PH"

    def __post_init__(self):
        _check_shares(self.k_ambient, self.k_diffuse, self.k_specular)
        a = self.alpha
        if isinstance(a, float):
            if not a.is_integer():
                raise ValidationError(f"specular exponent alpha must be an integer, got {a}")
            a = int(a)
        if not isinstance(a, (int, np.integer)) or a < 1:
            raise ValidationError(f"specular exponent alpha must be an integer >= 1, got {a!r}")
        object.__setattr__(self, "alpha", int(a))

    def f_value(self, r):
        kd, ks, a = self.k_diffuse, self.k_specular, self.alpha

        def fn(t):
            out = np.empty_like(t)
            hi = t >= 1.0
            out[hi] = np.sqrt(t[hi] + 1.0) / kd
            lo = ~hi
            tl = t[lo]
            denom = kd * (tl + 1.0) ** a + ks * np.sqrt(tl + 1.0) * (1.0 - tl) ** a
            out[lo] = (tl + 1.0) ** (a + 0.5) / denom
            return out

        return _elementwise(r, fn)

    def f_derivative(self, r):
        kd, ks, a = self.k_diffuse, self.k_specular, self.alpha

        def fn(t):
            out = np.empty_like(t)
            hi = t >= 1.0
            out[hi] = 0.5 / (kd * np.sqrt(t[hi] + 1.0))
            lo = ~hi
            tl = t[lo]
            denom = kd * (tl + 1.0) ** a + ks * np.sqrt(tl + 1.0) * (1.0 - tl) ** a
            num = 0.5 * kd * (tl + 1.0) ** (2 * a - 0.5) + 2.0 * a * ks * (tl + 1.0) ** a * (1.0 - tl) ** (a - 1)
            out[lo] = num / denom**2
            return out

        return _elementwise(r, fn)

    @property
    def f_prime_bound(self):
        return 0.5 / self.k_diffuse + 2.0 * self.alpha * self.k_specular / self.k_diffuse**2

    @property
    def f_upper_coeff(self):
        return 1.0 / self.k_diffuse

    @property
    def f_zero(self):
        return 1.0 / (self.k_diffuse + self.k_specular)

    @property
    def params(self):
        return {
            "k_ambient": self.k_ambient,
            "k_diffuse": self.k_diffuse,
            "k_specular": self.k_specular,
            "alpha": self.alpha,
        }


@dataclass(frozen=True, eq=False, repr=False)
class BlinnPhong(ReflectanceModel):
    """Glossy model with a halfway-vector lobe; real shininess c >= 1."""

    k_ambient: float = 0.0
    k_diffuse: float = 1.0
    k_specular: float = 0.0
    c: float = 1.0
    ambient: AmbientLike = field(default=None)
    kind = "BP"

    def __post_init__(self):
        _check_shares(self.k_ambient, self.k_diffuse, self.k_specular)
        if not np.isfinite(self.c) or self.c < 1.0:
            raise ValidationError(f"shininess c must be a real number >= 1, got {self.c!r}")
        object.__setattr__(self, "c", float(self.c))

    def f_value(self, r):
        kd, ks, c = self.k_diffuse, self.k_specular, self.c

        # sqrt(r+1) / (kd + ks (r+1)^(-(c-1)/2)) avoids overflow for large c
        def fn(t):
            decay = (t + 1.0) ** (-(c - 1.0) / 2.0)
            return np.sqrt(t + 1.0) / (kd + ks * decay)

        return _elementwise(r, fn)

    def f_derivative(self, r):
        kd, ks, c = self.k_diffuse, self.k_specular, self.c

        def fn(t):
            decay = (t + 1.0) ** (-(c - 1.0) / 2.0)
            return (kd + c * ks * decay) / (2.0 * np.sqrt(t + 1.0) * (kd + ks * decay) ** 2)

        return _elementwise(r, fn)

    @property
    def f_prime_bound(self):
        return self.c / (2.0 * self.k_diffuse)

    @property
    def f_upper_coeff(self):
        return 1.0 / self.k_diffuse

    @property
    def f_zero(self):
        return 1.0 / (self.k_diffuse + self.k_specular)

    @property
    def params(self):
        return {
            "k_ambient": self.k_ambient,
            "k_diffuse": self.k_diffuse,
            "k_specular": self.k_specular,
            "c": self.c,
        }


MODEL_KINDS = ("L", "ON", "PH", "BP")


def make_model(kind: str, **params) -> ReflectanceModel:
    """Construct a model from its short tag and keyword parameters."""
    kind = str(kind).upper()
    if kind == "L":
        if params:
            raise ValidationError(f"the diffuse model takes no parameters, got {sorted(params)}")
        return Lambertian()
    if kind == "ON":
        return OrenNayar(**params)
    if kind == "PH":
        return Phong(**params)
    if kind == "BP":
        return BlinnPhong(**params)
    raise ValidationError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
