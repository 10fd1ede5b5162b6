"""Pinhole camera geometry and the rectangular image grid.

The camera sits at the origin with focal length ``f`` and looks down the
negative z-axis; the point light source is co-located with the optical
center.  Fields live on grid nodes ``x_ij = (x_min + i*h_x, y_min + j*h_y)``
and are stored as ``(ny, nx)`` arrays indexed ``[j, i]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .validation import check_positive_scalar


@dataclass(frozen=True)
class CameraRig:
    """Focal length, rectangular domain and grid resolution.

    The rig also precomputes the geometric constants that bound the
    gradient-energy term W(x, p) and its derivatives uniformly over the
    closed domain; the solver and the probes rely on those bounds.
    """

    f: float
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        check_positive_scalar(self.f, "focal length f")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(
                f"empty domain: [{self.x_min}, {self.x_max}] x [{self.y_min}, {self.y_max}]"
            )
        if self.nx < 3 or self.ny < 3:
            raise ValidationError(f"grid must be at least 3x3, got nx={self.nx}, ny={self.ny}")

    @classmethod
    def from_domain(cls, f: float, domain, nx: int, ny: int | None = None) -> "CameraRig":
        x_min, x_max, y_min, y_max = (float(v) for v in domain)
        return cls(float(f), x_min, x_max, y_min, y_max, int(nx), int(ny if ny is not None else nx))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ys = np.linspace(self.y_min, self.y_max, self.ny)
        return xs, ys

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays X, Y of shape (ny, nx)."""
        xs, ys = self.axes()
        return np.meshgrid(xs, ys, indexing="xy")

    def points(self) -> np.ndarray:
        """All node coordinates stacked as an (ny, nx, 2) array."""
        X, Y = self.nodes()
        return np.stack([X, Y], axis=-1)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        eps = 1e-12 * max(abs(self.x_max - self.x_min), abs(self.y_max - self.y_min))
        return (
            (x[..., 0] >= self.x_min - eps)
            & (x[..., 0] <= self.x_max + eps)
            & (x[..., 1] >= self.y_min - eps)
            & (x[..., 1] <= self.y_max + eps)
        )

    # -- uniform geometric bounds over the closed domain ------------------

    @property
    def max_radius_sq(self) -> float:
        """max |x|^2 over the closed rectangle (attained at a corner)."""
        mx = max(abs(self.x_min), abs(self.x_max))
        my = max(abs(self.y_min), abs(self.y_max))
        return mx * mx + my * my

    @property
    def w_upper_constant(self) -> float:
        """C with f^2|p|^2 <= W(x, p) <= C |p|^2 on the closed domain.

        C = max over the rectangle of (f^2 + |x|^2)(1 + |x|^2/f^2), i.e.
        (f^2 + m^2)^2 / f^2 with m the farthest corner radius.
        """
        f2 = self.f * self.f
        return (f2 + self.max_radius_sq) ** 2 / f2

    @property
    def dpw_constant(self) -> float:
        """C_W with |D_p W(x, p)| <= C_W |p| on the closed domain."""
        return 2.0 * self.w_upper_constant

    @property
    def dxw_constant(self) -> float:
        """C_x with |D_x W(x, p)| <= C_x |p|^2 on the closed domain."""
        m2 = self.max_radius_sq
        f2 = self.f * self.f
        return 4.0 * np.sqrt(m2) * (m2 + f2) / f2

    # -- boundary structure ------------------------------------------------

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask()

    def band_mask(self, width: int = 3) -> np.ndarray:
        """Nodes within `width` grid cells of the boundary."""
        if width < 1:
            raise ValidationError(f"band width must be >= 1, got {width}")
        mask = np.ones(self.shape, dtype=bool)
        if 2 * width < min(self.nx, self.ny):
            mask[width:-width, width:-width] = False
        return mask

    def outward_normals(self, points: np.ndarray) -> np.ndarray:
        """Outward unit normal of the nearest boundary edge for each point.

        Ties (corner neighborhoods) combine the competing edge normals and
        renormalize, giving the usual diagonal direction at corners.
        """
        pts = np.asarray(points, dtype=np.float64)
        d_left = pts[..., 0] - self.x_min
        d_right = self.x_max - pts[..., 0]
        d_bottom = pts[..., 1] - self.y_min
        d_top = self.y_max - pts[..., 1]
        dists = np.stack([d_left, d_right, d_bottom, d_top], axis=-1)
        dmin = dists.min(axis=-1, keepdims=True)
        near = dists <= dmin + 1e-12
        edge_normals = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
        n = near[..., None] * edge_normals
        n = n.sum(axis=-2)
        norm = np.linalg.norm(n, axis=-1, keepdims=True)
        return n / norm
