import numpy as np
import pytest

from psfs import CameraRig, ValidationError, w_term


def test_basic_geometry():
    rig = CameraRig.from_domain(2.0, (-1.0, 1.0, -0.5, 0.5), 21, 11)
    assert rig.shape == (11, 21)
    assert rig.hx == pytest.approx(0.1)
    assert rig.hy == pytest.approx(0.1)
    X, Y = rig.nodes()
    assert X.shape == (11, 21)
    assert X[0, 0] == -1.0 and X[0, -1] == 1.0
    assert Y[0, 0] == -0.5 and Y[-1, 0] == 0.5
    pts = rig.points()
    assert pts.shape == (11, 21, 2)


@pytest.mark.parametrize("kwargs", [
    dict(f=0.0),
    dict(f=-1.0),
    dict(nx=2),
    dict(ny=1),
    dict(x_min=0.5, x_max=-0.5),
    dict(y_min=1.0, y_max=1.0),
])
def test_invalid_rigs_rejected(kwargs):
    base = dict(f=1.0, x_min=-0.5, x_max=0.5, y_min=-0.5, y_max=0.5, nx=9, ny=9)
    base.update(kwargs)
    with pytest.raises(ValidationError):
        CameraRig(**base)


def test_w_upper_constant_is_a_tight_max():
    rig = CameraRig.from_domain(0.8, (-0.4, 0.6, -0.3, 0.5), 9, 9)
    # brute-force the max of (f^2+|x|^2)(1+|x|^2/f^2) over a dense grid
    xs = np.linspace(rig.x_min, rig.x_max, 401)
    ys = np.linspace(rig.y_min, rig.y_max, 401)
    X, Y = np.meshgrid(xs, ys)
    r2 = X * X + Y * Y
    f2 = rig.f**2
    brute = ((f2 + r2) * (1.0 + r2 / f2)).max()
    assert rig.w_upper_constant == pytest.approx(brute, rel=1e-12)


def test_w_sandwich_on_random_samples():
    rig = CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 9, 9)
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, size=(20_000, 2))
    p = rng.uniform(-10.0, 10.0, size=(20_000, 2))
    w = w_term(x, p, rig.f)
    p2 = (p * p).sum(axis=-1)
    assert np.all(w >= rig.f**2 * p2 - 1e-12)
    assert np.all(w <= rig.w_upper_constant * p2 + 1e-12)


def test_masks():
    rig = CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 9, 7)
    b = rig.boundary_mask()
    assert b.sum() == 2 * 9 + 2 * 7 - 4
    assert rig.interior_mask().sum() == (9 - 2) * (7 - 2)
    band = rig.band_mask(3)
    assert band[0, 0] and band[2, 2] and not band[3, 3]
    assert rig.band_mask(1).sum() == b.sum()


def test_outward_normals_edges_and_corners():
    rig = CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 9, 9)
    pts = np.array([
        [-0.5, 0.0],   # left edge
        [0.5, 0.1],    # right edge
        [0.0, -0.5],   # bottom edge
        [0.2, 0.5],    # top edge
        [0.5, 0.5],    # corner
    ])
    n = rig.outward_normals(pts)
    assert np.allclose(n[0], [-1.0, 0.0])
    assert np.allclose(n[1], [1.0, 0.0])
    assert np.allclose(n[2], [0.0, -1.0])
    assert np.allclose(n[3], [0.0, 1.0])
    assert np.allclose(n[4], [1.0 / np.sqrt(2), 1.0 / np.sqrt(2)])
    assert np.allclose(np.linalg.norm(n, axis=-1), 1.0)


def test_contains():
    rig = CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 9, 9)
    assert rig.contains(np.array([0.0, 0.0]))
    assert rig.contains(np.array([-0.5, 0.5]))
    assert not rig.contains(np.array([0.51, 0.0]))
