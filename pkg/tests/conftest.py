import numpy as np
import pytest

import psfs

# canonical parameter sets used across the suite
MODEL_PARAMS = {
    "L": {},
    "ON": {"sigma": 0.3},
    "PH": {"k_ambient": 0.1, "k_diffuse": 0.6, "k_specular": 0.3, "alpha": 2, "ambient": 0.2},
    "BP": {"k_ambient": 0.0, "k_diffuse": 0.7, "k_specular": 0.3, "c": 2.5},
}


def make_models() -> dict:
    return {kind: psfs.make_model(kind, **params) for kind, params in MODEL_PARAMS.items()}


@pytest.fixture(scope="session")
def models():
    return make_models()


@pytest.fixture(scope="session")
def rig33():
    return psfs.CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 33)


@pytest.fixture(scope="session")
def rig65():
    return psfs.CameraRig.from_domain(1.0, (-0.5, 0.5, -0.5, 0.5), 65)


@pytest.fixture(scope="session")
def dome33(rig33):
    return psfs.dome(rig33, u0=1.0, amplitude=0.2, width=0.3)


@pytest.fixture(scope="session")
def dome65(rig65):
    return psfs.dome(rig65, u0=1.0, amplitude=0.2, width=0.3)


@pytest.fixture(scope="session")
def renders65(models, dome65):
    return {kind: psfs.render(model, dome65) for kind, model in models.items()}


@pytest.fixture(scope="session")
def lambertian_render33(dome33):
    return psfs.render(psfs.Lambertian(), dome33)


def constant_image(rig, v0: float, model=None) -> psfs.RenderedImage:
    """Image whose exact reconstruction is the flat log-height v0."""
    model = model if model is not None else psfs.Lambertian()
    intensity = np.full(rig.shape, np.exp(-2.0 * v0) / (rig.f**2 * model.f_zero))
    return psfs.RenderedImage(rig, intensity, model)
