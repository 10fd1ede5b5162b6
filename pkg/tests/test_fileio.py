import numpy as np
import pytest

import psfs
from psfs import Lambertian, OrenNayar, Phong, ValidationError
from psfs.fileio import (
    Config,
    model_from_entries,
    parse_entries,
    read_grid,
    read_image,
    sidecar_path,
    write_grid,
    write_image,
    write_ply,
)


# -- config parsing -------------------------------------------------------------

def test_parse_entries_basics():
    text = """
    # a comment
    model.kind = L
    solver.tol = 1e-9   # trailing comment
    camera.nx=65
    """
    entries = parse_entries(text)
    assert entries == {"model.kind": "L", "solver.tol": "1e-9", "camera.nx": "65"}


def test_parse_entries_rejects_garbage():
    with pytest.raises(ValidationError):
        parse_entries("just some words\n")


def test_config_typed_access():
    cfg = Config({"a.x": "1.5", "a.n": "7", "a.flag": "true", "a.name": "dome"})
    assert cfg.get_float("a.x") == 1.5
    assert cfg.get_int("a.n") == 7
    assert cfg.get_bool("a.flag") is True
    assert cfg.get_bool("missing", default=False) is False
    assert cfg.get("a.name") == "dome"
    assert cfg.section("a") == {"x": "1.5", "n": "7", "flag": "true", "name": "dome"}
    assert cfg.get_float("missing") is None
    with pytest.raises(ValidationError):
        cfg.get_float("a.name")
    with pytest.raises(ValidationError):
        cfg.require("nope")


def test_model_round_trip_through_entries():
    for model in [Lambertian(), OrenNayar(sigma=0.25),
                  Phong(k_ambient=0.1, k_diffuse=0.7, k_specular=0.2, alpha=3, ambient=0.25),
                  psfs.BlinnPhong(k_diffuse=0.6, k_specular=0.4, c=2.5)]:
        from psfs.fileio import _model_entries
        entries = {k: str(v) for k, v in _model_entries(model).items()}
        back = model_from_entries(Config(entries))
        assert back.kind == model.kind
        assert back.params == model.params


def test_array_ambient_cannot_go_in_sidecar(rig33, dome33):
    model = Phong(k_ambient=0.1, k_diffuse=0.7, k_specular=0.2, alpha=1,
                  ambient=np.full(rig33.shape, 0.2))
    img = psfs.render(model, dome33)
    with pytest.raises(ValidationError):
        write_image("/tmp/nope.pgm", img)


# -- images ----------------------------------------------------------------------

def test_image_round_trip_is_idempotent(tmp_path, lambertian_render33):
    p = tmp_path / "img.pgm"
    write_image(p, lambertian_render33)
    back = read_image(p)
    # quantization is 16-bit, so values agree to ~scale/65535
    scale = lambertian_render33.intensity.max()
    assert np.abs(back.intensity - lambertian_render33.intensity).max() <= scale / 65535
    # a second write/read cycle is exact: quantization is idempotent
    p2 = tmp_path / "img2.pgm"
    write_image(p2, back)
    again = read_image(p2)
    assert np.array_equal(again.intensity, back.intensity)
    assert p.read_bytes() == p2.read_bytes()


def test_sidecar_carries_camera_and_model(tmp_path, renders65):
    p = tmp_path / "ph.pgm"
    write_image(p, renders65["PH"])
    back = read_image(p)
    rig = renders65["PH"].rig
    assert back.rig == rig
    assert back.model.kind == "PH"
    assert back.model.params == renders65["PH"].model.params
    text = sidecar_path(p).read_text()
    assert "scale = " in text and "f = " in text and "model.kind = PH" in text


def test_normalized_image_round_trip(tmp_path, lambertian_render33):
    norm = lambertian_render33.normalized()
    p = tmp_path / "norm.pgm"
    write_image(p, norm)
    back = read_image(p)
    assert back.normalization == pytest.approx(norm.normalization)
    physical = back.physical()
    assert np.abs(physical.intensity - lambertian_render33.intensity).max() \
        <= lambertian_render33.intensity.max() / 65535


def test_equal_renders_write_identical_bytes(tmp_path, dome33):
    img_l = psfs.render(Lambertian(), dome33)
    img_on = psfs.render(OrenNayar(sigma=0.0), dome33)
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    write_image(pa, img_l)
    write_image(pb, img_on)
    assert pa.read_bytes() == pb.read_bytes()  # pixel payloads identical
    ra, rb = read_image(pa), read_image(pb)
    assert np.array_equal(ra.intensity, rb.intensity)


def test_missing_sidecar_rejected(tmp_path, lambertian_render33):
    p = tmp_path / "img.pgm"
    write_image(p, lambertian_render33)
    sidecar_path(p).unlink()
    with pytest.raises(ValidationError):
        read_image(p)


def test_corrupt_pgm_rejected(tmp_path, lambertian_render33):
    p = tmp_path / "img.pgm"
    write_image(p, lambertian_render33)
    payload = p.read_bytes()
    p.write_bytes(b"P2" + payload[2:])
    with pytest.raises(ValidationError):
        read_image(p)


# -- surface grids -----------------------------------------------------------------

def test_grid_round_trip_bit_exact(tmp_path, rig33):
    rng = np.random.default_rng(21)
    values = rng.standard_normal(rig33.shape) * 10.0 ** rng.integers(-300, 300, rig33.shape)
    p = tmp_path / "field.grid"
    write_grid(p, rig33, values)
    rig_back, back = read_grid(p)
    assert rig_back == rig33
    assert np.array_equal(back, values)


def test_grid_shape_mismatch_rejected(tmp_path, rig33):
    with pytest.raises(ValidationError):
        write_grid(tmp_path / "bad.grid", rig33, np.ones((3, 3)))


def test_grid_malformed_header_rejected(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text("psfs-grid 1\nnx 4\n1 2 3 4\n")
    with pytest.raises(ValidationError):
        read_grid(p)
    p.write_text("something else\n")
    with pytest.raises(ValidationError):
        read_grid(p)


# -- meshes ------------------------------------------------------------------------

def test_ply_structure(tmp_path, dome33, rig33):
    p = tmp_path / "mesh.ply"
    write_ply(p, dome33)
    lines = p.read_text().splitlines()
    assert lines[0] == "ply"
    n_vertices = rig33.nx * rig33.ny
    n_faces = 2 * (rig33.nx - 1) * (rig33.ny - 1)
    assert f"element vertex {n_vertices}" in lines
    assert f"element face {n_faces}" in lines
    header_end = lines.index("end_header")
    first_vertex = np.array(lines[header_end + 1].split(), dtype=float)
    expected = psfs.surface_point(rig33.points()[0, 0], dome33.u[0, 0], rig33.f)
    assert np.allclose(first_vertex, expected)
    assert len(lines) == header_end + 1 + n_vertices + n_faces
    face = lines[header_end + 1 + n_vertices].split()
    assert face[0] == "3" and len(face) == 4
