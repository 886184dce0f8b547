import numpy as np
import pytest

from domforest import cloth, observation
from domforest.observation import (CameraModel, DepthImage, NoiseSpec, apply_noise,
                                   default_camera, load_dimg, load_text,
                                   render_depth, render_triangles, save_dimg,
                                   save_text)


def make_screen_parallel_triangle(cam: CameraModel, dist: float):
    """A big triangle in the plane perpendicular to the view axis."""
    p, right, up, fwd = cam.basis()
    center = p + fwd * dist
    return np.stack([center + (-right - up) * 0.5,
                     center + (right * 1.5 - up * 0.5),
                     center + (up * 1.5 - right * 0.5)])


def test_empty_frustum_renders_sentinel():
    cam = default_camera(32, 24)
    verts = np.array([[10.0, 10.0, 10.0], [10.5, 10.0, 10.0], [10.0, 10.5, 10.0]])
    img = render_triangles(verts, np.array([[0, 1, 2]], dtype=np.int32), cam)
    assert not img.foreground().any()


def test_screen_parallel_triangle_depth():
    cam = default_camera(64, 48)
    d = 0.63
    verts = make_screen_parallel_triangle(cam, d)
    img = render_triangles(verts, np.array([[0, 1, 2]], dtype=np.int32), cam)
    fg = img.foreground()
    assert fg.any()
    assert np.allclose(img.depth[fg], d, atol=1e-6)


def test_nearer_triangle_wins_overlap():
    cam = default_camera(64, 48)
    far_tri = make_screen_parallel_triangle(cam, 1.0)
    near_tri = make_screen_parallel_triangle(cam, 0.5)
    verts = np.vstack([far_tri, near_tri])
    tris = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int32)
    img = render_triangles(verts, tris, cam)
    both = render_triangles(near_tri, np.array([[0, 1, 2]], dtype=np.int32), cam)
    overlap = both.foreground()
    assert np.allclose(img.depth[overlap], 0.5, atol=1e-6)


def test_degenerate_camera_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        CameraModel(position=(0.1, 0.2, 0.3), look_at=(0.1, 0.2, 0.3))


def test_camera_validation():
    with pytest.raises(ValueError):
        CameraModel(position=(0, 0, 1), look_at=(0, 0, 0), near=2.0, far=1.0)
    with pytest.raises(ValueError):
        CameraModel(position=(0, 0, 1), look_at=(0, 0, 0), fov_y=4.0)


def test_render_is_deterministic():
    mesh, state = cloth.make_cloth(10, 10)
    cam = default_camera()
    a = render_depth(state, mesh, cam)
    b = render_depth(state, mesh, cam)
    assert np.array_equal(a.depth, b.depth)


def test_coverage_monotone_with_distance():
    mesh, state = cloth.make_cloth(12, 12)
    cam = default_camera()
    _, _, _, fwd = cam.basis()
    counts = []
    for offset in np.linspace(0.0, 0.4, 9):
        st = state.copy()
        st.positions = st.positions + fwd * offset
        img = render_depth(st, mesh, cam)
        counts.append(int(img.foreground().sum()))
    assert counts[0] > 0
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_noise_zero_spec_is_identity():
    mesh, state = cloth.make_cloth(8, 8)
    img = render_depth(state, mesh, default_camera())
    out = apply_noise(img, NoiseSpec(), seed=1)
    assert np.array_equal(out.depth, img.depth)


def test_noise_full_dropout():
    mesh, state = cloth.make_cloth(8, 8)
    img = render_depth(state, mesh, default_camera())
    out = apply_noise(img, NoiseSpec(dropout_prob=1.0), seed=1)
    assert not out.foreground().any()


def test_noise_deterministic_per_seed():
    mesh, state = cloth.make_cloth(8, 8)
    img = render_depth(state, mesh, default_camera())
    spec = NoiseSpec(depth_sigma=0.01, occluder_count=2, dropout_prob=0.05)
    a = apply_noise(img, spec, seed=42)
    b = apply_noise(img, spec, seed=42)
    c = apply_noise(img, spec, seed=43)
    assert np.array_equal(a.depth, b.depth)
    assert not np.array_equal(a.depth, c.depth)


def test_noise_preserves_shape_and_no_nan():
    mesh, state = cloth.make_cloth(8, 8)
    img = render_depth(state, mesh, default_camera())
    spec = NoiseSpec(depth_sigma=0.05, occluder_count=3,
                     occluder_size_range=(2, 10), dropout_prob=0.3)
    out = apply_noise(img, spec, seed=7)
    assert out.depth.shape == img.depth.shape
    assert not np.isnan(out.depth).any()
    # input untouched
    assert np.isfinite(img.depth[img.foreground()]).all()


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(depth_sigma=-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(dropout_prob=1.5)
    with pytest.raises(ValueError):
        NoiseSpec(occluder_size_range=(5, 2))


def test_image_size_validation():
    with pytest.raises(ValueError):
        DepthImage(np.ones((4, 4)))


def test_dimg_roundtrip(tmp_path):
    mesh, state = cloth.make_cloth(8, 8)
    img = render_depth(state, mesh, default_camera(40, 32))
    path = tmp_path / "obs.dimg"
    save_dimg(img, path)
    back = load_dimg(path)
    assert back.width == img.width and back.height == img.height
    assert np.array_equal(np.isfinite(back.depth), np.isfinite(img.depth))
    fg = img.foreground()
    assert np.allclose(back.depth[fg], img.depth[fg], atol=1e-6)  # f32 storage
    raw = path.read_bytes()
    assert raw[:4] == b"DIMG"


def test_dimg_bad_magic(tmp_path):
    path = tmp_path / "bad.dimg"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        load_dimg(path)


def test_text_roundtrip_lossless(tmp_path):
    mesh, state = cloth.make_cloth(8, 8)
    img = render_depth(state, mesh, default_camera(40, 32))
    path = tmp_path / "obs.txt"
    save_text(img, path)
    back = load_text(path)
    assert np.array_equal(back.depth, img.depth)
