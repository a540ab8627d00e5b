"""Smoke tests for the Python bindings."""

import numpy as np
import pytest

import warpsdf

CIRCLE = """
{
  "name": "circle",
  "bounding_radius": 1.0,
  "params": [
    {"name": "radius", "value": 1.0},
    {"name": "cx", "value": 0.0},
    {"name": "cy", "value": 0.0},
    {"name": "cz", "value": 0.0}
  ],
  "camera": {
    "type": "orthographic",
    "position": [0, 0, -3], "look_at": [0, 0, 0], "up": [0, 1, 0],
    "film": {"width": 32, "height": 32, "extent": 3.0}
  },
  "material": {
    "flat": true,
    "albedo": [0.9, 0.9, 0.9],
    "background": [0.1, 0.1, 0.1],
    "light": {"direction": [0, 0, -1], "intensity": [1, 1, 1]}
  },
  "sdf": {
    "type": "sphere",
    "center": [{"slot": "cx"}, {"slot": "cy"}, {"slot": "cz"}],
    "radius": {"slot": "radius"}
  }
}
"""


@pytest.fixture(scope="module")
def circle():
    return warpsdf.parse_scene(CIRCLE)


def test_scene_introspection(circle):
    assert circle.name == "circle"
    assert list(circle.param_names) == ["radius", "cx", "cy", "cz"]
    np.testing.assert_allclose(circle.theta0, [1.0, 0.0, 0.0, 0.0])
    assert circle.param_index("radius") == 0
    assert circle.param_index("nope") == -1


def test_sdf_eval_and_gradient(circle):
    assert warpsdf.eval_sdf(circle, 0.0, 0.0, -3.0) == pytest.approx(2.0)
    assert warpsdf.eval_sdf(circle, 0.0, 0.0, 0.0) == pytest.approx(-1.0)
    g = warpsdf.sdf_gradient(circle, 0.0, 0.0, -2.0)
    np.testing.assert_allclose(g, (0.0, 0.0, -1.0), atol=1e-12)


def test_render(circle):
    img = warpsdf.render(circle, spp=4, seed=3)
    assert img.shape == (32, 32, 3)
    assert img[16, 16, 0] == pytest.approx(0.9)  # object
    assert img[1, 1, 0] == pytest.approx(0.1)  # background
    img2 = warpsdf.render(circle, spp=4, seed=3, threads=2)
    np.testing.assert_array_equal(img, img2)


def test_trace(circle):
    t = warpsdf.trace(circle, 0.0, 0.0)
    assert t["hit"]
    assert t["t_star"] == pytest.approx(2.0, abs=1e-8)
    np.testing.assert_allclose(t["t"][:2], [0.0, 2.0], atol=1e-12)
    miss = warpsdf.trace(circle, 1.4, 0.0)
    assert not miss["hit"]


def test_warp_converges_to_silhouette_velocity(circle):
    vx, vy = warpsdf.warp_v(circle, 1.001, 0.0, "radius")
    assert vx == pytest.approx(1.0, abs=0.02)
    assert vy == pytest.approx(0.0, abs=0.02)


def test_gradient_image_sees_the_silhouette(circle):
    grad = warpsdf.gradient_image(circle, "radius", interior_spp=32, boundary_spp=8, seed=1)
    fd = warpsdf.fd_gradient_image(circle, "radius", h=1e-3, spp=512, seed=1)
    assert grad.shape == (32, 32)
    # totals approximate the area derivative 2*pi*r*(c-b)
    expect = 2 * np.pi * (0.9 - 0.1)
    assert grad.sum() == pytest.approx(expect, rel=0.10)
    assert fd.sum() == pytest.approx(expect, rel=0.10)
    # naive mode misses the silhouette entirely on a flat-shaded scene
    naive = warpsdf.gradient_image(circle, "radius", mode="naive", interior_spp=8, seed=1)
    assert abs(naive.sum()) < 0.05 * expect


def test_kronecker_probe_and_lemma(circle):
    probe = warpsdf.kronecker_probe(circle, [1.5, 1.01], max_steps=2048)
    assert len(probe) == 2
    assert probe[0] < 0.5
    assert warpsdf.lemma_bound(0.1, 1.0, 0.1, 4.0) == pytest.approx(100167.3468, rel=1e-6)


def test_errors(circle):
    with pytest.raises(warpsdf.ConfigError):
        warpsdf.parse_scene('{"bogus": 1}')
    with pytest.raises(ValueError):
        warpsdf.gradient_image(circle, "nope")


def test_fit_recovers_translation():
    start = warpsdf.parse_scene(CIRCLE.replace('{"name": "cx", "value": 0.0}',
                                               '{"name": "cx", "value": 0.15}'))
    gt = warpsdf.parse_scene(CIRCLE)
    target = warpsdf.render(gt, spp=16, seed=5)
    cam = warpsdf.Camera.orthographic([0, 0, -3], [0, 0, 0], width=32, height=32, extent=3.0)
    res = warpsdf.fit(start, [(cam, target)], iterations=120, pixels_per_iter=96,
                      lr=2e-2, seed=4, threads=2, pyramid_levels=2)
    theta = res["theta_best"]
    assert abs(theta[1]) < 0.05  # cx pulled back toward 0
    assert abs(theta[0] - 1.0) < 0.05
