import math

import numpy as np
import pytest

from relightgs.envlight import (
    PrefilterConfig,
    average_scaling,
    check_envmap,
    compose_incident,
    dir_to_pixel,
    pixel_to_dir,
    prefilter,
    sample_bilinear,
)
from relightgs.sh import equirect_grid


def test_pixel_to_dir_example():
    np.testing.assert_allclose(pixel_to_dir(0, 0, 4, 2), [0.5, math.sqrt(0.5), 0.5], atol=1e-5)


def test_bottom_row_near_south_pole():
    d = pixel_to_dir(0, 511, 1024, 512)
    assert d[1] < -0.9999


def test_out_of_range_pixel():
    with pytest.raises(ValueError):
        pixel_to_dir(4, 0, 4, 2)
    with pytest.raises(ValueError):
        pixel_to_dir(0, -1, 4, 2)


def test_pixel_round_trip_exhaustive():
    u, v = np.meshgrid(np.arange(32), np.arange(16))
    uu, vv = dir_to_pixel(pixel_to_dir(u, v, 32, 16), 32, 16)
    np.testing.assert_array_equal(uu, u)
    np.testing.assert_array_equal(vv, v)


def test_bilinear_hits_texel_centers(rng):
    env = rng.uniform(size=(8, 16, 3))
    u, v = np.meshgrid(np.arange(16), np.arange(8))
    np.testing.assert_allclose(sample_bilinear(env, pixel_to_dir(u, v, 16, 8)), env, atol=1e-12)


def test_check_envmap():
    with pytest.raises(ValueError):
        check_envmap(np.full((2, 4, 3), np.inf))
    with pytest.raises(ValueError):
        check_envmap(-np.ones((2, 4, 3)))
    with pytest.warns(UserWarning):
        check_envmap(np.ones((4, 4, 3)))


@pytest.mark.parametrize("exponent,expected", [(16, 2 * math.pi / 17), (1, math.pi)])
def test_constant_map(exponent, expected):
    out = prefilter(np.ones((64, 128, 3)), PrefilterConfig(exponent, 16, 8))
    assert np.abs(out - expected).max() <= 1e-3


def test_constant_example_value():
    out = prefilter(np.ones((64, 128, 3)), PrefilterConfig(16, 16, 8))
    assert out[0, 0, 0] == pytest.approx(0.369599, abs=1e-3)


def double_loop(env, exponent, ow, oh):
    h, w, _ = env.shape
    out = np.zeros((oh, ow, 3))
    for ov in range(oh):
        for ou in range(ow):
            th_o = math.pi * (ov + 0.5) / oh
            ph_o = 2 * math.pi * (ou + 0.5) / ow
            do = (math.sin(th_o) * math.cos(ph_o), math.cos(th_o), math.sin(th_o) * math.sin(ph_o))
            acc = np.zeros(3)
            for v in range(h):
                th = math.pi * (v + 0.5) / h
                dw = math.sin(th) * (math.pi / h) * (2 * math.pi / w)
                for u in range(w):
                    if not env[v, u].any():
                        continue
                    ph = 2 * math.pi * (u + 0.5) / w
                    di = (math.sin(th) * math.cos(ph), math.cos(th), math.sin(th) * math.sin(ph))
                    c = sum(a * b for a, b in zip(do, di))
                    acc += max(0.0, c) ** exponent * env[v, u] * dw
            out[ov, ou] = acc
    return out


def test_single_bright_texel_matches_double_loop():
    env = np.zeros((8, 16, 3))
    env[3, 5] = [10.0, 5.0, 1.0]
    cfg = PrefilterConfig(16, 16, 8, supersample=1)
    out = prefilter(env, cfg)
    assert np.abs(out - double_loop(env, 16, 16, 8)).max() <= 1e-6
    assert np.unravel_index(np.argmax(out[..., 0]), out.shape[:2]) == (3, 5)


def test_linearity(rng):
    cfg = PrefilterConfig(16, 16, 8)
    x = rng.uniform(size=(16, 32, 3))
    y = rng.uniform(size=(16, 32, 3))
    lhs = prefilter(2.5 * x + 0.7 * y, cfg)
    rhs = 2.5 * prefilter(x, cfg) + 0.7 * prefilter(y, cfg)
    assert np.abs(lhs - rhs).max() <= 1e-6


def test_quarter_turn_equivariance(rng):
    cfg = PrefilterConfig(16, 16, 8)
    env = rng.uniform(size=(16, 32, 3))
    shifted = prefilter(np.roll(env, 8, axis=1), cfg)
    assert np.abs(shifted - np.roll(prefilter(env, cfg), 4, axis=1)).max() <= 1e-6


def test_monotone(rng):
    cfg = PrefilterConfig(16, 16, 8)
    x = rng.uniform(size=(16, 32, 3))
    bigger = x + rng.uniform(size=x.shape)
    assert np.all(prefilter(bigger, cfg) >= prefilter(x, cfg))


def test_prefilter_matches_phong_monte_carlo(rng):
    # independent estimate: importance-sample the cos^l lobe around each output direction
    env = rng.uniform(size=(16, 32, 3))
    l = 16
    out = prefilter(env, PrefilterConfig(l, 8, 4))
    dirs, _ = equirect_grid(8, 4)
    n = 20000
    for (v, u) in [(0, 0), (1, 3), (2, 6), (3, 1)]:
        w = dirs[v, u]
        a = np.array([1.0, 0, 0]) if abs(w[0]) < 0.9 else np.array([0, 1.0, 0])
        t = np.cross(w, a)
        t /= np.linalg.norm(t)
        b = np.cross(w, t)
        xi1, xi2 = rng.random(n), rng.random(n)
        ct = xi1 ** (1 / (l + 1))
        st_ = np.sqrt(1 - ct * ct)
        ph = 2 * np.pi * xi2
        s = (st_ * np.cos(ph))[:, None] * t + (st_ * np.sin(ph))[:, None] * b + ct[:, None] * w
        uu, vv = dir_to_pixel(s, 32, 16)
        est = 2 * np.pi / (l + 1) * env[vv, uu].mean(axis=0)
        np.testing.assert_allclose(out[v, u], est, rtol=0.02)


def test_config_validation():
    with pytest.raises(ValueError):
        PrefilterConfig(0.5)
    with pytest.raises(ValueError):
        PrefilterConfig(16, 2, 1)
    assert PrefilterConfig().resolve_supersample(512) == 1
    assert PrefilterConfig().resolve_supersample(16) > 1


def test_average_scaling():
    assert average_scaling(np.array([1.0, 3.0]), np.array([True, True])) == 2.0
    assert average_scaling(np.array([1.0, 3.0]), np.array([False, True])) == 3.0
    with pytest.raises(ValueError):
        average_scaling(np.array([1.0, 3.0]), np.array([False, False]))


def test_compose_incident():
    d = np.array([0.8, 0.4, 0.2])
    ind = np.array([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(compose_incident(1.0, 2.0, d, ind), 2.0 * d)
    np.testing.assert_array_equal(compose_incident(0.0, 2.0, d, ind), ind)
    assert compose_incident(0.5, 1.0, 0.8, 0.2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        compose_incident(1.5, 1.0, d, ind)


def test_compose_affine_in_visibility(rng):
    d, ind = rng.uniform(size=3), rng.uniform(size=3)
    vs = np.linspace(0, 1, 11)
    vals = np.array([compose_incident(v, 1.3, d, ind) for v in vs])
    np.testing.assert_allclose(np.diff(vals, 2, axis=0), 0, atol=1e-14)


@pytest.mark.parametrize(
    "shape,cfg",
    [((16, 32, 3), PrefilterConfig()), ((32, 64, 3), PrefilterConfig(7.5, 32, 16)), ((8, 16, 3), PrefilterConfig(1, 16, 8))],
)
def test_fft_matches_direct_sum(rng, shape, cfg):
    env = rng.uniform(size=shape)
    env[env < 0.3] = 0.0
    direct = prefilter(env, PrefilterConfig(cfg.exponent, cfg.width, cfg.height, cfg.supersample, "direct"))
    fast = prefilter(env, PrefilterConfig(cfg.exponent, cfg.width, cfg.height, cfg.supersample, "fft"))
    assert np.abs(fast - direct).max() <= 1e-12 * direct.max()


def test_fft_needs_aligned_width(rng):
    env = rng.uniform(size=(8, 16, 3))
    with pytest.raises(ValueError, match="multiple"):
        prefilter(env, PrefilterConfig(16, 12, 6, supersample=1, method="fft"))
    # auto falls back to the direct sum
    assert prefilter(env, PrefilterConfig(16, 12, 6, supersample=1)).shape == (6, 12, 3)
    with pytest.raises(ValueError):
        PrefilterConfig(method="magic")
