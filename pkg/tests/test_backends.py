"""The numba kernels and their numpy fallbacks must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from relightgs import envlight, rasterizer, raycast, shading
from relightgs._backend import HAVE_NUMBA, USE_NUMBA
from relightgs.envlight import PrefilterConfig
from relightgs.scene import Camera
from relightgs.shading import ShadingConfig

from conftest import random_scene, random_unit

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def test_prefilter_parity(rng):
    env = rng.uniform(size=(16, 32, 3))
    cfg = PrefilterConfig(16, 16, 8)
    np.testing.assert_allclose(envlight.prefilter_numba(env, cfg), envlight.prefilter_numpy(env, cfg), rtol=1e-12)


def test_prefilter_fractional_exponent(rng):
    env = rng.uniform(size=(8, 16, 3))
    cfg = PrefilterConfig(7.5, 8, 4)
    np.testing.assert_allclose(envlight.prefilter_numba(env, cfg), envlight.prefilter_numpy(env, cfg), rtol=1e-12)


def test_rasterize_parity(rng):
    sc = random_scene(rng, 120)
    sc.positions[:, 2] += 4.0
    cam = Camera(60.0, 60.0, 32.0, 32.0, width=64, height=64)
    vals = rng.uniform(size=(120, 3))
    a, aa = rasterizer.rasterize_numba(sc, cam, vals)
    b, ba = rasterizer.rasterize_numpy(sc, cam, vals)
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(aa, ba, atol=1e-12)


@pytest.mark.parametrize("mode", ["soft", "hard", "none"])
def test_shade_parity(rng, mode):
    sc = random_scene(rng, 40)
    env = rng.uniform(size=(32, 64, 3))
    eye = np.array([0.3, 2.0, 6.0])
    cfg = ShadingConfig(sample_count=24, seed=4, shadow_mode=mode)
    for x, y in zip(shading.shade_scene_numba(sc, env, 1.2, eye, cfg), shading.shade_scene_numpy(sc, env, 1.2, eye, cfg)):
        np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)


def test_cast_parity(rng):
    sc = random_scene(rng, 150, spread=1.5)
    occ = raycast.Occluders.from_scene(sc, 1.2)
    origins = np.repeat(rng.uniform(-1.5, 1.5, size=(20, 3)), 30, axis=0)
    dirs = random_unit(rng, 600)
    exclude = np.repeat(rng.integers(-1, 150, 20), 30)
    h1, t1 = raycast.cast_rays_numba(origins, dirs, exclude, occ)
    h2, t2 = raycast.cast_rays_numpy(origins, dirs, exclude, occ)
    np.testing.assert_array_equal(h1, h2)
    np.testing.assert_allclose(t1, t2, rtol=1e-12)


def test_default_backend_is_numba():
    if os.environ.get("RELIGHTGS_DISABLE_NUMBA") == "1":
        pytest.skip("numba disabled in this run")
    assert USE_NUMBA


def test_env_flag_disables_numba():
    env = dict(os.environ, RELIGHTGS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import relightgs; print(relightgs.USE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
