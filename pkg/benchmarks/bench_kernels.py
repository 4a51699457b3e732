"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3] [--points 2500]

Each kernel is run once to warm the JIT, then timed ``--repeat`` times; the
best time is reported with the max abs difference between the two backends.
"""

import argparse
import time

import numpy as np

from relightgs import demo, envlight, rasterizer, raycast, shading
from relightgs.envlight import PrefilterConfig
from relightgs.shading import ShadingConfig


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    same = a == b  # also covers inf == inf for rays that miss
    return float(np.max(np.where(same, 0.0, np.abs(a - b)), initial=0.0))


def cases(points):
    scene = demo.two_spheres(points)
    cam = demo.demo_camera(256, 256)
    sky = demo.sky_envmap(128, 64)
    pre = envlight.prefilter(demo.sky_envmap(), PrefilterConfig())
    cfg_direct = PrefilterConfig(method="direct")
    scfg = ShadingConfig()
    vals = scene.albedos
    occ = raycast.Occluders.from_scene(scene)
    dirs = shading.fibonacci_sphere(64)
    idx = np.arange(0, len(scene), 10)
    origins = np.repeat(scene.positions[idx] + 1e-4 * scene.normals[idx], len(dirs), axis=0)
    ray_dirs = np.tile(dirs, (len(idx), 1))
    exclude = np.repeat(idx, len(dirs))
    return [
        ("prefilter 128x64 -> 64x32 (direct)",
         lambda: envlight.prefilter_numba(sky, cfg_direct), lambda: envlight.prefilter_numpy(sky, cfg_direct)),
        (f"shade {len(scene)} points x 40 samples",
         lambda: shading.shade_scene_numba(scene, pre, 1.0, cam.center, scfg),
         lambda: shading.shade_scene_numpy(scene, pre, 1.0, cam.center, scfg)),
        ("rasterize 256x256",
         lambda: rasterizer.rasterize_numba(scene, cam, vals), lambda: rasterizer.rasterize_numpy(scene, cam, vals)),
        (f"cast {len(origins)} rays",
         lambda: raycast.cast_rays_numba(origins, ray_dirs, exclude, occ),
         lambda: raycast.cast_rays_numpy(origins, ray_dirs, exclude, occ)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--points", type=int, default=2500, help="points per demo sphere")
    args = ap.parse_args()
    print(f"{'kernel':<40} {'numba s':>9} {'numpy s':>9} {'speedup':>8} {'max diff':>10}")
    for name, fast, slow in cases(args.points):
        tf, a = best_of(fast, args.repeat)
        ts, b = best_of(slow, args.repeat)
        print(f"{name:<40} {tf:9.4f} {ts:9.4f} {ts / tf:8.1f} {max_diff(a, b):10.2e}")
    fft_cfg = PrefilterConfig()
    big = np.ones((512, 1024, 3))
    t, _ = best_of(lambda: envlight.prefilter_fft(big, fft_cfg), 1)
    print(f"{'prefilter 1024x512 -> 64x32 (fft)':<40} {t:9.4f}")


if __name__ == "__main__":
    main()
