"""Per-Gaussian channel evaluation plus rasterization for each render mode."""

import numpy as np

from .rasterizer import rasterize
from .scene import Camera, GaussianScene
from .shading import ShadingConfig, ambient_occlusion, shade_scene

MODES = ("pbr", "albedo", "normal", "ao", "roughness", "direct", "indirect")


def gaussian_channels(scene: GaussianScene, cam: Camera, mode: str, env=None, s_d: float = 1.0, cfg=ShadingConfig()):
    """Values blended for ``mode``: (N, 3) for color-like modes, (N, 1) for ao/roughness."""
    if mode not in MODES:
        raise ValueError(f"unknown render mode {mode!r}")
    if mode == "albedo":
        return scene.albedos
    if mode == "normal":
        return scene.normals
    if mode == "roughness":
        return scene.roughness[:, None]
    if mode == "ao":
        return ambient_occlusion(scene.visibility, scene.normals)[:, None] if len(scene) else np.zeros((0, 1))
    if env is None:
        raise ValueError(f"mode {mode!r} needs an environment map")
    pbr, direct, indirect = shade_scene(scene, env, s_d, cam.center, cfg)
    return {"pbr": pbr, "direct": direct, "indirect": indirect}[mode]


def render(scene: GaussianScene, cam: Camera, mode: str, env=None, s_d: float = 1.0, cfg=ShadingConfig()):
    """Render one attribute image. Returns ``(image (H, W, C), alpha (H, W))``."""
    values = gaussian_channels(scene, cam, mode, env, s_d, cfg)
    return rasterize(scene, cam, values)
