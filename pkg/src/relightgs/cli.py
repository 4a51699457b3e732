"""Command-line entry point.

Exit codes: 0 success, 1 IO or validation failure, 2 usage error.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import imageio, losses
from .envlight import PrefilterConfig, average_scaling, prefilter
from .geometry import coarse_normals, position_map, refine_normals
from .pipeline import MODES, render
from .scene import parse_camera, parse_scene, serialize_camera, serialize_scene
from .shading import ShadingConfig, bake_indirect_all, bake_visibility_all, with_visibility

log = logging.getLogger("relightgs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_text(path):
    return Path(path).read_text(encoding="utf-8")


def cmd_prefilter(args):
    env = imageio.read_pfm(args.env)
    if env.shape[2] != 3:
        raise ValueError("environment map must be a 3-channel PFM")
    cfg = PrefilterConfig(args.exponent, args.width, args.height)
    imageio.write_pfm(args.out, prefilter(env, cfg))


def _scaling(args):
    if args.sd_map is not None:
        m = imageio.read_pfm(args.sd_map)[..., 0].astype(np.float64)
        return average_scaling(m, np.isfinite(m) & (m > 0))
    return args.sd


def cmd_render(args):
    scene = parse_scene(_read_text(args.scene))
    cam = parse_camera(_read_text(args.camera))
    env = None
    if args.env is not None:
        env = imageio.read_pfm(args.env).astype(np.float64)
    elif args.mode in ("pbr", "direct", "indirect"):
        raise UsageError(f"--env is required for mode {args.mode}")
    cfg = ShadingConfig(
        sample_count=args.samples, seed=args.seed, shadow_mode=args.shadow, diffuse_only=args.diffuse_only
    )
    img, _ = render(scene, cam, args.mode, env, _scaling(args), cfg)
    imageio.write_pfm(args.out, img)
    if args.png:
        imageio.write_png(args.png, 0.5 * (img + 1.0) if args.mode == "normal" else img)


def cmd_normals(args):
    depth = imageio.read_pfm(args.depth)[..., 0].astype(np.float64)
    cam = parse_camera(_read_text(args.camera))
    X, mask = position_map(depth, cam)
    n, valid = coarse_normals(X, mask, cam)
    if args.delta:
        delta = imageio.read_pfm(args.delta).astype(np.float64)
        n, valid = refine_normals(n, delta, valid)
    imageio.write_pfm(args.out, np.where(valid[..., None], n, 0.0))


def cmd_bake(args):
    scene = parse_scene(_read_text(args.scene))
    if args.what == "visibility":
        out = with_visibility(scene, bake_visibility_all(scene, args.dirs, args.k_sigma))
    else:
        if args.env is None:
            raise UsageError("--env is required to bake indirect light")
        env = imageio.read_pfm(args.env).astype(np.float64)
        out = scene.copy()
        out.indirect = bake_indirect_all(scene, env, args.sd, args.dirs, args.k_sigma)
    Path(args.out).write_text(serialize_scene(out), encoding="utf-8")


def cmd_metrics(args):
    pred = imageio.read_pfm(args.pred).astype(np.float64)
    gt = imageio.read_pfm(args.gt).astype(np.float64)
    mask = None
    if args.mask:
        mask = imageio.read_pfm(args.mask)[..., 0] > 0.5
    if args.metric == "psnr":
        value = losses.psnr(pred, gt, mask=mask)
    elif args.metric == "mae":
        value = losses.mae_normals(pred, gt, mask)
    else:
        value = losses.masked_l1(pred, gt, mask)
    print(f"{args.metric} {value:.6f}")


def cmd_demo(args):
    from . import demo

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scene.gsc").write_text(serialize_scene(demo.two_spheres(args.points)), encoding="utf-8")
    (out / "camera.txt").write_text(serialize_camera(demo.demo_camera(args.size, args.size)), encoding="utf-8")
    imageio.write_pfm(out / "sky.pfm", demo.sky_envmap())
    print(f"sd {demo.demo_scaling():.9g}")


def build_parser():
    p = _Parser(prog="relightgs", description="Relightable Gaussian splat toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("prefilter", help="cosine-power prefilter an environment map")
    s.add_argument("--env", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--exponent", type=float, default=16.0)
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--height", type=int, default=32)
    s.set_defaults(func=cmd_prefilter)

    s = sub.add_parser("render", help="shade and rasterize a Gaussian scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--camera", required=True)
    s.add_argument("--env", help="prefiltered environment map (PFM)")
    s.add_argument("--mode", choices=MODES, default="pbr")
    s.add_argument("--out", required=True)
    s.add_argument("--png")
    s.add_argument("--samples", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--sd", type=float, default=1.0)
    g.add_argument("--sd-map")
    s.add_argument("--shadow", choices=("soft", "hard", "none"), default="soft")
    s.add_argument("--diffuse-only", action="store_true")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("normals", help="normals from a depth map")
    s.add_argument("--depth", required=True)
    s.add_argument("--camera", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--delta")
    s.set_defaults(func=cmd_normals)

    s = sub.add_parser("bake", help="bake SH visibility or indirect light into a scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--what", choices=("visibility", "indirect"), required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--dirs", type=int, default=256)
    s.add_argument("--k-sigma", type=float, default=1.0)
    s.add_argument("--env", help="prefiltered environment map, for --what indirect")
    s.add_argument("--sd", type=float, default=1.0)
    s.set_defaults(func=cmd_bake)

    s = sub.add_parser("metrics", help="compare two images")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--metric", choices=("psnr", "mae", "l1"), required=True)
    s.add_argument("--mask")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("demo", help="write the two-sphere demo scene, camera and sky")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--points", type=int, default=2500, help="points per sphere")
    s.add_argument("--size", type=int, default=512)
    s.set_defaults(func=cmd_demo)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"relightgs: usage error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"relightgs: usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, IndexError) as exc:
        print(f"relightgs: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
