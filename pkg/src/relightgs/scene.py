"""Gaussian scene and pinhole camera types, plus their text file formats.

Scene file::

    gsc 1
    <count>
    <82 numbers per record: p(3) r(4) s(3) alpha n(3) a(3) gamma v(16) l_ind(48)>

Quaternions are stored (w, x, y, z). Camera file: labeled lines ``fx``, ``fy``,
``cx``, ``cy``, ``R`` (9 numbers, row-major world->camera), ``t`` (3 numbers)
and ``size`` (W H).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RECORD_LEN = 82
NUM_SH = 16
UNIT_TOL = 1e-3
ROT_TOL = 1e-4

# record column slices
_P = slice(0, 3)
_R = slice(3, 7)
_S = slice(7, 10)
_ALPHA = 10
_N = slice(11, 14)
_A = slice(14, 17)
_GAMMA = 17
_V = slice(18, 34)
_LIND = slice(34, 82)


class SceneFormatError(ValueError):
    """Raised for malformed or invariant-violating scene/camera files."""


@dataclass(frozen=True)
class GaussianPoint:
    position: np.ndarray
    rotation: np.ndarray
    scale: np.ndarray
    opacity: float
    normal: np.ndarray
    albedo: np.ndarray
    roughness: float
    visibility: np.ndarray
    indirect: np.ndarray


@dataclass
class GaussianScene:
    """Struct-of-arrays Gaussian scene; row ``i`` of every array is point ``i``.

    ``indirect`` is (N, 3, 16): per RGB channel, 16 SH coefficients.
    """

    positions: np.ndarray
    rotations: np.ndarray
    scales: np.ndarray
    opacities: np.ndarray
    normals: np.ndarray
    albedos: np.ndarray
    roughness: np.ndarray
    visibility: np.ndarray
    indirect: np.ndarray

    def __post_init__(self):
        n = len(self.positions)
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(n, 3)
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(n, 4)
        self.scales = np.asarray(self.scales, dtype=np.float64).reshape(n, 3)
        self.opacities = np.asarray(self.opacities, dtype=np.float64).reshape(n)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(n, 3)
        self.albedos = np.asarray(self.albedos, dtype=np.float64).reshape(n, 3)
        self.roughness = np.asarray(self.roughness, dtype=np.float64).reshape(n)
        self.visibility = np.asarray(self.visibility, dtype=np.float64).reshape(n, NUM_SH)
        self.indirect = np.asarray(self.indirect, dtype=np.float64).reshape(n, 3, NUM_SH)

    def __len__(self):
        return len(self.positions)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self) == 0:
            return np.zeros(3), np.zeros(3)
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def point(self, i: int) -> GaussianPoint:
        return GaussianPoint(
            position=self.positions[i],
            rotation=self.rotations[i],
            scale=self.scales[i],
            opacity=float(self.opacities[i]),
            normal=self.normals[i],
            albedo=self.albedos[i],
            roughness=float(self.roughness[i]),
            visibility=self.visibility[i],
            indirect=self.indirect[i],
        )

    def copy(self) -> "GaussianScene":
        return GaussianScene(**{k: np.array(getattr(self, k)) for k in _FIELDS})

    def subset(self, index) -> "GaussianScene":
        return GaussianScene(**{k: getattr(self, k)[index] for k in _FIELDS})

    @classmethod
    def empty(cls) -> "GaussianScene":
        return cls.from_records(np.zeros((0, RECORD_LEN)))

    @classmethod
    def from_records(cls, rec: np.ndarray) -> "GaussianScene":
        rec = np.asarray(rec, dtype=np.float64).reshape(-1, RECORD_LEN)
        return cls(
            positions=rec[:, _P],
            rotations=rec[:, _R],
            scales=rec[:, _S],
            opacities=rec[:, _ALPHA],
            normals=rec[:, _N],
            albedos=rec[:, _A],
            roughness=rec[:, _GAMMA],
            visibility=rec[:, _V],
            indirect=rec[:, _LIND],
        )

    def to_records(self) -> np.ndarray:
        n = len(self)
        return np.concatenate(
            [
                self.positions,
                self.rotations,
                self.scales,
                self.opacities[:, None],
                self.normals,
                self.albedos,
                self.roughness[:, None],
                self.visibility,
                self.indirect.reshape(n, 3 * NUM_SH),
            ],
            axis=1,
        )


_FIELDS = (
    "positions",
    "rotations",
    "scales",
    "opacities",
    "normals",
    "albedos",
    "roughness",
    "visibility",
    "indirect",
)


def _renormalize(vecs: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(vecs, axis=1)
    bad = np.abs(norms - 1.0) > UNIT_TOL
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise SceneFormatError(f"invariant violation: record {i} {what} has norm {norms[i]:.6g}")
    # leave already-unit rows untouched so parse/serialize reaches a fixed point
    fix = np.abs(norms - 1.0) > 1e-12
    out = vecs.copy()
    out[fix] /= norms[fix, None]
    return out


def validate_scene(scene: GaussianScene) -> GaussianScene:
    """Check point invariants, renormalizing near-unit quaternions and normals."""
    rec = scene.to_records()
    if not np.isfinite(rec).all():
        raise SceneFormatError("non-finite value in scene")
    scene = scene.copy()
    scene.rotations = _renormalize(scene.rotations, "rotation")
    scene.normals = _renormalize(scene.normals, "normal")
    checks = [
        ((scene.scales <= 0).any(axis=1), "scale must be > 0"),
        ((scene.opacities < 0) | (scene.opacities > 1), "opacity outside [0, 1]"),
        (((scene.albedos < 0) | (scene.albedos > 1)).any(axis=1), "albedo outside [0, 1]"),
        ((scene.roughness < 0) | (scene.roughness > 1), "roughness outside [0, 1]"),
    ]
    for bad, msg in checks:
        if bad.any():
            raise SceneFormatError(f"invariant violation: record {int(np.flatnonzero(bad)[0])} {msg}")
    return scene


def parse_scene(text: str) -> GaussianScene:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["gsc", "1"]:
        raise SceneFormatError("missing 'gsc 1' header")
    if len(lines) < 2:
        raise SceneFormatError("missing record count")
    try:
        count = int(lines[1])
    except ValueError:
        raise SceneFormatError(f"bad record count {lines[1]!r}") from None
    body = lines[2:]
    if count < 0 or len(body) != count:
        raise SceneFormatError(f"count mismatch: header says {count}, found {len(body)} records")
    rec = np.empty((count, RECORD_LEN))
    for i, ln in enumerate(body):
        fields = ln.split()
        if len(fields) != RECORD_LEN:
            raise SceneFormatError(f"record {i} has {len(fields)} numbers, expected {RECORD_LEN}")
        try:
            rec[i] = [float(x) for x in fields]
        except ValueError as exc:
            raise SceneFormatError(f"record {i}: {exc}") from None
    return validate_scene(GaussianScene.from_records(rec))


def serialize_scene(scene: GaussianScene) -> str:
    rec = scene.to_records()
    out = ["gsc 1", str(len(rec))]
    out.extend(" ".join("%.17g" % x for x in row) for row in rec)
    return "\n".join(out) + "\n"


@dataclass
class Camera:
    """Pinhole camera; ``R``/``t`` map world to camera coordinates (x_c = R x + t)."""

    fx: float
    fy: float
    cx: float
    cy: float
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    width: int = 1
    height: int = 1

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        self.t = np.asarray(self.t, dtype=np.float64).reshape(3)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def P(self) -> np.ndarray:
        return self.K @ np.hstack([self.R, self.t[:, None]])

    @property
    def center(self) -> np.ndarray:
        return -self.R.T @ self.t

    def validate(self) -> "Camera":
        if not (self.fx > 0 and self.fy > 0):
            raise SceneFormatError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise SceneFormatError("image size must be positive")
        vals = np.concatenate([[self.fx, self.fy, self.cx, self.cy], self.R.ravel(), self.t])
        if not np.isfinite(vals).all():
            raise SceneFormatError("non-finite camera value")
        err = np.abs(self.R.T @ self.R - np.eye(3)).max()
        det = np.linalg.det(self.R)
        if err > ROT_TOL or abs(det - 1.0) > ROT_TOL:
            raise SceneFormatError(f"R is not a rotation (orthonormality error {err:.3g}, det {det:.6g})")
        if err > 1e-9:
            u, _, vt = np.linalg.svd(self.R)
            self.R = u @ vt
        return self

    @classmethod
    def look_at(cls, eye, target, up, fx, fy, width, height, cx=None, cy=None) -> "Camera":
        """Camera at ``eye`` looking at ``target``; image y runs along -``up``."""
        eye = np.asarray(eye, dtype=np.float64)
        z = np.asarray(target, dtype=np.float64) - eye
        z /= np.linalg.norm(z)
        x = np.cross(z, np.asarray(up, dtype=np.float64))
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        R = np.stack([x, y, z])
        cx = (width - 1) / 2.0 if cx is None else cx
        cy = (height - 1) / 2.0 if cy is None else cy
        return cls(fx, fy, cx, cy, R, -R @ eye, width, height)


_CAMERA_LABELS = {"fx": 1, "fy": 1, "cx": 1, "cy": 1, "R": 9, "t": 3, "size": 2}


def parse_camera(text: str) -> Camera:
    vals: dict[str, list[float]] = {}
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        label, *rest = ln.split()
        if label not in _CAMERA_LABELS:
            raise SceneFormatError(f"unknown camera label {label!r}")
        if len(rest) != _CAMERA_LABELS[label]:
            raise SceneFormatError(f"camera label {label!r} expects {_CAMERA_LABELS[label]} numbers")
        try:
            vals[label] = [float(x) for x in rest]
        except ValueError as exc:
            raise SceneFormatError(f"camera label {label!r}: {exc}") from None
    missing = [k for k in _CAMERA_LABELS if k not in vals]
    if missing:
        raise SceneFormatError(f"camera file missing {', '.join(missing)}")
    w, h = vals["size"]
    if w != int(w) or h != int(h):
        raise SceneFormatError("size must be integral")
    cam = Camera(
        vals["fx"][0], vals["fy"][0], vals["cx"][0], vals["cy"][0],
        np.array(vals["R"]), np.array(vals["t"]), int(w), int(h),
    )
    return cam.validate()


def serialize_camera(cam: Camera) -> str:
    def fmt(xs):
        return " ".join("%.17g" % x for x in xs)

    return "\n".join(
        [
            f"fx {fmt([cam.fx])}",
            f"fy {fmt([cam.fy])}",
            f"cx {fmt([cam.cx])}",
            f"cy {fmt([cam.cy])}",
            f"R {fmt(cam.R.ravel())}",
            f"t {fmt(cam.t)}",
            f"size {cam.width} {cam.height}",
        ]
    ) + "\n"
