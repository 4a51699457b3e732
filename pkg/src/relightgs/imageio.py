"""PFM read/write and 8-bit tonemapped PNG output.

PFM rows are stored bottom-to-top; arrays here are top-to-bottom (H, W, C).
"""

import re

import numpy as np

_HEADER = re.compile(rb"\A(PF|Pf)\s+(\d+)\s+(\d+)\s+(\S+)\s")


class PfmError(ValueError):
    pass


def decode_pfm(data: bytes) -> np.ndarray:
    """Parse PFM bytes into a float32 (H, W, 3) or (H, W, 1) array."""
    m = _HEADER.match(data)
    if not m:
        raise PfmError("malformed PFM header")
    kind, w, h, scale = m.groups()
    width, height = int(w), int(h)
    try:
        scale = float(scale)
    except ValueError:
        raise PfmError("malformed PFM scale") from None
    if scale == 0:
        raise PfmError("PFM scale must be non-zero")
    channels = 3 if kind == b"PF" else 1
    count = width * height * channels
    payload = data[m.end():]
    if len(payload) < 4 * count:
        raise PfmError(f"truncated PFM payload: need {4 * count} bytes, have {len(payload)}")
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(payload, dtype=dtype, count=count).astype(np.float32)
    return arr.reshape(height, width, channels)[::-1].copy()


def encode_pfm(image) -> bytes:
    """Little-endian PFM bytes for an (H, W), (H, W, 1) or (H, W, 3) array."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim == 2:
        img = img[..., None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise PfmError(f"PFM holds 1 or 3 channels, got shape {img.shape}")
    h, w, c = img.shape
    header = b"%s\n%d %d\n-1.0\n" % (b"PF" if c == 3 else b"Pf", w, h)
    return header + np.ascontiguousarray(img[::-1]).astype("<f4").tobytes()


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pfm(fh.read())


def write_pfm(path, image) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pfm(image))


def tonemap(image) -> np.ndarray:
    """round(255 * clamp(v, 0, 1) ** (1/2.2)) as uint8."""
    v = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.round(255.0 * v ** (1.0 / 2.2)).astype(np.uint8)


def write_png(path, image) -> None:
    from PIL import Image

    img = tonemap(image)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[..., 0]
    Image.fromarray(img).save(path, format="PNG")
