"""Frame container and raw image I/O (YUV 4:2:0, PGM, PPM)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CodecError


@dataclass(frozen=True)
class Frame:
    """One 8-bit 4:2:0 picture. Dimensions must be multiples of 8."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name, plane in (("y", self.y), ("u", self.u), ("v", self.v)):
            if plane.dtype != np.uint8 or plane.ndim != 2:
                raise CodecError(f"plane {name}: expected 2-D uint8 array")
        h, w = self.y.shape
        if w % 8 or h % 8 or w == 0 or h == 0:
            raise CodecError(f"frame dimensions {w}x{h} must be non-zero multiples of 8")
        if self.u.shape != (h // 2, w // 2) or self.v.shape != (h // 2, w // 2):
            raise CodecError("chroma planes must be half resolution (4:2:0)")

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    def planes(self):
        return (self.y, self.u, self.v)

    def copy(self) -> "Frame":
        return Frame(self.y.copy(), self.u.copy(), self.v.copy())

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (np.array_equal(self.y, other.y) and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v))


def frame_size_bytes(width: int, height: int) -> int:
    return width * height * 3 // 2


def read_yuv(path, width: int, height: int, n_frames: int | None = None):
    """Read planar 8-bit 4:2:0 frames from a raw .yuv file."""
    data = Path(path).read_bytes()
    fsz = frame_size_bytes(width, height)
    total = len(data) // fsz
    if total == 0:
        raise CodecError(f"{path}: file too small for a single {width}x{height} frame")
    if n_frames is None:
        n_frames = total
    if n_frames > total:
        raise CodecError(f"{path}: requested {n_frames} frames, file holds {total}")
    frames = []
    cw, ch = width // 2, height // 2
    for i in range(n_frames):
        off = i * fsz
        yp = np.frombuffer(data, np.uint8, width * height, off).reshape(height, width)
        off += width * height
        up = np.frombuffer(data, np.uint8, cw * ch, off).reshape(ch, cw)
        off += cw * ch
        vp = np.frombuffer(data, np.uint8, cw * ch, off).reshape(ch, cw)
        frames.append(Frame(yp.copy(), up.copy(), vp.copy()))
    return frames


def write_yuv(path, frames) -> None:
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(f.y.tobytes())
            fh.write(f.u.tobytes())
            fh.write(f.v.tobytes())


def _read_pnm_header(data: bytes, magic: bytes):
    if not data.startswith(magic):
        raise CodecError(f"not a {magic.decode()} file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos] in b" \t\r\n":
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in b" \t\r\n":
            pos += 1
        fields.append(int(data[start:pos]))
    return fields[0], fields[1], fields[2], pos + 1


def _crop_to_multiple_of_8(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape[:2]
    return arr[: h - h % 8, : w - w % 8]


def read_image(path) -> Frame:
    """Load a PGM/PPM image as a 4:2:0 frame (PPM via BT.601, 2x2 box subsample)."""
    data = Path(path).read_bytes()
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        w, h, maxval, off = _read_pnm_header(data, b"P5")
        if maxval != 255:
            raise CodecError(f"{path}: only 8-bit PGM supported")
        gray = np.frombuffer(data, np.uint8, w * h, off).reshape(h, w)
        gray = _crop_to_multiple_of_8(gray).copy()
        ch, cw = gray.shape[0] // 2, gray.shape[1] // 2
        return Frame(gray, np.full((ch, cw), 128, np.uint8), np.full((ch, cw), 128, np.uint8))
    if suffix == ".ppm":
        w, h, maxval, off = _read_pnm_header(data, b"P6")
        if maxval != 255:
            raise CodecError(f"{path}: only 8-bit PPM supported")
        rgb = np.frombuffer(data, np.uint8, w * h * 3, off).reshape(h, w, 3)
        rgb = _crop_to_multiple_of_8(rgb).astype(np.float64)
        r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
        yp = 0.299 * r + 0.587 * g + 0.114 * b
        up = 128.0 + (b - yp) * 0.564
        vp = 128.0 + (r - yp) * 0.713
        yp = np.clip(np.rint(yp), 0, 255).astype(np.uint8)
        sub = lambda p: np.clip(np.rint(
            (p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2]) / 4.0
        ), 0, 255).astype(np.uint8)
        return Frame(yp, sub(up), sub(vp))
    raise CodecError(f"{path}: unsupported image format (use .yuv, .pgm or .ppm)")


def load_input(path, width=None, height=None, n_frames=None):
    """Load encoder input: .yuv needs dimensions, .pgm/.ppm are self-describing."""
    suffix = Path(path).suffix.lower()
    if suffix == ".yuv":
        if not width or not height:
            raise CodecError("raw .yuv input requires --width and --height")
        return read_yuv(path, width, height, n_frames)
    return [read_image(path)]
