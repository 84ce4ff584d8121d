"""8-bit grayscale images: validation, PGM (P5) I/O, synthetic test images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ParseError, ValidationError


@dataclass(frozen=True)
class GrayImage:
    """An 8-bit grayscale image whose dimensions are multiples of 8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValidationError(f"pixels must be 2-D, got shape {px.shape}")
        if px.shape[0] % 8 or px.shape[1] % 8:
            raise ValidationError(f"dimensions must be multiples of 8, got {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValidationError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.all(self.pixels == other.pixels)
        )


def read_pgm(path) -> GrayImage:
    """Read a binary (P5) 8-bit PGM file."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    # Header: magic, width, height, maxval; '#' starts a comment to end of line.
    while len(fields) < 4:
        if pos >= len(data):
            raise ParseError("truncated PGM header", path=path)
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise ParseError("unterminated comment in PGM header", path=path)
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            fields.append(data[pos:end])
            pos = end
    if fields[0] != b"P5":
        raise ParseError(f"expected P5 magic, got {fields[0]!r}", path=path)
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ParseError("non-integer field in PGM header", path=path) from None
    if maxval != 255:
        raise ParseError(f"only 8-bit PGM supported (maxval 255), got {maxval}", path=path)
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ParseError("PGM raster shorter than header promises", path=path)
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels)


def write_pgm(image: GrayImage, path) -> None:
    """Write a binary (P5) 8-bit PGM file."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(image.pixels.tobytes())


def synthetic_image(height: int = 64, width: int = 64, seed: int | None = None,
                    rng: np.random.Generator | None = None) -> GrayImage:
    """A textured synthetic test image.

    Smoothed noise plus a low-frequency ramp, scaled to stay safely inside
    [0, 255] so block-DCT round trips are not perturbed by clipping.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 1.0, size=(height, width))
    texture = ndimage.uniform_filter(noise, size=3, mode="nearest")
    texture /= max(texture.std(), 1e-12)
    yy, xx = np.mgrid[0:height, 0:width]
    ramp = np.sin(2 * np.pi * xx / width) * np.cos(2 * np.pi * yy / height)
    field = 128.0 + 38.0 * texture + 18.0 * ramp
    return GrayImage(np.clip(np.rint(field), 25, 230).astype(np.uint8))
