"""Raster images as grid-graph denoising problems.

Pixels map to vertices in screen-space order (vertex id = row * width +
col).  The 4-neighbor grid carries horizontal edges (left to right, row by
row) first, then vertical edges (top to bottom, row by row).  Intensities
stay floating point through the whole pipeline; quantization to 8 bits
happens only when a file is written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .model import RofProblem

__all__ = [
    "Image",
    "grid_graph",
    "image_to_problem",
    "scale_parameter",
    "add_gaussian_noise",
    "psnr",
    "read_pgm",
    "write_pgm",
]


@dataclass(frozen=True)
class Image:
    """Grayscale raster: row-major float pixels in [0, 255]."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        px = np.array(self.pixels, dtype=np.float64).ravel()
        if px.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} pixels, got {px.size}"
            )
        if not np.all(np.isfinite(px)):
            raise ValueError("pixels must be finite")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    def as_array2d(self):
        return self.pixels.reshape(self.height, self.width)


def grid_graph(width, height):
    """4-neighbor grid over width x height pixels.

    Vertex id is ``row * width + col``.  Horizontal edges come first in
    row-major order, then vertical edges, so M = h*(w-1) + w*(h-1).
    """
    if width <= 0 or height <= 0:
        raise ValueError("grid dimensions must be positive")
    ids = np.arange(width * height, dtype=np.int64).reshape(height, width)
    horizontal = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    vertical = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    return Graph(width * height, np.concatenate([horizontal, vertical], axis=0))


def image_to_problem(image, t):
    """Denoising instance on the image's grid graph with data u0 = pixels."""
    return RofProblem(grid_graph(image.width, image.height), image.pixels, t)


def scale_parameter(t_continuous, n):
    """Weight for the graph functional matching a continuous-domain weight
    on an n x n discretization: the product n * t_continuous."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * t_continuous


def add_gaussian_noise(image, sigma, seed):
    """Add zero-mean Gaussian noise, clamped back into [0, 255].

    The noise stream is generated from a 64-bit counter-based generator
    (Philox) keyed by ``seed`` and mapped through the Box-Muller transform,
    so the output is a pure function of (image, sigma, seed) on every
    platform.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return Image(image.width, image.height, image.pixels)
    n = image.pixels.size
    rng = np.random.Generator(np.random.Philox(seed))
    u1 = 1.0 - rng.random(n)  # in (0, 1]: keeps the log finite
    u2 = rng.random(n)
    normal = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    noisy = np.clip(image.pixels + sigma * normal, 0.0, 255.0)
    return Image(image.width, image.height, noisy)


def psnr(reference, test):
    """Peak signal-to-noise ratio in dB against a peak of 255.

    Returns ``math.inf`` for identical images.
    """
    if (reference.width, reference.height) != (test.width, test.height):
        raise ValueError(
            f"dimension mismatch: {reference.width}x{reference.height} vs "
            f"{test.width}x{test.height}"
        )
    diff = reference.pixels - test.pixels
    mse = float(np.dot(diff, diff)) / diff.size
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


class PgmError(ValueError):
    """Raised for malformed PGM files."""


def _read_header_tokens(data, count):
    """Extract ``count`` whitespace-separated tokens, honoring # comments.

    Returns the tokens and the offset one whitespace byte past the last one.
    """
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise PgmError("truncated header")
        byte = data[pos:pos + 1]
        if byte.isspace():
            pos += 1
        elif byte == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise PgmError("unterminated comment")
            pos = end + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PgmError("missing whitespace after header")
    return tokens, pos + 1


def read_pgm(path):
    """Read an 8-bit PGM image, binary (P5) or plain (P2)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P5", b"P2"):
        raise PgmError(f"not a PGM file: magic {data[:2]!r}")
    magic = data[:2]
    tokens, offset = _read_header_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(tok) for tok in tokens)
    except ValueError as exc:
        raise PgmError(f"bad header tokens {tokens!r}") from exc
    if width <= 0 or height <= 0:
        raise PgmError("non-positive dimensions")
    if not 0 < maxval <= 255:
        raise PgmError(f"unsupported maxval {maxval} (8-bit only)")
    body = data[2 + offset:]
    count = width * height
    if magic == b"P5":
        if len(body) < count:
            raise PgmError(f"raster too short: {len(body)} < {count}")
        pixels = np.frombuffer(body[:count], dtype=np.uint8).astype(np.float64)
    else:
        values = body.split()
        if len(values) < count:
            raise PgmError(f"raster too short: {len(values)} < {count}")
        try:
            pixels = np.array([int(v) for v in values[:count]], dtype=np.float64)
        except ValueError as exc:
            raise PgmError("non-numeric sample in plain raster") from exc
        if pixels.size and (pixels.min() < 0 or pixels.max() > maxval):
            raise PgmError("sample out of range")
    return Image(width, height, pixels)


def write_pgm(image, path):
    """Write binary (P5) 8-bit PGM; pixels are rounded and clamped here."""
    quantized = np.rint(np.clip(image.pixels, 0.0, 255.0)).astype(np.uint8)
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(quantized.tobytes())
