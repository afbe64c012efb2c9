"""Gray-scale image compression, reconstruction, and retrieval pipeline.

Images are small gray-scale rasters with intensities in [0, 1], stored on
disk as PGM (ASCII ``P2`` or binary ``P5``, maxval 255).  A fitted factor
pair compresses each image row of X into its R mixture weights; those
weights reconstruct approximate images and support nearest-neighbor lookup
in R dimensions instead of pixel space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .factors import FactorPair
from .linalg import pseudoinverse, simplex_project

__all__ = [
    "GrayImage",
    "downsample_2x2",
    "read_pgm",
    "reconstruct",
    "reconstruction_error",
    "retrieve",
    "write_pgm",
]

_PGM_MAXVAL = 255
_WEIGHT_SUM_TOL = 1e-6


@dataclass(frozen=True)
class GrayImage:
    """Rectangular gray-scale raster with intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("image must be a non-empty 2-dimensional array")
        if not np.all(np.isfinite(p)):
            raise ValueError("image intensities must be finite")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def flatten(self) -> np.ndarray:
        """Row-major pixel vector of length height * width."""
        return self.pixels.reshape(-1).copy()


def downsample_2x2(img: GrayImage) -> GrayImage:
    """Average 2x2 pixel blocks of a 19x19 image, yielding 9x9.

    The 19th row and column cannot complete a block and are discarded.
    """
    if img.pixels.shape != (19, 19):
        raise ValueError(f"expected a 19x19 image, got {img.pixels.shape}")
    core = img.pixels[:18, :18]
    return GrayImage(pixels=core.reshape(9, 2, 9, 2).mean(axis=(1, 3)))


def _read_tokens_ascii(body: bytes):
    # PGM allows '#' comments anywhere between tokens.
    for line in body.split(b"\n"):
        line = line.split(b"#", 1)[0]
        for tok in line.split():
            yield tok


def read_pgm(path) -> GrayImage:
    """Read a PGM file (ASCII P2 or binary P5, maxval up to 255)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise ValueError("not a PGM file (expected P2 or P5 magic)")
    magic = data[:2].decode("ascii")
    # Header: magic, width, height, maxval as whitespace/comment separated
    # tokens; for P5 exactly one whitespace byte follows maxval.
    header = []
    pos = 2
    token = b""
    while len(header) < 3 and pos < len(data):
        ch = data[pos:pos + 1]
        pos += 1
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        if ch.isspace():
            if token:
                header.append(token)
                token = b""
            continue
        token += ch
    if len(header) < 3:
        raise ValueError("truncated PGM header")
    width, height, maxval = (int(t) for t in header)
    if width <= 0 or height <= 0:
        raise ValueError("PGM dimensions must be positive")
    if not (0 < maxval <= _PGM_MAXVAL):
        raise ValueError(f"PGM maxval must be in 1..{_PGM_MAXVAL}, got {maxval}")
    count = width * height
    if magic == "P5":
        raw = data[pos:pos + count]
        if len(raw) < count:
            raise ValueError("truncated PGM pixel data")
        values = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
    else:
        toks = list(_read_tokens_ascii(data[pos - 1:]))
        if len(toks) < count:
            raise ValueError("truncated PGM pixel data")
        values = np.array([int(t) for t in toks[:count]], dtype=np.float64)
    if values.max(initial=0.0) > maxval:
        raise ValueError("PGM pixel value exceeds declared maxval")
    return GrayImage(pixels=(values / maxval).reshape(height, width))


def write_pgm(img: GrayImage, path, *, binary: bool = False) -> None:
    """Write a PGM file (binary P5 when requested, else ASCII P2).

    Intensities are scaled by 255 and rounded to the nearest integer.
    """
    values = np.rint(img.pixels * _PGM_MAXVAL).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n{_PGM_MAXVAL}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(values.tobytes())
        else:
            for row in values:
                fh.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))


def _square_side(n_pixels: int) -> int:
    side = math.isqrt(n_pixels)
    if side * side != n_pixels:
        raise ValueError(f"pixel count {n_pixels} is not a perfect square")
    return side


def reconstruct(weights, h) -> GrayImage:
    """Mix the base images by simplex weights into a square image.

    ``weights`` must lie on the probability simplex within 1e-6 and every
    base-image intensity in ``h`` must lie in [0, 1]; the mixture is clamped
    to [0, 1] to absorb rounding.
    """
    wv = np.asarray(weights, dtype=np.float64)
    hm = np.asarray(h, dtype=np.float64)
    if wv.ndim != 1:
        raise ValueError("weights must be a vector")
    if hm.ndim != 2 or hm.shape[0] != wv.size:
        raise ValueError(
            f"base image matrix shape {hm.shape} does not match {wv.size} weights"
        )
    if not np.all(np.isfinite(wv)) or not np.all(np.isfinite(hm)):
        raise ValueError("weights and base images must be finite")
    if wv.min() < -_WEIGHT_SUM_TOL or abs(wv.sum() - 1.0) > _WEIGHT_SUM_TOL:
        raise ValueError("weights must lie on the probability simplex within 1e-6")
    if hm.min() < 0.0 or hm.max() > 1.0:
        raise ValueError("base image intensities must lie in [0, 1]")
    side = _square_side(hm.shape[1])
    mix = np.clip(wv @ hm, 0.0, 1.0)
    return GrayImage(pixels=mix.reshape(side, side))


def retrieve(query: GrayImage, model: FactorPair) -> tuple:
    """Nearest stored image by comparing mixture weights in R-space.

    The query is compressed to its simplex-projected weight vector
    ``simplex_project(q @ pinv(H))`` and compared against the rows of the
    stored W by Euclidean distance.  Returns ``(index, distance)`` with ties
    resolved toward the lowest index.
    """
    q = query.flatten()
    if q.size != model.h.shape[1]:
        raise ValueError(
            f"query has {q.size} pixels but the model stores {model.h.shape[1]}"
        )
    w_q = simplex_project(q @ pseudoinverse(model.h))
    dists = np.sqrt(np.sum((model.w - w_q) ** 2, axis=1))
    idx = int(np.argmin(dists))
    return idx, float(dists[idx])


def reconstruction_error(x, factors: FactorPair) -> float:
    """Mean squared per-cell difference between X and W.H."""
    xm = np.asarray(x, dtype=np.float64)
    if xm.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if xm.shape != (factors.w.shape[0], factors.h.shape[1]):
        raise ValueError(
            f"X shape {xm.shape} does not match factors "
            f"({factors.w.shape[0]}, {factors.h.shape[1]})"
        )
    diff = xm - factors.w @ factors.h
    return float(np.mean(diff * diff))
