"""Image, saliency and label-map I/O for the PNM family (PGM/PPM).

Color images are converted to CIELAB (sRGB, D65 white) on load; grayscale
images keep a scalar intensity in [0, 1].
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "PNMError",
    "PNMHeaderError",
    "UnsupportedMaxvalError",
    "DimensionMismatchError",
    "Image",
    "SaliencyMap",
    "LabelMap",
    "read_pnm",
    "write_pnm",
    "srgb_to_lab",
    "image_from_array",
    "load_image",
    "save_image",
    "load_saliency",
    "uniform_saliency",
    "load_label_map",
    "save_label_map",
    "render_overlay",
]

MAX_MAXVAL = 65535

# D65 reference white, 2 degree observer
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)


class PNMError(ValueError):
    """Base class for problems with the content of a PNM file."""


class PNMHeaderError(PNMError):
    """Magic number, dimensions or maxval could not be parsed."""


class UnsupportedMaxvalError(PNMError):
    """maxval outside 1..65535."""


class DimensionMismatchError(ValueError):
    """Two rasters that must share a lattice do not."""


@dataclass(frozen=True, eq=False)
class Image:
    """A 2D pixel lattice with an m-dimensional feature vector per pixel.

    ``features`` has shape (height, width, m) and holds the working feature
    space (intensity in [0, 1] for m=1, CIELAB for m=3). ``pixels`` keeps the
    display samples scaled to [0, 1] with the same shape, so overlays can be
    written back without inverting the Lab transform.
    """

    features: np.ndarray
    pixels: np.ndarray
    source_depth: int = 8

    def __post_init__(self):
        f = self.features
        if f.ndim != 3 or f.shape[2] not in (1, 3):
            raise ValueError(f"features must be (H, W, 1|3), got {f.shape}")
        if f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if self.pixels.shape != f.shape:
            raise ValueError("pixels and features must share a shape")
        if not np.all(np.isfinite(f)):
            raise ValueError("features must be finite")
        f.setflags(write=False)
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.features.shape[1]

    @property
    def height(self) -> int:
        return self.features.shape[0]

    @property
    def channels(self) -> int:
        return self.features.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.features.shape[:2]

    def flat_features(self) -> np.ndarray:
        """Features as an (H*W, m) float64 array in raster order."""
        return self.features.reshape(-1, self.channels)


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """Per-pixel object membership in [0, 1], shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError("saliency must be 2D")
        if v.size and (v.min() < 0.0 or v.max() > 1.0 or not np.all(np.isfinite(v))):
            raise ValueError("saliency values must lie in [0, 1]")
        v.setflags(write=False)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Superpixel ids 1..K on the pixel lattice, shape (height, width)."""

    labels: np.ndarray
    n_labels: int = field(init=False)

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2 or lab.size == 0:
            raise ValueError("label map must be a non-empty 2D array")
        if not np.issubdtype(lab.dtype, np.integer):
            raise ValueError("labels must be integers")
        lab = lab.astype(np.int64, copy=True)
        k = int(lab.max())
        if lab.min() < 1 or np.unique(lab).size != k:
            raise ValueError("labels must form the contiguous range 1..K")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "n_labels", k)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.labels, other.labels))

    __hash__ = None


# ---------------------------------------------------------------------------
# Raw PNM
# ---------------------------------------------------------------------------

_MAGIC = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    pos = 0
    tokens = []
    for _ in range(count):
        # comments may appear between any header tokens
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PNMHeaderError("truncated PNM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_pnm(path: str | os.PathLike) -> tuple[np.ndarray, int]:
    """Read a P2/P3/P5/P6 file.

    Returns
    -------
    samples : ndarray of int64, shape (H, W) for PGM or (H, W, 3) for PPM
    maxval : int
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    data = path.read_bytes()

    magic = data[:2]
    if magic not in _MAGIC:
        raise PNMHeaderError(f"{path}: unsupported magic number {magic!r}")
    channels, binary = _MAGIC[magic]

    try:
        tokens, pos = _header_tokens(data[2:], 3)
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise PNMHeaderError(f"{path}: malformed header ({exc})") from None
    pos += 2
    if width < 1 or height < 1:
        raise PNMHeaderError(f"{path}: invalid dimensions {width}x{height}")
    if not 1 <= maxval <= MAX_MAXVAL:
        raise UnsupportedMaxvalError(f"{path}: maxval {maxval} outside 1..{MAX_MAXVAL}")

    n = width * height * channels
    if binary:
        # exactly one whitespace byte separates maxval from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos : pos + n * dtype.itemsize]
        if len(raw) != n * dtype.itemsize:
            raise PNMError(f"{path}: raster truncated")
        samples = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < n:
            raise PNMError(f"{path}: raster truncated")
        try:
            samples = np.array([int(t) for t in body[:n]], dtype=np.int64)
        except ValueError:
            raise PNMError(f"{path}: non-integer sample") from None

    if samples.size and samples.max() > maxval:
        raise PNMError(f"{path}: sample exceeds maxval {maxval}")
    shape = (height, width) if channels == 1 else (height, width, 3)
    return samples.reshape(shape), maxval


def write_pnm(
    path: str | os.PathLike, samples: np.ndarray, maxval: int, binary: bool = True
) -> None:
    """Write integer samples as PGM (2D array) or PPM (H, W, 3 array)."""
    samples = np.asarray(samples)
    if not 1 <= maxval <= MAX_MAXVAL:
        raise UnsupportedMaxvalError(f"maxval {maxval} outside 1..{MAX_MAXVAL}")
    if samples.size and (samples.min() < 0 or samples.max() > maxval):
        raise ValueError("samples must lie in 0..maxval")
    if samples.ndim == 2:
        magic = "P5" if binary else "P2"
    elif samples.ndim == 3 and samples.shape[2] == 3:
        magic = "P6" if binary else "P3"
    else:
        raise ValueError(f"cannot write array of shape {samples.shape} as PNM")
    height, width = samples.shape[:2]
    header = f"{magic}\n{width} {height}\n{maxval}\n".encode("ascii")

    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        body = samples.astype(dtype).tobytes()
    else:
        per_row = width * (3 if samples.ndim == 3 else 1)
        rows = samples.reshape(height, per_row)
        body = ("\n".join(" ".join(map(str, r)) for r in rows.tolist()) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


# ---------------------------------------------------------------------------
# Color
# ---------------------------------------------------------------------------


def srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert sRGB in [0, 1] (last axis of size 3) to CIELAB under D65.

    L is in [0, 100]; a and b are not clamped.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _SRGB_TO_XYZ.T / _WHITE_D65
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def image_from_array(pixels: np.ndarray, source_depth: int = 8) -> Image:
    """Build an Image from display samples already scaled to [0, 1].

    A 2D array (or trailing axis of 1) is grayscale; a trailing axis of 3 is
    sRGB and is converted to Lab.
    """
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim == 2:
        px = px[:, :, None]
    if px.ndim != 3 or px.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W), (H, W, 1) or (H, W, 3), got {px.shape}")
    px = px.copy()
    feats = px.copy() if px.shape[2] == 1 else srgb_to_lab(px)
    return Image(features=feats, pixels=px, source_depth=source_depth)


def load_image(path: str | os.PathLike) -> Image:
    """Load a PGM/PPM file as an :class:`Image` in the working feature space."""
    samples, maxval = read_pnm(path)
    depth = int(maxval).bit_length()
    return image_from_array(samples.astype(np.float64) / maxval, source_depth=depth)


def save_image(image: Image, path: str | os.PathLike, maxval: int = 255) -> None:
    """Write the display samples of ``image`` (PGM if m=1, PPM if m=3)."""
    px = np.rint(np.clip(image.pixels, 0.0, 1.0) * maxval).astype(np.int64)
    if px.shape[2] == 1:
        px = px[:, :, 0]
    write_pnm(path, px, maxval)


# ---------------------------------------------------------------------------
# Saliency and labels
# ---------------------------------------------------------------------------


def load_saliency(path: str | os.PathLike, dims: Sequence[int]) -> SaliencyMap:
    """Load a PGM saliency map and rescale each sample by the file's maxval.

    ``dims`` is (height, width) of the image the map belongs to.
    """
    samples, maxval = read_pnm(path)
    if samples.ndim != 2:
        raise PNMError(f"{path}: saliency map must be a PGM")
    if tuple(samples.shape) != tuple(dims):
        raise DimensionMismatchError(
            f"{path}: saliency is {samples.shape[1]}x{samples.shape[0]}, "
            f"image is {dims[1]}x{dims[0]}"
        )
    return SaliencyMap(samples.astype(np.float64) / maxval)


def uniform_saliency(dims: Sequence[int]) -> SaliencyMap:
    """All-ones saliency, used when no object prior is available."""
    return SaliencyMap(np.ones(tuple(dims), dtype=np.float64))


def load_label_map(path: str | os.PathLike) -> LabelMap:
    samples, _ = read_pnm(path)
    if samples.ndim != 2:
        raise PNMError(f"{path}: label map must be a PGM")
    return LabelMap(samples)


def save_label_map(label_map: LabelMap, path: str | os.PathLike, binary: bool = True) -> None:
    """Write labels as PGM with maxval equal to the largest label."""
    if label_map.n_labels > MAX_MAXVAL:
        raise UnsupportedMaxvalError(
            f"{label_map.n_labels} labels do not fit a PGM (max {MAX_MAXVAL})"
        )
    write_pnm(path, label_map.labels, label_map.n_labels, binary=binary)


def border_mask(labels: np.ndarray) -> np.ndarray:
    """True where some 8-neighbor carries a different label."""
    labels = np.asarray(labels)
    h, w = labels.shape
    mask = np.zeros((h, w), dtype=bool)
    for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
        ys = slice(0, h - dy)
        yd = slice(dy, h)
        xs = slice(max(0, -dx), w - max(0, dx))
        xd = slice(max(0, dx), w - max(0, -dx))
        diff = labels[ys, xs] != labels[yd, xd]
        mask[ys, xs] |= diff
        mask[yd, xd] |= diff
    return mask


def render_overlay(
    image: Image, label_map: LabelMap, color: Sequence[float] = (0.0, 1.0, 1.0)
) -> Image:
    """Paint superpixel borders of ``label_map`` over ``image``.

    ``color`` is an sRGB triple in [0, 1]; the default is cyan. Grayscale
    inputs are replicated to three channels first.
    """
    if image.shape != label_map.shape:
        raise DimensionMismatchError("image and label map dimensions differ")
    px = np.array(image.pixels, dtype=np.float64)
    if px.shape[2] == 1:
        px = np.repeat(px, 3, axis=2)
    px[border_mask(label_map.labels)] = np.asarray(color, dtype=np.float64)
    return image_from_array(px, source_depth=image.source_depth)
