"""Defender-side features: discrete co-occurrence, DFT and direct scaling.

Images are plain numpy arrays of shape (H, W, C). Integer images hold values in
0..255 (any integer dtype); real images are floating point in [0, 255].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])

HORIZONTAL = "horizontal"
DIAGONAL = "diagonal"
CROSSBAND = "crossband"

GEOMETRY_TAGS = {HORIZONTAL: 0, DIAGONAL: 1, CROSSBAND: 2}


@dataclass(frozen=True)
class PairGeometry:
    """Which pixel pairs are counted.

    ``horizontal`` pairs (k, l) with (k, l+1) and ``diagonal`` pairs (k, l)
    with (k+1, l+1), both within each channel. ``crossband`` pairs co-located
    pixels of channels ``c1`` and ``c2``.
    """

    kind: str = HORIZONTAL
    c1: int = 0
    c2: int = 1

    def __post_init__(self):
        if self.kind not in GEOMETRY_TAGS:
            raise ValueError(f"unknown pair geometry {self.kind!r}")
        if self.kind == CROSSBAND and self.c1 == self.c2:
            raise ValueError("cross-band channels must differ")

    def channel_pairs(self, channels: int) -> list[tuple[int, int]]:
        if self.kind == CROSSBAND:
            if max(self.c1, self.c2) >= channels:
                raise ValueError(
                    f"cross-band pair ({self.c1}, {self.c2}) needs more than {channels} channels"
                )
            return [(self.c1, self.c2)]
        return [(c, c) for c in range(channels)]

    def pair_count(self, height: int, width: int) -> int:
        if self.kind == HORIZONTAL:
            return height * (width - 1)
        if self.kind == DIAGONAL:
            return (height - 1) * (width - 1)
        return height * width

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(left, right)`` arrays of shape (n_pairs_stacks, n_pairs)."""
        h, w, c = x.shape
        if self.kind == HORIZONTAL:
            if w < 2:
                raise ValueError("horizontal pairs need width >= 2")
            a, b = x[:, :-1, :], x[:, 1:, :]
        elif self.kind == DIAGONAL:
            if w < 2 or h < 2:
                raise ValueError("diagonal pairs need height and width >= 2")
            a, b = x[:-1, :-1, :], x[1:, 1:, :]
        else:
            self.channel_pairs(c)
            return (x[:, :, self.c1].reshape(1, -1), x[:, :, self.c2].reshape(1, -1))
        return (np.moveaxis(a, 2, 0).reshape(c, -1), np.moveaxis(b, 2, 0).reshape(c, -1))

    def scatter(self, g_left: np.ndarray, g_right: np.ndarray, shape) -> np.ndarray:
        """Inverse of :meth:`split` for gradients: accumulate onto an image."""
        h, w, c = shape
        out = np.zeros(shape)
        if self.kind == CROSSBAND:
            out[:, :, self.c1] += g_left.reshape(h, w)
            out[:, :, self.c2] += g_right.reshape(h, w)
            return out
        if self.kind == HORIZONTAL:
            sub = (h, w - 1)
            out[:, :-1, :] += np.moveaxis(g_left.reshape(c, *sub), 0, 2)
            out[:, 1:, :] += np.moveaxis(g_right.reshape(c, *sub), 0, 2)
        else:
            sub = (h - 1, w - 1)
            out[:-1, :-1, :] += np.moveaxis(g_left.reshape(c, *sub), 0, 2)
            out[1:, 1:, :] += np.moveaxis(g_right.reshape(c, *sub), 0, 2)
        return out

    def label(self) -> str:
        if self.kind == CROSSBAND:
            return f"{CROSSBAND}({self.c1},{self.c2})"
        return self.kind


def parse_geometry(text: str) -> PairGeometry:
    """Parse ``horizontal``, ``diagonal`` or ``crossband(0,1)`` / ``crossband:0:1``."""
    text = text.strip().lower()
    if text in (HORIZONTAL, DIAGONAL):
        return PairGeometry(text)
    if text.startswith(CROSSBAND):
        rest = text[len(CROSSBAND):].strip("():")
        c1, c2 = (int(v) for v in rest.replace(":", ",").split(","))
        return PairGeometry(CROSSBAND, c1, c2)
    raise ValueError(f"cannot parse pair geometry {text!r}")


# the six matrices of the cross-band detector: three channel pairs plus
# per-channel diagonal pairs
CROSSBAND_SIX = (
    PairGeometry(CROSSBAND, 0, 1),
    PairGeometry(CROSSBAND, 0, 2),
    PairGeometry(CROSSBAND, 1, 2),
    PairGeometry(DIAGONAL),
)


@dataclass
class CoocStack:
    """Stack of 2D co-occurrence histograms, one per (geometry, channel pair)."""

    pairs: list = field(default_factory=list)  # [(PairGeometry, (c1, c2)), ...]
    data: np.ndarray = None  # (len(pairs), bins, bins)

    @property
    def bins(self) -> int:
        return self.data.shape[-1]

    def __len__(self):
        return len(self.pairs)


def as_image(x) -> np.ndarray:
    """Coerce to an (H, W, C) array and check basic invariants."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3:
        raise ValueError(f"expected (H, W) or (H, W, C) array, got shape {x.shape}")
    if x.shape[2] < 1:
        raise ValueError("image has no channels")
    return x


def is_integer_image(x: np.ndarray) -> bool:
    return np.issubdtype(x.dtype, np.integer) or x.dtype == np.bool_


def cooc_discrete(image, geometry: PairGeometry = PairGeometry(), bins: int = 256) -> CoocStack:
    """Count co-occurring value pairs of an integer image."""
    x = as_image(image)
    if not is_integer_image(x):
        raise TypeError("cooc_discrete needs an integer image; use soft_cooc for real values")
    if x.size and (x.min() < 0 or x.max() >= bins):
        raise ValueError(f"pixel values must lie in 0..{bins - 1}")
    left, right = geometry.split(x.astype(np.int64))
    n = left.shape[0]
    idx = (np.arange(n)[:, None] * bins + left) * bins + right
    counts = np.bincount(idx.ravel(), minlength=n * bins * bins).astype(np.float64)
    labels = [(geometry, cp) for cp in geometry.channel_pairs(x.shape[2])]
    return CoocStack(labels, counts.reshape(n, bins, bins))


def cooc_multi(image, geometries, bins: int = 256) -> CoocStack:
    """Concatenate discrete stacks over several geometries."""
    stacks = [cooc_discrete(image, g, bins) for g in geometries]
    return CoocStack(
        [p for s in stacks for p in s.pairs], np.concatenate([s.data for s in stacks], axis=0)
    )


def scale_cooc(stack: CoocStack, mode: str = "max") -> CoocStack:
    """Scale each matrix into [0, 1] by its maximum (``max``) or its sum (``mass``)."""
    if mode not in ("max", "mass"):
        raise ValueError(f"unknown scale mode {mode!r}")
    data = np.asarray(stack.data, dtype=np.float64)
    if mode == "max":
        denom = data.max(axis=(1, 2), keepdims=True)
    else:
        denom = data.sum(axis=(1, 2), keepdims=True)
    out = np.divide(data, denom, out=np.zeros_like(data), where=denom > 0)
    return CoocStack(list(stack.pairs), out)


def dft_feature(image) -> np.ndarray:
    """Centered unitary DFT magnitude, log-compressed and scaled to [-1, 1].

    Returns an array of shape (C, H, W). The affine scaling uses the min and
    max of the whole tensor; a constant tensor maps to zeros.
    """
    x = as_image(image).astype(np.float64)
    spec = np.fft.fftshift(np.fft.fft2(x, axes=(0, 1), norm="ortho"), axes=(0, 1))
    logmag = np.log(np.abs(spec) + 1e-6)
    logmag = np.moveaxis(logmag, 2, 0)
    lo, hi = logmag.min(), logmag.max()
    if hi - lo <= 1e-12 * max(1.0, abs(lo)):
        return np.zeros_like(logmag)
    return 2.0 * (logmag - lo) / (hi - lo) - 1.0


def direct_feature(image) -> np.ndarray:
    """ImageNet mean/std normalisation of a 3-channel 0..255 image, as (3, H, W)."""
    x = as_image(image).astype(np.float64)
    if x.shape[2] != 3:
        raise ValueError(f"direct feature needs 3 channels, got {x.shape[2]}")
    out = (x - 255.0 * IMAGENET_MEAN) / (255.0 * IMAGENET_STD)
    return np.moveaxis(out, 2, 0)
