"""Closed-form frequency-domain attack.

Solves ``min_X ||f * X - f * X_R||^2 + lam^2 ||X - X_G||^2`` per channel, where
``f`` is a 3x3 high-pass residual filter and ``*`` is circular convolution.
In the Fourier domain this is a pointwise weighted average of the target and
source spectra.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .features import as_image

# centred unitary 3x3 DFT of the residual filter
FILTER_DFT_CENTRED = np.array([[3.0, 0.0, 3.0], [0.0, 0.0, 0.0], [3.0, 0.0, 3.0]]) / 4.0

STANDARD_LAMBDAS = (0.003, 0.01, 0.03)


def residual_kernel() -> np.ndarray:
    """Spatial 3x3 filter (FFT index order, origin at [0, 0]) from its centred DFT."""
    k = np.fft.ifft2(np.fft.ifftshift(FILTER_DFT_CENTRED), norm="ortho")
    return k.real


def padded_kernel(h: int, w: int) -> np.ndarray:
    """Zero-pad the 3x3 filter onto an h x w torus, keeping the origin at [0, 0]."""
    if h < 3 or w < 3:
        raise ValueError("frequency grid must be at least 3x3")
    k = residual_kernel()
    out = np.zeros((h, w))
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            out[di % h, dj % w] += k[di % 3, dj % 3]
    return out


@lru_cache(maxsize=32)
def _response(h: int, w: int) -> np.ndarray:
    r = np.abs(np.fft.fft2(padded_kernel(h, w))) ** 2
    r.setflags(write=False)
    return r


@dataclass(frozen=True)
class FreqWeights:
    height: int
    width: int
    response: np.ndarray  # |F(f)|^2 in FFT (uncentred) order

    def centred(self) -> np.ndarray:
        return np.fft.fftshift(self.response)


def kirchner_response(h: int, w: int) -> FreqWeights:
    """Squared magnitude of the filter's circular-convolution transfer function."""
    return FreqWeights(h, w, _response(h, w))


@dataclass
class DftAttackConfig:
    lam: float = 0.01
    boundary: str = "circular"  # or "reflect": solve on a mirrored, doubled canvas
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.boundary not in ("circular", "reflect"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")


def _solve_channel(src: np.ndarray, tgt: np.ndarray, lam: float) -> np.ndarray:
    h, w = src.shape
    weight = _response(h, w)
    lam2 = lam * lam
    spec = (weight * np.fft.fft2(tgt) + lam2 * np.fft.fft2(src)) / (weight + lam2)
    return np.fft.ifft2(spec)


def dft_solve(source, target, lam: float, boundary: str = "circular", return_complex=False):
    """Unclamped, unrounded least-squares solution, shaped like the input (H, W, C)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    src = as_image(source).astype(np.float64)
    tgt = as_image(target).astype(np.float64)
    if src.shape != tgt.shape:
        raise ValueError(f"shape mismatch: {src.shape} vs {tgt.shape}")
    h, w, c = src.shape
    if boundary == "reflect":
        src_p = np.pad(src, ((0, h), (0, w), (0, 0)), mode="symmetric")
        tgt_p = np.pad(tgt, ((0, h), (0, w), (0, 0)), mode="symmetric")
    else:
        src_p, tgt_p = src, tgt
    out = np.stack([_solve_channel(src_p[..., i], tgt_p[..., i], lam) for i in range(c)], -1)
    out = out[:h, :w]
    return out if return_complex else out.real


def dft_attack(source, target, cfg: DftAttackConfig = None) -> np.ndarray:
    """Adversarial image: least-squares blend, clamped to [0, 255] then rounded."""
    cfg = cfg or DftAttackConfig()
    x = dft_solve(source, target, cfg.lam, cfg.boundary)
    adv = np.rint(np.clip(x, 0.0, 255.0)).astype(np.uint8)
    return adv if np.asarray(source).ndim == 3 else adv[:, :, 0]


def circular_filter(x: np.ndarray, kernel3: np.ndarray = None) -> np.ndarray:
    """Spatial circular convolution of each channel with a 3x3 filter (FFT index order)."""
    k = residual_kernel() if kernel3 is None else kernel3
    x = as_image(x).astype(np.float64)
    out = np.zeros_like(x)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            out += k[di % 3, dj % 3] * np.roll(x, (di, dj), axis=(0, 1))
    return out


def objective(x, source, target, lam: float) -> float:
    """Value of the least-squares objective, computed in the pixel domain."""
    r = circular_filter(x) - circular_filter(target)
    d = as_image(x).astype(np.float64) - as_image(source).astype(np.float64)
    return float((r**2).sum() + lam**2 * (d**2).sum())


def normal_residual(x, source, target, lam: float) -> np.ndarray:
    """Half-gradient of :func:`objective`; zero at the minimiser."""
    k = residual_kernel()
    adjoint = np.roll(k[::-1, ::-1], (1, 1), axis=(0, 1))
    r = circular_filter(x) - circular_filter(target)
    return circular_filter(r, adjoint) + lam**2 * (
        as_image(x).astype(np.float64) - as_image(source).astype(np.float64)
    )
