"""Desk-scale stand-in detector.

Two synthetic image classes (``smooth``: low-pass filtered noise, playing the
real class; ``artifact``: 2x nearest-neighbour upsampled noise, playing the GAN
class) and a logistic-regression classifier on pooled co-occurrence features.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .features import PairGeometry, cooc_multi, parse_geometry, scale_cooc

SMOOTH = "smooth"
ARTIFACT = "artifact"
LABELS = {SMOOTH: 0, ARTIFACT: 1}


@dataclass
class SynthSpec:
    kind: str = SMOOTH
    size: int = 64
    seed: int = 0
    channels: int = 3
    amplitude: float = 15.0
    blur: float = 1.5
    post_noise: float = 0.0  # std of noise added after upsampling (artifact class)

    def __post_init__(self):
        if self.kind not in LABELS:
            raise ValueError(f"unknown class {self.kind!r}")
        if self.size < 4 or self.size % 2:
            raise ValueError("size must be even and >= 4")


def _field(rng, h, w, sigma):
    f = gaussian_filter(rng.normal(size=(h, w)), sigma, mode="wrap")
    return f / f.std()


def synth_image(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """One uint8 (size, size, channels) image of the requested class."""
    mean = rng.uniform(70.0, 180.0)
    offsets = rng.uniform(-15.0, 15.0, spec.channels)
    if spec.kind == SMOOTH:
        n, sigma = spec.size, spec.blur
    else:
        n, sigma = spec.size // 2, spec.blur / 2
    # correlated channels: shared luminance plus a per-channel component
    shared = _field(rng, n, n, sigma)
    chans = [0.8 * shared + 0.6 * _field(rng, n, n, sigma) for _ in range(spec.channels)]
    img = np.stack(chans, axis=-1) * spec.amplitude + mean + offsets
    if spec.kind == ARTIFACT:
        img = img.repeat(2, axis=0).repeat(2, axis=1)
        img = np.rint(img)
        if spec.post_noise > 0:
            img = img + rng.normal(0.0, spec.post_noise, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_dataset(spec: SynthSpec, n_per_class: int):
    """Balanced, interleaved dataset; returns ``(images, labels)`` with 1 = artifact."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, spec.size]))
    images, labels = [], []
    for _ in range(n_per_class):
        for kind in (SMOOTH, ARTIFACT):
            s = SynthSpec(**{**asdict(spec), "kind": kind})
            images.append(synth_image(s, rng))
            labels.append(LABELS[kind])
    return np.stack(images), np.array(labels)


def generate_class(spec: SynthSpec, n: int) -> np.ndarray:
    """``n`` images of ``spec.kind`` only."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, spec.size, LABELS[spec.kind]]))
    return np.stack([synth_image(spec, rng) for _ in range(n)])


def pooled_features(image, geometries=(PairGeometry(),), pool: int = 8, scale="max"):
    """Scaled co-occurrence matrices, average-pooled ``pool`` x ``pool`` and flattened."""
    stack = scale_cooc(cooc_multi(image, geometries), scale).data
    n, b, _ = stack.shape
    if b % pool:
        raise ValueError(f"pool {pool} must divide the bin count {b}")
    m = b // pool
    return stack.reshape(n, m, pool, m, pool).mean(axis=(2, 4)).ravel()


def feature_matrix(images, geometries=(PairGeometry(),), pool=8, scale="max"):
    return np.stack([pooled_features(im, geometries, pool, scale) for im in images])


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    pool: int = 8
    geometries: list = field(default_factory=lambda: ["horizontal"])
    feature_scale: str = "max"
    seed: int = 0

    def decision(self, features) -> np.ndarray:
        z = (np.atleast_2d(features) - self.mean) / self.scale
        return z @ self.weights + self.bias

    def predict(self, features) -> np.ndarray:
        return (self.decision(features) > 0).astype(np.int64)

    def features(self, images) -> np.ndarray:
        geoms = [parse_geometry(g) for g in self.geometries]
        return feature_matrix(images, geoms, self.pool, self.feature_scale)

    def to_json(self) -> str:
        d = asdict(self)
        for k in ("weights", "mean", "scale"):
            d[k] = np.asarray(d[k]).tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        d = json.loads(text)
        for k in ("weights", "mean", "scale"):
            d[k] = np.asarray(d[k], dtype=np.float64)
        return cls(**d)


def train_linear(features, labels, iters: int = 500, lr: float = 0.5, l2: float = 1e-3,
                 seed: int = 0, **meta) -> LinearModel:
    """Full-batch gradient descent on the L2-regularised logistic loss."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    counts = np.bincount(y.astype(np.int64), minlength=2)
    if len(counts) != 2 or counts.min() < 2:
        raise ValueError("need at least two samples of each class")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    Z = (X - mean) / scale
    n, d = Z.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(Z @ w + b)))
        err = p - y
        w -= lr * (Z.T @ err / n + l2 * w)
        b -= lr * err.mean()
    return LinearModel(w, float(b), mean, scale, seed=seed, **meta)


def evaluate(model: LinearModel, features, labels) -> float:
    """Accuracy of ``model`` on a labelled feature matrix."""
    return float(np.mean(model.predict(features) == np.asarray(labels)))


def detection_rate(model: LinearModel, images) -> float:
    """Fraction of images the model labels as artifact (GAN) class."""
    return float(np.mean(model.predict(model.features(images)) == LABELS[ARTIFACT]))
