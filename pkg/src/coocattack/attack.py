"""Gray-box co-occurrence attack: noisy momentum descent on the pyramid loss."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .features import PairGeometry, as_image, cooc_multi, parse_geometry, scale_cooc
from .kernels import get_kernel
from .softhist import PyramidSpec, pyramid_loss, pyramid_targets

log = logging.getLogger(__name__)

DEFAULT_EPOCHS = ((200, 0.01), (50, 0.01), (50, 0.0))


class AttackError(RuntimeError):
    """The optimisation produced a non-finite loss."""


@dataclass
class AttackConfig:
    lam: float = 0.0
    lr: float = 0.01
    momentum: float = 0.9
    epochs: tuple = DEFAULT_EPOCHS
    kernel: str = "raised_cosine"
    geometries: tuple = (PairGeometry(),)
    levels: int = 9
    seed: int = 0
    # noise perturbs only the gradient evaluation point unless this is set
    persist_noise: bool = False
    reset_momentum: bool = True

    def __post_init__(self):
        self.epochs = tuple((int(s), float(sig)) for s, sig in self.epochs)
        self.geometries = tuple(
            parse_geometry(g) if isinstance(g, str) else g for g in self.geometries
        )
        get_kernel(self.kernel)
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if not self.epochs or any(s <= 0 for s, _ in self.epochs):
            raise ValueError("every epoch needs a positive step count")
        if any(sig < 0 for _, sig in self.epochs):
            raise ValueError("noise sigma must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def pyramid(self) -> PyramidSpec:
        return PyramidSpec(levels=self.levels)

    @property
    def total_steps(self) -> int:
        return sum(s for s, _ in self.epochs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epochs"] = [list(e) for e in self.epochs]
        d["geometries"] = [g.label() for g in self.geometries]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttackConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown attack config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class AttackTrace:
    steps: list = field(default_factory=list)  # (step, epoch, hist_loss, image_l1, total)
    checkpoints: list = field(default_factory=list)  # per epoch after rounding

    def as_array(self) -> np.ndarray:
        return np.array(self.steps, dtype=np.float64).reshape(-1, 5)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("step,epoch,hist_loss,image_l1,total_loss\n")
            for step, epoch, h, im, tot in self.steps:
                fh.write(f"{step},{epoch},{float(h)!r},{float(im)!r},{float(tot)!r}\n")


@dataclass
class AttackResult:
    adversarial: np.ndarray
    final_hist_l1: float
    final_image_l1: float
    initial_hist_l1: float
    trace: AttackTrace


def cooc_distance(a, b, geometries=(PairGeometry(),)) -> float:
    """Mean L1 distance between mass-normalised discrete co-occurrence matrices."""
    ca = scale_cooc(cooc_multi(np.asarray(a, np.int64), geometries), "mass").data
    cb = scale_cooc(cooc_multi(np.asarray(b, np.int64), geometries), "mass").data
    return float(np.abs(ca - cb).sum(axis=(1, 2)).mean())


def image_l1(a, b) -> float:
    """Mean over pixel locations of the channel-summed absolute difference."""
    d = np.abs(as_image(a).astype(np.float64) - as_image(b).astype(np.float64))
    return float(d.sum(axis=2).mean())


def total_loss(x, target_hists, source, cfg: AttackConfig, with_grad: bool = True):
    """Histogram pyramid loss plus ``lam`` times the per-pixel L1 change.

    Returns ``(total, grad, hist_loss, image_loss)``.
    """
    x = as_image(x).astype(np.float64)
    src = as_image(source).astype(np.float64)
    if x.shape != src.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {src.shape}")
    hist, grad = pyramid_loss(
        x, target_hists, cfg.pyramid, cfg.kernel, cfg.geometries, with_grad=with_grad
    )
    delta = x - src
    n_pix = delta.shape[0] * delta.shape[1]
    img = float(np.abs(delta).sum() / n_pix)
    total = hist + cfg.lam * img
    if with_grad and cfg.lam:
        grad = grad + (cfg.lam / n_pix) * np.sign(delta)
    return total, grad, hist, img


def step_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for one run; ``index`` separates items of a batch."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def run_attack(source, target, cfg: AttackConfig = None, rng_index: int = 0) -> AttackResult:
    """Push the co-occurrence statistics of ``source`` towards those of ``target``.

    Heavy-ball momentum on the pixel values, clamped to [0, 255] every step and
    rounded (ties to even) at the end of each epoch. Gradients are rescaled to
    pixel-count units so ``lr`` does not depend on the image size.
    """
    cfg = cfg or AttackConfig()
    src = as_image(source)
    tgt = as_image(target)
    if src.shape != tgt.shape:
        raise ValueError(f"shape mismatch: source {src.shape} vs target {tgt.shape}")
    rng = step_rng(cfg.seed, rng_index)
    targets = pyramid_targets(tgt, cfg.pyramid, cfg.kernel, cfg.geometries)
    src_f = src.astype(np.float64)
    x = src_f.copy()
    # pair histograms are mass-normalised, so scale gradients back to counts
    grad_scale = float(src.shape[0] * src.shape[1])
    trace = AttackTrace()
    initial = cooc_distance(src, tgt, cfg.geometries)
    step = 0
    v = np.zeros_like(x)
    for epoch, (n_steps, sigma) in enumerate(cfg.epochs):
        # the iterate is integral here; stop once its histograms already match
        total, _, hist, img = total_loss(x, targets, src_f, cfg, with_grad=False)
        if hist == 0.0:
            trace.steps.append((step, epoch, hist, img, total))
            trace.checkpoints.append(
                {"epoch": epoch, "step": step, "hist_l1": 0.0, "image_l1": image_l1(x, src_f)}
            )
            break
        if cfg.reset_momentum:
            v[...] = 0.0
        for _ in range(n_steps):
            noise = rng.normal(0.0, sigma, x.shape) if sigma > 0 else None
            if noise is not None and cfg.persist_noise:
                x = np.clip(x + noise, 0.0, 255.0)
                probe = x
            elif noise is not None:
                probe = np.clip(x + noise, 0.0, 255.0)
            else:
                probe = x
            total, grad, hist, img = total_loss(probe, targets, src_f, cfg)
            if not np.isfinite(total) or not np.all(np.isfinite(grad)):
                raise AttackError(
                    f"non-finite loss at step {step} (epoch {epoch}): "
                    f"hist={hist!r} image={img!r}"
                )
            trace.steps.append((step, epoch, hist, img, total))
            v = cfg.momentum * v + grad_scale * grad
            x = np.clip(x - cfg.lr * v, 0.0, 255.0)
            step += 1
        x = np.rint(x)
        trace.checkpoints.append(
            {
                "epoch": epoch,
                "step": step,
                "hist_l1": cooc_distance(x, tgt, cfg.geometries),
                "image_l1": image_l1(x, src_f),
            }
        )
        log.debug("epoch %d done: %s", epoch, trace.checkpoints[-1])
    adv = x.astype(np.uint8)
    return AttackResult(
        adversarial=adv if np.asarray(source).ndim == 3 else adv[:, :, 0],
        final_hist_l1=trace.checkpoints[-1]["hist_l1"],
        final_image_l1=trace.checkpoints[-1]["image_l1"],
        initial_hist_l1=initial,
        trace=trace,
    )


def run_reverse_attack(real_source, gan_target, cfg: AttackConfig = None, rng_index: int = 0):
    """Same attack with the roles swapped: a real image takes on GAN statistics."""
    return run_attack(real_source, gan_target, cfg, rng_index)
