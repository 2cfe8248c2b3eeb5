"""Loss-landscape studies on small 1D and 2D point sets.

A "source" point set is moved by noisy momentum descent until its rounded
histogram equals the "target" histogram exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .softhist import hist_loss_points


@dataclass
class ToyConfig:
    lr: float = 0.01
    momentum: float = 0.9
    max_steps: int = 2000
    kernel: str = "raised_cosine"
    grid: int = 8
    persist_noise: bool = False
    seed: int = 0


@dataclass
class ToyRun:
    points: np.ndarray
    target_points: np.ndarray
    loss_kind: str
    noise_sigma: float
    max_steps: int
    seed: int
    trajectory: list = field(default_factory=list)  # (positions, loss) per step
    success: bool = False
    steps_to_converge: int | None = None

    def write_csv(self, path):
        dims = self.points.size
        with open(path, "w", newline="") as fh:
            fh.write(",".join(["step"] + [f"x{i}" for i in range(dims)] + ["loss"]) + "\n")
            for step, (pos, loss) in enumerate(self.trajectory):
                vals = ",".join(repr(float(v)) for v in np.ravel(pos))
                fh.write(f"{step},{vals},{float(loss)!r}\n")


@dataclass
class TrialReport:
    trials: int
    successes: int
    median_steps_to_converge: float | None
    steps: list = field(default_factory=list)  # None for failed trials

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "median_steps_to_converge": self.median_steps_to_converge,
            "steps": self.steps,
        }


def rounded_match(points, target_points) -> bool:
    """Exact equality of the multisets after rounding to the integer grid."""
    p = np.rint(np.asarray(points, dtype=np.float64)).astype(np.int64)
    q = np.rint(np.asarray(target_points, dtype=np.float64)).astype(np.int64)
    if p.ndim == 1:
        return bool(np.array_equal(np.sort(p), np.sort(q)))
    return bool(np.array_equal(p[np.lexsort(p.T[::-1])], q[np.lexsort(q.T[::-1])]))


def run_toy(source, target, loss_kind="l1_pyramid", noise_sigma=0.01, cfg: ToyConfig = None,
            keep_trajectory=True) -> ToyRun:
    cfg = cfg or ToyConfig()
    src = np.asarray(source, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if src.shape != tgt.shape:
        raise ValueError(f"source and target shapes differ: {src.shape} vs {tgt.shape}")
    rng = np.random.default_rng(cfg.seed)
    top = cfg.grid - 1.0
    x = src.copy()
    v = np.zeros_like(x)
    run = ToyRun(src, tgt, loss_kind, noise_sigma, cfg.max_steps, cfg.seed)
    for step in range(cfg.max_steps + 1):
        if rounded_match(x, tgt):
            run.success = True
            run.steps_to_converge = step
            if keep_trajectory:
                loss, _ = hist_loss_points(x, tgt, loss_kind, cfg.kernel, cfg.grid, with_grad=False)
                run.trajectory.append((x.copy(), loss))
            break
        if step == cfg.max_steps:
            break
        if noise_sigma > 0:
            noise = rng.normal(0.0, noise_sigma, x.shape)
            if cfg.persist_noise:
                x = np.clip(x + noise, 0.0, top)
                probe = x
            else:
                probe = np.clip(x + noise, 0.0, top)
        else:
            probe = x
        loss, grad = hist_loss_points(probe, tgt, loss_kind, cfg.kernel, cfg.grid)
        if keep_trajectory:
            run.trajectory.append((x.copy(), loss))
        v = cfg.momentum * v + grad
        x = np.clip(x - cfg.lr * v, 0.0, top)
    return run


def run_toy_1d(source, target, loss_kind="l1_pyramid", noise_sigma=0.01, cfg=None, **kw):
    if np.ndim(source) != 1:
        raise ValueError("1D toy expects vectors")
    return run_toy(source, target, loss_kind, noise_sigma, cfg, **kw)


def census(runs) -> TrialReport:
    steps = [r.steps_to_converge if r.success else None for r in runs]
    done = [s for s in steps if s is not None]
    return TrialReport(
        trials=len(runs),
        successes=len(done),
        median_steps_to_converge=float(np.median(done)) if done else None,
        steps=steps,
    )


def run_toy_1d_trials(source, target, loss_kind, noise_sigma, seeds, cfg: ToyConfig = None):
    cfg = cfg or ToyConfig()
    runs = []
    for seed in seeds:
        c = ToyConfig(**{**cfg.__dict__, "seed": int(seed)})
        runs.append(run_toy_1d(source, target, loss_kind, noise_sigma, c, keep_trajectory=False))
    return census(runs)


def run_toy_2d_census(trials=100, points=8, grid=8, loss_kind="l1_pyramid", noise_sigma=0.01,
                      seed=0, cfg: ToyConfig = None, same_distribution=False) -> TrialReport:
    """Random source/target sets drawn uniformly from the integer grid, one run each."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    cfg = cfg or ToyConfig()
    runs = []
    for k in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        src = rng.integers(0, grid, size=(points, 2)).astype(np.float64)
        tgt = rng.permutation(src) if same_distribution else rng.integers(0, grid, size=(points, 2))
        c = ToyConfig(**{**cfg.__dict__, "grid": grid, "seed": int(rng.integers(2**63))})
        runs.append(run_toy(src, tgt, loss_kind, noise_sigma, c, keep_trajectory=False))
    return census(runs)
