"""Source/target pairing by 1D colour-histogram earth mover's distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import as_image


def rgb_hist1d(image) -> np.ndarray:
    """Per-channel normalised 256-bin histograms, shape (3, 256)."""
    x = as_image(image)
    if x.shape[2] != 3:
        raise ValueError(f"expected 3 channels, got {x.shape[2]}")
    x = x.astype(np.int64)
    if x.min() < 0 or x.max() > 255:
        raise ValueError("pixel values must lie in 0..255")
    counts = np.stack([np.bincount(x[..., c].ravel(), minlength=256) for c in range(3)])
    return counts / counts.sum(axis=1, keepdims=True)


def emd1d(a, b, tol: float = 1e-9) -> float:
    """Exact 1D transport cost with ground distance |i - j|: L1 between CDFs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("emd1d needs two vectors of equal length")
    if abs(a.sum() - b.sum()) > tol * max(1.0, abs(a.sum())):
        raise ValueError(f"mass mismatch: {a.sum()!r} vs {b.sum()!r}")
    return float(np.abs(np.cumsum(a - b)).sum())


def rgb_emd(ha: np.ndarray, hb: np.ndarray) -> float:
    """Sum of per-channel EMDs between two :func:`rgb_hist1d` results."""
    return sum(emd1d(ha[c], hb[c]) for c in range(ha.shape[0]))


@dataclass
class PairingPlan:
    pairs: list = field(default_factory=list)  # (source_id, target_id, emd)
    block_size: int = 900

    def to_json_rows(self, source_names=None, target_names=None) -> list[dict]:
        rows = []
        for s, t, cost in self.pairs:
            rows.append(
                {
                    "source": source_names[s] if source_names else s,
                    "target": target_names[t] if target_names else t,
                    "emd": cost,
                }
            )
        return rows


def build_pairing(sources, targets, block_size: int = 900) -> PairingPlan:
    """Pick, for each source, the lowest-EMD target from the matching block.

    ``sources`` and ``targets`` are lists of images or precomputed
    (3, 256) histograms. Block ``k`` holds items ``k*block_size`` up to
    ``(k+1)*block_size``; sources in a block beyond the last target block are
    matched against the last target block. Ties go to the lowest target index.
    """
    if not targets:
        raise ValueError("no target images to pair with")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    hs = [_hist(s) for s in sources]
    ht = [_hist(t) for t in targets]
    n_tblocks = (len(ht) + block_size - 1) // block_size
    plan = PairingPlan(block_size=block_size)
    for i, h in enumerate(hs):
        blk = min(i // block_size, n_tblocks - 1)
        lo, hi = blk * block_size, min((blk + 1) * block_size, len(ht))
        costs = [rgb_emd(h, ht[j]) for j in range(lo, hi)]
        j = int(np.argmin(costs))
        plan.pairs.append((i, lo + j, costs[j]))
    return plan


def _hist(item) -> np.ndarray:
    arr = np.asarray(item)
    if arr.shape == (3, 256) and np.issubdtype(arr.dtype, np.floating):
        return arr
    return rgb_hist1d(arr)
