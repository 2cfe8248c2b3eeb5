"""Independent reference computations used by ``verify`` and the test suite.

Nothing here shares code paths with the fast implementations it checks.
"""

from __future__ import annotations

import networkx as nx
import numpy as np


def brute_cooc(image, kind="horizontal", c1=0, c2=1, bins=256) -> np.ndarray:
    """Double-loop co-occurrence counter."""
    x = np.asarray(image)
    if x.ndim == 2:
        x = x[:, :, None]
    h, w, c = x.shape
    if kind == "crossband":
        out = np.zeros((1, bins, bins))
        for k in range(h):
            for l in range(w):
                out[0, x[k, l, c1], x[k, l, c2]] += 1
        return out
    dk = 1 if kind == "diagonal" else 0
    out = np.zeros((c, bins, bins))
    for ch in range(c):
        for k in range(h - dk):
            for l in range(w - 1):
                out[ch, x[k, l, ch], x[k + dk, l + 1, ch]] += 1
    return out


def central_difference(fn, x, h=1e-4) -> np.ndarray:
    """Numerical gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def max_rel_error(analytic, numeric) -> float:
    """Largest absolute deviation relative to the largest numeric component."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = max(np.abs(numeric).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / denom)


def away_from_kinks(rng, shape, levels=9, lo=1.0, hi=254.0, margin=1e-3) -> np.ndarray:
    """Uniform reals whose scaled values x / 2**n all sit >= margin from integers."""
    x = rng.uniform(lo, hi, shape)
    while True:
        bad = np.zeros(shape, dtype=bool)
        for n in range(levels):
            u = x / 2.0**n
            bad |= np.abs(u - np.rint(u)) < margin
        if not bad.any():
            return x
        x[bad] = rng.uniform(lo, hi, int(bad.sum()))


def transport_cost(a, b) -> float:
    """Minimum-cost flow between two integer mass vectors, ground cost |i - j|."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.sum() != b.sum():
        raise ValueError("unequal mass")
    g = nx.DiGraph()
    n = len(a)
    for i in range(n):
        g.add_node(("s", i), demand=-int(a[i]))
        g.add_node(("t", i), demand=int(b[i]))
    for i in range(n):
        for j in range(n):
            g.add_edge(("s", i), ("t", j), weight=abs(i - j))
    return float(nx.min_cost_flow_cost(g))


def l1_clear(x, target_hists, spec, kernel, geometries, h=1e-4, safety=4.0) -> bool:
    """True when no pyramid L1 residual can change sign under a step of ``h``.

    One pixel sits in at most two pairs of a matrix and the kernel slope is at
    most pi/2, so a step moves a level-n entry by at most pi*h/(d_n * pairs).
    Bins with a zero target are skipped: their soft entry stays positive while
    the point is away from bin edges.
    """
    from .softhist import pyramid_residuals

    x = np.asarray(x, dtype=np.float64)
    img = x if x.ndim == 3 else x[:, :, None]
    hgt, wid, ch = img.shape
    counts = np.array([g.pair_count(hgt, wid) for g in geometries for _ in g.channel_pairs(ch)],
                      dtype=np.float64)[:, None, None]
    res = pyramid_residuals(x, target_hists, spec, kernel, geometries)
    for n, (r, t) in enumerate(zip(res, target_hists)):
        bound = safety * np.pi * h / (spec.divisor(n) * counts)
        if np.any((t != 0) & (np.abs(r) < bound)):
            return False
    return True


def away_from_l1_kinks(rng, shape, target_hists, spec, kernel, geometries, h=1e-4,
                       tries=200) -> np.ndarray:
    """Like :func:`away_from_kinks`, but also clear of the pyramid L1 kinks.

    Central differences straddle |.| when a residual is smaller than the change
    a step of ``h`` causes, so such points are redrawn.
    """
    for _ in range(tries):
        x = away_from_kinks(rng, shape, spec.levels)
        if l1_clear(x, target_hists, spec, kernel, geometries, h):
            return x
    raise RuntimeError("could not find a point clear of the L1 kinks")
