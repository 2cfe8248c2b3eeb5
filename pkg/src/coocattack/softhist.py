"""Differentiable co-occurrence histograms, pyramid losses and their gradients.

Every value ``u`` (a pixel divided by the pyramid divisor) is split between
its lower bin ``lo = floor(u)`` and ``lo + 1`` with weights ``f(u - lo)`` and
``f(u - lo - 1)``. A pixel pair therefore touches at most four bins. Gradients
are written out by hand for exactly these compositions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import CoocStack, PairGeometry, as_image
from . import _loops
from .kernels import InterpKernel, RaisedCosine, Triangle, get_kernel

VMAX = 255.0

LOSS_KINDS = ("l1_pointwise", "l2_pointwise", "l1_pyramid")


def level_bins(divisor: float, vmax: float = VMAX) -> int:
    """Number of bins per axis once values in [0, vmax] are divided by ``divisor``.

    ``ceil`` rather than ``floor``: a value of 255/2 = 127.5 still needs bin 128.
    """
    return int(math.ceil(vmax / divisor - 1e-12)) + 1


class _Bracket:
    """Per-value bin bracketing at one divisor, on a channel-first (C, H, W) array.

    Holds the lower bin, both bin weights and both kernel slopes. ``kink``
    flags values sitting exactly on a bin centre where the kernel also has a
    (averaged) slope ``dkm1`` into the bin below.
    """

    __slots__ = ("lo", "wl", "wh", "dl", "dh", "kink", "dkm1", "nb")

    def __init__(self, xc: np.ndarray, divisor: float, nb: int, kernel: InterpKernel):
        shape = xc.shape
        self.nb = nb
        self.lo = np.empty(shape, np.int64)
        self.wl = np.empty(shape)
        self.wh = np.empty(shape)
        self.dl = np.empty(shape)
        self.dh = np.empty(shape)
        self.kink = np.zeros(shape, np.bool_)
        self.dkm1 = 0.0
        if type(kernel) is RaisedCosine:
            _loops.bracket_raised_cosine(
                xc, 1.0 / divisor, nb, self.lo, self.wl, self.wh, self.dl, self.dh
            )
        elif type(kernel) is Triangle:
            _loops.bracket_triangle(
                xc, 1.0 / divisor, nb, self.lo, self.wl, self.wh, self.dl, self.dh, self.kink
            )
            self.dkm1 = float(kernel.deriv(1.0))
        else:
            self._generic(xc, divisor, kernel)

    def _generic(self, xc, divisor, kernel):
        nb = self.nb
        u = np.clip(xc / divisor, 0.0, nb - 1.0)
        lo = np.minimum(np.floor(u), nb - 2).astype(np.int64)
        t = u - lo
        self.lo[...] = lo
        self.wl[...], self.wh[...], self.dl[...], self.dh[...] = kernel.split(t)
        self.dkm1 = float(kernel.deriv(1.0))
        if self.dkm1 != 0.0:
            self.kink[...] = (t == 0.0) & (lo >= 1)

    def hist(self, geometry: PairGeometry) -> np.ndarray:
        code = _loops.GEOM_CODES[geometry.kind]
        return _loops.pair_hist(self.lo, self.wl, self.wh, code, geometry.c1, geometry.c2, self.nb)

    def pull(self, geometry: PairGeometry, seed: np.ndarray, scale: float, grad: np.ndarray):
        code = _loops.GEOM_CODES[geometry.kind]
        _loops.pair_grad(
            self.lo, self.wl, self.wh, self.dl, self.dh, self.kink, self.dkm1,
            code, geometry.c1, geometry.c2, np.ascontiguousarray(seed, dtype=np.float64),
            scale, grad,
        )


def _channel_first(image) -> np.ndarray:
    x = as_image(image)
    return np.ascontiguousarray(np.moveaxis(x, 2, 0), dtype=np.float64)


def _check_geometry(geometry: PairGeometry, shape):
    c, h, w = shape
    geometry.channel_pairs(c)
    if geometry.kind != "crossband" and w < 2:
        raise ValueError(f"{geometry.kind} pairs need width >= 2")
    if geometry.kind == "diagonal" and h < 2:
        raise ValueError("diagonal pairs need height >= 2")


def soft_cooc(
    image,
    geometry: PairGeometry = PairGeometry(),
    kernel="raised_cosine",
    divisor: float = 1.0,
    vmax: float = VMAX,
) -> CoocStack:
    """Differentiable co-occurrence of a real image after dividing by ``divisor``."""
    if divisor < 1.0:
        raise ValueError("divisor must be >= 1")
    xc = _channel_first(image)
    _check_geometry(geometry, xc.shape)
    br = _Bracket(xc, divisor, level_bins(divisor, vmax), get_kernel(kernel))
    labels = [(geometry, cp) for cp in geometry.channel_pairs(xc.shape[0])]
    return CoocStack(labels, br.hist(geometry))


def soft_cooc_grad(
    image,
    geometry: PairGeometry,
    kernel,
    divisor: float,
    upstream,
    vmax: float = VMAX,
) -> np.ndarray:
    """Gradient of ``sum(upstream * soft_cooc(image))`` with respect to the pixels."""
    xc = _channel_first(image)
    _check_geometry(geometry, xc.shape)
    nb = level_bins(divisor, vmax)
    seed = upstream.data if isinstance(upstream, CoocStack) else np.asarray(upstream, float)
    n_stacks = len(geometry.channel_pairs(xc.shape[0]))
    if seed.shape != (n_stacks, nb, nb):
        raise ValueError(f"seed shape {seed.shape} != {(n_stacks, nb, nb)}")
    br = _Bracket(xc, divisor, nb, get_kernel(kernel))
    grad = np.zeros(xc.shape)
    br.pull(geometry, seed, 1.0 / divisor, grad)
    return np.moveaxis(grad, 0, 2).reshape(as_image(image).shape)


@dataclass(frozen=True)
class PyramidSpec:
    """Level ``n`` divides values by ``2**n`` and is weighted by ``2**n``."""

    levels: int = 9
    vmax: float = VMAX

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("pyramid needs at least one level")

    def divisor(self, n: int) -> float:
        return float(2**n)

    def weight(self, n: int) -> float:
        return float(2**n)

    def bins(self, n: int) -> int:
        return level_bins(self.divisor(n), self.vmax)

    @classmethod
    def for_range(cls, vmax: float) -> "PyramidSpec":
        """Halve the axis until it fits in a single bin (9 levels for 0..255)."""
        return cls(levels=int(math.ceil(math.log2(vmax + 1))) + 1, vmax=vmax)


def _pair_counts(geometries, shape) -> np.ndarray:
    """Pair count of every matrix in the stacked output; ``shape`` is (C, H, W)."""
    c, h, w = shape
    return np.array(
        [g.pair_count(h, w) for g in geometries for _ in g.channel_pairs(c)], dtype=np.float64
    )


def pyramid_targets(
    target,
    spec: PyramidSpec = PyramidSpec(),
    kernel="raised_cosine",
    geometries=(PairGeometry(),),
) -> list[np.ndarray]:
    """Mass-normalised soft histograms of ``target`` for every pyramid level."""
    xc = _channel_first(target)
    kernel = get_kernel(kernel)
    for g in geometries:
        _check_geometry(g, xc.shape)
    counts = _pair_counts(geometries, xc.shape)[:, None, None]
    out = []
    for n in range(spec.levels):
        br = _Bracket(xc, spec.divisor(n), spec.bins(n), kernel)
        hists = np.concatenate([br.hist(g) for g in geometries], axis=0)
        hists /= counts
        hists.setflags(write=False)
        out.append(hists)
    return out


def pyramid_residuals(a, target_hists, spec: PyramidSpec = PyramidSpec(), kernel="raised_cosine",
                      geometries=(PairGeometry(),)) -> list[np.ndarray]:
    """Per-level mass-normalised histogram minus target, stacked like the targets."""
    xc = _channel_first(a)
    kernel = get_kernel(kernel)
    counts = _pair_counts(geometries, xc.shape)[:, None, None]
    out = []
    for n in range(spec.levels):
        br = _Bracket(xc, spec.divisor(n), spec.bins(n), kernel)
        hist = np.concatenate([br.hist(g) for g in geometries], axis=0)
        out.append(hist / counts - target_hists[n])
    return out


def pyramid_loss(
    a,
    target_hists,
    spec: PyramidSpec = PyramidSpec(),
    kernel="raised_cosine",
    geometries=(PairGeometry(),),
    with_grad: bool = True,
):
    """Weighted multi-scale L1 distance between soft co-occurrence histograms.

    ``target_hists`` comes from :func:`pyramid_targets`. Histograms are divided
    by their pair count before comparison and the L1 subgradient at zero is 0.
    Returns ``(loss, grad)``; ``grad`` is None when ``with_grad`` is false.
    """
    image = as_image(a)
    xc = _channel_first(image)
    kernel = get_kernel(kernel)
    if len(target_hists) != spec.levels:
        raise ValueError(f"expected {spec.levels} target levels, got {len(target_hists)}")
    for g in geometries:
        _check_geometry(g, xc.shape)
    counts = _pair_counts(geometries, xc.shape)
    loss = 0.0
    grad = np.zeros(xc.shape) if with_grad else None
    for n in range(spec.levels):
        d = spec.divisor(n)
        wgt = spec.weight(n)
        br = _Bracket(xc, d, spec.bins(n), kernel)
        target = target_hists[n]
        if target.shape[0] != len(counts):
            raise ValueError(
                f"level {n}: target has {target.shape[0]} matrices, expected {len(counts)}"
            )
        offset = 0
        for g in geometries:
            hist = br.hist(g)
            k = hist.shape[0]
            t = target[offset:offset + k]
            if t.shape != hist.shape:
                raise ValueError(f"level {n}: target shape {t.shape} != {hist.shape}")
            cnt = counts[offset:offset + k][:, None, None]
            # divide exactly as the targets were built, so equal inputs cancel to 0
            diff = hist / cnt - t
            loss += wgt * float(np.abs(diff).sum())
            if with_grad:
                br.pull(g, np.sign(diff) / cnt, wgt / d, grad)
            offset += k
    if with_grad:
        grad = np.moveaxis(grad, 0, 2).reshape(image.shape)
    return loss, grad


# -- point-set histograms (1D and 2D toy problems) ---------------------------


def _toy_levels(kind: str, grid: int) -> PyramidSpec:
    vmax = float(grid - 1)
    if kind == "l1_pyramid":
        return PyramidSpec.for_range(vmax)
    return PyramidSpec(levels=1, vmax=vmax)


def _point_bracket(coords: np.ndarray, divisor: float, nb: int, kernel) -> _Bracket:
    # 1D points as a (1, 1, n) array; 2D points as x and y "channels" (2, 1, n)
    if coords.ndim == 1:
        xc = coords.reshape(1, 1, -1)
    else:
        xc = np.ascontiguousarray(coords.T).reshape(2, 1, -1)
    return _Bracket(np.ascontiguousarray(xc, dtype=np.float64), divisor, nb, kernel)


_XY = PairGeometry("crossband", 0, 1)


def _point_hist(br: _Bracket, ndim: int) -> np.ndarray:
    if ndim == 2:
        return br.hist(_XY)[0]
    lo = br.lo.ravel()
    idx = np.concatenate([lo, lo + 1])
    w = np.concatenate([br.wl.ravel(), br.wh.ravel()])
    return np.bincount(idx, weights=w, minlength=br.nb)


def _point_grad(br: _Bracket, ndim: int, seed: np.ndarray, scale: float) -> np.ndarray:
    if ndim == 2:
        grad = np.zeros(br.lo.shape)
        br.pull(_XY, seed[None], scale, grad)
        return grad.reshape(2, -1).T
    lo, dl, dh = br.lo.ravel(), br.dl.ravel(), br.dh.ravel()
    g = seed[lo] * dl + seed[lo + 1] * dh
    kink = br.kink.ravel()
    if kink.any():
        g[kink] += seed[lo[kink] - 1] * br.dkm1
    return scale * g


def hist_loss_points(
    points,
    target_points,
    kind: str = "l1_pyramid",
    kernel="raised_cosine",
    grid: int = 8,
    normalized_by: str = "none",
    with_grad: bool = True,
):
    """Histogram loss between two point sets on the integer grid 0..grid-1.

    Works for 1D vectors and (n, 2) point sets alike. ``l1_pyramid`` halves the
    axis until a single bin remains. Returns ``(loss, grad)`` with ``grad``
    shaped like ``points``.
    """
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}")
    if normalized_by not in ("none", "mass"):
        raise ValueError(f"unknown normalisation {normalized_by!r}")
    kernel = get_kernel(kernel)
    p = np.asarray(points, dtype=np.float64)
    q = np.asarray(target_points, dtype=np.float64)
    if p.ndim not in (1, 2) or p.ndim != q.ndim or p.shape[1:] != q.shape[1:]:
        raise ValueError("points and target_points must have the same dimensionality")
    if p.ndim == 2 and p.shape[1] != 2:
        raise ValueError("point sets must be (n, 2)")
    norm = float(len(p)) if normalized_by == "mass" else 1.0
    spec = _toy_levels(kind, grid)
    loss = 0.0
    grad = np.zeros_like(p)
    for n in range(spec.levels):
        d = spec.divisor(n)
        nb = spec.bins(n)
        br = _point_bracket(p, d, nb, kernel)
        h = _point_hist(br, p.ndim)
        t = _point_hist(_point_bracket(q, d, nb, kernel), q.ndim)
        diff = (h - t) / norm
        if kind == "l2_pointwise":
            loss += float((diff**2).sum())
            seed = 2.0 * diff / norm
            wgt = 1.0
        else:
            wgt = spec.weight(n)
            loss += wgt * float(np.abs(diff).sum())
            seed = np.sign(diff) / norm
        if with_grad:
            grad += _point_grad(br, p.ndim, seed, wgt / d)
    return loss, (grad if with_grad else None)


def hist_loss_1d(points, target_points, kind="l1_pyramid", kernel="raised_cosine", grid=8, **kw):
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("hist_loss_1d expects a vector")
    return hist_loss_points(p, target_points, kind, kernel, grid, **kw)


def hist_loss_2d(points, target_points, kind="l1_pyramid", kernel="raised_cosine", grid=8, **kw):
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("hist_loss_2d expects an (n, 2) point set")
    return hist_loss_points(p, target_points, kind, kernel, grid, **kw)
