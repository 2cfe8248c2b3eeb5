"""Compiled inner loops for soft co-occurrence histograms.

Arrays are channel-first (C, H, W). Geometry codes: 0 horizontal, 1 diagonal,
2 cross-band between channels ``c1`` and ``c2``.
"""

import math

import numpy as np
from numba import njit

GEOM_CODES = {"horizontal": 0, "diagonal": 1, "crossband": 2}


@njit(cache=True)
def bracket_raised_cosine(x, inv_div, nb, lo, wl, wh, dl, dh):
    top = nb - 1.0
    half_pi = 0.5 * math.pi
    flat = x.ravel()
    lo_f = lo.ravel()
    wl_f = wl.ravel()
    wh_f = wh.ravel()
    dl_f = dl.ravel()
    dh_f = dh.ravel()
    for k in range(flat.size):
        u = flat[k] * inv_div
        if u < 0.0:
            u = 0.0
        elif u > top:
            u = top
        b = math.floor(u)
        if b > nb - 2:
            b = nb - 2
        t = u - b
        c = math.cos(math.pi * t)
        s = 0.0 if t == 1.0 else math.sin(math.pi * t)
        lo_f[k] = b
        wl_f[k] = 0.5 * (1.0 + c)
        wh_f[k] = 0.5 * (1.0 - c)
        dl_f[k] = -half_pi * s
        dh_f[k] = half_pi * s


@njit(cache=True)
def bracket_triangle(x, inv_div, nb, lo, wl, wh, dl, dh, kink):
    top = nb - 1.0
    flat = x.ravel()
    lo_f = lo.ravel()
    wl_f = wl.ravel()
    wh_f = wh.ravel()
    dl_f = dl.ravel()
    dh_f = dh.ravel()
    kk = kink.ravel()
    for k in range(flat.size):
        u = flat[k] * inv_div
        if u < 0.0:
            u = 0.0
        elif u > top:
            u = top
        b = math.floor(u)
        if b > nb - 2:
            b = nb - 2
        t = u - b
        lo_f[k] = b
        wl_f[k] = 1.0 - t
        wh_f[k] = t
        # averaged one-sided slopes at the kinks t = 0 and t = 1
        if t == 0.0:
            dl_f[k] = 0.0
            dh_f[k] = 0.5
            kk[k] = b >= 1
        elif t == 1.0:
            dl_f[k] = -0.5
            dh_f[k] = 0.0
            kk[k] = False
        else:
            dl_f[k] = -1.0
            dh_f[k] = 1.0
            kk[k] = False


@njit(cache=True)
def _add_pair(out, p, la, wla, wha, lb, wlb, whb):
    out[p, la, lb] += wla * wlb
    out[p, la, lb + 1] += wla * whb
    out[p, la + 1, lb] += wha * wlb
    out[p, la + 1, lb + 1] += wha * whb


@njit(cache=True)
def pair_hist(lo, wl, wh, geom, c1, c2, nb):
    C, H, W = lo.shape
    if geom == 2:
        out = np.zeros((1, nb, nb))
        for i in range(H):
            for j in range(W):
                _add_pair(out, 0, lo[c1, i, j], wl[c1, i, j], wh[c1, i, j],
                          lo[c2, i, j], wl[c2, i, j], wh[c2, i, j])
        return out
    out = np.zeros((C, nb, nb))
    di = 0 if geom == 0 else 1
    for c in range(C):
        for i in range(H - di):
            for j in range(W - 1):
                _add_pair(out, c, lo[c, i, j], wl[c, i, j], wh[c, i, j],
                          lo[c, i + di, j + 1], wl[c, i + di, j + 1], wh[c, i + di, j + 1])
    return out


@njit(cache=True)
def _pull(seed, p, la, wla, wha, dla, dha, ka, lb, wlb, whb, dlb, dhb, kb, dkm1):
    s00 = seed[p, la, lb]
    s01 = seed[p, la, lb + 1]
    s10 = seed[p, la + 1, lb]
    s11 = seed[p, la + 1, lb + 1]
    ga = (s00 * wlb + s01 * whb) * dla + (s10 * wlb + s11 * whb) * dha
    gb = (s00 * wla + s10 * wha) * dlb + (s01 * wla + s11 * wha) * dhb
    if ka:
        ga += (seed[p, la - 1, lb] * wlb + seed[p, la - 1, lb + 1] * whb) * dkm1
    if kb:
        gb += (seed[p, la, lb - 1] * wla + seed[p, la + 1, lb - 1] * wha) * dkm1
    return ga, gb


@njit(cache=True)
def pair_grad(lo, wl, wh, dl, dh, kink, dkm1, geom, c1, c2, seed, scale, grad):
    """Accumulate ``scale * d(sum(seed * hist))/dvalue`` into ``grad``."""
    C, H, W = lo.shape
    if geom == 2:
        for i in range(H):
            for j in range(W):
                ga, gb = _pull(seed, 0,
                               lo[c1, i, j], wl[c1, i, j], wh[c1, i, j], dl[c1, i, j],
                               dh[c1, i, j], kink[c1, i, j],
                               lo[c2, i, j], wl[c2, i, j], wh[c2, i, j], dl[c2, i, j],
                               dh[c2, i, j], kink[c2, i, j], dkm1)
                grad[c1, i, j] += scale * ga
                grad[c2, i, j] += scale * gb
        return
    di = 0 if geom == 0 else 1
    for c in range(C):
        for i in range(H - di):
            for j in range(W - 1):
                i2 = i + di
                j2 = j + 1
                ga, gb = _pull(seed, c,
                               lo[c, i, j], wl[c, i, j], wh[c, i, j], dl[c, i, j],
                               dh[c, i, j], kink[c, i, j],
                               lo[c, i2, j2], wl[c, i2, j2], wh[c, i2, j2], dl[c, i2, j2],
                               dh[c, i2, j2], kink[c, i2, j2], dkm1)
                grad[c, i, j] += scale * ga
                grad[c, i2, j2] += scale * gb
