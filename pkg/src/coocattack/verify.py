"""Self-check suites: integer equivalence, mass conservation, gradients, EMD."""

from __future__ import annotations

import numpy as np

from . import oracles
from .attack import AttackConfig, total_loss
from .features import CROSSBAND, DIAGONAL, HORIZONTAL, PairGeometry, cooc_discrete
from .kernels import RAISED_COSINE, TRIANGLE
from .pairing import emd1d
from .softhist import PyramidSpec, pyramid_loss, pyramid_targets, soft_cooc, soft_cooc_grad

GEOMETRIES = (PairGeometry(HORIZONTAL), PairGeometry(DIAGONAL), PairGeometry(CROSSBAND, 0, 2))


def _geoms_for(channels):
    return [g for g in GEOMETRIES if g.kind != CROSSBAND or channels == 3]


def integer_equivalence(kernels=(TRIANGLE, RAISED_COSINE), n_images=200, seed=0) -> dict:
    rng = np.random.default_rng(seed)
    failures = 0
    checks = 0
    for _ in range(n_images):
        h, w = rng.integers(4, 65, size=2)
        c = int(rng.choice([1, 3]))
        x = rng.integers(0, 256, size=(h, w, c))
        for g in _geoms_for(c):
            ref = cooc_discrete(x, g).data
            for k in kernels:
                checks += 1
                failures += not np.array_equal(soft_cooc(x, g, k).data, ref)
    return {"passed": failures == 0, "checks": checks, "failures": failures}


def mass_conservation(kernels=(TRIANGLE, RAISED_COSINE), n_images=200, seed=1) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_images):
        h, w = rng.integers(4, 33, size=2)
        c = int(rng.choice([1, 3]))
        x = rng.uniform(0, 255, size=(h, w, c))
        for g in _geoms_for(c):
            for k in kernels:
                d = float(2 ** rng.integers(0, 9))
                sums = soft_cooc(x, g, k, d).data.sum(axis=(1, 2))
                expect = g.pair_count(h, w)
                worst = max(worst, float(np.abs(sums - expect).max() / expect))
    return {"passed": worst <= 1e-9, "max_rel_error": worst}


def gradient_check(kernels=(TRIANGLE, RAISED_COSINE), n_instances=20, seed=2, h=1e-4) -> dict:
    rng = np.random.default_rng(seed)
    errs = {"soft_cooc": 0.0, "pyramid_loss": 0.0, "total_loss": 0.0}
    spec = PyramidSpec()
    for i in range(n_instances):
        k = kernels[i % len(kernels)]
        x = oracles.away_from_kinks(rng, (8, 8, 3))
        tgt = rng.integers(0, 256, (8, 8, 3))
        g = GEOMETRIES[i % len(GEOMETRIES)]
        div = float(2 ** (i % 4))
        seed_arr = rng.normal(size=soft_cooc(x, g, k, div).data.shape)
        analytic = soft_cooc_grad(x, g, k, div, seed_arr)
        numeric = oracles.central_difference(
            lambda z: float((seed_arr * soft_cooc(z, g, k, div).data).sum()), x, h
        )
        errs["soft_cooc"] = max(errs["soft_cooc"], oracles.max_rel_error(analytic, numeric))

        targets = pyramid_targets(tgt, spec, k, (g,))
        # a fresh point that central differences can probe without crossing |.|
        x = oracles.away_from_l1_kinks(rng, (8, 8, 3), targets, spec, k, (g,), h)
        _, analytic = pyramid_loss(x, targets, spec, k, (g,))
        numeric = oracles.central_difference(
            lambda z: pyramid_loss(z, targets, spec, k, (g,), with_grad=False)[0], x, h
        )
        errs["pyramid_loss"] = max(errs["pyramid_loss"], oracles.max_rel_error(analytic, numeric))

        src = rng.integers(0, 256, (8, 8, 3)).astype(np.float64)
        lam = (0.0, 3.0, 10.0)[i % 3]
        cfg = AttackConfig(lam=lam, kernel=k.name, geometries=(g,))
        _, analytic, _, _ = total_loss(x, targets, src, cfg)
        numeric = oracles.central_difference(
            lambda z: total_loss(z, targets, src, cfg, with_grad=False)[0], x, h
        )
        errs["total_loss"] = max(errs["total_loss"], oracles.max_rel_error(analytic, numeric))
    return {"passed": max(errs.values()) < 1e-4, "max_rel_error": errs}


def emd_oracle(n_pairs=100, seed=3) -> dict:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n_pairs):
        n = int(rng.integers(2, 9))
        total = int(rng.integers(1, 20))
        a = rng.multinomial(total, np.ones(n) / n)
        b = rng.multinomial(total, np.ones(n) / n)
        mismatches += emd1d(a, b) != oracles.transport_cost(a, b)
    return {"passed": mismatches == 0, "pairs": n_pairs, "mismatches": mismatches}


def verify(kernels=(TRIANGLE, RAISED_COSINE), quick=False) -> dict:
    """Run every suite and return ``{suite: {"passed": bool, ...}}``."""
    scale = 5 if quick else 1
    report = {
        "integer_equivalence": integer_equivalence(kernels, n_images=200 // scale),
        "mass_conservation": mass_conservation(kernels, n_images=200 // scale),
        "gradient_check": gradient_check(kernels, n_instances=max(20 // scale, 3)),
        "emd_oracle": emd_oracle(n_pairs=100 // scale),
    }
    report["all_passed"] = all(v["passed"] for v in report.values())
    return report
