import csv

import numpy as np
import pytest

from coocattack import attack as attack_mod
from coocattack import oracles
from coocattack.attack import (
    AttackConfig,
    AttackError,
    cooc_distance,
    image_l1,
    run_attack,
    run_reverse_attack,
    total_loss,
)
from coocattack.features import PairGeometry
from coocattack.pairing import build_pairing
from coocattack.softhist import pyramid_loss, pyramid_targets
from coocattack.surrogate import ARTIFACT, SMOOTH, SynthSpec, generate_class

SHORT = ((40, 0.01), (10, 0.0))


@pytest.fixture(scope="module")
def pair():
    src = generate_class(SynthSpec(ARTIFACT, size=32, seed=3), 1)[0]
    tgt = generate_class(SynthSpec(SMOOTH, size=32, seed=3), 1)[0]
    return src, tgt


class TestTotalLoss:
    def test_lambda_zero_is_pyramid_loss(self, rng):
        x = rng.uniform(0, 255, (8, 8, 3))
        src = rng.integers(0, 256, (8, 8, 3))
        cfg = AttackConfig(lam=0.0)
        t = pyramid_targets(rng.integers(0, 256, (8, 8, 3)))
        total, grad, hist, _ = total_loss(x, t, src, cfg)
        ref, ref_grad = pyramid_loss(x, t)
        assert total == ref and hist == ref
        np.testing.assert_array_equal(grad, ref_grad)

    def test_image_term_vanishes_at_source(self, rng):
        src = rng.integers(0, 256, (8, 8, 3)).astype(float)
        t = pyramid_targets(rng.integers(0, 256, (8, 8, 3)))
        _, g0, h0, _ = total_loss(src, t, src, AttackConfig(lam=0.0))
        total, g, _, img = total_loss(src, t, src, AttackConfig(lam=1e9))
        assert img == 0.0 and total == h0
        np.testing.assert_array_equal(g, g0)

    @pytest.mark.parametrize("lam", [0.0, 3.0, 10.0])
    def test_finite_differences(self, lam, rng):
        src = rng.integers(0, 256, (8, 8, 3)).astype(float)
        cfg = AttackConfig(lam=lam)
        t = pyramid_targets(rng.integers(0, 256, (8, 8, 3)))
        x = oracles.away_from_l1_kinks(rng, (8, 8, 3), t, cfg.pyramid, cfg.kernel, cfg.geometries)
        _, analytic, _, _ = total_loss(x, t, src, cfg)
        numeric = oracles.central_difference(lambda z: total_loss(z, t, src, cfg, False)[0], x)
        assert oracles.max_rel_error(analytic, numeric) < 1e-4

    def test_image_l1_is_per_pixel(self):
        a = np.zeros((2, 2, 3))
        b = np.ones((2, 2, 3))
        assert image_l1(a, b) == 3.0


class TestRunAttack:
    def test_fixed_point(self, pair):
        src, _ = pair
        res = run_attack(src, src)
        np.testing.assert_array_equal(res.adversarial, src)
        assert res.trace.steps[0][2] == 0.0
        assert res.final_hist_l1 == 0.0

    def test_reverse_fixed_point(self, pair):
        _, tgt = pair
        np.testing.assert_array_equal(run_reverse_attack(tgt, tgt).adversarial, tgt)

    def test_reduces_distance(self, pair):
        src, tgt = pair
        res = run_attack(src, tgt)
        assert res.adversarial.dtype == np.uint8 and res.adversarial.shape == src.shape
        assert res.final_hist_l1 <= 0.25 * res.initial_hist_l1
        assert res.final_hist_l1 == pytest.approx(cooc_distance(res.adversarial, tgt))

    def test_reverse_reduces_distance(self):
        real = generate_class(SynthSpec(SMOOTH, size=64, seed=4), 1)[0]
        pool = generate_class(SynthSpec(ARTIFACT, size=64, seed=4), 10)
        _, t, _ = build_pairing([real], list(pool)).pairs[0]
        res = run_reverse_attack(real, pool[t])
        assert res.final_hist_l1 <= 0.25 * res.initial_hist_l1

    def test_lambda_tradeoff_direction(self, pair):
        src, tgt = pair
        runs = [run_attack(src, tgt, AttackConfig(lam=lam)) for lam in (0.0, 3.0, 10.0)]
        img = [r.final_image_l1 for r in runs]
        hist = [r.final_hist_l1 for r in runs]
        assert img[0] >= img[1] >= img[2]
        assert hist[0] <= hist[1] <= hist[2]

    def test_deterministic(self, pair):
        src, tgt = pair
        cfg = AttackConfig(epochs=SHORT, seed=7)
        a = run_attack(src, tgt, cfg)
        b = run_attack(src, tgt, cfg)
        np.testing.assert_array_equal(a.adversarial, b.adversarial)
        assert a.trace.steps == b.trace.steps
        c = run_attack(src, tgt, cfg, rng_index=1)
        assert c.trace.steps != a.trace.steps

    def test_trace(self, pair, tmp_path):
        src, tgt = pair
        cfg = AttackConfig(epochs=SHORT)
        res = run_attack(src, tgt, cfg)
        assert len(res.trace.steps) == cfg.total_steps
        assert [c["epoch"] for c in res.trace.checkpoints] == [0, 1]
        path = tmp_path / "t.csv"
        res.trace.write_csv(path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["step", "epoch", "hist_loss", "image_l1", "total_loss"]
        assert len(rows) == cfg.total_steps + 1
        assert res.trace.as_array().shape == (cfg.total_steps, 5)

    @pytest.mark.parametrize("flags", [{"persist_noise": True}, {"reset_momentum": False},
                                       {"kernel": "triangle"}])
    def test_variants_run(self, pair, flags):
        src, tgt = pair
        res = run_attack(src, tgt, AttackConfig(epochs=SHORT, **flags))
        assert res.final_hist_l1 < res.initial_hist_l1

    def test_grayscale(self, pair):
        src, tgt = pair
        res = run_attack(src[..., 0], tgt[..., 0], AttackConfig(epochs=SHORT))
        assert res.adversarial.shape == src.shape[:2]

    def test_shape_mismatch(self, pair):
        src, tgt = pair
        with pytest.raises(ValueError):
            run_attack(src, tgt[:16])

    def test_non_finite_loss_raises(self, pair, monkeypatch):
        src, tgt = pair

        def broken(x, *a, **k):
            return float("nan"), np.zeros(np.shape(x))

        monkeypatch.setattr(attack_mod, "pyramid_loss", broken)
        with pytest.raises(AttackError, match="non-finite"):
            run_attack(src, tgt, AttackConfig(epochs=SHORT))


class TestAttackConfig:
    def test_round_trip(self):
        cfg = AttackConfig(lam=3.0, geometries=("horizontal", "crossband(0,2)"), seed=5)
        again = AttackConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert again.geometries[1] == PairGeometry("crossband", 0, 2)

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            AttackConfig.from_dict({"lam": 1.0, "speed": 2})

    @pytest.mark.parametrize("bad", [{"lr": 0.0}, {"momentum": 1.0}, {"lam": -1.0},
                                     {"epochs": ()}, {"epochs": ((10, -0.1),)}, {"kernel": "box"},
                                     {"seed": -1}])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            AttackConfig(**bad)

    def test_default_schedule(self):
        cfg = AttackConfig()
        assert cfg.total_steps == 300
        assert cfg.epochs == ((200, 0.01), (50, 0.01), (50, 0.0))
