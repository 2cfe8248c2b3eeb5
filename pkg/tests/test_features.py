import numpy as np
import pytest

from coocattack.features import (
    CROSSBAND,
    CROSSBAND_SIX,
    DIAGONAL,
    IMAGENET_MEAN,
    IMAGENET_STD,
    CoocStack,
    PairGeometry,
    cooc_discrete,
    cooc_multi,
    dft_feature,
    direct_feature,
    parse_geometry,
    scale_cooc,
)
from coocattack.oracles import brute_cooc


class TestCoocDiscrete:
    def test_three_pixel_row(self):
        c = cooc_discrete(np.array([[1, 2, 3]])).data
        assert c.shape == (1, 256, 256)
        assert c[0, 1, 2] == 1 and c[0, 2, 3] == 1
        assert c.sum() == 2

    def test_constant_image(self):
        img = np.full((5, 7), 42, dtype=np.uint8)
        c = cooc_discrete(img).data
        assert c[0, 42, 42] == 5 * 6
        assert c.sum() == 5 * 6

    @pytest.mark.parametrize("geom", [PairGeometry(), PairGeometry(DIAGONAL),
                                      PairGeometry(CROSSBAND, 0, 1), PairGeometry(CROSSBAND, 1, 2)])
    def test_matches_brute_force(self, geom, rng):
        for _ in range(50):
            img = rng.integers(0, 256, size=(16, 16, 3))
            ref = brute_cooc(img, geom.kind, geom.c1, geom.c2)
            np.testing.assert_array_equal(cooc_discrete(img, geom).data, ref)

    def test_pair_counts(self):
        assert PairGeometry().pair_count(4, 5) == 16
        assert PairGeometry(DIAGONAL).pair_count(4, 5) == 12
        assert PairGeometry(CROSSBAND, 0, 2).pair_count(4, 5) == 20

    def test_rejects_real_values(self):
        with pytest.raises(TypeError):
            cooc_discrete(np.array([[0.5, 1.0]]))

    def test_rejects_single_column(self):
        with pytest.raises(ValueError):
            cooc_discrete(np.zeros((4, 1), dtype=np.uint8))

    def test_crossband_needs_channels(self):
        with pytest.raises(ValueError):
            cooc_discrete(np.zeros((4, 4), dtype=np.uint8), PairGeometry(CROSSBAND, 0, 1))

    def test_multi_stacks_in_order(self, rng):
        img = rng.integers(0, 256, size=(8, 8, 3))
        stack = cooc_multi(img, CROSSBAND_SIX)
        assert len(stack) == 6
        np.testing.assert_array_equal(stack.data[3:], cooc_discrete(img, PairGeometry(DIAGONAL)).data)


class TestGeometryParsing:
    @pytest.mark.parametrize("text", ["horizontal", "diagonal", "crossband(0,2)", "crossband(1, 2)"])
    def test_round_trip(self, text):
        g = parse_geometry(text)
        assert parse_geometry(g.label()) == g

    @pytest.mark.parametrize("text", ["vertical", "crossband(0,0)", "crossband(a,b)"])
    def test_bad(self, text):
        with pytest.raises(ValueError):
            parse_geometry(text)


class TestScale:
    def _stack(self, m):
        return CoocStack(pairs=[PairGeometry()], data=np.asarray(m, dtype=float)[None])

    def test_max(self):
        np.testing.assert_array_equal(scale_cooc(self._stack([[2, 0], [0, 2]]), "max").data[0],
                                      [[1, 0], [0, 1]])

    def test_mass(self):
        np.testing.assert_array_equal(scale_cooc(self._stack([[2, 0], [0, 2]]), "mass").data[0],
                                      [[0.5, 0], [0, 0.5]])

    @pytest.mark.parametrize("mode", ["max", "mass"])
    def test_zero_matrix(self, mode):
        np.testing.assert_array_equal(scale_cooc(self._stack(np.zeros((3, 3))), mode).data, 0.0)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            scale_cooc(self._stack(np.ones((2, 2))), "sum")


class TestDftFeature:
    def test_zero_image(self):
        np.testing.assert_array_equal(dft_feature(np.zeros((8, 8, 3))), 0.0)

    def test_impulse_is_flat(self):
        img = np.zeros((8, 8))
        img[4, 4] = 1.0
        np.testing.assert_array_equal(dft_feature(img), 0.0)

    def test_range_endpoints(self, rng):
        f = dft_feature(rng.integers(0, 256, size=(8, 8, 3)))
        assert f.shape == (3, 8, 8)
        assert f.min() == -1.0 and f.max() == 1.0


class TestDirectFeature:
    def test_black_pixel(self):
        f = direct_feature(np.zeros((1, 1, 3)))
        np.testing.assert_allclose(f[:, 0, 0], [-2.1179039, -2.0357143, -1.8044444], atol=1e-6)

    def test_mean_pixel_is_zero(self):
        f = direct_feature((255 * IMAGENET_MEAN)[None, None, :])
        np.testing.assert_allclose(f[:, 0, 0], 0.0, atol=1e-12)

    def test_white_pixel(self):
        f = direct_feature(np.full((1, 1, 3), 255.0))
        np.testing.assert_allclose(f[:, 0, 0], (1 - IMAGENET_MEAN) / IMAGENET_STD)

    def test_needs_three_channels(self):
        with pytest.raises(ValueError):
            direct_feature(np.zeros((2, 2)))
