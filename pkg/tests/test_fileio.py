import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coocattack.features import CROSSBAND_SIX, cooc_multi, scale_cooc
from coocattack.fileio import (
    list_pngs,
    load_png,
    read_cooc,
    save_png,
    write_cooc,
    write_cooc_csv,
)


class TestPng:
    @settings(max_examples=20, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9), st.sampled_from([1, 3]))))
    def test_lossless_round_trip(self, tmp_path_factory, img):
        path = tmp_path_factory.mktemp("png") / "x.png"
        save_png(path, img)
        once = load_png(path)
        np.testing.assert_array_equal(once, img)
        save_png(path, once)
        np.testing.assert_array_equal(load_png(path), img)
        if img.shape[2] == 1:
            save_png(path, img[..., 0])
            np.testing.assert_array_equal(load_png(path), img)

    def test_rejects_other_formats(self, tmp_path):
        path = tmp_path / "x.jpg"
        path.write_bytes(b"not an image")
        with pytest.raises(ValueError):
            load_png(path)

    def test_rejects_out_of_range(self, tmp_path):
        with pytest.raises(ValueError):
            save_png(tmp_path / "x.png", np.full((2, 2), 300))

    def test_creates_parent_and_lists(self, tmp_path):
        save_png(tmp_path / "a" / "2.png", np.zeros((2, 2), np.uint8))
        save_png(tmp_path / "a" / "1.png", np.zeros((2, 2), np.uint8))
        (tmp_path / "a" / "z.txt").write_text("")
        assert [p.name for p in list_pngs(tmp_path / "a")] == ["1.png", "2.png"]


class TestCooc:
    def test_binary_round_trip(self, tmp_path, rng):
        stack = scale_cooc(cooc_multi(rng.integers(0, 256, (8, 8, 3)), CROSSBAND_SIX), "max")
        write_cooc(tmp_path / "m.cooc", stack)
        again = read_cooc(tmp_path / "m.cooc")
        np.testing.assert_array_equal(again.data, stack.data)
        assert [(g.label(), cp) for g, cp in again.pairs] == [(g.label(), cp) for g, cp in stack.pairs]

    def test_corrupt_file(self, tmp_path, rng):
        path = tmp_path / "m.cooc"
        write_cooc(path, cooc_multi(rng.integers(0, 256, (4, 4)), CROSSBAND_SIX[3:]))
        data = path.read_bytes()
        path.write_bytes(b"XXXX" + data[4:])
        with pytest.raises(ValueError):
            read_cooc(path)
        path.write_bytes(data + b"\0")
        with pytest.raises(ValueError):
            read_cooc(path)

    def test_csv_matches_nonzeros(self, tmp_path, rng):
        stack = cooc_multi(rng.integers(0, 256, (5, 5, 3)), CROSSBAND_SIX[:1])
        write_cooc_csv(tmp_path / "m.csv", stack)
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "pair,i,j,value"
        rebuilt = np.zeros_like(stack.data)
        for line in lines[1:]:
            p, i, j, v = line.split(",")
            rebuilt[int(p), int(i), int(j)] = float(v)
        np.testing.assert_array_equal(rebuilt, stack.data)
