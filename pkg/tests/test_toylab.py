import csv

import numpy as np
import pytest

from coocattack.toylab import (
    ToyConfig,
    rounded_match,
    run_toy,
    run_toy_1d,
    run_toy_1d_trials,
    run_toy_2d_census,
)


class TestRunToy1d:
    def test_pointwise_without_noise_never_moves(self):
        run = run_toy_1d([1.0, 2.0, 3.0], [2.0, 3.0, 4.0], "l1_pointwise", 0.0,
                         ToyConfig(max_steps=200))
        assert not run.success
        for pos, _ in run.trajectory:
            np.testing.assert_array_equal(pos, [1.0, 2.0, 3.0])

    @pytest.mark.parametrize("kind", ["l1_pointwise", "l2_pointwise", "l1_pyramid"])
    def test_immediate_success(self, kind):
        run = run_toy_1d([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], kind, 0.01)
        assert run.success and run.steps_to_converge == 0
        assert len(run.trajectory) == 1

    def test_pyramid_converges(self):
        run = run_toy_1d([1.0, 2.0, 3.0], [2.0, 3.0, 4.0], "l1_pyramid", 0.01)
        assert run.success and run.steps_to_converge < 100
        assert rounded_match(run.trajectory[-1][0], [2, 3, 4])

    def test_noiseless_is_deterministic(self):
        cfg = ToyConfig(max_steps=100)
        a = run_toy_1d([1.0, 5.0, 3.0], [2.0, 3.0, 4.0], "l1_pyramid", 0.0, cfg)
        b = run_toy_1d([1.0, 5.0, 3.0], [2.0, 3.0, 4.0], "l1_pyramid", 0.0, ToyConfig(max_steps=100, seed=9))
        assert len(a.trajectory) == len(b.trajectory)
        for (p, l), (q, m) in zip(a.trajectory, b.trajectory):
            np.testing.assert_array_equal(p, q)
            assert l == m

    def test_trajectory_bounded_and_clamped(self):
        cfg = ToyConfig(max_steps=50)
        run = run_toy_1d([0.0, 7.0, 3.0], [1.0, 1.0, 1.0], "l1_pointwise", 0.5, cfg)
        assert len(run.trajectory) <= cfg.max_steps + 1
        for pos, _ in run.trajectory:
            assert pos.min() >= 0.0 and pos.max() <= 7.0

    def test_trials_census(self):
        rep = run_toy_1d_trials([1.0, 2.0, 3.0], [2.0, 3.0, 4.0], "l1_pyramid", 0.01, range(10))
        assert rep.trials == 10 and rep.successes == 10
        assert len(rep.steps) == 10 and rep.median_steps_to_converge is not None

    def test_write_csv(self, tmp_path):
        run = run_toy_1d([1.0, 2.0, 3.0], [2.0, 3.0, 4.0], "l1_pyramid", 0.01)
        path = tmp_path / "traj.csv"
        run.write_csv(path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["step", "x0", "x1", "x2", "loss"]
        assert len(rows) == len(run.trajectory) + 1

    def test_requires_vectors(self):
        with pytest.raises(ValueError):
            run_toy_1d([[1.0, 2.0]], [[1.0, 2.0]])
        with pytest.raises(ValueError):
            run_toy([1.0, 2.0], [1.0, 2.0, 3.0])


class TestSplitting:
    SRC = np.array([[3.0, 3.0], [3.0, 3.0], [1.0, 6.0]])
    TGT = np.array([[2.0, 3.0], [4.0, 3.0], [1.0, 6.0]])

    def test_coincident_points_stay_together_without_noise(self):
        run = run_toy(self.SRC, self.TGT, "l1_pyramid", 0.0, ToyConfig(max_steps=300))
        final = run.trajectory[-1][0]
        assert not run.success
        np.testing.assert_array_equal(final[0], final[1])

    def test_noise_splits_them(self):
        split = 0
        for seed in range(10):
            run = run_toy(self.SRC, self.TGT, "l1_pyramid", 0.01, ToyConfig(seed=seed))
            final = run.trajectory[-1][0]
            split += np.abs(final[0] - final[1]).max() > 0.5
        assert split > 5


class TestCensus2d:
    def test_same_distribution_immediate(self):
        rep = run_toy_2d_census(trials=20, same_distribution=True)
        assert rep.successes == 20 and set(rep.steps) == {0}

    def test_small_census(self):
        rep = run_toy_2d_census(trials=5, seed=3)
        assert rep.successes <= rep.trials == 5
        assert rep.to_dict()["trials"] == 5

    def test_grid_check(self):
        with pytest.raises(ValueError):
            run_toy_2d_census(trials=1, grid=1)

    def test_rounded_match_multiset(self):
        assert rounded_match([[1.2, 2.0], [0.0, 0.4]], [[0, 0], [1, 2]])
        assert not rounded_match([1.6, 2.0], [1.0, 2.0])
