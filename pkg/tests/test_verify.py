import numpy as np

from coocattack.kernels import InterpKernel
from coocattack.verify import emd_oracle, gradient_check, integer_equivalence, verify


class LeakyTriangle(InterpKernel):
    """Deliberately broken: peak of 0.9 instead of 1 at integers."""

    name = "leaky_triangle"

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=np.float64))
        return np.where(x < 1.0, 0.9 * (1.0 - x), 0.0)

    def deriv(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) < 1.0, -0.9 * np.sign(x), 0.0)


class TestVerify:
    def test_all_suites_pass(self):
        report = verify(quick=True)
        assert report["all_passed"]
        assert set(report) == {"integer_equivalence", "mass_conservation", "gradient_check",
                               "emd_oracle", "all_passed"}

    def test_corrupted_kernel_fails_integer_equivalence(self):
        report = integer_equivalence((LeakyTriangle(),), n_images=5)
        assert not report["passed"] and report["failures"] == report["checks"]

    def test_gradient_suite_error_bound(self):
        report = gradient_check(n_instances=3)
        assert report["passed"]
        assert max(report["max_rel_error"].values()) < 1e-4

    def test_emd_suite(self):
        assert emd_oracle(n_pairs=20)["mismatches"] == 0
