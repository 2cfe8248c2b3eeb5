"""Adversarial matching of co-occurrence and frequency-domain image statistics."""

__version__ = "0.1.0"

from .attack import AttackConfig, AttackResult, cooc_distance, image_l1, run_attack, run_reverse_attack
from .dft_attack import DftAttackConfig, dft_attack, dft_solve
from .features import (
    CROSSBAND_SIX,
    CoocStack,
    PairGeometry,
    cooc_discrete,
    cooc_multi,
    dft_feature,
    direct_feature,
    parse_geometry,
    scale_cooc,
)
from .kernels import RAISED_COSINE, TRIANGLE, get_kernel
from .pairing import build_pairing, emd1d, rgb_hist1d
from .softhist import PyramidSpec, pyramid_loss, pyramid_targets, soft_cooc, soft_cooc_grad
from .toylab import ToyConfig, run_toy_1d, run_toy_2d_census
from .verify import verify

__all__ = [
    "AttackConfig", "AttackResult", "cooc_distance", "image_l1", "run_attack", "run_reverse_attack",
    "DftAttackConfig", "dft_attack", "dft_solve",
    "CROSSBAND_SIX", "CoocStack", "PairGeometry", "cooc_discrete", "cooc_multi", "dft_feature",
    "direct_feature", "parse_geometry", "scale_cooc",
    "RAISED_COSINE", "TRIANGLE", "get_kernel",
    "build_pairing", "emd1d", "rgb_hist1d",
    "PyramidSpec", "pyramid_loss", "pyramid_targets", "soft_cooc", "soft_cooc_grad",
    "ToyConfig", "run_toy_1d", "run_toy_2d_census",
    "verify",
]
