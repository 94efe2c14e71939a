import numpy as np
import pytest

from derdcodec.energy_model import (
    BLOCK_SIZES, COMPONENTS, MODE_CLASSES, FeatureCounts, SpecificEnergyProfile,
)
from derdcodec.frames import Frame


def make_profile(rng=None, scale=1e-6, name="test profile"):
    """Random strictly-positive profile; deterministic given the rng."""
    rng = rng or np.random.default_rng(0)
    def r():
        return float(rng.uniform(0.5, 2.0) * scale)
    return SpecificEnergyProfile(
        e0=r(), e_slice=r(),
        e_mode_size={(c, s): r() for c in MODE_CLASSES for s in BLOCK_SIZES},
        e_comp_size={(c, s): r() for c in COMPONENTS for s in BLOCK_SIZES},
        e_coeff=r(), e_g1=r(), e_val=r(), e_csbf=r(), e_nompm=r(), e_tsf=r(),
        name=name,
    )


def make_counts(rng=None, hi=1000):
    rng = rng or np.random.default_rng(1)
    def c(h=hi):
        return int(rng.integers(0, h))
    n_coeff = c()
    return FeatureCounts(
        n_slice=c(8),
        n_mode_size={(cl, s): c() for cl in MODE_CLASSES for s in BLOCK_SIZES},
        n_comp_size={(cl, s): c() for cl in COMPONENTS for s in BLOCK_SIZES},
        n_coeff=n_coeff,
        n_g1=int(rng.integers(0, n_coeff + 1)),
        sum_log2_val=float(rng.uniform(0, 4) * n_coeff),
        n_csbf=c(),
        n_nompm=c(),
        n_tsf=c(),
    )


def make_frame(width=64, height=64, seed=0, kind="gradient"):
    """Small deterministic test frame with non-trivial content on all planes."""
    rng = np.random.default_rng(seed)
    if kind == "gradient":
        y = np.linspace(16, 235, width)[None, :].repeat(height, 0)
    elif kind == "noise":
        y = rng.uniform(16, 235, (height, width))
    else:
        raise ValueError(kind)
    y = np.clip(np.rint(y) + rng.integers(-2, 3, (height, width)), 0, 255)
    u = np.clip(100 + 40 * np.linspace(0, 1, width // 2)[None, :]
                + rng.integers(-2, 3, (height // 2, width // 2)), 0, 255)
    v = np.clip(140 - 30 * np.linspace(0, 1, height // 2)[:, None]
                + rng.integers(-2, 3, (height // 2, width // 2)), 0, 255)
    return Frame(y.astype(np.uint8), u.astype(np.uint8), v.astype(np.uint8))


@pytest.fixture(scope="session")
def profile():
    return make_profile()


@pytest.fixture(scope="session")
def small_frame():
    return make_frame(64, 64, seed=7)
