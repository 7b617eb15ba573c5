import numpy as np
import pytest
from hypothesis import settings

from svbsc import bermap as bm
from svbsc import codec as cd
from svbsc.dataset import geometric_profile, synth_gaussian

# Property suites run at least a thousand examples each.
settings.register_profile("thorough", max_examples=1000, deadline=None)
settings.load_profile("thorough")


@pytest.fixture(scope="session")
def quick_bermap():
    """Coarse, cheap map for tests that only need plausible thresholds."""
    return bm.calibrate(snr_grid=np.arange(-10.0, 40.5, 1.0), bits_per_point=20_000, seed=5)


@pytest.fixture(scope="session")
def toy_data():
    lam = geometric_profile(0.02, 0.8, 16)
    return synth_gaussian(2000, 64, lam, seed=1).with_split(0.75, 0.0, seed=1)


@pytest.fixture(scope="session")
def toy_profile():
    return cd.preset_profile("code3", n_source=64, channel_uses=4)


@pytest.fixture(scope="session")
def toy_ladder(toy_data, toy_profile):
    return cd.train_ladder(toy_data.subset("train"), toy_profile)


@pytest.fixture(scope="session")
def toy_baseline(toy_data, toy_profile):
    return cd.train_baseline(toy_data.subset("train"), toy_profile)
