import warnings

import numpy as np
import pytest

from qlitho import ModeSpectrum, OpticalContext


@pytest.fixture
def ctx():
    # dimensionless units: lambda = 1, c = 1, omega = 2 pi
    return OpticalContext.from_wavelength(1.0)


@pytest.fixture
def narrow_mode():
    return ModeSpectrum.gaussian(1.0, 0.02)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _strict_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        yield
