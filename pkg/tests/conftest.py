import numpy as np
import pytest

from laekit import synthetic
from laekit.spectra import haar_orthogonal


@pytest.fixture
def make_data():
    """Factory for synthetic data with a default well-separated spectrum."""

    def _make(m, n=None, spectrum=None, seed=0):
        if n is None:
            n = m + 2
        if spectrum is None:
            spectrum = np.arange(m, 0, -1.0)
        return synthetic(m, n, spectrum, seed=seed)

    return _make


@pytest.fixture
def make_frame():
    """Factory for well-conditioned frames: orthonormal or condition <= 4."""

    def _make(k, ell, orthonormal, rng):
        if ell == 0:
            return np.zeros((k, 0))
        O1 = haar_orthogonal(k, rng)[:, :ell]
        if orthonormal:
            return O1
        return O1 @ np.diag(rng.uniform(0.5, 2.0, ell)) @ haar_orthogonal(ell, rng)

    return _make
