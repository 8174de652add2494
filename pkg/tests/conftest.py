import numpy as np
import pytest
from hypothesis import settings

from ouarea.noise import CovarianceSpec, PathGrid, sample_qfbm

settings.register_profile("suite", deadline=None, max_examples=40)
settings.load_profile("suite")


@pytest.fixture
def brownian_path():
    def make(seed=0, level=6, modes=2, horizon=1.0, hurst=0.5):
        cov = CovarianceSpec.power_law(modes)
        return sample_qfbm(cov, hurst, level, horizon, seed=seed)
    return make


@pytest.fixture
def make_grid():
    """Wrap explicit value arrays into a PathGrid (synthetic provenance)."""
    def make(values, step, hurst=0.5):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        n_cells = values.shape[1] - 1
        level = int(np.log2(n_cells)) if (n_cells & (n_cells - 1)) == 0 else None
        return PathGrid(horizon=step * n_cells, step=step, hurst=hurst, values=values,
                        seed=0, generator_tag="synthetic", level=level)
    return make
