import numpy as np
import pytest

from electrogp import model, synthetic


@pytest.fixture(scope="session")
def parabola_data():
    return synthetic.simulate("parabola", 100, 0.05, seed=0)


@pytest.fixture(scope="session")
def parabola_model(parabola_data):
    return model.fit_best(parabola_data.y)


@pytest.fixture(scope="session")
def small_model():
    """Cheap 2-D fit used where only a valid model is needed."""
    ds = synthetic.simulate("arc", 30, 0.03, seed=4)
    return model.fit(ds.y, scg_settings=model.ScgSettings(max_iters=200))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
