import numpy as np
import pytest
from scipy import stats

from electrogp import synthetic
from electrogp.embed import LleSettings, lle_1d, reconstruction_weights, rescale_unit, _neighbors
from electrogp.exceptions import DisconnectedGraphError


def test_segment_is_ordered():
    t = np.linspace(0, 1, 10)
    data = np.column_stack([2 * t + 1, -t])
    rho = stats.spearmanr(lle_1d(data, LleSettings(k_neighbors=3)), t)[0]
    assert abs(rho) == pytest.approx(1.0)


def test_noisy_parabola_concordance():
    ds = synthetic.simulate("parabola", 100, 0.05, seed=0)
    tau = stats.kendalltau(lle_1d(ds.y), ds.t)[0]
    # Kendall tau of 0.9 is 95% pairwise concordance.
    assert abs(tau) >= 0.9


def test_three_collinear_points():
    data = np.array([[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]])
    c = lle_1d(data, LleSettings(k_neighbors=2))
    assert min(c[0], c[1]) < c[2] < max(c[0], c[1])


def test_weights_sum_to_one(rng):
    data = rng.standard_normal((30, 3))
    nbrs = _neighbors(data, 5)
    w = reconstruction_weights(data, nbrs, 1e-3)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((w != 0).sum(axis=1) <= 5)


def test_matches_sklearn_up_to_sign():
    sk = pytest.importorskip("sklearn.manifold")
    ds = synthetic.simulate("sine", 60, 0.02, seed=2)
    ours = lle_1d(ds.y, LleSettings(k_neighbors=8, reg=1e-3))
    theirs = sk.LocallyLinearEmbedding(n_neighbors=8, n_components=1, reg=1e-3, eigen_solver="dense").fit_transform(ds.y)[:, 0]
    assert abs(np.corrcoef(ours, theirs)[0, 1]) > 0.999


def test_rotation_translation_invariance(rng):
    ds = synthetic.simulate("parabola", 60, 0.02, seed=3)
    a = lle_1d(ds.y)
    th = 1.1
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    b = lle_1d(ds.y @ rot.T + [5.0, -2.0])
    assert abs(np.corrcoef(a, b)[0, 1]) > 1 - 1e-8


def test_disconnected_graph_names_components():
    data = np.vstack([np.column_stack([np.linspace(0, 1, 6), np.zeros(6)]), np.column_stack([np.linspace(50, 51, 6), np.zeros(6)])])
    with pytest.raises(DisconnectedGraphError) as info:
        lle_1d(data, LleSettings(k_neighbors=3))
    assert len(info.value.components) == 2
    assert sorted(info.value.components[0] + info.value.components[1]) == list(range(12))


def test_duplicate_rows_regularised():
    data = np.array([[0, 0], [0, 0], [1, 1], [2, 2], [3, 3], [4, 4]], dtype=float)
    assert np.all(np.isfinite(lle_1d(data, LleSettings(k_neighbors=3))))


def test_k_must_be_below_n():
    with pytest.raises(ValueError):
        lle_1d(np.random.default_rng(0).standard_normal((5, 2)), LleSettings(k_neighbors=5))


def test_rescale_example():
    np.testing.assert_allclose(rescale_unit([-2, 0, 2]), [1 / 6, 1 / 2, 5 / 6])


def test_rescale_margins_and_ranks(rng):
    c = rng.standard_normal(40)
    out = rescale_unit(c)
    assert out.min() == pytest.approx(1 / 80) and out.max() == pytest.approx(1 - 1 / 80)
    np.testing.assert_array_equal(np.argsort(out), np.argsort(c))


def test_rescale_rejects_constant():
    with pytest.raises(ValueError):
        rescale_unit([1.0, 1.0, 1.0])
