import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from eigenflow.estimators import CoupledPCA, CoupledSVD
from eigenflow.linalg import make_cross, make_spd, svd_factor, sym_eig
from eigenflow.dynamics import sample_gaussian, sample_pairs


def pca_data(count=20000, seed=3):
    C = make_spd([10.0, 1.0, 0.5], seed=7)
    return sample_gaussian(C, seed=seed, count=count), C


def svd_data(count=20000, seed=4):
    A = make_cross([10.0, 1.0, 0.5], m=4, n=3, seed=0)
    ys, xs = sample_pairs(A, seed=seed, count=count)
    return xs, ys, A


def test_coupled_pca_online_fit_recovers_direction():
    X, C = pca_data()
    est = CoupledPCA(rule="l2", mode="online", gamma0=0.02, seed=1).fit(X)
    spec = sym_eig(C)
    cos = abs(est.component_ @ spec.vectors[:, 0]) / np.linalg.norm(est.component_)
    assert cos > 0.99
    assert est.eigenvalue_ == pytest.approx(spec.values[0], rel=0.15)
    assert est.n_iter_ == X.shape[0]


def test_coupled_pca_averaged_fit():
    X, C = pca_data(count=5000)
    est = CoupledPCA(rule="sum_mod", mode="averaged", seed=1).fit(X)
    emp = X.T @ X / X.shape[0]
    spec = sym_eig(emp)
    cos = abs(est.component_ @ spec.vectors[:, 0]) / np.linalg.norm(est.component_)
    assert cos > 1 - 1e-9
    assert est.component_.sum() == pytest.approx(1.0, abs=1e-8)
    assert est.n_iter_ < 10000


def test_coupled_pca_transform_shape_and_projection():
    X, _ = pca_data(count=3000)
    est = CoupledPCA(rule="l2", mode="averaged", seed=1).fit(X)
    out = est.transform(X[:10])
    assert out.shape == (10, 1)
    assert out[:, 0] == pytest.approx(X[:10] @ est.component_)


def test_coupled_pca_not_fitted_and_bad_shapes():
    est = CoupledPCA()
    with pytest.raises(NotFittedError):
        est.transform(np.ones((3, 2)))
    X, _ = pca_data(count=500)
    est.fit(X)
    with pytest.raises(ValueError):
        est.transform(np.ones((3, 5)))
    with pytest.raises(ValueError):
        CoupledPCA(mode="nope").fit(X)
    with pytest.raises(ValueError):
        CoupledPCA(rule="nope").fit(X)


def test_coupled_pca_sklearn_protocol():
    est = CoupledPCA(rule="sum_mod", gamma0=0.01, seed=9)
    params = est.get_params()
    assert params["rule"] == "sum_mod"
    assert params["gamma0"] == 0.01
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(rule="l2")
    assert est.rule == "l2"


def test_coupled_svd_online_fit():
    X, Y, A = svd_data()
    est = CoupledSVD(rule="l2_simple", mode="online", gamma0=0.02, seed=2).fit(X, Y)
    fac = svd_factor(A)
    cu = abs(est.left_vector_ @ fac.left.vectors[:, 0]) / np.linalg.norm(est.left_vector_)
    cv = abs(est.right_vector_ @ fac.right.vectors[:, 0]) / np.linalg.norm(est.right_vector_)
    assert cu > 0.99 and cv > 0.99
    assert est.singular_value_ == pytest.approx(fac.singulars[0], rel=0.15)
    assert est.rho_ is None


def test_coupled_svd_averaged_sum_rule():
    X, Y, A = svd_data(count=4000)
    est = CoupledSVD(rule="sum_mod", mode="averaged", seed=2).fit(X, Y)
    assert est.left_vector_.sum() == pytest.approx(1.0, abs=1e-8)
    assert est.right_vector_.sum() == pytest.approx(1.0, abs=1e-8)
    assert est.rho_ is not None
    emp = Y.T @ X / X.shape[0]
    fac = svd_factor(emp)
    cu = abs(est.left_vector_ @ fac.left.vectors[:, 0]) / np.linalg.norm(est.left_vector_)
    assert cu > 1 - 1e-9


def test_coupled_svd_transforms():
    X, Y, _ = svd_data(count=4000)
    est = CoupledSVD(rule="l2", mode="averaged", seed=2).fit(X, Y)
    assert est.transform(X[:5]).shape == (5, 1)
    assert est.transform_left(Y[:5]).shape == (5, 1)
    with pytest.raises(ValueError):
        est.transform(Y[:5])
    with pytest.raises(ValueError):
        est.fit(X[:100], Y[:50])
