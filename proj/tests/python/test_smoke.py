import json

import numpy as np
import pytest

import bhmds


def test_geometry_roundtrip():
    rng = np.random.default_rng(0)
    V = rng.normal(size=(10, 3))
    X = bhmds.exp_origin(V)
    assert X.shape == (10, 4)
    lorentz = -X[:, 0] ** 2 + (X[:, 1:] ** 2).sum(axis=1)
    np.testing.assert_allclose(lorentz, -1.0, atol=1e-9)
    np.testing.assert_allclose(bhmds.log_origin(X), V, atol=1e-9)
    D = bhmds.pairwise_distances(X, kappa=4.0)
    np.testing.assert_allclose(D, bhmds.pairwise_distances(X, 1.0) / 2.0)
    assert (np.linalg.norm(bhmds.poincare(X), axis=1) < 1).all()


def test_tree_paths():
    edges = bhmds.balanced_tree(13, 3)
    D = bhmds.shortest_paths(edges, 13)
    assert D[0, 12] == 2
    assert (D == D.T).all()


def test_embed_simulated():
    sim = bhmds.simulate(20, p=2, sigma=0.5, seed=3)
    fit = bhmds.embed(sim["observed"], p=2, kappa=1.0, iters=600, burnin=200, seed=1)
    assert fit["delta_hat"].shape == (20, 20)
    assert fit["stress_hat"] == pytest.approx(bhmds.stress(sim["observed"], fit["delta_hat"]))
    assert (fit["ci_upper"] >= fit["ci_lower"]).all()
    assert 0 < fit["sigma2_hat"]


def test_curvature_profile():
    rng = np.random.default_rng(1)
    D = bhmds.pairwise_distances(bhmds.exp_origin(rng.normal(size=(25, 2))), 1.0)
    kappa, grid, stress = bhmds.estimate_curvature(D, 2, [0.25, 0.5, 1.0, 2.0, 4.0])
    assert kappa == 1.0
    assert len(stress) == 5


def test_errors_raise():
    with pytest.raises(bhmds.BhmdsError):
        bhmds.stress(np.zeros((2, 2)), np.ones((2, 2)))
    with pytest.raises(bhmds.BhmdsError):
        bhmds.embed(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_cli_in_process(tmp_path):
    sim = bhmds.simulate(6, seed=2)
    path = tmp_path / "d.csv"
    np.savetxt(path, sim["observed"], delimiter=",")
    code = bhmds.cli(["metrics", "--input", str(path), "--estimate", str(path), "--out", str(tmp_path / "m")])
    assert code == 0
    summary = json.loads((tmp_path / "m" / "summary.json").read_text())
    assert summary["stress"] == 0.0
