import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netsync.errors import InvalidSize, NonSymmetric
from netsync.graph import Topology, global_coupling_matrix, is_connected, laplacian, spectrum


def random_connected(rng, n):
    """Random weighted graph containing a spanning path, so it is connected."""
    w = rng.uniform(0.1, 2.0, (n, n)) * (rng.random((n, n)) < 0.3)
    perm = rng.permutation(n)
    for a, b in zip(perm[:-1], perm[1:]):
        w[a, b] = rng.uniform(0.1, 2.0)
    w = np.triu(w, 1)
    return Topology(w + w.T)


def test_laplacian_two_nodes():
    topo = Topology.from_edges(2, [(0, 1, 1.0)])
    np.testing.assert_array_equal(laplacian(topo), [[1, -1], [-1, 1]])


def test_laplacian_empty_graph_is_zero():
    np.testing.assert_array_equal(laplacian(Topology(np.zeros((3, 3)))), np.zeros((3, 3)))


def test_laplacian_global_three():
    expected = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], float)
    np.testing.assert_array_equal(laplacian(Topology.global_(3)), expected)


def test_topology_rejects_asymmetric_and_self_loops():
    with pytest.raises(NonSymmetric):
        Topology(np.array([[0, 1.0], [0, 0]]))
    with pytest.raises(ValueError):
        Topology(np.array([[1.0, 1.0], [1.0, 0]]))
    with pytest.raises(ValueError):
        Topology.from_edges(3, [(1, 1, 2.0)])


def test_spectrum_small_cases():
    np.testing.assert_allclose(spectrum(laplacian(Topology.global_(2))).eigenvalues, [0, 2], atol=1e-12)
    np.testing.assert_allclose(spectrum(np.zeros((3, 3))).eigenvalues, [0, 0, 0], atol=0)


def test_spectrum_global_hundred():
    vals = spectrum(laplacian(Topology.global_(100))).eigenvalues
    assert abs(vals[0]) < 1e-9
    np.testing.assert_allclose(vals[1:], 100.0, rtol=1e-12)


def test_spectrum_rejects_nonsymmetric():
    with pytest.raises(NonSymmetric):
        spectrum(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_spectrum_reconstructs(rng):
    L = laplacian(random_connected(rng, 12))
    sp = spectrum(L)
    assert np.all(np.diff(sp.eigenvalues) >= 0)
    recon = sp.eigenvectors @ np.diag(sp.eigenvalues) @ sp.eigenvectors.T
    assert np.linalg.norm(recon - L) / np.linalg.norm(L) < 1e-8
    assert sp.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
    assert np.all(sp.eigenvalues >= -1e-9)
    assert sp.fiedler_value > 0


def test_global_coupling_matrix():
    np.testing.assert_array_equal(global_coupling_matrix(2), [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(global_coupling_matrix(3), laplacian(Topology.global_(3)))
    assert global_coupling_matrix(100)[7, 7] == 99
    with pytest.raises(InvalidSize):
        global_coupling_matrix(1)


def test_is_connected():
    assert is_connected(Topology.from_edges(2, [(0, 1, 1.0)]))
    assert not is_connected(Topology(np.zeros((2, 2))))
    path = Topology.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    assert is_connected(path)
    # path graph eigenvalues 2 - 2 cos(k pi / n)
    assert spectrum(laplacian(path)).fiedler_value == pytest.approx(2 - np.sqrt(2), abs=1e-12)


def test_laplacian_commutes_with_global_matrix(rng):
    for _ in range(100):
        n = int(rng.integers(2, 15))
        L = laplacian(random_connected(rng, n))
        R = global_coupling_matrix(n)
        assert np.linalg.norm(L @ R - R @ L) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_laplacian_rows_sum_to_zero(n, seed):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.exponential(1.0, (n, n)), 1)
    L = laplacian(Topology(w + w.T))
    assert np.max(np.abs(L.sum(axis=1))) < 1e-12
    np.testing.assert_array_equal(L, L.T)


@pytest.mark.parametrize("n", [2, 5, 17])
def test_global_spectrum_structure(n):
    vals = spectrum(laplacian(Topology.global_(n))).eigenvalues
    assert np.sum(np.abs(vals) < 1e-9) == 1
    np.testing.assert_allclose(vals[1:], n, rtol=1e-12)
