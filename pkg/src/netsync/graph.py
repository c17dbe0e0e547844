"""Undirected weighted topologies, their Laplacians and spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSize, NonSymmetric

SYMMETRY_TOL = 1e-9
CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class Topology:
    """Symmetric weighted adjacency with zero diagonal.

    ``weights[i, j]`` is the strength of the edge from node j to node i.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise InvalidSize(f"weights must be a non-empty square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-loops are not allowed (nonzero diagonal)")
        if not np.array_equal(w, w.T):
            raise NonSymmetric("weights must be symmetric (undirected network)")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def global_(cls, n_nodes: int, weight: float = 1.0) -> "Topology":
        """All-to-all network with a uniform edge weight."""
        if n_nodes < 1:
            raise InvalidSize("n_nodes must be positive")
        w = np.full((n_nodes, n_nodes), float(weight))
        np.fill_diagonal(w, 0.0)
        return cls(w)

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Topology":
        """Build from ``(i, j, weight)`` triples; each edge is stored both ways."""
        if n_nodes < 1:
            raise InvalidSize("n_nodes must be positive")
        w = np.zeros((n_nodes, n_nodes))
        for edge in edges:
            i, j, a = edge
            i, j = int(i), int(j)
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise InvalidSize(f"edge ({i}, {j}) out of range for {n_nodes} nodes")
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            w[i, j] = w[j, i] = float(a)
        return cls(w)


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def fiedler_value(self) -> float:
        if self.eigenvalues.size < 2:
            return 0.0
        return float(self.eigenvalues[1])

    def nonzero(self, tol: float = CONNECTIVITY_TOL) -> np.ndarray:
        """Eigenvalues above the zero threshold."""
        return self.eigenvalues[self.eigenvalues > tol]


def laplacian(topo: Topology) -> np.ndarray:
    """``L = diag(row sums) - A``; rows sum to zero."""
    w = topo.weights
    return np.diag(w.sum(axis=1)) - w


def spectrum(L) -> LaplacianSpectrum:
    """Ascending eigen-decomposition of a symmetric Laplacian.

    Raises
    ------
    NonSymmetric
        If ``L`` deviates from its transpose by more than 1e-9 (scaled to
        the matrix magnitude when that exceeds one).
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NonSymmetric(f"expected a square matrix, got shape {L.shape}")
    scale = max(1.0, float(np.max(np.abs(L), initial=0.0)))
    if np.max(np.abs(L - L.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NonSymmetric("Laplacian is not symmetric within tolerance")
    vals, vecs = np.linalg.eigh(0.5 * (L + L.T))
    return LaplacianSpectrum(vals, vecs)


def global_coupling_matrix(n: int) -> np.ndarray:
    """Laplacian of the unit-weight complete graph, ``n I - 1 1^T``."""
    if n < 2:
        raise InvalidSize("global coupling matrix needs at least 2 nodes")
    return n * np.eye(n) - np.ones((n, n))


def is_connected(topo: Topology) -> bool:
    return spectrum(laplacian(topo)).fiedler_value > CONNECTIVITY_TOL
