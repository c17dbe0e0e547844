"""Node models and the open-loop coupled network.

Each node obeys ``x' = f(x) + G(x) dgamma + u`` plus diffusive coupling
``-sum_j l_ij H x_j``. Batched helpers operate on node-stacked arrays of
shape ``(N, n)`` so network right-hand sides avoid Python loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeEnvelope
from .graph import Topology, laplacian

LORENZ_G_SCALE = 8.0 / 3.0


class SystemModel:
    """Per-node system interface: nominal field ``f`` and mismatch channel ``G``.

    Subclasses provide ``f`` (R^n -> R^n) and ``G`` (R^n -> R^{n x m}). The
    batched methods loop over rows by default; override them when a
    vectorised form exists.
    """

    state_dim: int
    mismatch_dim: int

    def f(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def G(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def f_rows(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.f(x) for x in X]).reshape(X.shape[0], self.state_dim)

    def G_apply(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Row-wise ``G(x_i) @ v_i``."""
        return np.array([self.G(x) @ v for x, v in zip(X, V)]).reshape(X.shape[0], self.state_dim)

    def GT_apply(self, X: np.ndarray, E: np.ndarray) -> np.ndarray:
        """Row-wise ``G(x_i).T @ e_i``."""
        return np.array([self.G(x).T @ e for x, e in zip(X, E)]).reshape(
            X.shape[0], self.mismatch_dim
        )


@dataclass(frozen=True)
class LorenzParams:
    a: float = 10.0
    b: float = 28.0
    c: float = 8.0 / 3.0

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


def lorenz_f(x, p: LorenzParams = LorenzParams()) -> np.ndarray:
    x1, x2, x3 = np.asarray(x, dtype=float)
    return np.array([p.a * (x2 - x1), p.b * x1 - x2 - x1 * x3, x1 * x2 - p.c * x3])


def lorenz_G(x) -> np.ndarray:
    """Mismatch channel ``diag(x2 - x1, x1, -(8/3) x3)``."""
    x1, x2, x3 = np.asarray(x, dtype=float)
    return np.diag([x2 - x1, x1, -LORENZ_G_SCALE * x3])


class LorenzSystem(SystemModel):
    state_dim = 3
    mismatch_dim = 3

    def __init__(self, params: LorenzParams = LorenzParams()):
        self.params = params

    def __repr__(self):
        return f"LorenzSystem({self.params!r})"

    def f(self, x):
        return lorenz_f(x, self.params)

    def G(self, x):
        return lorenz_G(x)

    def f_rows(self, X):
        p = self.params
        x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
        return np.column_stack((p.a * (x2 - x1), p.b * x1 - x2 - x1 * x3, x1 * x2 - p.c * x3))

    def _G_diag(self, X):
        return np.column_stack((X[:, 1] - X[:, 0], X[:, 0], -LORENZ_G_SCALE * X[:, 2]))

    def G_apply(self, X, V):
        return self._G_diag(X) * V

    def GT_apply(self, X, E):
        return self._G_diag(X) * E


@dataclass(frozen=True)
class MismatchSet:
    """Per-node mismatch vectors inside the box ``[-envelope, envelope]``."""

    per_node: np.ndarray
    envelope: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        per_node = np.atleast_2d(np.asarray(self.per_node, dtype=float))
        envelope = np.asarray(self.envelope, dtype=float).ravel()
        if per_node.shape[1] != envelope.size:
            raise DimensionMismatch("mismatch vectors and envelope differ in length")
        if np.any(envelope < 0):
            raise NegativeEnvelope("envelope must be componentwise non-negative")
        if np.any(np.abs(per_node) > envelope):
            raise ValueError("mismatch vector outside its envelope")
        object.__setattr__(self, "per_node", per_node)
        object.__setattr__(self, "envelope", envelope)

    @property
    def n_nodes(self) -> int:
        return self.per_node.shape[0]

    @classmethod
    def zeros(cls, n_nodes: int, mismatch_dim: int) -> "MismatchSet":
        return cls(np.zeros((n_nodes, mismatch_dim)), np.zeros(mismatch_dim))


def sample_mismatches(envelope, n_nodes: int, seed: int) -> MismatchSet:
    """Draw each component uniformly from ``[-envelope[k], envelope[k]]``."""
    envelope = np.asarray(envelope, dtype=float).ravel()
    if np.any(envelope < 0):
        raise NegativeEnvelope("envelope must be componentwise non-negative")
    rng = np.random.default_rng(seed)
    draws = rng.uniform(-1.0, 1.0, size=(n_nodes, envelope.size)) * envelope
    return MismatchSet(draws, envelope, seed)


def check_coupling(H, state_dim: int) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.shape != (state_dim, state_dim):
        raise DimensionMismatch(f"H must be {state_dim}x{state_dim}, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("H must be finite")
    return H


def _node_rows(x, n_nodes: int, state_dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size != n_nodes * state_dim:
        raise DimensionMismatch(
            f"state has {x.size} entries, expected {n_nodes} nodes x {state_dim}"
        )
    return x.reshape(n_nodes, state_dim)


def open_loop_rhs(topo: Topology, H, system: SystemModel, mismatch: MismatchSet):
    """Return ``rhs(t, x)`` for the uncontrolled network on flat states.

    The Laplacian and coupling matrix are fixed at construction time.
    """
    N, n = topo.n_nodes, system.state_dim
    H = check_coupling(H, n)
    if mismatch.per_node.shape != (N, system.mismatch_dim):
        raise DimensionMismatch("mismatch set does not match network size or mismatch_dim")
    L = laplacian(topo)
    HT = H.T.copy()
    dgamma = mismatch.per_node

    def rhs(t, x):
        X = _node_rows(x, N, n)
        dX = system.f_rows(X) + system.G_apply(X, dgamma) - (L @ X) @ HT
        return dX.ravel()

    return rhs


def network_rhs_open_loop(x, topo: Topology, H, system: SystemModel, mismatch: MismatchSet):
    """Stacked derivative of every node with no control input."""
    return open_loop_rhs(topo, H, system, mismatch)(0.0, x)


def average_error(x, state_dim: int | None = None):
    """Deviation of each node from the network mean.

    Parameters
    ----------
    x : array, shape (N, n) or (N*n,)
        Node states; flat input needs ``state_dim``.

    Returns
    -------
    errors : ndarray, shape (N, n)
    norm : float
        ``sqrt(sum_i |e_i|^2)``.
    """
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        if state_dim is None:
            raise DimensionMismatch("flat state needs state_dim")
        X = X.reshape(-1, state_dim)
    E = X - X.mean(axis=0)
    return E, float(np.sqrt(np.sum(E * E)))
