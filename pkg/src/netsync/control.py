"""Reference tracking with pinning feedback and adaptive mismatch compensation.

Node ``i`` receives ``u_i = -c_i H (x_i - s) - G(x_i) gamma_hat_i`` while its
estimate evolves as ``gamma_hat_i' = k_i G(x_i)^T (x_i - s)``; the reference
``s`` follows the nominal field. Network, estimates and reference are
integrated as one augmented state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import MismatchSet, SystemModel, check_coupling
from .errors import DimensionMismatch, MissingReference
from .graph import Topology, laplacian


@dataclass(frozen=True)
class ControllerConfig:
    pin_gains: np.ndarray
    estimator_gains: np.ndarray
    reference_init: np.ndarray
    estimate_init: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.pin_gains, dtype=float).ravel()
        k = np.asarray(self.estimator_gains, dtype=float).ravel()
        g0 = np.atleast_2d(np.asarray(self.estimate_init, dtype=float))
        s0 = np.asarray(self.reference_init, dtype=float).ravel()
        if c.size != k.size or g0.shape[0] != c.size:
            raise DimensionMismatch("gain vectors and initial estimates differ in node count")
        if np.any(c < 0):
            raise ValueError("pinning gains must be non-negative")
        if np.any(k <= 0):
            raise ValueError("estimator gains must be positive")
        for name, v in (("pin_gains", c), ("estimator_gains", k), ("reference_init", s0), ("estimate_init", g0)):
            object.__setattr__(self, name, v)

    @property
    def n_nodes(self) -> int:
        return self.pin_gains.size

    @classmethod
    def uniform(cls, n_nodes, c, k, reference_init, mismatch_dim, estimate_init=None):
        """Same gains on every node; estimates start at zero unless given."""
        if estimate_init is None:
            estimate_init = np.zeros((n_nodes, mismatch_dim))
        return cls(
            np.broadcast_to(np.asarray(c, float), (n_nodes,)),
            np.broadcast_to(np.asarray(k, float), (n_nodes,)),
            reference_init,
            np.broadcast_to(np.asarray(estimate_init, float), (n_nodes, mismatch_dim)),
        )


@dataclass
class AugmentedState:
    x: np.ndarray
    gamma_hat: np.ndarray
    s: np.ndarray | None

    @property
    def n_nodes(self) -> int:
        return self.x.shape[0]

    def pack(self) -> np.ndarray:
        if self.s is None:
            raise MissingReference("cannot pack a state without reference")
        return np.concatenate((self.x.ravel(), self.gamma_hat.ravel(), self.s))

    @classmethod
    def unpack(cls, z, n_nodes: int, state_dim: int, mismatch_dim: int) -> "AugmentedState":
        z = np.asarray(z, dtype=float)
        nx, ng = n_nodes * state_dim, n_nodes * mismatch_dim
        if z.size != nx + ng + state_dim:
            raise DimensionMismatch(f"augmented state has {z.size} entries, expected {nx + ng + state_dim}")
        return cls(
            z[:nx].reshape(n_nodes, state_dim),
            z[nx : nx + ng].reshape(n_nodes, mismatch_dim),
            z[nx + ng :],
        )


def initial_state(x0, ctl: ControllerConfig) -> AugmentedState:
    X = np.atleast_2d(np.asarray(x0, dtype=float))
    return AugmentedState(X, ctl.estimate_init.copy(), ctl.reference_init.copy())


def reference_rhs(s, system: SystemModel) -> np.ndarray:
    return system.f(np.asarray(s, dtype=float))


def control_input(x_i, s, gamma_hat_i, c_i: float, H, system: SystemModel) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=float)
    H = check_coupling(H, system.state_dim)
    return -c_i * H @ (x_i - s) - system.G(x_i) @ np.asarray(gamma_hat_i, dtype=float)


def estimator_rhs(x_i, s, k_i: float, system: SystemModel) -> np.ndarray:
    x_i = np.asarray(x_i, dtype=float)
    return k_i * system.G(x_i).T @ (x_i - np.asarray(s, dtype=float))


def closed_loop_rhs(topo: Topology, H, system: SystemModel, mismatch: MismatchSet, ctl: ControllerConfig):
    """Return ``rhs(t, z)`` on packed augmented states."""
    N, n, m = topo.n_nodes, system.state_dim, system.mismatch_dim
    H = check_coupling(H, n)
    if mismatch.per_node.shape != (N, m):
        raise DimensionMismatch("mismatch set does not match network size or mismatch_dim")
    if ctl.n_nodes != N or ctl.estimate_init.shape[1] != m or ctl.reference_init.size != n:
        raise DimensionMismatch("controller config does not match the network")
    L = laplacian(topo)
    HT = H.T.copy()
    c = ctl.pin_gains[:, None]
    k = ctl.estimator_gains[:, None]
    dgamma = mismatch.per_node
    nx, ng = N * n, N * m

    def rhs(t, z):
        X = z[:nx].reshape(N, n)
        gh = z[nx : nx + ng].reshape(N, m)
        s = z[nx + ng :]
        E = X - s
        dX = (
            system.f_rows(X)
            + system.G_apply(X, dgamma - gh)
            - (c * E) @ HT
            - (L @ X) @ HT
        )
        dgh = k * system.GT_apply(X, E)
        return np.concatenate((dX.ravel(), dgh.ravel(), system.f(s)))

    return rhs


def network_rhs_closed_loop(
    z: AugmentedState,
    topo: Topology,
    H,
    system: SystemModel,
    mismatch: MismatchSet,
    ctl: ControllerConfig,
) -> AugmentedState:
    """Time derivative of the augmented state, in the same layout."""
    if z.s is None:
        raise MissingReference("closed loop needs a reference state")
    dz = closed_loop_rhs(topo, H, system, mismatch, ctl)(0.0, z.pack())
    return AugmentedState.unpack(dz, topo.n_nodes, system.state_dim, system.mismatch_dim)


def reference_error(z: AugmentedState):
    """Per-node ``x_i - s`` and the stacked norm."""
    if z.s is None:
        raise MissingReference("state has no reference")
    E = np.atleast_2d(z.x) - z.s
    return E, float(np.sqrt(np.sum(E * E)))


def estimation_error(z: AugmentedState, mismatch: MismatchSet) -> np.ndarray:
    """``gamma_i - gamma_hat_i`` per node."""
    return mismatch.per_node - z.gamma_hat


def lyapunov_value(z: AugmentedState, mismatch: MismatchSet, ctl: ControllerConfig) -> float:
    """``1/2 sum |x_i - s|^2 + sum |gamma_err_i|^2 / (2 k_i)``."""
    _, e_norm = reference_error(z)
    gt = estimation_error(z, mismatch)
    return 0.5 * e_norm**2 + float(np.sum(np.sum(gt * gt, axis=1) / (2.0 * ctl.estimator_gains)))


def gain_norm(x_i, c_i: float, k_i: float, H, system: SystemModel) -> float:
    """Spectral norm of ``c_i H + k_i G(x_i) G(x_i)^T``."""
    G = system.G(np.asarray(x_i, dtype=float))
    return float(np.linalg.norm(c_i * np.asarray(H, float) + k_i * G @ G.T, 2))
