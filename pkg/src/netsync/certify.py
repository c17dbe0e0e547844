"""Stability certificates for mismatched networks.

Covers the quadratic bound matrices ``F`` (one-sided Lipschitz bound on the
node field) and ``Gamma`` (mismatch energy bound), the margin ``lambda*``
with the resulting ultimate bound on the deviation from the average
trajectory, and the Kronecker feasibility test for pinned, adaptively
compensated networks. Definiteness is always judged on symmetric parts.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import LORENZ_G_SCALE, LorenzParams, SystemModel
from .errors import (
    DimensionMismatch,
    Disconnected,
    InfeasibleCertificate,
    NonSquare,
    NonSymmetric,
)
from .graph import CONNECTIVITY_TOL, LaplacianSpectrum, Topology, laplacian, spectrum

DEFINITE_TOL = 1e-9
VALIDATION_SHARD = 10_000

PUBLISHED_BOX = (20.0, 25.0, 50.0)
PUBLISHED_FIT = (0.957, 3.091)
# Matrices as printed for the Lorenz example; they do not follow from the
# box construction below and are only used for figure replication.
PUBLISHED_F = np.array([[20.42, 10.0, 0.0], [28.0, 22.5, 0.0], [0.0, 0.0, 38.22]])
PUBLISHED_GAMMA = np.diag([212.9, 400.0, 2500.0])


@dataclass(frozen=True)
class ValidationDomain:
    """Box ``|x_j| <= bounds[j]``."""

    bounds: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.bounds, dtype=float).ravel()
        if k.size == 0 or np.any(k < 0) or not np.all(np.isfinite(k)):
            raise ValueError("box bounds must be finite and non-negative")
        object.__setattr__(self, "bounds", k)

    @property
    def dim(self) -> int:
        return self.bounds.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=(size, self.dim)) * self.bounds


@dataclass(frozen=True)
class BoundFitParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")


@dataclass(frozen=True)
class BoundMatrices:
    F: np.ndarray
    Gamma: np.ndarray
    envelope: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.Gamma, dtype=float)
        if not np.allclose(G, G.T, atol=DEFINITE_TOL):
            raise NonSymmetric("Gamma must be symmetric")
        if np.linalg.eigvalsh(G).min() < -DEFINITE_TOL:
            raise ValueError("Gamma must be positive semidefinite")


@dataclass(frozen=True)
class Certificate:
    lambda_star: float
    error_bound: float
    thm1_feasible: bool
    thm2_margin: float
    thm2_feasible: bool


class FeasibilityResult(NamedTuple):
    margin: float
    feasible: bool


class ValidationResult(NamedTuple):
    holds: bool
    worst_violation: float


def symmetric_part(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


def _lambda_max(A) -> float:
    return float(np.linalg.eigvalsh(symmetric_part(A))[-1])


def lambda_star(F, H, spec) -> float:
    """Supremum of ``lam`` with ``F - mu H + lam I < 0`` for every nonzero ``mu``.

    ``spec`` is a :class:`LaplacianSpectrum` or a plain sequence of
    Laplacian eigenvalues. Returns ``min_mu -lambda_max(F_s - mu H_s)``.
    """
    Fs, Hs = symmetric_part(F), symmetric_part(H)
    if Fs.shape != Hs.shape:
        raise DimensionMismatch("F and H must have the same shape")
    eig = spec.eigenvalues if isinstance(spec, LaplacianSpectrum) else np.asarray(spec, float)
    mus = eig[eig > CONNECTIVITY_TOL]
    if mus.size == 0:
        raise Disconnected("no nonzero Laplacian eigenvalue")
    # repeated eigenvalues give identical constraints
    mus = np.unique(mus)
    return float(min(-_lambda_max(Fs - mu * Hs) for mu in mus))


def theorem1_bound(n_nodes: int, envelope, Gamma, lam: float, epsilon: float = 0.0) -> float:
    """Ultimate bound ``sqrt(2 N d^T Gamma d) / (lam - epsilon)`` on ``|e|``.

    ``epsilon > 0`` reports the slackened radius reached with decay rate
    ``epsilon``; the default gives the limiting value.
    """
    margin = lam - epsilon
    if not margin > 0:
        raise InfeasibleCertificate(f"lambda* - epsilon = {margin:.6g} is not positive")
    d = np.asarray(envelope, dtype=float).ravel()
    Gamma = np.asarray(Gamma, dtype=float)
    if Gamma.shape != (d.size, d.size):
        raise DimensionMismatch("Gamma does not match the envelope length")
    q = float(d @ Gamma @ d)
    if q < -DEFINITE_TOL:
        raise ValueError("Gamma is not positive semidefinite along the envelope")
    return float(np.sqrt(2.0 * n_nodes * max(q, 0.0)) / margin)


def _pin_matrix(C, n_nodes: int) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim == 0:
        C = np.full(n_nodes, float(C))
    if C.ndim == 1:
        C = np.diag(C)
    if C.shape != (n_nodes, n_nodes):
        raise DimensionMismatch("pinning gains do not match the network size")
    if np.any(C != np.diag(np.diag(C))):
        raise ValueError("pinning gain matrix must be diagonal")
    if np.any(np.diag(C) < 0):
        raise ValueError("pinning gains must be non-negative")
    return C


def theorem2_feasibility(F, H, L, C, method: str = "auto") -> FeasibilityResult:
    """Largest eigenvalue of ``I_N (x) F - (L + C) (x) H_s`` (symmetric part).

    ``method="fast"`` needs ``H_s = h I`` and combines the two small
    spectra instead of forming the ``Nn x Nn`` matrix; ``"auto"`` picks it
    whenever it applies.
    """
    Fs, Hs = symmetric_part(F), symmetric_part(H)
    if Fs.shape != Hs.shape:
        raise DimensionMismatch("F and H must have the same shape")
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch("L must be square")
    if np.max(np.abs(L - L.T), initial=0.0) > DEFINITE_TOL * max(1.0, np.abs(L).max()):
        raise NonSymmetric("L must be symmetric")
    N, n = L.shape[0], Fs.shape[0]
    LC = symmetric_part(L + _pin_matrix(C, N))

    h = Hs[0, 0]
    scalar_H = np.array_equal(Hs, h * np.eye(n))
    if method == "fast" and not scalar_H:
        raise ValueError("fast path needs H_s = h I")
    if method not in ("auto", "fast", "dense"):
        raise ValueError(f"unknown method {method!r}")

    if method == "fast" or (method == "auto" and scalar_H):
        lam = np.linalg.eigvalsh(Fs)
        theta = np.linalg.eigvalsh(LC)
        margin = float(np.max(lam[:, None] - h * theta[None, :]))
    else:
        M = np.kron(np.eye(N), Fs) - np.kron(LC, Hs)
        margin = float(np.linalg.eigvalsh(M)[-1])
    return FeasibilityResult(margin, margin < -DEFINITE_TOL)


def lorenz_F(dom: ValidationDomain, fit: BoundFitParams, p: LorenzParams = LorenzParams()):
    """Quadratic bound matrix for the Lorenz field on a box.

    The cross terms ``-e1 e2 x3 + e1 e3 x2`` are split with Young's
    inequality using weights ``alpha`` and ``beta``.
    """
    k1, k2, k3 = dom.bounds
    M = np.array([[-p.a, p.a, 0.0], [p.b, -1.0, 0.0], [0.0, 0.0, -p.c]])
    a, b = fit.alpha, fit.beta
    return M + np.diag([k3 / (2 * a) + k2 / (2 * b), a * k3 / 2, b * k2 / 2])


def _fit_objective(dom, p, log_a, log_b):
    return _lambda_max(lorenz_F(dom, BoundFitParams(np.exp(log_a), np.exp(log_b)), p))


def fit_alpha_beta(
    dom: ValidationDomain,
    p: LorenzParams = LorenzParams(),
    grid_points: int = 81,
    rel_step: float = 1e-4,
) -> BoundFitParams:
    """Minimise ``lambda_max(sym(lorenz_F))`` over ``(alpha, beta)``.

    Log-spaced grid on ``[1e-2, 1e2]^2``, then a compass search in log
    space (axis and diagonal moves) until the step drops below
    ``rel_step``. A flat objective returns ``(1, 1)``.
    """
    logs = np.linspace(np.log(1e-2), np.log(1e2), grid_points)
    values = np.array([[_fit_objective(dom, p, la, lb) for lb in logs] for la in logs])
    if np.ptp(values) <= 1e-12 * max(1.0, np.abs(values).max()):
        return BoundFitParams(1.0, 1.0)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    x = np.array([logs[i], logs[j]])
    best = values[i, j]
    step = logs[1] - logs[0]
    moves = [np.array(d, float) for d in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))]
    while step > rel_step:
        improved = False
        for d in moves:
            cand = x + step * d
            val = _fit_objective(dom, p, *cand)
            if val < best:
                x, best, improved = cand, val, True
                break
        if not improved:
            step *= 0.5
    return BoundFitParams(float(np.exp(x[0])), float(np.exp(x[1])))


def lorenz_Gamma(dom: ValidationDomain) -> np.ndarray:
    """Componentwise suprema of ``G(x)^T G(x)`` over the box."""
    k1, k2, k3 = dom.bounds
    return np.diag([(k1 + k2) ** 2, k1**2, (LORENZ_G_SCALE * k3) ** 2])


def young_inequality_gap(x, y, P, K) -> float:
    """``x^T P K^-1 P^T x + y^T K y - 2 x^T P y``; non-negative for ``K > 0``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    P, K = np.asarray(P, float), np.asarray(K, float)
    Ptx = P.T @ x
    return float(Ptx @ np.linalg.solve(K, Ptx) + y @ K @ y - 2.0 * x @ P @ y)


def worker_count() -> int:
    """Worker cap from ``NETSYNC_THREADS`` (default 1)."""
    raw = os.environ.get("NETSYNC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sharded_max(shard_fn, samples: int, seed: int, threads: int | None):
    # Shard layout and streams depend only on (samples, seed), never on threads.
    sizes = [VALIDATION_SHARD] * (samples // VALIDATION_SHARD)
    if samples % VALIDATION_SHARD:
        sizes.append(samples % VALIDATION_SHARD)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(s), n) for s, n in zip(streams, sizes)]
    threads = threads or worker_count()
    if threads == 1 or len(jobs) == 1:
        results = [shard_fn(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: shard_fn(*job), jobs))
    worst = max(r[0] for r in results)
    scale = max(r[1] for r in results)
    return worst, scale


def validate_assumption2(
    system: SystemModel,
    F,
    dom: ValidationDomain,
    samples: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
) -> ValidationResult:
    """Monte Carlo check of ``(x-s)^T (f(x)-f(s)) <= (x-s)^T F (x-s)`` on the box.

    Holds when the worst violation is at most ``1e-9`` times the largest
    magnitude of either side seen (floored at one).
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    F = np.asarray(F, dtype=float)
    if dom.dim != system.state_dim or F.shape != (dom.dim, dom.dim):
        raise DimensionMismatch("F, domain and system dimensions disagree")

    def shard(rng, n):
        X = dom.sample(rng, n)
        S = dom.sample(rng, n)
        E = X - S
        lhs = np.einsum("ij,ij->i", E, system.f_rows(X) - system.f_rows(S))
        rhs = np.einsum("ij,jk,ik->i", E, F, E)
        return float(np.max(lhs - rhs)), float(max(np.abs(lhs).max(), np.abs(rhs).max()))

    worst, scale = _sharded_max(shard, samples, seed, threads)
    return ValidationResult(worst <= DEFINITE_TOL * max(1.0, scale), worst)


def validate_assumption3(
    system: SystemModel,
    Gamma,
    envelope,
    dom: ValidationDomain,
    samples: int = 100_000,
    seed: int = 0,
    threads: int | None = None,
) -> ValidationResult:
    """Monte Carlo check of ``|G(x) d|^2 <= D^T Gamma D`` for ``|d| <= D``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    D = np.asarray(envelope, dtype=float).ravel()
    Gamma = np.asarray(Gamma, dtype=float)
    if D.size != system.mismatch_dim or Gamma.shape != (D.size, D.size):
        raise DimensionMismatch("Gamma, envelope and system dimensions disagree")
    if dom.dim != system.state_dim:
        raise DimensionMismatch("domain and system dimensions disagree")
    rhs = float(D @ Gamma @ D)

    def shard(rng, n):
        X = dom.sample(rng, n)
        d = rng.uniform(-1.0, 1.0, size=(n, D.size)) * D
        GD = system.G_apply(X, d)
        lhs = np.einsum("ij,ij->i", GD, GD)
        return float(np.max(lhs) - rhs), float(max(np.abs(lhs).max(), abs(rhs)))

    worst, scale = _sharded_max(shard, samples, seed, threads)
    return ValidationResult(worst <= DEFINITE_TOL * max(1.0, scale), worst)


def compute_certificate(
    F,
    Gamma,
    envelope,
    H,
    topo: Topology,
    pin_gains=None,
    epsilon: float = 0.0,
) -> Certificate:
    """Both certificates for one network.

    ``pin_gains`` defaults to zero, in which case the Kronecker condition
    cannot hold whenever ``F_s`` has a positive eigenvalue.
    """
    L = laplacian(topo)
    lam = lambda_star(F, H, spectrum(L))
    feasible1 = lam - epsilon > DEFINITE_TOL
    bound = theorem1_bound(topo.n_nodes, envelope, Gamma, lam, epsilon) if feasible1 else np.inf
    gains = np.zeros(topo.n_nodes) if pin_gains is None else pin_gains
    margin, feasible2 = theorem2_feasibility(F, H, L, gains)
    return Certificate(lam, bound, feasible1, margin, feasible2)
