import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netsync.certify import (
    PUBLISHED_BOX,
    PUBLISHED_F,
    PUBLISHED_FIT,
    PUBLISHED_GAMMA,
    BoundFitParams,
    ValidationDomain,
    compute_certificate,
    fit_alpha_beta,
    lambda_star,
    lorenz_F,
    lorenz_Gamma,
    symmetric_part,
    theorem1_bound,
    theorem2_feasibility,
    validate_assumption2,
    validate_assumption3,
    young_inequality_gap,
)
from netsync.dynamics import LorenzParams, LorenzSystem
from netsync.errors import Disconnected, InfeasibleCertificate, NonSquare
from netsync.graph import Topology, global_coupling_matrix, laplacian, spectrum

from conftest import LinearSystem

PUBLISHED_ENVELOPE = 0.05 * np.array([10.0, 28.0, 8.0 / 3.0])


def published_lambda_max_by_hand():
    # symmetric part is [[20.42, 19, 0], [19, 22.5, 0], [0, 0, 38.22]];
    # 2x2 block eigenvalue from the quadratic formula, compared with 38.22
    mean, half_gap, off = (20.42 + 22.5) / 2, (22.5 - 20.42) / 2, 19.0
    return max(mean + np.sqrt(half_gap**2 + off**2), 38.22)


def test_symmetric_part():
    np.testing.assert_array_equal(symmetric_part(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(symmetric_part([[0, 2], [0, 0]]), [[0, 1], [1, 0]])
    np.testing.assert_allclose(
        symmetric_part(PUBLISHED_F), [[20.42, 19, 0], [19, 22.5, 0], [0, 0, 38.22]], rtol=1e-15
    )
    with pytest.raises(NonSquare):
        symmetric_part(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_symmetric_part_idempotent(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    S = symmetric_part(A)
    np.testing.assert_array_equal(symmetric_part(S), S)


def test_lambda_star_small_cases():
    assert lambda_star(np.zeros((3, 3)), np.eye(3), [0.0, 2.0, 3.0]) == pytest.approx(2.0)
    assert lambda_star(np.eye(3), np.eye(3), [0.0, 5.0]) == pytest.approx(4.0)
    with pytest.raises(Disconnected):
        lambda_star(np.eye(3), np.eye(3), [0.0, 0.0])


def test_lambda_star_published_setup():
    lam = lambda_star(PUBLISHED_F, np.eye(3), spectrum(global_coupling_matrix(100)))
    assert published_lambda_max_by_hand() == pytest.approx(40.4884, abs=1e-4)
    assert lam == pytest.approx(100 - published_lambda_max_by_hand(), rel=1e-10)
    assert lam == pytest.approx(59.5, abs=0.05)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(0, 2**32 - 1))
def test_lambda_star_scale_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(3, 3))
    H = rng.normal(size=(3, 3))
    mus = np.concatenate([[0.0], rng.uniform(0.5, 10, 4)])
    assert lambda_star(F, c * H, mus / c) == pytest.approx(lambda_star(F, H, mus), rel=1e-9, abs=1e-9)


def test_theorem1_bound_values():
    assert theorem1_bound(100, np.zeros(3), np.eye(3), 3.0) == 0.0
    assert theorem1_bound(2, [1.0, 0, 0], np.eye(3), 2.0) == pytest.approx(1.0)
    lam = 100 - published_lambda_max_by_hand()
    q = 212.9 * 0.5**2 + 400.0 * 1.4**2 + 2500.0 * (0.05 * 8 / 3) ** 2
    expected = np.sqrt(2 * 100 * q) / lam
    assert theorem1_bound(100, PUBLISHED_ENVELOPE, PUBLISHED_GAMMA, lam) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(7.06, abs=0.01)
    with pytest.raises(InfeasibleCertificate):
        theorem1_bound(10, PUBLISHED_ENVELOPE, PUBLISHED_GAMMA, -1.0)
    with pytest.raises(InfeasibleCertificate):
        theorem1_bound(10, PUBLISHED_ENVELOPE, PUBLISHED_GAMMA, 1.0, epsilon=1.0)


def test_theorem1_epsilon_slack_widens_bound():
    base = theorem1_bound(100, PUBLISHED_ENVELOPE, PUBLISHED_GAMMA, 59.5)
    assert theorem1_bound(100, PUBLISHED_ENVELOPE, PUBLISHED_GAMMA, 59.5, epsilon=9.5) == pytest.approx(base * 59.5 / 50.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_theorem1_bound_monotone(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(3, 3))
    Gamma = B @ B.T
    d = rng.uniform(0, 2, 3)
    lam = rng.uniform(0.1, 10)
    base = theorem1_bound(7, d, Gamma, lam)
    assert theorem1_bound(7, d, Gamma, lam * 1.5) <= base + 1e-12
    # for a diagonal PSD Gamma each component enters with a non-negative weight
    G_diag = np.diag(np.diag(Gamma))
    for k in range(3):
        bumped = d.copy()
        bumped[k] += rng.uniform(0, 1)
        assert theorem1_bound(7, bumped, G_diag, lam) >= theorem1_bound(7, d, G_diag, lam) - 1e-12


def test_theorem2_small_cases():
    I3 = np.eye(3)
    m, ok = theorem2_feasibility(-I3, I3, np.zeros((4, 4)), np.zeros(4))
    assert m == pytest.approx(-1.0) and ok
    m, ok = theorem2_feasibility(I3, I3, np.zeros((4, 4)), np.full(4, 2.0))
    assert m == pytest.approx(-1.0) and ok


def test_theorem2_published_closed_loop_is_infeasible():
    L = global_coupling_matrix(100)
    fast = theorem2_feasibility(PUBLISHED_F, np.eye(3), L, np.ones(100), method="fast")
    dense = theorem2_feasibility(PUBLISHED_F, np.eye(3), L, np.ones(100), method="dense")
    # smallest eigenvalue of R_N + I is 1 (all-ones direction)
    assert fast.margin == pytest.approx(published_lambda_max_by_hand() - 1.0, rel=1e-10)
    assert abs(fast.margin - dense.margin) < 1e-8
    assert not fast.feasible and not dense.feasible
    assert fast.margin == pytest.approx(39.5, abs=0.05)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.floats(0.1, 5.0), st.integers(0, 2**32 - 1))
def test_theorem2_fast_matches_dense(n_nodes, h, seed):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(0, 3, (n_nodes, n_nodes)), 1)
    L = laplacian(Topology(w + w.T))
    F = rng.normal(scale=3, size=(3, 3))
    C = rng.uniform(0, 5, n_nodes)
    fast = theorem2_feasibility(F, h * np.eye(3), L, C, method="fast")
    dense = theorem2_feasibility(F, h * np.eye(3), L, C, method="dense")
    assert abs(fast.margin - dense.margin) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_theorem2_unpinned_never_feasible(n_nodes, seed):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(0, 3, (n_nodes, n_nodes)), 1)
    L = laplacian(Topology(w + w.T))
    B = rng.normal(size=(3, 3))
    F = B @ B.T + 0.1 * np.eye(3)
    H = rng.normal(size=(3, 3))
    margin, feasible = theorem2_feasibility(F, H, L, np.zeros(n_nodes), method="dense")
    assert margin >= np.linalg.eigvalsh(symmetric_part(F))[-1] - 1e-9
    assert not feasible


def test_theorem2_rejects_bad_gains():
    with pytest.raises(ValueError):
        theorem2_feasibility(np.eye(3), np.eye(3), np.zeros((2, 2)), [-1.0, 0.0])
    with pytest.raises(ValueError):
        theorem2_feasibility(np.eye(3), np.eye(3), np.zeros((2, 2)), [[1.0, 0.5], [0.5, 1.0]])


def test_lorenz_F_construction():
    M = np.array([[-10, 10, 0], [28, -1, 0], [0, 0, -8 / 3]])
    np.testing.assert_allclose(lorenz_F(ValidationDomain([0, 0, 0]), BoundFitParams(1, 1)), M, rtol=1e-15)
    F = lorenz_F(ValidationDomain(PUBLISHED_BOX), BoundFitParams(*PUBLISHED_FIT))
    added = np.diag(F - M)
    np.testing.assert_allclose(
        added, [50 / (2 * 0.957) + 25 / (2 * 3.091), 0.957 * 50 / 2, 3.091 * 25 / 2], rtol=1e-14
    )
    np.testing.assert_allclose(added, [26.123 + 4.044, 23.925, 38.6375], atol=2e-3)
    # printed matrix disagrees with the construction at the unit level
    assert np.max(np.abs(F - PUBLISHED_F)) > 1.0


def test_lorenz_F_grows_with_split_weights():
    dom = ValidationDomain(PUBLISHED_BOX)
    small = lorenz_F(dom, BoundFitParams(1.0, 1.0))
    large = lorenz_F(dom, BoundFitParams(10.0, 10.0))
    assert large[1, 1] > small[1, 1] and large[2, 2] > small[2, 2]


def test_lorenz_Gamma():
    np.testing.assert_allclose(lorenz_Gamma(ValidationDomain([1, 1, 1])), np.diag([4, 1, 64 / 9]), rtol=1e-15)
    np.testing.assert_array_equal(lorenz_Gamma(ValidationDomain([0, 0, 0])), np.zeros((3, 3)))
    np.testing.assert_allclose(
        lorenz_Gamma(ValidationDomain(PUBLISHED_BOX)), np.diag([2025.0, 400.0, 17777.7778]), rtol=1e-8
    )


def fit_objective(dom, a, b):
    return np.linalg.eigvalsh(symmetric_part(lorenz_F(dom, BoundFitParams(a, b))))[-1]


def grid_minimum(dom, points=201):
    grid = np.logspace(-2, 2, points)
    return min(fit_objective(dom, a, b) for a in grid for b in grid)


def test_fit_alpha_beta_degenerate_box():
    assert fit_alpha_beta(ValidationDomain([0, 0, 0])) == BoundFitParams(1.0, 1.0)


def test_fit_alpha_beta_published_box():
    dom = ValidationDomain(PUBLISHED_BOX)
    fit = fit_alpha_beta(dom)
    best = fit_objective(dom, fit.alpha, fit.beta)
    assert best <= fit_objective(dom, *PUBLISHED_FIT)
    assert best <= grid_minimum(dom) + 1e-9


def test_fit_objective_monotone_in_box():
    dom = ValidationDomain(PUBLISHED_BOX)
    dom2 = ValidationDomain(2 * np.array(PUBLISHED_BOX))
    fit, fit2 = fit_alpha_beta(dom), fit_alpha_beta(dom2)
    assert fit_objective(dom2, fit2.alpha, fit2.beta) >= fit_objective(dom, fit.alpha, fit.beta)
    assert grid_minimum(dom2, 81) >= grid_minimum(dom, 81)


def test_assumption2_linear_equality_case(rng):
    A = rng.normal(size=(3, 3))
    res = validate_assumption2(LinearSystem(A), symmetric_part(A), ValidationDomain([1, 1, 1]), 5000, seed=4)
    assert res.holds and res.worst_violation <= 1e-12


def test_assumption2_lorenz_fitted():
    dom = ValidationDomain(PUBLISHED_BOX)
    F = lorenz_F(dom, fit_alpha_beta(dom))
    res = validate_assumption2(LorenzSystem(), F, dom, 100_000, seed=7)
    assert res.holds


def test_assumption2_negative_bound_fails():
    res = validate_assumption2(LorenzSystem(), -np.eye(3), ValidationDomain(PUBLISHED_BOX), 2000, seed=1)
    assert not res.holds and res.worst_violation > 0


def test_assumption3_cases():
    dom = ValidationDomain(PUBLISHED_BOX)
    sysm = LorenzSystem()
    assert validate_assumption3(sysm, np.zeros((3, 3)), np.zeros(3), dom, 1000, seed=2).holds
    assert validate_assumption3(sysm, lorenz_Gamma(dom), PUBLISHED_ENVELOPE, dom, 100_000, seed=3).holds
    assert validate_assumption3(sysm, lorenz_Gamma(dom), [1.0, 2.0, 3.0], dom, 10_000, seed=3).holds
    bad = validate_assumption3(sysm, np.zeros((3, 3)), PUBLISHED_ENVELOPE, dom, 1000, seed=4)
    assert not bad.holds and bad.worst_violation > 0


def test_validators_independent_of_thread_count():
    dom = ValidationDomain(PUBLISHED_BOX)
    args = (LorenzSystem(), PUBLISHED_F, dom, 35_000, 9)
    assert validate_assumption2(*args, threads=1) == validate_assumption2(*args, threads=4)


def test_young_inequality_random_instances(rng):
    for _ in range(10_000):
        n, m = rng.integers(1, 5, size=2)
        x, y = rng.normal(size=n), rng.normal(size=m)
        P = rng.normal(size=(n, m))
        B = rng.normal(size=(m, m))
        K = B @ B.T + 1e-2 * np.eye(m)
        gap = young_inequality_gap(x, y, P, K)
        scale = abs(2 * x @ P @ y) + y @ K @ y + 1.0
        assert gap >= -1e-9 * scale


def test_compute_certificate_paper_figures():
    topo = Topology.global_(100)
    c = compute_certificate(PUBLISHED_F, PUBLISHED_GAMMA, PUBLISHED_ENVELOPE, np.eye(3), topo, np.ones(100))
    assert c.thm1_feasible and not c.thm2_feasible
    assert c.lambda_star == pytest.approx(100 - published_lambda_max_by_hand(), rel=1e-10)
    small = compute_certificate(PUBLISHED_F, PUBLISHED_GAMMA, PUBLISHED_ENVELOPE, np.eye(3), Topology.global_(10))
    assert not small.thm1_feasible and small.error_bound == np.inf
