"""Scenario assembly, simulation runs, metric CSVs and certificate reports."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import certify as cert
from .config import resolve
from .control import (
    AugmentedState,
    ControllerConfig,
    closed_loop_rhs,
    estimation_error,
    gain_norm,
    initial_state,
    lyapunov_value,
    reference_error,
)
from .dynamics import (
    LorenzParams,
    LorenzSystem,
    MismatchSet,
    average_error,
    check_coupling,
    open_loop_rhs,
    sample_mismatches,
)
from .errors import ConfigError, DimensionMismatch, InvalidSize
from .graph import Topology
from .integrate import IntegratorConfig, TrajectoryLog, simulate

log = logging.getLogger(__name__)

OPEN_COLUMNS = ("t", "err_avg_norm", "bound")
CLOSED_COLUMNS = OPEN_COLUMNS + ("err_ref_norm", "V", "gamma_err_norm", "gain_norm")


@dataclass
class Scenario:
    name: str
    config: dict
    topology: Topology
    system: LorenzSystem
    H: np.ndarray
    mismatch: MismatchSet
    x0: np.ndarray
    integrator: IntegratorConfig
    controller: ControllerConfig | None
    domain: cert.ValidationDomain
    fit: cert.BoundFitParams | None
    F: np.ndarray
    Gamma: np.ndarray
    matrices: str
    epsilon: float

    @property
    def n_nodes(self) -> int:
        return self.topology.n_nodes


@dataclass
class ScenarioResult:
    scenario: Scenario
    certificate: cert.Certificate
    log: TrajectoryLog
    columns: tuple


def _get(cfg, key, kind):
    value = cfg[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        if kind == "vector":
            return np.asarray(value, dtype=float).ravel()
        if kind == "matrix":
            out = np.asarray(value, dtype=float)
            if out.ndim != 2:
                raise ValueError
            return out
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot interpret {value!r} as {getattr(kind, '__name__', kind)}") from None
    return value


def _per_node(cfg, key, n_nodes):
    v = _get(cfg, key, "vector")
    if v.size == 1:
        return np.full(n_nodes, v[0])
    if v.size != n_nodes:
        raise ConfigError(key, f"expected a scalar or {n_nodes} values, got {v.size}")
    return v


def _topology(cfg) -> Topology:
    kind = cfg["network.kind"]
    try:
        if kind == "global":
            return Topology.global_(_get(cfg, "network.size", int), _get(cfg, "network.weight", float))
        if kind == "custom":
            edges = cfg["network.edges"]
            if not edges:
                raise ConfigError("network.edges", "custom network needs an edge list")
            if any(len(e) != 3 for e in edges):
                raise ConfigError("network.edges", "edges must be (i, j, weight) triples")
            size = cfg["network.size"]
            if not isinstance(size, int):
                size = 1 + max(max(int(e[0]), int(e[1])) for e in edges)
            return Topology.from_edges(size, edges)
    except (InvalidSize, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("network", str(exc)) from None
    raise ConfigError("network.kind", f"expected 'global' or 'custom', got {kind!r}")


def build_scenario(overrides: dict) -> Scenario:
    """Resolve a config dict into concrete model objects."""
    cfg = resolve(overrides)
    seed = _get(cfg, "scenario.seed", int)

    def sub_seed(key, offset):
        return seed + offset if cfg[key] is None else _get(cfg, key, int)

    topo = _topology(cfg)
    N = topo.n_nodes
    if cfg["system.kind"] != "lorenz":
        raise ConfigError("system.kind", f"unsupported system {cfg['system.kind']!r}")
    params = _get(cfg, "system.params", "vector")
    if params.size != 3:
        raise ConfigError("system.params", "Lorenz needs three parameters [a, b, c]")
    p = LorenzParams(*params)
    system = LorenzSystem(p)
    n, m = system.state_dim, system.mismatch_dim

    try:
        H = check_coupling(np.eye(n) if cfg["coupling.H"] is None else _get(cfg, "coupling.H", "matrix"), n)
    except (DimensionMismatch, ValueError) as exc:
        raise ConfigError("coupling.H", str(exc)) from None

    if cfg["mismatch.envelope"] is not None:
        envelope = _get(cfg, "mismatch.envelope", "vector")
    else:
        envelope = _get(cfg, "mismatch.fraction", float) * np.abs(p.as_array())
    if envelope.size != m or np.any(envelope < 0):
        raise ConfigError("mismatch", f"envelope must be {m} non-negative values")
    mismatch = sample_mismatches(envelope, N, sub_seed("mismatch.seed", 0))

    domain = cert.ValidationDomain(_get(cfg, "certificate.box", "vector"))
    if domain.dim != n:
        raise ConfigError("certificate.box", f"expected {n} box bounds")

    init_rng = np.random.default_rng(sub_seed("initial.seed", 1))
    if cfg["initial.kind"] == "box":
        x0 = domain.sample(init_rng, N)
    elif cfg["initial.kind"] == "explicit":
        if cfg["initial.states"] is None:
            raise ConfigError("initial.states", "explicit initial states missing")
        x0 = _get(cfg, "initial.states", "matrix")
        if x0.shape != (N, n):
            raise ConfigError("initial.states", f"expected {N} rows of {n} values")
    else:
        raise ConfigError("initial.kind", "expected 'box' or 'explicit'")

    try:
        integrator = IntegratorConfig(
            h=_get(cfg, "integrate.h", float),
            t_end=_get(cfg, "integrate.t_end", float),
            observe_every=_get(cfg, "integrate.observe_every", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("integrate", str(exc)) from None

    controller = None
    if _get(cfg, "control.enabled", bool):
        s0 = domain.sample(init_rng, 1)[0] if cfg["control.s0"] is None else _get(cfg, "control.s0", "vector")
        if s0.size != n:
            raise ConfigError("control.s0", f"expected {n} values")
        g0 = np.asarray(cfg["control.gamma_hat0"], dtype=float)
        if g0.ndim == 0 or g0.shape == (m,):
            g0 = np.broadcast_to(g0, (N, m))
        if g0.shape != (N, m):
            raise ConfigError("control.gamma_hat0", f"expected a scalar, {m} values, or {N}x{m}")
        c, k = _per_node(cfg, "control.c", N), _per_node(cfg, "control.k", N)
        try:
            controller = ControllerConfig(c, k, s0, g0)
        except ValueError as exc:
            raise ConfigError("control", str(exc)) from None

    matrices = cfg["certificate.preset"]
    fit = None
    if cfg["certificate.alpha"] is not None and cfg["certificate.beta"] is not None:
        fit = cert.BoundFitParams(_get(cfg, "certificate.alpha", float), _get(cfg, "certificate.beta", float))
    if matrices == "paper-figures":
        F, Gamma = cert.PUBLISHED_F.copy(), cert.PUBLISHED_GAMMA.copy()
    elif matrices == "derived":
        if fit is None:
            fit = cert.fit_alpha_beta(domain, p)
        F, Gamma = cert.lorenz_F(domain, fit, p), cert.lorenz_Gamma(domain)
    else:
        raise ConfigError("certificate.preset", "expected 'derived' or 'paper-figures'")
    if cfg["certificate.F"] is not None:
        F, matrices = _get(cfg, "certificate.F", "matrix"), "explicit"
    if cfg["certificate.Gamma"] is not None:
        Gamma, matrices = _get(cfg, "certificate.Gamma", "matrix"), "explicit"
    if F.shape != (n, n) or Gamma.shape != (m, m):
        raise ConfigError("certificate", "F or Gamma has the wrong shape")

    return Scenario(
        name=str(cfg["scenario.name"]),
        config=cfg,
        topology=topo,
        system=system,
        H=H,
        mismatch=mismatch,
        x0=x0,
        integrator=integrator,
        controller=controller,
        domain=domain,
        fit=fit,
        F=F,
        Gamma=Gamma,
        matrices=matrices,
        epsilon=_get(cfg, "certificate.epsilon", float),
    )


def scenario_certificate(sc: Scenario) -> cert.Certificate:
    gains = sc.controller.pin_gains if sc.controller is not None else None
    return cert.compute_certificate(sc.F, sc.Gamma, sc.mismatch.envelope, sc.H, sc.topology, gains, sc.epsilon)


def _observer(sc: Scenario, bound: float | None):
    N, n, m = sc.n_nodes, sc.system.state_dim, sc.system.mismatch_dim
    ctl = sc.controller

    def observe(t, z):
        if ctl is None:
            _, err = average_error(z, n)
            rec = {"err_avg_norm": err}
            if bound is not None:
                rec["bound"] = bound
            return rec
        state = AugmentedState.unpack(z, N, n, m)
        _, err = average_error(state.x)
        _, err_ref = reference_error(state)
        gt = estimation_error(state, sc.mismatch)
        rec = {"err_avg_norm": err}
        if bound is not None:
            rec["bound"] = bound
        rec["err_ref_norm"] = err_ref
        rec["V"] = lyapunov_value(state, sc.mismatch, ctl)
        rec["gamma_err_norm"] = float(np.sqrt(np.sum(gt * gt)))
        rec["gain_norm"] = gain_norm(state.x[0], ctl.pin_gains[0], ctl.estimator_gains[0], sc.H, sc.system)
        return rec

    return observe


def simulate_scenario(sc: Scenario, keep_states: bool = False) -> ScenarioResult:
    """Integrate a built scenario; the certificate's bound is logged as a constant."""
    certificate = scenario_certificate(sc)
    bound = certificate.error_bound if certificate.thm1_feasible else None
    if bound is None:
        log.warning("lambda* = %.6g is not positive; bound column omitted", certificate.lambda_star)
    if sc.controller is None:
        rhs = open_loop_rhs(sc.topology, sc.H, sc.system, sc.mismatch)
        z0 = sc.x0.ravel()
    else:
        rhs = closed_loop_rhs(sc.topology, sc.H, sc.system, sc.mismatch, sc.controller)
        z0 = initial_state(sc.x0, sc.controller).pack()
    # single-threaded BLAS keeps trajectories bitwise independent of NETSYNC_THREADS
    with threadpool_limits(limits=1):
        traj = simulate(rhs, z0, sc.integrator, _observer(sc, bound), keep_states=keep_states or _wants_estimates(sc))
    columns = CLOSED_COLUMNS if sc.controller is not None else OPEN_COLUMNS
    if bound is None:
        columns = tuple(c for c in columns if c != "bound")
    return ScenarioResult(sc, certificate, traj, columns)


def _wants_estimates(sc: Scenario) -> bool:
    return sc.controller is not None and sc.config["output.estimates"] is not None


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips a float64
    return repr(float(x))


def metrics_csv(result: ScenarioResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for t, rec in zip(result.log.times, result.log.records):
        writer.writerow([_fmt(t)] + [_fmt(rec[c]) for c in result.columns[1:]])
    return buf.getvalue()


def estimates_csv(result: ScenarioResult) -> str:
    """Per-node estimates ``gamma_hat`` and true mismatches for selected nodes."""
    sc = result.scenario
    N, n, m = sc.n_nodes, sc.system.state_dim, sc.system.mismatch_dim
    nodes = [int(i) for i in np.atleast_1d(sc.config["output.estimate_nodes"])]
    if any(not 0 <= i < N for i in nodes):
        raise ConfigError("output.estimate_nodes", f"node indices must lie in [0, {N})")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t", "node"] + [f"gamma_hat_{j + 1}" for j in range(m)] + [f"gamma_{j + 1}" for j in range(m)] + ["gamma_err_norm"]
    writer.writerow(header)
    for t, z in zip(result.log.times, result.log.states):
        state = AugmentedState.unpack(z, N, n, m)
        for i in nodes:
            gh = state.gamma_hat[i]
            true = sc.mismatch.per_node[i]
            row = [_fmt(t), str(i)] + [_fmt(v) for v in gh] + [_fmt(v) for v in true]
            row.append(_fmt(np.linalg.norm(true - gh)))
            writer.writerow(row)
    return buf.getvalue()


def run_scenario(overrides: dict, out_dir=None) -> ScenarioResult:
    """Build, simulate, and write the metrics CSV (plus estimates if requested)."""
    sc = build_scenario(overrides)
    result = simulate_scenario(sc)
    base = Path(out_dir) if out_dir is not None else Path(".")
    csv_path = base / str(sc.config["output.csv"])
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(metrics_csv(result))
    if _wants_estimates(sc):
        est_path = base / str(sc.config["output.estimates"])
        est_path.write_text(estimates_csv(result))
    return result


@dataclass
class CertifyReport:
    values: dict
    exit_code: int

    def as_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.values.items())

    def as_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.values.keys())
        writer.writerow(self.values.values())
        return buf.getvalue()


def _report_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def certify_command(overrides: dict) -> CertifyReport:
    """Certificates plus assumption-validator verdicts for a scenario.

    Exit code 0 when every requested certificate holds (the ultimate
    bound always; the pinning condition when control is enabled), else 2.
    """
    sc = build_scenario(overrides)
    cfg = sc.config
    with threadpool_limits(limits=cert.worker_count()):
        c = scenario_certificate(sc)
        samples = _get(cfg, "certificate.samples", int)
        seed = cfg["certificate.seed"]
        seed = _get(cfg, "scenario.seed", int) + 2 if seed is None else _get(cfg, "certificate.seed", int)
        a2 = cert.validate_assumption2(sc.system, sc.F, sc.domain, samples, seed)
        a3 = cert.validate_assumption3(sc.system, sc.Gamma, sc.mismatch.envelope, sc.domain, samples, seed + 1)
    control = sc.controller is not None
    values = {
        "scenario": sc.name,
        "n_nodes": sc.n_nodes,
        "matrices": sc.matrices,
        "alpha": sc.fit.alpha if sc.fit else "",
        "beta": sc.fit.beta if sc.fit else "",
        "lambda_max_F": float(np.linalg.eigvalsh(cert.symmetric_part(sc.F))[-1]),
        "lambda_star": c.lambda_star,
        "epsilon": sc.epsilon,
        "error_bound": c.error_bound,
        "thm1_feasible": c.thm1_feasible,
        "control_enabled": control,
        "thm2_margin": c.thm2_margin,
        "thm2_feasible": c.thm2_feasible,
        "assumption2_holds": a2.holds,
        "assumption2_worst": a2.worst_violation,
        "assumption3_holds": a3.holds,
        "assumption3_worst": a3.worst_violation,
        "validation_samples": samples,
    }
    ok = c.thm1_feasible and (c.thm2_feasible or not control)
    values["status"] = "feasible" if ok else "infeasible"
    return CertifyReport({k: _report_value(v) for k, v in values.items()}, 0 if ok else 2)

