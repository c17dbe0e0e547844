"""Fixed-step classical RK4 with periodic metric logging."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import NonFiniteState

Rhs = Callable[[float, np.ndarray], np.ndarray]
Observer = Callable[[float, np.ndarray], Mapping[str, float]]


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    t_end: float = 1.0
    t0: float = 0.0
    observe_every: int = 10

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        if int(self.observe_every) < 1:
            raise ValueError("observe_every must be a positive integer")
        if self.n_steps < 1:
            raise ValueError("horizon shorter than one step")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t0) / self.h))


@dataclass
class TrajectoryLog:
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    states: list | None = None

    def channel(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    @property
    def channels(self) -> list:
        return list(self.records[0]) if self.records else []


def rk4_step(rhs: Rhs, x, t: float, h: float) -> np.ndarray:
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = rhs(t + h, x + h * k3)
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(t + h)
    return out


def simulate(
    rhs: Rhs,
    x0,
    cfg: IntegratorConfig,
    observer: Observer | None = None,
    keep_states: bool = False,
) -> TrajectoryLog:
    """Integrate from ``cfg.t0`` to ``cfg.t_end`` in steps of ``cfg.h``.

    The observer is sampled at ``t0``, every ``observe_every`` steps, and
    at the final step. Times are computed as ``t0 + k*h`` so they do not
    accumulate rounding drift.
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(cfg.t0, "initial state is not finite")
    log = TrajectoryLog(states=[] if keep_states else None)
    n_steps, every = cfg.n_steps, int(cfg.observe_every)

    def record(k):
        t = cfg.t0 + k * cfg.h
        log.times.append(t)
        rec = dict(observer(t, x)) if observer is not None else {}
        if not all(np.isfinite(v) for v in rec.values()):
            raise NonFiniteState(t, f"non-finite metric at t={t:.6g}")
        log.records.append(rec)
        if keep_states:
            log.states.append(x.copy())

    record(0)
    # overflow surfaces as NonFiniteState, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            x = rk4_step(rhs, x, cfg.t0 + k * cfg.h, cfg.h)
            if (k + 1) % every == 0 or k + 1 == n_steps:
                record(k + 1)
    return log
