"""Exact discrete-time evolution of the companion system under impulsive supervision.

Between two updates the state evolves freely, ``f <- exp(A step) f``. A
supervision arriving in the middle of the interval adds an impulse that
reaches the end of the interval through ``exp(A step/2) B``; its size is the
error measured at the supervision instant, which is obtained exactly with an
intermediate half step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .operators import CompanionSystem, OperatorSpec
from .signals import Trajectory

DIVERGENCE_LIMIT = 1e12


def expm(M) -> np.ndarray:
    """Matrix exponential of a small dense real matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expm expects a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("expm: matrix has non-finite entries")
    return scipy.linalg.expm(M)


class Propagator:
    """Cached ``exp(A step)``, ``exp(A step/2)`` and the impulse column ``exp(A step/2) B``."""

    def __init__(self, sys: CompanionSystem, step: float):
        if not step > 0:
            raise ValueError(f"step must be positive, got {step}")
        self.step = float(step)
        self.full = expm(sys.A * step)
        self.half = expm(sys.A * (step / 2))
        self.kick = self.half @ sys.B
        self.probe = self.half[0].copy()

    def midpoint_value(self, f: np.ndarray) -> float:
        return float(self.probe @ f)

    def advance(self, f: np.ndarray, drive: float) -> np.ndarray:
        return self.full @ f + self.kick * drive


def impulse_gain(spec: OperatorSpec) -> float:
    """Divisor ``lambda * alpha_h**2`` applied to every impulse."""
    if spec.lam == 0:
        raise ZeroDivisionError("lambda must be nonzero")
    return spec.lam * spec.alpha_h**2


def half_step_state(f, sys: CompanionSystem, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    return expm(sys.A * (step / 2)) @ np.asarray(f, dtype=float)


def forward_step(f, sys: CompanionSystem, spec: OperatorSpec, b_i: float,
                 target: Optional[float], step: float, prop: Propagator | None = None):
    """One supervised update.

    Returns ``(next_state, f_tilde, delta)`` where ``f_tilde`` is the function
    value at the mid-interval supervision instant and ``delta = f_tilde - target``
    (zero when ``target`` is None).
    """
    f = np.asarray(f, dtype=float)
    prop = prop or Propagator(sys, step)
    ftilde = prop.midpoint_value(f)
    delta = 0.0 if target is None else ftilde - target
    nxt = prop.advance(f, delta / (impulse_gain(spec) * b_i))
    return nxt, ftilde, delta


def free_evolution(f, sys: CompanionSystem, steps: int, step: float) -> np.ndarray:
    """States ``f, exp(A step) f, ...``; shape ``(steps + 1, 2h)``."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    full = expm(sys.A * step)
    out = np.empty((steps + 1, sys.n))
    out[0] = f
    for k in range(steps):
        out[k + 1] = full @ out[k]
    return out


@dataclass
class TrainingConfig:
    epochs: int
    tau: float
    tau_prime: Optional[float] = None
    initial_state: Optional[np.ndarray] = None
    supervised_epochs: Optional[int] = None
    trace: str = "all"  # "all" or "last" epoch

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.tau_prime is None:
            self.tau_prime = self.tau
        if not self.tau_prime > 0:
            raise ValueError("tau_prime must be positive")
        if self.supervised_epochs is None:
            self.supervised_epochs = self.epochs
        if self.trace not in ("all", "last"):
            raise ValueError("trace must be 'all' or 'last'")


@dataclass
class RunLog:
    mse_per_epoch: np.ndarray
    k: np.ndarray
    t: np.ndarray
    f_tilde: np.ndarray
    y: np.ndarray
    delta: np.ndarray
    final_state: np.ndarray
    last_epoch_states: np.ndarray = field(repr=False)
    diverged: bool = False

    def trace_rows(self):
        return zip(self.k.tolist(), self.t.tolist(), self.f_tilde.tolist(),
                   self.y.tolist(), self.delta.tolist())


def run_epochs(traj: Trajectory, sys: CompanionSystem, spec: OperatorSpec, cfg: TrainingConfig,
               epoch_source: Callable[[int], Trajectory] | None = None) -> RunLog:
    """Cycle the supervision stream for ``cfg.epochs`` epochs, carrying the state over.

    ``epoch_source(e)`` may supply a different ordering of the data for each
    epoch. From epoch ``cfg.supervised_epochs`` on the targets are withheld and
    the system evolves freely; the MSE is still measured against them.
    """
    n_samples = len(traj)
    if n_samples == 0:
        raise ValueError("empty trajectory")
    prop = Propagator(sys, cfg.tau_prime)
    den = impulse_gain(spec)
    f = np.zeros(sys.n) if cfg.initial_state is None else np.array(cfg.initial_state, dtype=float)
    if f.shape != (sys.n,):
        raise ValueError(f"initial state must have length {sys.n}")

    traced = cfg.epochs if cfg.trace == "all" else 1
    first_traced = cfg.epochs - traced
    size = traced * n_samples
    ft_log = np.empty(size)
    y_log = np.empty(size)
    d_log = np.empty(size)
    mse = np.empty(cfg.epochs)
    last_states = np.empty((n_samples, sys.n))
    diverged = False
    ftildes = np.empty(n_samples)

    full, kick, probe = prop.full, prop.kick, prop.probe
    with np.errstate(over="ignore", invalid="ignore"):
        for e in range(cfg.epochs):
            data = traj if epoch_source is None else epoch_source(e)
            if len(data) != n_samples:
                raise ValueError("epoch_source changed the number of samples")
            ys = data.y.tolist()
            bs = data.b.tolist()
            supervised = e < cfg.supervised_epochs
            last = e == cfg.epochs - 1
            deltas = np.zeros(n_samples)
            for i in range(n_samples):
                if last:
                    last_states[i] = f
                ft = float(probe @ f)
                ftildes[i] = ft
                if supervised:
                    d = ft - ys[i]
                    deltas[i] = d
                    f = full @ f + kick * (d / (den * bs[i]))
                else:
                    f = full @ f + kick * 0.0
            mse[e] = np.mean((ftildes - data.y) ** 2)
            if not np.all(np.isfinite(f)) or np.max(np.abs(f)) > DIVERGENCE_LIMIT:
                diverged = True
            if e >= first_traced:
                s = (e - first_traced) * n_samples
                ft_log[s:s + n_samples] = ftildes
                y_log[s:s + n_samples] = data.y if supervised else np.nan
                d_log[s:s + n_samples] = deltas
    k = np.arange(first_traced * n_samples, cfg.epochs * n_samples)
    t = (k + 0.5) * cfg.tau_prime
    if not np.all(np.isfinite(mse)) or np.any(np.abs(ft_log) > DIVERGENCE_LIMIT):
        diverged = True
    return RunLog(mse, k, t, ft_log, y_log, d_log, f, last_states, diverged)


def dense_epoch(states, traj: Trajectory, sys: CompanionSystem, spec: OperatorSpec, step: float,
                end_state, refine: int = 10, supervised: bool = True):
    """Online solution between update instants, for quadrature over one epoch.

    ``states[i]`` is the state at the start of update ``i``. Returns
    ``(t, stack)`` with ``t`` relative to the epoch start on a grid ``refine``
    times finer than ``step`` and ``stack[k]`` the ``k``-th derivative there.
    On the grid point that coincides with an impulse the jump of the top
    derivative is split in half.
    """
    if refine < 2 or refine % 2:
        raise ValueError("refine must be an even integer >= 2")
    states = np.asarray(states, dtype=float)
    den = impulse_gain(spec)
    offsets = step * np.arange(refine) / refine
    free = [expm(sys.A * s) for s in offsets]
    kicks = [None if s < step / 2 else (0.5 * sys.B if s == step / 2 else expm(sys.A * (s - step / 2)) @ sys.B)
             for s in offsets]
    probe = expm(sys.A * (step / 2))[0]
    out = []
    for i, f in enumerate(states):
        drive = (probe @ f - traj.y[i]) / (den * traj.b[i]) if supervised else 0.0
        for phi, kick in zip(free, kicks):
            v = phi @ f
            if kick is not None:
                v = v + kick * drive
            out.append(v)
    out.append(np.asarray(end_state, dtype=float))
    t = step * np.arange(len(out)) / refine
    return t, np.array(out).T
