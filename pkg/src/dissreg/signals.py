"""Supervision streams: sampling grids, input trajectories, targets, arc weights."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Trajectory:
    """Sampled supervision stream.

    ``x`` and ``xdot`` are ``(N, d)``; ``y``, ``b`` and ``t`` have length ``N``.
    """

    tau: float
    T: float
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    y: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("x", "xdot", "y", "b"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"field {name!r} has length {len(getattr(self, name))}, expected {n}")

    def __len__(self):
        return len(self.t)


def arc_weight(xdot) -> np.ndarray:
    xdot = np.atleast_2d(np.asarray(xdot, dtype=float).T).T
    return np.sqrt(1.0 + np.sum(xdot**2, axis=1))


def sample_grid(tau: float, T: float) -> np.ndarray:
    """Mid-interval instants ``tau/2, 3tau/2, ...``, one per whole step in ``[0, T]``.

    ``N = floor(T / tau)``, so every update interval ``[(i-1)tau, i tau]``
    lies inside the period (tau=0.1, T=2pi gives N=62).
    """
    if not (tau > 0 and T > 0):
        raise ValueError("tau and T must be positive")
    if tau >= T:
        raise ValueError(f"empty grid: tau={tau} must be smaller than T={T}")
    n = int(np.floor(T / tau * (1 + 1e-12)))
    return tau / 2 + tau * np.arange(n)


def build_task(kind: str, tau: float, T: float = 2 * np.pi) -> Trajectory:
    t = sample_grid(tau, T)
    if kind == "sine":
        x = np.sin(t)
        xdot = np.cos(t)
        y = 2 * x - 1
    elif kind == "cosine":
        x = -3 * np.cos(t)
        xdot = 3 * np.sin(t)
        y = x + 3
    else:
        raise ValueError(f"unknown task kind {kind!r}; expected 'sine' or 'cosine'")
    x = x[:, None]
    xdot = xdot[:, None]
    return Trajectory(tau, T, t, x, xdot, y, arc_weight(xdot))


def finite_difference_derivatives(x, tau: float) -> np.ndarray:
    """Central differences inside, first-order one-sided differences at the ends."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] < 2:
        raise ValueError("need at least two samples for finite differences")
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2 * tau)
    d[0] = (x[1] - x[0]) / tau
    d[-1] = (x[-1] - x[-2]) / tau
    return d[:, 0] if squeeze else d


def permute(traj: Trajectory, seed: int) -> Trajectory:
    """Shuffle the data rows (x, xdot, y, b) together; the time grid is kept."""
    perm = np.random.default_rng(seed).permutation(len(traj))
    return replace(traj, x=traj.x[perm], xdot=traj.xdot[perm], y=traj.y[perm], b=traj.b[perm])


def with_fd_derivatives(traj: Trajectory) -> Trajectory:
    """Recompute ``xdot`` and ``b`` from the current row order by finite differences."""
    xdot = finite_difference_derivatives(traj.x, traj.tau)
    return replace(traj, xdot=xdot, b=arc_weight(xdot))


def load_csv(path, tau: float | None = None) -> Trajectory:
    """Read a trajectory from CSV with columns ``t, x_1..x_d, y`` (header required).

    Optional ``xdot_1..xdot_d`` columns are used when present, otherwise the
    derivatives come from finite differences on the fixed step ``tau`` (taken
    from the ``t`` column when not given).
    """
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    col = {name: i for i, name in enumerate(header)}
    for required in ("t", "y"):
        if required not in col:
            raise ValueError(f"{path}: missing column {required!r}")
    xcols = sorted((h for h in header if h.startswith("x_")), key=lambda h: int(h[2:]))
    if not xcols:
        raise ValueError(f"{path}: no input columns x_1..x_d")
    t = data[:, col["t"]]
    x = data[:, [col[h] for h in xcols]]
    y = data[:, col["y"]]
    if tau is None:
        if len(t) < 2:
            raise ValueError(f"{path}: cannot infer tau from a single row")
        tau = float(t[1] - t[0])
    dcols = [f"xdot_{h[2:]}" for h in xcols]
    if all(h in col for h in dcols):
        xdot = data[:, [col[h] for h in dcols]]
    else:
        xdot = finite_difference_derivatives(x, tau)
    T = float(t[-1] + tau / 2)
    return Trajectory(float(tau), T, t, x, xdot, y, arc_weight(xdot))
