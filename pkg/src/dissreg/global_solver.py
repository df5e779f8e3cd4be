"""Batch (global) solution through the Green's function of the reduced operator.

The solution is written as a kernel part plus a superposition of Green's
functions centred at the supervision instants::

    f(t) = sum_l c_l e^{l_l t} - (nu / lam) sum_i (f(t_i) - y_i) / b_i * g(t - t_i)

Evaluating this at every ``t_i`` and adding ``2h`` boundary conditions gives a
dense ``(N + 2h)`` square system for ``f(t_1..t_N)`` and ``c``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid
from scipy.sparse.linalg import LinearOperator, onenormest

from .operators import CompanionSystem, OperatorSpec
from .signals import Trajectory

SATURATION = 1e300


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, cond_estimate: float):
        super().__init__(f"global system is numerically singular (cond_1 ~ {cond_estimate:.3e})")
        self.cond_estimate = cond_estimate


@dataclass(frozen=True)
class GreensFunction:
    """Impulse response of the monic reduced operator, unit jump in the top derivative.

    ``leading_scale`` (``1 / alpha_h**2``) converts it into the Green's
    function of the un-normalised operator; assembly and reconstruction apply it.
    """

    roots: np.ndarray
    mode: str = "causal"
    nu: int = -1
    leading_scale: float = 1.0

    def __post_init__(self):
        if self.mode not in ("causal", "noncausal"):
            raise ValueError(f"mode must be 'causal' or 'noncausal', got {self.mode!r}")
        roots = np.asarray(self.roots, dtype=complex)
        gaps = np.abs(roots[:, None] - roots[None, :]) + np.eye(len(roots))
        if np.min(gaps) <= 1e-12 * max(1.0, np.max(np.abs(roots))):
            raise ValueError("repeated roots are not supported by the partial-fraction kernel")
        object.__setattr__(self, "roots", roots)

    @property
    def weights(self) -> np.ndarray:
        r = self.roots
        diff = r[:, None] - r[None, :]
        np.fill_diagonal(diff, 1.0)
        return 1.0 / np.prod(diff, axis=1)


def greens_function(sys: CompanionSystem, spec: OperatorSpec, mode: str = "causal") -> GreensFunction:
    return GreensFunction(sys.roots, mode, (-1) ** sys.order_h, 1.0 / spec.alpha_h**2)


def _green(gf: GreensFunction, t, order: int = 0):
    t = np.asarray(t, dtype=float)
    r = gf.roots
    with np.errstate(over="ignore", invalid="ignore"):
        modes = (gf.weights * r**order) * np.exp(np.multiply.outer(t, r))
        total = modes.sum(axis=-1).real
    if gf.mode == "causal":
        # at t == 0 only the top derivative is nonzero; take the midpoint of its jump
        val = np.where(t > 0, total, np.where(t == 0, 0.5 * total, 0.0))
    else:
        val = 0.5 * np.sign(t) * np.where(np.isnan(total), np.inf, total)
    saturated = bool(np.any(~np.isfinite(val)) or np.any(np.abs(val) > SATURATION))
    val = np.clip(np.nan_to_num(val, nan=0.0, posinf=SATURATION, neginf=-SATURATION),
                  -SATURATION, SATURATION)
    return val, saturated


def green_eval(gf: GreensFunction, t, order: int = 0):
    """``d^order g / dt^order`` at ``t`` (scalar or array).

    Causal: ``sum_l w_l l_l^order e^{l_l t}`` for ``t > 0`` and 0 before; at
    ``t == 0`` the jump of the top derivative is split in half.
    Non-causal: half of the same mode sum on each side of the origin with
    opposite signs; stable modes grow without bound for ``t < 0`` and are
    clamped at 1e300.
    """
    val, _ = _green(gf, t, order)
    return float(val) if val.ndim == 0 else val


def kernel_basis(roots, t, order: int = 0) -> np.ndarray:
    """Real basis of the kernel of the reduced operator, ``(len(t), 2h)``.

    Real roots give ``e^{l t}``; a conjugate pair gives the real and
    imaginary parts of ``e^{l t}`` for its upper member.
    """
    roots = np.asarray(roots, dtype=complex)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        z = roots**order * np.exp(np.multiply.outer(t, roots))
    out = np.empty(z.shape)
    is_real = np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))
    done = np.zeros(len(roots), dtype=bool)
    for l, r in enumerate(roots):
        if done[l]:
            continue
        if is_real[l]:
            out[:, l] = z[:, l].real
            done[l] = True
            continue
        partner = next(m for m in range(len(roots))
                       if not done[m] and m != l and abs(roots[m] - np.conj(r)) <= 1e-9 * max(1.0, abs(r)))
        upper = l if r.imag > 0 else partner
        out[:, l] = z[:, upper].real
        out[:, partner] = z[:, upper].imag
        done[l] = done[partner] = True
    return out


@dataclass
class GlobalSystem:
    M: np.ndarray
    rhs: np.ndarray
    Gg: np.ndarray
    Cg: np.ndarray
    boundary_rows: str
    cond_estimate: float
    saturated: bool
    n_samples: int
    order_h: int


def _cond_1(M: np.ndarray) -> float:
    try:
        with warnings.catch_warnings():
            # an exactly singular factor is reported through the infinite estimate
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(M, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError):
        return np.inf
    if np.any(np.diag(lu[0]) == 0):
        return np.inf
    n = M.shape[0]
    inv = LinearOperator(
        (n, n), dtype=float,
        matvec=lambda v: scipy.linalg.lu_solve(lu, v),
        rmatvec=lambda v: scipy.linalg.lu_solve(lu, v, trans=1),
    )
    inv_norm = onenormest(inv) if n > 4 else np.linalg.norm(scipy.linalg.lu_solve(lu, np.eye(n)), 1)
    return float(np.linalg.norm(M, 1) * inv_norm)


def assemble_system(traj: Trajectory, gf: GreensFunction, spec: OperatorSpec,
                    boundary: str = "periodic", cauchy_values=None) -> GlobalSystem:
    """Build ``M [f(t_1..t_N), c] = rhs`` with the boundary conditions in the last 2h rows.

    ``boundary="periodic"`` imposes ``f^(s)(0) = f^(s)(T)`` for ``s < 2h``;
    ``boundary="cauchy"`` imposes ``f^(s)(0) = cauchy_values[s]``.
    """
    t, b, y = traj.t, traj.b, traj.y
    N = len(t)
    if N < 1:
        raise ValueError("need at least one supervision point")
    n_k = len(gf.roots)
    h = n_k // 2
    scale = gf.leading_scale
    ratio = spec.lam / gf.nu
    saturated = False

    g, sat = _green(gf, np.subtract.outer(t, t))
    saturated |= sat
    Gg = scale * g / b[None, :]
    Cg = -kernel_basis(gf.roots, t)

    size = N + n_k
    M = np.zeros((size, size))
    M[:N, :N] = ratio * np.eye(N) + Gg
    M[:N, N:] = ratio * Cg
    Gc = np.zeros((n_k, N))
    Cc = np.zeros((n_k, n_k))
    extra = np.zeros(n_k)
    for s in range(n_k):
        at0, sat = _green(gf, -t, s)
        saturated |= sat
        if boundary == "periodic":
            atT, sat = _green(gf, traj.T - t, s)
            saturated |= sat
            Gc[s] = -scale * (at0 - atT) / b
            Cc[s] = kernel_basis(gf.roots, 0.0, s)[0] - kernel_basis(gf.roots, traj.T, s)[0]
        elif boundary == "cauchy":
            if cauchy_values is None or len(cauchy_values) != n_k:
                raise ValueError(f"cauchy boundary needs {n_k} values")
            Gc[s] = -scale * at0 / b
            Cc[s] = kernel_basis(gf.roots, 0.0, s)[0]
            extra[s] = ratio * cauchy_values[s]
        else:
            raise ValueError(f"unknown boundary {boundary!r}")
    M[N:, :N] = Gc
    M[N:, N:] = ratio * Cc
    rhs = np.concatenate([Gg @ y, Gc @ y + extra])
    return GlobalSystem(M, rhs, Gg, Cg, boundary, _cond_1(M), saturated, N, h)


def solve_global(gs: GlobalSystem):
    """Return ``(fbar, c)``: values at the supervision instants and kernel coefficients."""
    if not np.all(np.isfinite(gs.M)):
        raise ValueError("global matrix has non-finite entries")
    if not gs.cond_estimate < 1e16:
        raise SingularSystemError(gs.cond_estimate)
    sol = scipy.linalg.solve(gs.M, gs.rhs)
    return sol[:gs.n_samples], sol[gs.n_samples:]


def relative_residual(gs: GlobalSystem, fbar, c) -> float:
    sol = np.concatenate([fbar, c])
    r = np.linalg.norm(gs.M @ sol - gs.rhs)
    ref = np.linalg.norm(gs.rhs)
    return float(r / ref) if ref > 0 else float(r)


def reconstruct(gf: GreensFunction, c, traj: Trajectory, fbar, spec: OperatorSpec, t, order: int = 0):
    """Evaluate the global solution (or its ``order``-th derivative) at ``t``."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    kernel = kernel_basis(gf.roots, t_arr, order) @ np.asarray(c, dtype=float)
    g, _ = _green(gf, np.subtract.outer(t_arr, traj.t), order)
    weights = gf.leading_scale * (np.asarray(fbar) - traj.y) / traj.b
    val = kernel - (gf.nu / spec.lam) * (g @ weights)
    return float(val[0]) if np.ndim(t) == 0 else val


@dataclass(frozen=True)
class ConvergenceParams:
    C: float
    beta_conv: float
    lam: float
    N: int
    T: float

    def __post_init__(self):
        if self.C < 1:
            raise ValueError("C must be >= 1")
        if not self.beta_conv > 0:
            raise ValueError("beta_conv must be > 0")


def convergence_indicator(p: ConvergenceParams) -> float:
    """``C (1 + 1/lam) (1 + C/lam)^(N-1) exp(-beta T)``; online-to-global convergence needs < 1."""
    if p.lam == 0:
        raise ZeroDivisionError("lambda must be nonzero")
    return p.C * (1 + 1 / p.lam) * (1 + p.C / p.lam) ** (p.N - 1) * np.exp(-p.beta_conv * p.T)


def functional_value(t_grid, stack, traj: Trajectory, spec: OperatorSpec, fbar_at_supervision) -> float:
    """Trapezoidal estimate of the regularised risk of a candidate solution.

    ``stack[k]`` holds the ``k``-th derivative of the candidate on ``t_grid``
    for ``k = 0..h``. The weight ``psi * b`` reduces to ``exp(theta t)``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    stack = np.atleast_2d(np.asarray(stack, dtype=float))
    h = spec.order_h
    if stack.shape[0] < h + 1:
        raise ValueError(f"need derivatives up to order {h}, got {stack.shape[0] - 1}")
    if stack.shape[1] != t_grid.size:
        raise ValueError("derivative stack and quadrature grid lengths differ")
    fsup = np.asarray(fbar_at_supervision, dtype=float)
    if fsup.shape != traj.y.shape:
        raise ValueError("supervision values and targets have different lengths")
    if not spec.fully_specified:
        raise ValueError("functional needs every operator coefficient alpha_0..alpha_h")
    weight = np.exp(spec.theta * t_grid)
    Pf = sum(a * stack[k] for k, a in enumerate(spec.alpha))
    reg = spec.lam * trapezoid(Pf**2 * weight, t_grid) if t_grid.size > 1 else 0.0
    ridge = spec.mu * trapezoid(stack[0] ** 2 * weight, t_grid) if t_grid.size > 1 else 0.0
    psi = np.exp(spec.theta * traj.t) / traj.b
    return float(reg + ridge + np.sum(psi * (fsup - traj.y) ** 2))


def quadrature_grid(T: float, tau: float, refine: int = 10) -> np.ndarray:
    n = int(round(T / tau * refine))
    return np.linspace(0.0, T, n + 1)


def dump_matrix(M, path) -> None:
    """Plain-text, row-major, space separated, 17 significant digits."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in M:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")
