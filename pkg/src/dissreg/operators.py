"""Differential operators and their companion-form state-space systems.

An operator ``P = alpha_0 + alpha_1 D + ... + alpha_h D^h`` together with the
dissipation weight ``exp(theta t)`` reduces the Euler-Lagrange condition to a
monic constant-coefficient ODE of order ``2h``::

    D^{2h} f + beta_{2h-1} D^{2h-1} f + ... + beta_0 f = (impulses)

which is rewritten as ``f' = A f + B F(t)`` with ``A`` in companion form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class UnsupportedOrderError(ValueError):
    """Raised when closed-form reduced coefficients are requested for h > 2."""


@dataclass(frozen=True)
class OperatorSpec:
    """Operator coefficients, dissipation and regularization weights.

    ``alpha`` holds ``alpha_0 .. alpha_h``. Lower coefficients may be NaN when
    the system is built from a root set, where only ``alpha_h`` (the gain
    divisor) is known.
    """

    order_h: int
    alpha: tuple[float, ...]
    theta: float
    mu: int = 0
    lam: float = 1.0

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not isinstance(self.order_h, (int, np.integer)) or self.order_h < 1:
            raise ValueError(f"order_h must be a positive integer, got {self.order_h!r}")
        if len(alpha) != self.order_h + 1:
            raise ValueError(
                f"alpha must have order_h + 1 = {self.order_h + 1} entries, got {len(alpha)}"
            )
        if not np.isfinite(alpha[-1]) or alpha[-1] == 0.0:
            raise ValueError("leading coefficient alpha_h must be finite and nonzero")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta!r}")
        if self.mu not in (0, 1):
            raise ValueError(f"mu must be 0 or 1, got {self.mu!r}")
        if self.lam == 0 or not np.isfinite(self.lam):
            raise ValueError("lambda must be finite and nonzero")

    @classmethod
    def leading_only(cls, order_h: int, theta: float, lam: float, alpha_h: float = 1.0) -> "OperatorSpec":
        """Spec for a root-defined system: only ``alpha_h`` is meaningful."""
        return cls(order_h, (np.nan,) * order_h + (alpha_h,), theta, 0, lam)

    @property
    def alpha_h(self) -> float:
        return self.alpha[-1]

    @property
    def nu(self) -> int:
        return (-1) ** self.order_h

    @property
    def fully_specified(self) -> bool:
        return bool(np.all(np.isfinite(self.alpha)))


@dataclass(frozen=True)
class CompanionSystem:
    beta: np.ndarray
    A: np.ndarray
    B: np.ndarray
    source: str
    roots: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def order_h(self) -> int:
        return self.A.shape[0] // 2


def reduced_coefficients(spec: OperatorSpec) -> np.ndarray:
    """Return ``(beta_0, ..., beta_{2h-1})`` of the reduced monic ODE."""
    h = spec.order_h
    if h not in (1, 2):
        raise UnsupportedOrderError(f"reduced coefficients are only derived for h in {{1, 2}}, got {h}")
    if not spec.fully_specified:
        raise ValueError("operator coefficients are not fully specified")
    th, lam, mu = spec.theta, spec.lam, spec.mu
    if h == 1:
        a0, a1 = spec.alpha
        b0 = (a0 * a1 * th - a0**2 - mu / lam) / a1**2
        return np.array([b0, th])
    a0, a1, a2 = spec.alpha
    d = a2**2
    return np.array([
        (a0 * a2 * th**2 - a0 * a1 * th + a0**2 + mu / lam) / d,
        (a1 * a2 * th**2 + (2 * a0 * a2 - a1**2) * th) / d,
        (a2**2 * th**2 + a1 * a2 * th + 2 * a0 * a2 - a1**2) / d,
        2 * th,
    ])


def _companion(beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    beta = np.asarray(beta, dtype=float)
    n = beta.size
    if n < 2 or n % 2:
        raise ValueError(f"beta must have an even length >= 2, got {n}")
    A = np.zeros((n, n))
    A[np.arange(n - 1), np.arange(1, n)] = 1.0
    A[-1, :] = -beta
    B = np.zeros(n)
    # impulse enters the highest derivative with sign -nu = (-1)^(h+1)
    B[-1] = (-1.0) ** (n // 2 + 1)
    return A, B


def companion_system(beta) -> CompanionSystem:
    beta = np.array(beta, dtype=float)
    A, B = _companion(beta)
    roots = np.sort_complex(np.linalg.eigvals(A))
    return CompanionSystem(beta, A, B, "from_alpha", roots)


def _is_conjugate_closed(roots: np.ndarray, tol: float = 1e-12) -> bool:
    remaining = list(roots)
    while remaining:
        r = remaining.pop()
        if abs(r.imag) <= tol * max(1.0, abs(r)):
            continue
        scale = tol * max(1.0, abs(r))
        match = [i for i, q in enumerate(remaining) if abs(q - np.conj(r)) <= scale]
        if not match:
            return False
        remaining.pop(match[0])
    return True


def monic_from_roots(roots) -> np.ndarray:
    """Coefficients (descending, leading 1) of prod(s - r) for a conjugate-closed set.

    Conjugate pairs are folded into real quadratics so the product stays real.
    """
    roots = np.asarray(roots, dtype=complex)
    if not _is_conjugate_closed(roots):
        raise ValueError("root set is not closed under complex conjugation")
    coeffs = np.array([1.0])
    is_real = np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))
    for r in roots[is_real]:
        coeffs = np.convolve(coeffs, [1.0, -r.real])
    for r in roots[~is_real & (roots.imag > 0)]:
        coeffs = np.convolve(coeffs, [1.0, -2.0 * r.real, abs(r) ** 2])
    return coeffs


def system_from_roots(roots, order_h: int) -> CompanionSystem:
    roots = np.asarray(roots, dtype=complex)
    if roots.size != 2 * order_h:
        raise ValueError(f"expected {2 * order_h} roots for order_h={order_h}, got {roots.size}")
    coeffs = monic_from_roots(roots)
    beta = coeffs[1:][::-1].copy()
    A, B = _companion(beta)
    return CompanionSystem(beta, A, B, "from_roots", np.sort_complex(roots))
