"""Reference implementations used only by the tests.

They share no code with the package: arbitrary precision Taylor series for the
matrix exponential and eigen-decomposition plus brute-force quadrature for the
variation-of-constants integral.
"""
import mpmath
import numpy as np

mpmath.mp.dps = 40


def taylor_expm(M, terms=200):
    """exp(M) by scaling, a long Taylor series in 40-digit arithmetic, and squaring."""
    A = mpmath.matrix(np.asarray(M, dtype=float).tolist())
    norm = mpmath.mnorm(A, 1)
    s = 0
    while norm / 2**s > 0.5:
        s += 1
    A = A / 2**s
    n = A.rows
    out = mpmath.eye(n)
    term = mpmath.eye(n)
    for k in range(1, terms):
        term = term * A / k
        out += term
        if mpmath.mnorm(term, 1) < mpmath.mpf(10) ** -38:
            break
    for _ in range(s):
        out = out * out
    return np.array(out.tolist(), dtype=float)


def modal_propagator(A, times):
    """exp(A t) for each t via the eigen-decomposition (distinct eigenvalues)."""
    lam, V = np.linalg.eig(A)
    Vinv = np.linalg.inv(V)
    times = np.atleast_1d(times)
    return np.real(np.einsum("ij,tj,jk->tik", V, np.exp(np.multiply.outer(times, lam)), Vinv))


def lagrange_impulse(A, B, step, amplitude, width=2e-4, panels=100_000):
    """State at ``step`` from zero, forced by a unit-area box of ``width`` centred at step/2.

    Integrates exp(A (step - s)) B F(s) with the midpoint rule on ``panels``
    panels; the box approximates the impulse to O(width^2).
    """
    h = step / panels
    s = (np.arange(panels) + 0.5) * h
    F = np.where(np.abs(s - step / 2) < width / 2, amplitude / width, 0.0)
    active = F != 0
    P = modal_propagator(A, step - s[active])
    return h * np.einsum("tij,j,t->i", P, B, F[active])
