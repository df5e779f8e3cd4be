import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dissreg.signals import (
    arc_weight,
    build_task,
    finite_difference_derivatives,
    load_csv,
    permute,
    sample_grid,
    with_fd_derivatives,
)


def test_grid_counts():
    t = sample_grid(0.1, 2 * np.pi)
    assert len(t) == 62
    assert t[0] == pytest.approx(0.05)
    assert len(sample_grid(0.01, 2 * np.pi)) == 628
    np.testing.assert_allclose(sample_grid(0.5, 1.0), [0.25, 0.75])


def test_grid_rejects_large_step():
    with pytest.raises(ValueError):
        sample_grid(1.0, 1.0)
    with pytest.raises(ValueError):
        sample_grid(-0.1, 1.0)


@settings(max_examples=200, deadline=None)
@given(tau=st.floats(1e-3, 10), ratio=st.floats(1.01, 500))
def test_grid_invariants(tau, ratio):
    T = tau * ratio
    t = sample_grid(tau, T)
    assert len(t) >= 1
    np.testing.assert_allclose(np.diff(t), tau, rtol=1e-9)
    assert t[0] == tau / 2
    # every update interval fits in the period and no further whole interval does
    assert t[-1] + tau / 2 <= T * (1 + 1e-9)
    assert T < t[-1] + 1.5 * tau


def test_sine_task_values():
    traj = build_task("sine", np.pi, 2 * np.pi)  # t = pi/2, 3pi/2
    np.testing.assert_allclose(traj.t, [np.pi / 2, 3 * np.pi / 2])
    assert traj.x[0, 0] == 1.0 and traj.y[0] == 1.0
    assert traj.xdot[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert traj.b[0] == pytest.approx(1.0, abs=1e-15)
    assert len(build_task("sine", 0.1)) == 62


def test_cosine_task_at_zero():
    traj = build_task("cosine", 0.1)
    # shift by half a step: exact values at t=0 from the definitions
    assert -3 * np.cos(0.0) == -3.0
    np.testing.assert_allclose(traj.x[:, 0], -3 * np.cos(traj.t))
    np.testing.assert_allclose(traj.y, traj.x[:, 0] + 3)
    np.testing.assert_allclose(traj.xdot[:, 0], 3 * np.sin(traj.t))


def test_unknown_task():
    with pytest.raises(ValueError):
        build_task("square", 0.1)


def test_arc_weight():
    np.testing.assert_allclose(arc_weight([0.0, 3.0, -4.0]), [1.0, np.sqrt(10), np.sqrt(17)])
    np.testing.assert_allclose(arc_weight(np.array([[3.0, 4.0]])), [np.sqrt(26)])


def test_fd_examples():
    np.testing.assert_allclose(finite_difference_derivatives([0.0, 1.0, 2.0], 1.0), [1, 1, 1])
    np.testing.assert_array_equal(finite_difference_derivatives([2.5, 2.5, 2.5], 0.3), [0, 0, 0])
    with pytest.raises(ValueError):
        finite_difference_derivatives([1.0], 0.1)


def test_fd_against_analytic_derivative():
    tau = 1e-3
    t = np.arange(0, 2 * np.pi, tau)
    d = finite_difference_derivatives(np.sin(t), tau)
    assert np.max(np.abs(d[1:-1] - np.cos(t[1:-1]))) <= 1e-5
    # one-sided ends are first order
    assert abs(d[0] - np.cos(t[0])) <= tau


def test_fd_multichannel_shape():
    x = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
    np.testing.assert_allclose(finite_difference_derivatives(x, 0.5), [[2, 4]] * 5)


def test_permute_deterministic_and_pairing():
    traj = build_task("sine", 0.1)
    a, b = permute(traj, 7), permute(traj, 7)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.t, traj.t)
    np.testing.assert_array_equal(np.sort(a.y), np.sort(traj.y))
    # rows stay paired: y = 2x - 1 and b from xdot
    np.testing.assert_allclose(a.y, 2 * a.x[:, 0] - 1)
    np.testing.assert_allclose(a.b, arc_weight(a.xdot))
    assert not np.array_equal(a.y, traj.y)


def test_permute_single_row():
    traj = build_task("sine", 0.6, 1.0)
    assert len(traj) == 1
    np.testing.assert_array_equal(permute(traj, 3).y, traj.y)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permute_preserves_multisets(seed):
    traj = build_task("cosine", 0.25)
    p = permute(traj, seed)
    for name in ("x", "xdot", "y", "b"):
        np.testing.assert_array_equal(np.sort(getattr(p, name), axis=0), np.sort(getattr(traj, name), axis=0))


def test_fd_recomputed_after_shuffle():
    traj = permute(build_task("sine", 0.1), 1)
    fd = with_fd_derivatives(traj)
    np.testing.assert_allclose(fd.xdot[:, 0], finite_difference_derivatives(traj.x[:, 0], 0.1))
    assert np.all(fd.b >= 1.0)


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    t = 0.05 + 0.1 * np.arange(5)
    rows = ["t,x_1,y"] + [f"{a:.17g},{np.sin(a):.17g},{2 * np.sin(a) - 1:.17g}" for a in t]
    p.write_text("\n".join(rows) + "\n")
    traj = load_csv(p)
    assert traj.tau == pytest.approx(0.1)
    np.testing.assert_allclose(traj.y, 2 * np.sin(t) - 1)
    np.testing.assert_allclose(traj.xdot[:, 0], finite_difference_derivatives(np.sin(t), traj.tau))


def test_load_csv_with_derivatives_and_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("t,x_1,xdot_1,y\n0.5,1,0,2\n1.5,2,3,4\n")
    traj = load_csv(p)
    np.testing.assert_allclose(traj.b, [1.0, np.sqrt(10)])
    bad = tmp_path / "bad.csv"
    bad.write_text("t,y\n0,1\n1,2\n")
    with pytest.raises(ValueError):
        load_csv(bad)
