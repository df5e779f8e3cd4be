"""Experiment harness: ``dissreg run <config.json>`` and ``dissreg validate <config.json>``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import global_solver as gsol
from .config import ConfigError, RunConfig, load_config
from .graph import ErnGraph, estimate_epsilon, estimate_sigma, run_graph, snapshot_rows
from .integrator import TrainingConfig, dense_epoch, run_epochs
from .operators import OperatorSpec, companion_system, reduced_coefficients, system_from_roots
from .signals import build_task, load_csv, permute, with_fd_derivatives

log = logging.getLogger("dissreg")

OUT_ENV = "DISSREG_OUT"
EXIT_OK, EXIT_FAIL, EXIT_DIVERGED = 0, 1, 2


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(rows, path, header) -> None:
    """Header plus rows; floats with 17 significant digits, LF line endings, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def build_operator(cfg: RunConfig):
    op = cfg.operator
    if "alpha" in op:
        spec = OperatorSpec(op["h"], tuple(op["alpha"]), op["theta"], op.get("mu", 0), cfg.lam)
        return spec, companion_system(reduced_coefficients(spec))
    h = cfg.order_h
    spec = OperatorSpec.leading_only(h, op["theta"], cfg.lam, op.get("alpha_h", 1.0))
    return spec, system_from_roots(cfg.roots, h)


def build_trajectory(cfg: RunConfig):
    if isinstance(cfg.task, dict):
        traj = load_csv(cfg.task["csv"], cfg.tau)
    else:
        traj = build_task(cfg.task, cfg.tau, cfg.T)
    shuffle = cfg.shuffle
    fd = cfg.derivatives == "finite_difference"

    def prepared(t):
        return with_fd_derivatives(t) if fd else t

    if shuffle["kind"] == "once":
        return prepared(permute(traj, shuffle["seed"])), None
    if shuffle["kind"] == "per_epoch":
        base = traj
        return prepared(permute(base, [shuffle["seed"], 0])), \
            (lambda e: prepared(permute(base, [shuffle["seed"], e])))
    return prepared(traj), None


def _write_forward(out: Path, runlog) -> None:
    write_csv(enumerate(runlog.mse_per_epoch.tolist(), start=1), out / "mse.csv", ["epoch", "mse"])
    write_csv(runlog.trace_rows(), out / "trace.csv", ["k", "t", "f_tilde", "y", "delta"])
    write_csv(enumerate(runlog.final_state.tolist()), out / "state.csv", ["index", "value"])


def _global(cfg, traj, spec, sys_, mode):
    gf = gsol.greens_function(sys_, spec, mode)
    boundary = cfg.boundary["kind"]
    gs = gsol.assemble_system(traj, gf, spec, boundary, cfg.boundary.get("values"))
    fbar, c = gsol.solve_global(gs)
    return gf, gs, fbar, c


def run(cfg: RunConfig, out_dir: Path, seed: int | None = None) -> int:
    if seed is not None and cfg.shuffle["kind"] != "none":
        cfg.shuffle = {**cfg.shuffle, "seed": seed}
    out_dir.mkdir(parents=True, exist_ok=True)
    spec, sys_ = build_operator(cfg)
    traj, epoch_source = build_trajectory(cfg)
    log.info("mode=%s N=%d roots=%s seed=%s", cfg.mode, len(traj), sys_.roots, cfg.shuffle.get("seed"))
    diverged = False

    if cfg.mode == "graph":
        gp = cfg.graph
        warm = traj.x[:gp.warmup]
        eps = estimate_epsilon(warm) if gp.epsilon == "auto" else float(gp.epsilon)
        sigma = estimate_sigma(warm) if gp.sigma == "auto" else float(gp.sigma)
        graph = ErnGraph(eps, sigma, gp.rho, gp.eta)
        glog = run_graph(traj, sys_, spec, graph, cfg.epochs, cfg.tau_prime,
                         cfg.initial_state, cfg.supervised_epochs)
        n = len(traj)
        k = np.arange(cfg.epochs * n)
        y = np.tile(traj.y, cfg.epochs)
        y[cfg.supervised_epochs * n:] = np.nan
        if cfg.trace == "last":
            k = k[-n:]
        write_csv(enumerate(glog.mse_per_epoch.tolist(), start=1), out_dir / "mse.csv", ["epoch", "mse"])
        write_csv(zip(k.tolist(), ((k + 0.5) * cfg.tau_prime).tolist(), glog.f_tilde[k].tolist(),
                      y[k].tolist(), glog.error[k].tolist()),
                  out_dir / "trace.csv", ["k", "t", "f_tilde", "y", "delta"])
        write_csv(enumerate(glog.final_state.tolist()), out_dir / "state.csv", ["index", "value"])
        node_rows, edge_rows = snapshot_rows(graph)
        write_csv(node_rows[1:], out_dir / "graph_nodes.csv", node_rows[0])
        write_csv(edge_rows[1:], out_dir / "graph_edges.csv", edge_rows[0])
        diverged = glog.diverged
    else:
        tcfg = TrainingConfig(cfg.epochs, cfg.tau, cfg.tau_prime, np.array(cfg.initial_state, dtype=float),
                              cfg.supervised_epochs, cfg.trace)
        runlog = run_epochs(traj, sys_, spec, tcfg, epoch_source)
        _write_forward(out_dir, runlog)
        diverged = runlog.diverged

    if cfg.mode in ("global", "compare"):
        mode = "causal" if cfg.mode == "compare" else cfg.green
        try:
            gf, gs, fbar, c = _global(cfg, traj, spec, sys_, mode)
        except gsol.SingularSystemError as exc:
            write_csv([[exc.cond_estimate, None, None, None]], out_dir / "diagnostics.csv",
                      ["cond_estimate", "residual", "convergence_indicator", "saturated"])
            raise
        indicator = None
        if cfg.convergence is not None:
            indicator = gsol.convergence_indicator(gsol.ConvergenceParams(
                cfg.convergence["C"], cfg.convergence["beta"], cfg.lam, len(traj), traj.T))
        write_csv(zip(traj.t.tolist(), fbar.tolist()), out_dir / "global.csv", ["t", "fbar"])
        write_csv([[gs.cond_estimate, gsol.relative_residual(gs, fbar, c), indicator, gs.saturated]],
                  out_dir / "diagnostics.csv",
                  ["cond_estimate", "residual", "convergence_indicator", "saturated"])

    if cfg.mode == "compare":
        rows = []
        t_f, stack_f = dense_epoch(runlog.last_epoch_states, traj, sys_, spec, cfg.tau,
                                   runlog.final_state, supervised=cfg.supervised_epochs == cfg.epochs)
        h = spec.order_h
        sup_forward = runlog.f_tilde[-len(traj):]
        rows.append(["forward", gsol.functional_value(t_f, stack_f[:h + 1], traj, spec, sup_forward)])
        grid = gsol.quadrature_grid(traj.T, traj.tau)
        for mode in ("causal", "noncausal"):
            gf, gs, fbar, c = _global(cfg, traj, spec, sys_, mode)
            stack = [gsol.reconstruct(gf, c, traj, fbar, spec, grid, s) for s in range(h + 1)]
            rows.append([f"global_{mode}", gsol.functional_value(grid, stack, traj, spec, fbar)])
            if mode == "noncausal":
                write_csv(zip(traj.t.tolist(), fbar.tolist()), out_dir / "global_noncausal.csv", ["t", "fbar"])
        write_csv(rows, out_dir / "functional.csv", ["path", "phi"])

    write_csv([[cfg.mode, diverged, cfg.shuffle.get("seed")]], out_dir / "status.csv",
              ["mode", "diverged", "seed"])
    return EXIT_DIVERGED if diverged else EXIT_OK


def resolve_output(cfg: RunConfig, cli_out: str | None, config_path: Path) -> Path:
    if cli_out:
        return Path(cli_out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV]) / config_path.stem
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("runs") / config_path.stem


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dissreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a run configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and output_dir)")
    p_run.add_argument("--seed", type=int, help="override the shuffle seed")
    p_val = sub.add_parser("validate", help="check a configuration without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    path = Path(args.config)
    try:
        cfg = load_config(path)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.command == "validate":
        print(f"{path}: ok")
        return EXIT_OK
    out = resolve_output(cfg, args.out, path)
    try:
        code = run(cfg, out, args.seed)
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if code == EXIT_DIVERGED:
        print(f"{path}: diverged (artifacts in {out})", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
