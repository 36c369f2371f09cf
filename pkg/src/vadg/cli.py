"""Command-line interface.

Subcommands::

    vadg run CONFIG            simulate one configuration
    vadg ensemble CONFIG -R N  run N seeds and compute resistivity statistics
    vadg stats MANIFEST        recompute statistics of a finished ensemble
    vadg convergence CONFIG    temporal self-convergence table

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 blow-up.
``VADG_OUTPUT_ROOT`` prefixes relative output directories.
"""
import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import apply_overrides, load_config
from .diagnostics import DiagnosticsWriter, format_float, sample
from .driver import Simulation, build_state
from .ensemble import pooled_histogram, run_ensemble, series_from_manifest, write_stats_csv
from .errors import BlowUpError, ConfigError, SolverError, VadgError
from .explicit import cfl_dt
from .field import write_snapshot
from .implicit import LinearSolveCache, scheme_a
from .physics import PRNG_ALGORITHM

__all__ = ["main", "execute_run", "cmd_run", "cmd_ensemble", "cmd_stats", "cmd_convergence",
           "convergence_table", "OUTPUT_ROOT_ENV"]

OUTPUT_ROOT_ENV = "VADG_OUTPUT_ROOT"


def _output_dir(path):
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _file_entry(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return {"path": os.path.basename(path), "size": os.path.getsize(path), "sha256": h.hexdigest()}


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def execute_run(cfg, out_dir=None, state=None, log=None):
    """Simulate ``cfg`` and write scalars, snapshots and a manifest.

    Parameters
    ----------
    cfg : RunConfig
    out_dir : str, optional
        Defaults to ``cfg.output.dir`` (under ``VADG_OUTPUT_ROOT`` if set).
    state : State, optional
        Initial state override.
    log : callable, optional
        Receives progress messages.

    Returns
    -------
    dict
        Paths of the written files (keys ``scalars``, ``manifest``,
        ``snapshots``, ``solver``).

    Raises
    ------
    VadgError
        After writing a manifest that records the failure.
    """
    out_dir = _output_dir(cfg.output.dir) if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "scalars": os.path.join(out_dir, "scalars.csv"),
        "manifest": os.path.join(out_dir, "manifest.json"),
        "solver": os.path.join(out_dir, "solver.csv"),
        "snapshots": [],
    }
    start = time.perf_counter()
    sim = Simulation(cfg, state)
    o = cfg.output
    status = "complete"
    error = None

    def snapshot():
        path = os.path.join(out_dir, f"snap_{sim.state.step:08d}.vla")
        write_snapshot(path, sim.state)
        paths["snapshots"].append(path)

    with DiagnosticsWriter(paths["scalars"]) as diag, open(paths["solver"], "w", newline="") as sfh:
        solver_log = csv.writer(sfh, lineterminator="\n")
        solver_log.writerow(["step", "t", "dt", "iterations", "residual"])
        last = sample(sim.state)
        diag.write(last)
        prev_t = sim.state.t
        if 0.0 in o.snapshot_times:
            snapshot()

        def on_step(s, hit_stop):
            nonlocal last, prev_t
            st = s.state
            dt = st.t - prev_t
            prev_t = st.t
            final = st.t >= cfg.t_end
            if st.step % o.scalar_stride == 0 or final:
                rec = sample(st, last)
                diag.write(rec)
                last = rec
            if s.last_stats:
                it = s.last_stats.get("newton_iterations", s.last_stats.get("gs_iterations"))
                res = s.last_stats.get("residual", (s.last_stats.get("increments") or [np.nan])[-1])
                solver_log.writerow([st.step, format_float(st.t), format_float(dt), it, format_float(res)])
            if hit_stop or (o.snapshot_stride and st.step % o.snapshot_stride == 0):
                snapshot()
            if log is not None and st.step % 1000 == 0:
                log(f"step {st.step} t={st.t:.4f}")

        try:
            sim.run(cfg.t_end, o.snapshot_times, on_step)
        except VadgError as exc:
            status = type(exc).__name__
            error = str(exc)
            raise_exc = exc
        else:
            raise_exc = None
    if raise_exc is None:
        snapshot()
    manifest = {
        "status": status,
        "error": error,
        "code_version": __version__,
        "prng": PRNG_ALGORITHM,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "steps": sim.state.step,
        "t_final": sim.state.t,
        "wall_time_s": time.perf_counter() - start,
        "files": [_file_entry(p) for p in [paths["scalars"], paths["solver"], *paths["snapshots"]]],
    }
    _write_json(paths["manifest"], manifest)
    if raise_exc is not None:
        raise raise_exc
    return paths


def _load(args):
    cfg = load_config(args.config)
    overrides = list(args.set or [])
    for flag, key in (("t_end", "t_end"), ("cfl", "cfl"), ("scheme", "scheme"), ("seed", "seed"),
                      ("out", "output.dir")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides.append(f"{key}={json.dumps(val)}")
    return apply_overrides(cfg, overrides) if overrides else cfg


def cmd_run(args):
    cfg = _load(args)
    paths = execute_run(cfg, log=_stderr if args.verbose else None)
    print(paths["manifest"])
    return 0


def cmd_ensemble(args):
    cfg = _load(args)
    out_dir = _output_dir(cfg.output.dir)
    ens = run_ensemble(cfg, args.R, args.base_seed, out_dir, workers=args.workers)
    stats_path = os.path.join(out_dir, "stats.csv")
    write_stats_csv(stats_path, ens, args.window, args.bins)
    for t0, t1 in args.hist or []:
        _write_histogram(os.path.join(out_dir, f"hist_{t0:g}_{t1:g}.csv"), ens, t0, t1, args.bins)
    print(stats_path)
    return 0


def _write_histogram(path, ens, t0, t1, n_bins):
    edges, counts, expected = pooled_histogram(ens.z, ens.grid, t0, t1, n_bins)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lo", "hi", "count", "expected"])
        for b in range(n_bins):
            w.writerow([format_float(edges[b]) if np.isfinite(edges[b]) else str(edges[b]),
                        format_float(edges[b + 1]) if np.isfinite(edges[b + 1]) else str(edges[b + 1]),
                        int(counts[b]), format_float(expected)])


def cmd_stats(args):
    ens = series_from_manifest(args.manifest, args.grid_dt)
    out = args.out or os.path.join(os.path.dirname(os.path.abspath(args.manifest)), "stats.csv")
    write_stats_csv(out, ens, args.window, args.bins)
    for t0, t1 in args.hist or []:
        _write_histogram(os.path.join(os.path.dirname(out), f"hist_{t0:g}_{t1:g}.csv"), ens, t0, t1, args.bins)
    print(out)
    return 0


def _state_norm(a, b):
    """Quadrature L2 distance between two states over (f_e, f_i, E)."""
    total = 0.0
    for fa, fb in ((a.fe, b.fe), (a.fi, b.fi)):
        g = fa.grid
        d = fa.values - fb.values
        total += float(g.wx @ ((d * d) @ g.wv))
    d = a.E.values - b.E.values
    total += float(np.dot(a.E.wx, d * d))
    return float(np.sqrt(total))


def convergence_table(cfg, refinements=3, mode="full", dt0=None):
    """Self-convergence in time at a fixed mesh.

    Runs ``dt0, dt0/2, ...`` to ``cfg.t_end`` and compares successive final
    states.  ``mode='advection'`` freezes the field at zero and applies only
    the x-streaming substep.

    Returns
    -------
    list of dict
        One row per refinement with ``dt``, ``steps``, ``diff`` (distance to
        the previous level) and ``order`` (log2 ratio of successive diffs).
    """
    if refinements < 3:
        raise ConfigError("convergence needs at least 3 refinements")
    initial = build_state(cfg)
    if dt0 is None:
        dt0 = cfg.dt if cfg.dt is not None else cfl_dt(initial, cfg.cfl)
    n0 = max(1, int(np.ceil(cfg.t_end / dt0 - 1e-9)))
    finals = []
    rows = []
    for level in range(refinements):
        n = n0 * 2 ** level
        dt = cfg.t_end / n
        if mode == "advection":
            zero = initial.E.with_values(np.zeros_like(initial.E.values))
            state = dataclasses.replace(initial, E=zero)
            cache = LinearSolveCache()
            for _ in range(n):
                state = scheme_a(state, dt, cache)
        elif mode == "full":
            sim = Simulation(cfg.replace(dt=dt), initial)
            for _ in range(n):
                sim.step(dt)
            state = sim.state
        else:
            raise ConfigError(f"unknown convergence mode {mode!r}")
        finals.append(state)
        rows.append({"level": level, "dt": dt, "steps": n, "diff": float("nan"), "order": float("nan")})
    for level in range(1, refinements):
        rows[level]["diff"] = _state_norm(finals[level], finals[level - 1])
    for level in range(2, refinements):
        rows[level]["order"] = float(np.log2(rows[level - 1]["diff"] / rows[level]["diff"]))
    return rows


def cmd_convergence(args):
    cfg = _load(args)
    rows = convergence_table(cfg, args.refinements, args.mode)
    out_dir = _output_dir(cfg.output.dir)
    os.makedirs(out_dir, exist_ok=True)
    path = args.table or os.path.join(out_dir, "convergence.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "dt", "steps", "diff", "order"])
        for r in rows:
            w.writerow([r["level"], format_float(r["dt"]), r["steps"], format_float(r["diff"]),
                        format_float(r["order"])])
    print(path)
    return 0


def _stderr(msg):
    print(msg, file=sys.stderr)


def _add_config_args(p):
    p.add_argument("config", help="JSON configuration file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field, e.g. mesh.N_x=64 (repeatable)")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--scheme", choices=["explicit", "implicit"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="vadg", description="1D1V Vlasov-Ampere DG simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation")
    _add_config_args(p)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ensemble", help="run an ensemble and compute statistics")
    _add_config_args(p)
    p.add_argument("-R", type=int, required=True, help="number of runs")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--window", type=int, default=10, help="steps pooled per chi-square test")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--hist", nargs=2, type=float, action="append", metavar=("T0", "T1"),
                   help="write a pooled histogram of z over [T0, T1] (repeatable)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("stats", help="recompute statistics from an ensemble manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.add_argument("--grid-dt", type=float)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--hist", nargs=2, type=float, action="append", metavar=("T0", "T1"))
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("convergence", help="temporal self-convergence table")
    _add_config_args(p)
    p.add_argument("--refinements", type=int, default=3)
    p.add_argument("--mode", choices=["full", "advection"], default="full")
    p.add_argument("--table", help="output CSV path")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BlowUpError as exc:
        _stderr(f"blow-up: {exc}")
        return exc.exit_code
    except SolverError as exc:
        _stderr(f"solver failure: {exc}")
        return exc.exit_code
    except ConfigError as exc:
        _stderr(f"config error: {exc}")
        return exc.exit_code
    except VadgError as exc:
        _stderr(f"error: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
