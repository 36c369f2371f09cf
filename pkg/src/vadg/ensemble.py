"""Resistivity ensembles: multi-run driver and statistics.

Run ``r`` of an ensemble uses the seed ``base_seed ^ r``, so each run is
reproducible on its own and the result does not depend on scheduling.
"""
import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaincc
from scipy.stats import norm

from .diagnostics import format_float, read_csv
from .errors import VadgError

__all__ = [
    "INTERPOLATION_ID",
    "EnsembleSeries",
    "ChiSquareResult",
    "run_seed",
    "hermite_align",
    "common_grid",
    "ensemble_stats",
    "standardize",
    "chi_square_gaussian_test",
    "windowed_chi_square",
    "pooled_histogram",
    "run_ensemble",
    "series_from_manifest",
    "write_stats_csv",
    "EnsembleError",
]

INTERPOLATION_ID = "pchip-monotone-3pt-v1"
STATS_COLUMNS = ["t", "mean", "std", "skew", "kurt", "chi2", "p", "reject05", "reject01", "excess_kurt"]


class EnsembleError(VadgError, RuntimeError):
    """A member run failed; ``index`` names it."""

    exit_code = 3

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def run_seed(base_seed, r):
    """Seed of run ``r``: ``base_seed XOR r``."""
    return int(base_seed) ^ int(r)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    reject: bool
    n_bins: int


@dataclass
class EnsembleSeries:
    """Aligned resistivity series of ``R`` runs.

    Attributes
    ----------
    grid : ndarray, shape (T,)
    aligned : ndarray, shape (R, T)
    stats : dict of ndarray
        Output of :func:`ensemble_stats`.
    z : ndarray, shape (R, T)
        Standardized values.
    seeds : list of int
    """

    grid: np.ndarray
    aligned: np.ndarray
    stats: dict
    z: np.ndarray
    seeds: list

    @property
    def n_runs(self):
        return self.aligned.shape[0]

    @classmethod
    def from_series(cls, series, grid=None, seeds=None):
        """Align ``[(t, eta), ...]`` and compute all statistics."""
        grid = common_grid(series) if grid is None else np.asarray(grid, dtype=float)
        aligned = hermite_align(series, grid)
        stats = ensemble_stats(aligned)
        z = standardize(aligned, stats)
        return cls(grid, aligned, stats, z, list(seeds) if seeds is not None else [])


def _finite(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(t) & np.isfinite(y)
    return t[keep], y[keep]


def hermite_align(series, grid):
    """Interpolate every run onto ``grid`` with monotone cubic Hermite pieces.

    Slopes are the weighted harmonic means of neighbouring secants (zero at
    extrema) with one-sided three-point slopes at the ends.  Non-finite
    samples are dropped first.

    Parameters
    ----------
    series : sequence of (t, y) pairs
    grid : array_like
        Strictly increasing evaluation times inside every run's span.

    Returns
    -------
    ndarray, shape (len(series), len(grid))
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("alignment grid must be strictly increasing")
    out = np.empty((len(series), grid.size))
    for r, (t, y) in enumerate(series):
        t, y = _finite(t, y)
        if t.size < 2:
            raise ValueError(f"run {r} has fewer than two finite samples")
        if grid[0] < t[0] or grid[-1] > t[-1]:
            raise ValueError(f"grid [{grid[0]}, {grid[-1]}] leaves the span of run {r} "
                             f"[{t[0]}, {t[-1]}]")
        out[r] = PchipInterpolator(t, y, extrapolate=False)(grid)
    return out


def common_grid(series, dt=None):
    """Uniform grid over the span shared by every run.

    The spacing defaults to the median sample spacing of the first run.
    """
    spans = [_finite(t, y)[0] for t, y in series]
    t0 = max(s[0] for s in spans)
    t1 = min(s[-1] for s in spans)
    if not t1 > t0:
        raise ValueError("runs do not share a time interval")
    dt = float(np.median(np.diff(spans[0]))) if dt is None else float(dt)
    n = int(round((t1 - t0) / dt)) + 1
    return np.linspace(t0, t1, max(n, 2))


def ensemble_stats(aligned):
    """Per-time mean, std, skewness and kurtosis across runs.

    ``std`` uses divisor ``R - 1``; skewness ``m3 / m2**1.5`` and raw
    kurtosis ``m4 / m2**2`` use central moments with divisor ``R``.  Where
    the spread vanishes ``degenerate`` is True and skewness and kurtosis are
    nan.
    """
    a = np.asarray(aligned, dtype=float)
    R = a.shape[0]
    mean = a.mean(axis=0)
    d = a - mean
    m2 = np.mean(d ** 2, axis=0)
    m3 = np.mean(d ** 3, axis=0)
    m4 = np.mean(d ** 4, axis=0)
    std = np.sqrt(m2 * R / (R - 1)) if R > 1 else np.full_like(mean, np.nan)
    scale = np.maximum(np.abs(mean), 1.0)
    degenerate = ~(m2 > (1e-14 * scale) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(degenerate, np.nan, m3 / m2 ** 1.5)
        kurt = np.where(degenerate, np.nan, m4 / m2 ** 2)
    if R < 4:
        kurt = np.full_like(mean, np.nan)
    return {"mean": mean, "std": std, "skew": skew, "kurt": kurt, "excess_kurt": kurt - 3.0,
            "degenerate": degenerate}


def standardize(aligned, stats):
    """``z = (eta - mean) / std``; nan where the spread vanishes."""
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (np.asarray(aligned) - stats["mean"]) / stats["std"]
    z[:, stats["degenerate"]] = np.nan
    return z


def chi_square_gaussian_test(z_values, n_bins=10, level=0.05):
    """Goodness of fit of ``z_values`` to the standard normal.

    Bins have equal probability under N(0, 1).  When an expected count would
    fall below 5 the bin count drops to ``len(z) // 5``.

    Returns
    -------
    ChiSquareResult

    Raises
    ------
    ValueError
        With fewer than 20 samples, or fewer than 4 usable bins.
    """
    z = np.asarray(z_values, dtype=float).ravel()
    z = z[np.isfinite(z)]
    n = z.size
    if n < 20:
        raise ValueError(f"chi-square test needs at least 20 samples, got {n}")
    if n_bins < 4:
        raise ValueError("n_bins must be >= 4")
    if n / n_bins < 5:
        n_bins = n // 5
        if n_bins < 4:
            raise ValueError("too few samples for 4 bins with expected count >= 5")
    edges = norm.ppf(np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    observed = np.bincount(np.searchsorted(edges, z, side="right"), minlength=n_bins)
    expected = n / n_bins
    stat = float(np.sum((observed - expected) ** 2) / expected)
    p = float(gammaincc(0.5 * (n_bins - 1), 0.5 * stat))
    return ChiSquareResult(stat, p, p < level, n_bins)


def windowed_chi_square(z, window=10, n_bins=10, levels=(0.05, 0.01)):
    """Chi-square test on trailing windows pooled across runs.

    Row ``n`` pools ``z[:, n - window + 1 : n + 1]``.  Rows without a full
    window, or with too few finite samples, are nan.

    Returns
    -------
    chi2, p : ndarray, shape (T,)
    rejects : ndarray of bool, shape (len(levels), T)
    """
    z = np.asarray(z, dtype=float)
    T = z.shape[1]
    chi2 = np.full(T, np.nan)
    p = np.full(T, np.nan)
    rejects = np.zeros((len(levels), T), dtype=bool)
    for n in range(window - 1, T):
        try:
            res = chi_square_gaussian_test(z[:, n - window + 1:n + 1], n_bins)
        except ValueError:
            continue
        chi2[n] = res.statistic
        p[n] = res.p_value
        rejects[:, n] = [res.p_value < lv for lv in levels]
    return chi2, p, rejects


def pooled_histogram(z, grid, t0, t1, n_bins=10):
    """Counts of pooled ``z`` in ``[t0, t1]`` over equal-probability bins.

    Returns
    -------
    edges : ndarray, shape (n_bins + 1,)
    counts : ndarray, shape (n_bins,)
    expected : float
    """
    sel = (grid >= t0) & (grid <= t1)
    vals = np.asarray(z)[:, sel].ravel()
    vals = vals[np.isfinite(vals)]
    edges = norm.ppf(np.linspace(0.0, 1.0, n_bins + 1))
    counts = np.bincount(np.searchsorted(edges[1:-1], vals, side="right"), minlength=n_bins)
    return edges, counts, vals.size / n_bins


def write_stats_csv(path, ens, window=10, n_bins=10):
    """Write per-time statistics of an :class:`EnsembleSeries`."""
    chi2, p, rej = windowed_chi_square(ens.z, window, n_bins)
    s = ens.stats
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        for n, t in enumerate(ens.grid):
            valid = np.isfinite(p[n])
            w.writerow([
                format_float(t), format_float(s["mean"][n]), format_float(s["std"][n]),
                format_float(s["skew"][n]), format_float(s["kurt"][n]),
                format_float(chi2[n]), format_float(p[n]),
                str(int(rej[0, n])) if valid else "nan", str(int(rej[1, n])) if valid else "nan",
                format_float(s["excess_kurt"][n]),
            ])


def _default_runner(cfg, run_dir):
    from .cli import execute_run

    result = execute_run(cfg, run_dir)
    data = read_csv(result["scalars"])
    return data["t"], data["eta"]


def run_ensemble(base_config, R, base_seed, out_dir, workers=1, runner=None):
    """Run ``R`` copies of ``base_config`` with derived seeds.

    Parameters
    ----------
    base_config : RunConfig
    R : int
        Number of runs, at least 2.
    base_seed : int
    out_dir : str
        Receives ``run_XXXX/`` directories and ``manifest.json``.
    workers : int, optional
        Size of the thread pool.
    runner : callable, optional
        ``runner(cfg, run_dir) -> (t, eta)``; the default performs a full
        simulation and reads back its scalar CSV.

    Returns
    -------
    EnsembleSeries
    """
    if int(R) != R or R < 2:
        raise ValueError(f"an ensemble needs R >= 2 runs, got {R}")
    runner = _default_runner if runner is None else runner
    os.makedirs(out_dir, exist_ok=True)
    seeds = [run_seed(base_seed, r) for r in range(R)]
    entries = [{"index": r, "seed": s, "dir": f"run_{r:04d}", "status": "pending"} for r, s in enumerate(seeds)]
    manifest = {
        "base_seed": int(base_seed), "R": int(R), "seeds": seeds,
        "config_hash": base_config.hash(), "config": base_config.to_dict(),
        "seed_rule": "base_seed XOR r", "interpolation": INTERPOLATION_ID, "runs": entries,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")

    def dump():
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2)

    dump()

    def one(r):
        run_dir = os.path.join(out_dir, entries[r]["dir"])
        os.makedirs(run_dir, exist_ok=True)
        cfg = base_config.replace(seed=seeds[r], output=dataclasses.replace(base_config.output, dir=run_dir))
        return runner(cfg, run_dir)

    results = [None] * R
    failure = None
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        futures = [pool.submit(one, r) for r in range(R)]
        for r, fut in enumerate(futures):
            try:
                results[r] = fut.result()
                t, eta = results[r]
                np.savetxt(os.path.join(out_dir, entries[r]["dir"], "eta.txt"), np.column_stack([t, eta]))
                entries[r]["status"] = "complete"
            except Exception as exc:  # keep going so the manifest records every run
                entries[r]["status"] = f"failed: {exc}"
                if failure is None:
                    failure = (r, exc)
    dump()
    if failure is not None:
        r, exc = failure
        raise EnsembleError(f"ensemble run {r} failed: {exc}", index=r) from exc
    return EnsembleSeries.from_series(results, seeds=seeds)


def series_from_manifest(manifest_path, grid_dt=None):
    """Rebuild an :class:`EnsembleSeries` from the files of a finished ensemble."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    root = os.path.dirname(os.path.abspath(manifest_path))
    for entry in manifest["runs"]:
        if entry["status"] != "complete":
            raise EnsembleError(f"run {entry['index']} is not complete ({entry['status']})", entry["index"])
    series = []
    for entry in manifest["runs"]:
        data = np.loadtxt(os.path.join(root, entry["dir"], "eta.txt"), ndmin=2)
        series.append((data[:, 0], data[:, 1]))
    grid = common_grid(series, grid_dt)
    return EnsembleSeries.from_series(series, grid, manifest["seeds"])
