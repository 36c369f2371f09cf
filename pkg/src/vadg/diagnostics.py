"""Scalar and spectral diagnostics of a simulation state.

CSV columns (all dimensionless; time in inverse plasma periods)::

    t        time
    dt       step that produced the sample (nan for the first row)
    N_e      electron number, integral of f_e
    N_i      ion number, integral of f_i
    KE_e     (1/2) integral of f_e v^2
    KE_i     (1/2) integral of f_i v^2 / mu_i  (ion kinetic energy in electron-mass units)
    EE       (1/2) integral of E^2
    TE       KE_e + KE_i + EE
    L2_e     sqrt(integral of f_e^2)
    L2_i     sqrt(integral of f_i^2)
    p_e      integral of f_e v
    p_i      integral of f_i v / mu_i
    J0       spatial mean of J = J_i - J_e
    E0       spatial mean of E
    eta      -(J0_n - J0_{n-1}) / (dt_n J0_n); nan when undefined
    logFM1..logFM4  log10 of the Fourier mode amplitudes of E
    leak_e, leak_i  max |f| on the outermost velocity cells
    S_e, S_i        -integral of f ln f over nodes with f > 0 (monitor only)
    nonpos_e, nonpos_i  number of nodes with f <= 0
"""
import csv
from dataclasses import asdict, dataclass, fields

import numpy as np

from .field import (boundary_leak, compute_moments, entropy, kinetic_energy, l2_norm,
                    momentum, particle_number, spatial_average)

__all__ = [
    "LOG_FLOOR",
    "J0_THRESHOLD",
    "DiagRecord",
    "log_fourier_mode",
    "field_spectrum",
    "resistivity",
    "resistivity_series",
    "spatially_averaged_f",
    "total_energy",
    "sample",
    "DiagnosticsWriter",
    "format_float",
    "read_csv",
]

LOG_FLOOR = -30.0
J0_THRESHOLD = 1e-14


def format_float(x):
    """Shortest round-trip decimal; non-finite values become ``nan``."""
    x = float(x)
    return repr(x) if np.isfinite(x) else "nan"


def _mode_integrals(E, n, kappa):
    x = E.x
    w = E.wx
    return np.dot(w, E.values * np.sin(n * kappa * x)), np.dot(w, E.values * np.cos(n * kappa * x))


def log_fourier_mode(E, n, kappa=None):
    """``log10((1/L) sqrt(S^2 + C^2))`` of the ``n``-th mode of ``E``.

    Parameters
    ----------
    E : ElectricField
    n : int
        Mode number, ``n >= 1``.
    kappa : float, optional
        Fundamental wavenumber, ``2 pi / L`` by default.

    Returns
    -------
    float
        Floored at ``LOG_FLOOR``.
    """
    if n < 1:
        raise ValueError("mode number must be >= 1")
    L = E.xmesh.length
    kappa = 2.0 * np.pi / L if kappa is None else kappa
    s, c = _mode_integrals(E, n, kappa)
    amp = np.hypot(s, c) / L
    if amp <= 10.0 ** LOG_FLOOR:
        return LOG_FLOOR
    return float(np.log10(amp))


def field_spectrum(E, n_max, kappa=None):
    """Mode amplitudes ``E_k = 10**logFM_n`` for ``n = 1..n_max``.

    Returns
    -------
    ndarray, shape (n_max, 2)
        Columns ``(kappa_n, E_k)``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    L = E.xmesh.length
    kappa = 2.0 * np.pi / L if kappa is None else kappa
    n = np.arange(1, n_max + 1)
    amp = np.array([10.0 ** log_fourier_mode(E, m, kappa) for m in n])
    return np.column_stack([n * kappa, amp])


def resistivity_series(t, j0):
    """Backward-difference resistivity at every sample.

    The first sample and samples with ``|J0| < J0_THRESHOLD`` are ``nan``.
    """
    t = np.asarray(t, dtype=float)
    j0 = np.asarray(j0, dtype=float)
    eta = np.full(t.shape, np.nan)
    if t.size < 2:
        return eta
    dt = np.diff(t)
    cur = j0[1:]
    ok = np.abs(cur) >= J0_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore"):
        eta[1:] = np.where(ok, -(cur - j0[:-1]) / (dt * cur), np.nan)
    return eta


def resistivity(t, j0, index=-1):
    """Resistivity ``-(J0_n - J0_{n-1}) / (dt_n J0_n)`` at one sample.

    Parameters
    ----------
    t, j0 : array_like
        Sample times and mean currents, at least two samples.
    index : int, optional
        Sample index, the last one by default.
    """
    if len(t) < 2:
        raise ValueError("resistivity needs at least two samples")
    return float(resistivity_series(t, j0)[index])


def spatially_averaged_f(f):
    """``(1/L) integral f dx`` on the velocity nodes.

    Returns
    -------
    v, F : ndarray
    """
    g = f.grid
    return g.v.copy(), (g.wx @ f.values) / g.xmesh.length


def total_energy(state):
    """``(1/2)(int f_e v^2 + int f_i v^2 / mu_i + int E^2)``."""
    E = state.E
    return 0.5 * (kinetic_energy(state.fe) + kinetic_energy(state.fi) / state.fi.mu
                  + float(np.dot(E.wx, E.values ** 2)))


@dataclass(frozen=True)
class DiagRecord:
    t: float
    dt: float
    N_e: float
    N_i: float
    KE_e: float
    KE_i: float
    EE: float
    TE: float
    L2_e: float
    L2_i: float
    p_e: float
    p_i: float
    J0: float
    E0: float
    eta: float
    logFM1: float
    logFM2: float
    logFM3: float
    logFM4: float
    leak_e: float
    leak_i: float
    S_e: float
    S_i: float
    nonpos_e: int
    nonpos_i: int

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [str(v) if isinstance(v, int) else format_float(v) for v in asdict(self).values()]


def sample(state, previous=None):
    """Evaluate every scalar diagnostic.

    Parameters
    ----------
    state : State
    previous : DiagRecord, optional
        Last record; needed for ``dt`` and ``eta``.
    """
    mu_i = state.fi.mu
    E = state.E
    ke_e = 0.5 * kinetic_energy(state.fe)
    ke_i = 0.5 * kinetic_energy(state.fi) / mu_i
    ee = 0.5 * float(np.dot(E.wx, E.values ** 2))
    j0 = compute_moments(state.fe, state.fi).J0
    if previous is None:
        dt = eta = float("nan")
    else:
        dt = state.t - previous.t
        eta = resistivity([previous.t, state.t], [previous.J0, j0]) if dt > 0 else float("nan")
    fm = [log_fourier_mode(E, n) for n in range(1, 5)]
    s_e, np_e = entropy(state.fe)
    s_i, np_i = entropy(state.fi)
    return DiagRecord(
        t=state.t, dt=dt,
        N_e=particle_number(state.fe), N_i=particle_number(state.fi),
        KE_e=ke_e, KE_i=ke_i, EE=ee, TE=ke_e + ke_i + ee,
        L2_e=l2_norm(state.fe), L2_i=l2_norm(state.fi),
        p_e=momentum(state.fe), p_i=momentum(state.fi) / mu_i,
        J0=j0, E0=spatial_average(E), eta=eta,
        logFM1=fm[0], logFM2=fm[1], logFM3=fm[2], logFM4=fm[3],
        leak_e=boundary_leak(state.fe), leak_i=boundary_leak(state.fi),
        S_e=s_e, S_i=s_i, nonpos_e=np_e, nonpos_i=np_i,
    )


class DiagnosticsWriter:
    """Append :class:`DiagRecord` rows to a CSV file.

    Use as a context manager.
    """

    def __init__(self, path):
        self.path = path
        self._fh = None
        self._writer = None

    def __enter__(self):
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(DiagRecord.columns())
        return self

    def write(self, record):
        self._writer.writerow(record.row())

    def __exit__(self, *exc):
        self._fh.close()
        return False


def read_csv(path):
    """Load a diagnostics CSV into a dict of float arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}
