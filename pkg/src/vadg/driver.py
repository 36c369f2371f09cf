"""Time loop shared by the command line, ensembles and tests."""
import dataclasses
import warnings

import numpy as np

from .errors import ConfigError
from .explicit import cfl_dt, scheme1_step
from .field import read_snapshot
from .implicit import LinearSolveCache, scheme2_step
from .physics import Domain, NoiseSpectrum, PlasmaParams, cdiaw_ic, equilibrium_ic, landau_ic

__all__ = ["plasma_params", "domain", "build_state", "Simulation", "LARGE_DT", "max_relative_drift"]

LARGE_DT = 1.0


def plasma_params(cfg):
    p = cfg.physics
    return PlasmaParams(p.mass_ratio, p.temp_ratio, p.v_de, cfg.jext_mode, p.ion_variance)


def domain(cfg):
    m = cfg.mesh
    return Domain(m.L, m.N_x, m.V_ce, m.N_ve, m.V_ci, m.N_vi)


def build_state(cfg):
    """Initial state described by ``cfg`` (or loaded from its snapshot)."""
    params = plasma_params(cfg)
    if cfg.initial_snapshot:
        return read_snapshot(cfg.initial_snapshot, params.mass_ratio)
    p = cfg.physics
    dom = domain(cfg)
    if p.ic == "landau":
        return landau_ic(params, p.A, p.kappa, dom, cfg.k)
    if p.ic == "cdiaw":
        noise = NoiseSpectrum(p.N_max, p.E_tf, dom.L, cfg.seed)
        return cdiaw_ic(params, noise, dom, cfg.k)
    if p.ic == "equilibrium":
        return equilibrium_ic(params, dom, cfg.k)
    raise ConfigError(f"unknown initial condition {p.ic!r}")


class Simulation:
    """Advance a state with the scheme selected in a config.

    Parameters
    ----------
    cfg : RunConfig
    state : State, optional
        Starting state; built from ``cfg`` when omitted.
    """

    def __init__(self, cfg, state=None):
        self.cfg = cfg
        self.state = build_state(cfg) if state is None else state
        self.cache = LinearSolveCache()
        self.last_stats = {}
        self._warned = False

    def next_dt(self):
        if self.cfg.dt is not None:
            return float(self.cfg.dt)
        return cfl_dt(self.state, self.cfg.cfl)

    def step(self, dt):
        """Take one step of size ``dt`` and return the new state."""
        cfg = self.cfg
        if cfg.scheme == "explicit":
            self.state = scheme1_step(self.state, dt, cfg.jext_mode)
        else:
            if dt > LARGE_DT and not self._warned:
                warnings.warn(f"dt = {dt:.3g} exceeds {LARGE_DT}; fine electron kinetic effects "
                              "may be lost", RuntimeWarning)
                self._warned = True
            stats = {}
            self.state = scheme2_step(self.state, dt, cfg.jext_mode, cfg.solver, self.cache, stats)
            self.last_stats = stats
        return self.state

    def run(self, t_end=None, stop_times=(), callback=None):
        """Step until ``t_end``, landing exactly on every stop time.

        ``callback(sim, hit_stop)`` is called after every step, where
        ``hit_stop`` tells whether the step ended on a stop time.
        """
        t_end = self.cfg.t_end if t_end is None else t_end
        stops = {float(t) for t in stop_times if self.state.t < t <= t_end}
        targets = sorted(stops | {float(t_end)})
        for target in targets:
            while self.state.t < target:
                dt = self.next_dt()
                remaining = target - self.state.t
                hit = dt >= remaining * (1.0 - 1e-12)
                if hit:
                    dt = remaining
                self.step(dt)
                if hit:
                    # remove rounding drift so the stop time is exact
                    self.state = dataclasses.replace(self.state, t=target)
                if callback is not None:
                    callback(self, hit and target in stops)
        return self.state


def max_relative_drift(values):
    """``max |v_n / v_0 - 1|`` of a series."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v / v[0] - 1.0)))
