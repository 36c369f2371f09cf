"""Explicit two-stage scheme with an Ampere field update.

One step reads::

    f_half = f - dt/2 * R(f, E)
    E_new  = E - dt * (J(f_half) - {J0(f_half)})
    f_new  = f - dt * R(f_half, (E + E_new)/2)

where ``R = R_x + R_v`` is the upwind DG residual and the braces mark the
term kept only when the external current balances the mean current.
"""
import functools

import numpy as np

from .errors import BlowUpError, ConfigError
from .field import State
from .fluxops import AdvectionOperator1D, phase_space_residual

__all__ = ["State", "cfl_dt", "scheme1_step", "check_finite", "BLOWUP_THRESHOLD", "JEXT_MODES"]

BLOWUP_THRESHOLD = 1e6
JEXT_MODES = ("zero", "j0")


@functools.lru_cache(maxsize=16)
def _operators(grid):
    return AdvectionOperator1D("x", grid), AdvectionOperator1D("v", grid)


def cfl_dt(state, cfl):
    """Time step from the transport speeds of both species.

    ``dt_a = cfl / (Vc_a N_x / L + |mu_a| E_max N_v_a / Vc_a)`` and the
    smaller of the two is returned.

    Parameters
    ----------
    state : State
    cfl : float
        Positive CFL number.
    """
    if not cfl > 0:
        raise ConfigError(f"cfl must be positive, got {cfl}")
    e_max = float(np.max(np.abs(state.E.values)))
    dts = []
    for f in (state.fe, state.fi):
        g = f.grid
        vc = 0.5 * g.vmesh.length
        rate = vc * g.xmesh.n_cells / g.xmesh.length + abs(g.mu) * e_max * g.vmesh.n_cells / vc
        dts.append(cfl / rate)
    return min(dts)


def _current(F, grid):
    return F @ (grid.wv * grid.v)


def _axpy(a, X, Y):
    out = np.multiply(X, a)
    out += Y
    return out


def check_finite(arrays, step):
    """Raise :class:`BlowUpError` on non-finite or huge values."""
    for F in arrays:
        m = max(np.max(F), -np.min(F))
        if not m <= BLOWUP_THRESHOLD:
            raise BlowUpError(f"solution blew up at step {step} (max |f| = {m:.3e})", step=step)


def scheme1_step(state, dt, jext_mode="zero"):
    """Advance ``state`` by one explicit step of size ``dt``.

    Parameters
    ----------
    state : State
    dt : float
    jext_mode : {'zero', 'j0'}
        With ``'j0'`` the external current cancels the mean current so the
        mean field stays zero.

    Returns
    -------
    State

    Raises
    ------
    BlowUpError
        If the new solution is non-finite or exceeds ``BLOWUP_THRESHOLD``.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if jext_mode not in JEXT_MODES:
        raise ConfigError(f"unknown jext_mode {jext_mode!r}")
    fe, fi, E = state.fe, state.fi, state.E
    ge, gi = fe.grid, fi.grid
    ops_e, ops_i = _operators(ge), _operators(gi)
    En = E.values

    Re = phase_space_residual(fe.values, ops_e, En, ge.mu)
    Ri = phase_space_residual(fi.values, ops_i, En, gi.mu)
    Fe_h = _axpy(-0.5 * dt, Re, fe.values)
    Fi_h = _axpy(-0.5 * dt, Ri, fi.values)

    J = _current(Fi_h, gi) - _current(Fe_h, ge)
    if jext_mode == "j0":
        J = J - np.dot(ge.wx, J) / ge.xmesh.length
    E1 = En - dt * J
    Eb = 0.5 * (En + E1)

    phase_space_residual(Fe_h, ops_e, Eb, ge.mu, out=Re)
    phase_space_residual(Fi_h, ops_i, Eb, gi.mu, out=Ri)
    Fe1 = _axpy(-dt, Re, fe.values)
    Fi1 = _axpy(-dt, Ri, fi.values)
    check_finite((Fe1, Fi1, E1), state.step + 1)
    return state.advanced(fe.with_values(Fe1), fi.with_values(Fi1), E.with_values(E1), dt)
