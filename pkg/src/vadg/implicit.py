"""Split implicit scheme built from two implicit-midpoint subsystems.

Subsystem (a) is free streaming in x and subsystem (b) is acceleration in v
coupled to Ampere's law.  A step is the symmetric composition
``a(dt/2) b(dt) a(dt/2)``.

Every linear solve here is an implicit-midpoint step for 1D upwind DG
advection at a constant speed ``a`` along a row of cells.  With
``c = a dt/2`` and ``a > 0`` cell ``j`` satisfies::

    (M - cK) g_j = (M + cK) f_j + c eL (eR.f_{j-1} + eR.g_{j-1}),  K = G - eR eR^T

so the cells couple only through a scalar trace.  One upwind sweep with
``P = (M - cK)^{-1}(M + cK)`` and ``z = c (M - cK)^{-1} eL`` solves it.  A
periodic row is closed by solving for the unknown inflow trace.  ``a < 0``
mirrors this with ``K = G + eL eL^T`` and a backward sweep.
"""
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigError, SolverError
from .explicit import check_finite

__all__ = [
    "SolverSettings",
    "LinearSolveCache",
    "midpoint_factors",
    "midpoint_solve",
    "scheme_a",
    "scheme_b_case1",
    "scheme_b_case2",
    "scheme2_step",
]


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and iteration caps of the implicit solvers.

    Attributes
    ----------
    gs_tol : float
        Max-norm increment tolerance of the Gauss-Seidel loop.
    nl_tol : float
        Residual tolerance of the per-node scalar root solve.
    max_outer, max_newton : int
        Iteration caps.
    """

    gs_tol: float = 1e-11
    nl_tol: float = 1e-12
    max_outer: int = 100
    max_newton: int = 50

    def __post_init__(self):
        for name in ("gs_tol", "nl_tol"):
            val = getattr(self, name)
            if not 0 < val < 1e-3:
                raise ConfigError(f"{name} must lie in (0, 1e-3), got {val}")
        for name in ("max_outer", "max_newton"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ConfigError(f"{name} must be a positive integer, got {val}")


@numba.njit(cache=True)
def _sweep_pass(X, P, z, cls, i, d, tvec, f_in0, g_in0, out, track):
    # one upwind pass over row i; returns the product of (t.z) factors
    q = P.shape[-1]
    n = cls.shape[0]
    g_in = g_in0
    f_in = f_in0
    qprod = 1.0
    for step in range(n):
        j = step if d > 0 else n - 1 - step
        w = cls[j]
        b = j * q
        s_in = f_in + g_in
        tf = 0.0
        tg = 0.0
        for a in range(q):
            acc = z[i, w, a] * s_in
            for p in range(q):
                acc += P[i, w, a, p] * X[i, b + p]
            out[i, b + a] = acc
            tf += tvec[a] * X[i, b + a]
            tg += tvec[a] * acc
        if track:
            zt = 0.0
            for a in range(q):
                zt += tvec[a] * z[i, w, a]
            qprod *= zt
        f_in = tf
        g_in = tg
    return g_in, qprod


@numba.njit(cache=True)
def _midpoint_sweep(X, P, z, cls, direction, eL, eR, periodic, out):
    nrow = X.shape[0]
    q = P.shape[-1]
    n = cls.shape[0]
    for i in range(nrow):
        d = direction[i]
        if d == 0:
            for c in range(X.shape[1]):
                out[i, c] = X[i, c]
            continue
        tvec = eR if d > 0 else eL
        f_in = 0.0
        if periodic:
            # upstream neighbour of the first cell in sweep order
            jw = n - 1 if d > 0 else 0
            for a in range(q):
                f_in += tvec[a] * X[i, jw * q + a]
            p_last, q_last = _sweep_pass(X, P, z, cls, i, d, tvec, f_in, 0.0, out, True)
            x_in = p_last / (1.0 - q_last)
            _sweep_pass(X, P, z, cls, i, d, tvec, f_in, x_in, out, False)
        else:
            _sweep_pass(X, P, z, cls, i, d, tvec, 0.0, 0.0, out, False)


def midpoint_factors(c, widths, basis):
    """Per-row, per-width sweep matrices for speeds ``c = a dt / 2``.

    Parameters
    ----------
    c : ndarray, shape (nrow,)
    widths : ndarray, shape (nw,)
        Distinct cell widths.
    basis : LagrangeBasis

    Returns
    -------
    P : ndarray, shape (nrow, nw, q, q)
    z : ndarray, shape (nrow, nw, q)
    direction : ndarray of int8, shape (nrow,)
    """
    c = np.asarray(c, dtype=float)
    w = basis.rule.weights
    eL, eR = basis.left, basis.right
    G = basis.stiffness
    q = w.size
    pos = (c > 0)[:, None, None]
    K = np.where(pos, G - np.outer(eR, eR), G + np.outer(eL, eL))
    M = np.zeros((len(widths), q, q))
    M[:, np.arange(q), np.arange(q)] = 0.5 * np.asarray(widths)[:, None] * w[None, :]
    cK = c[:, None, None, None] * K[:, None, :, :]
    A = M[None] - cK
    B = M[None] + cK
    inflow = np.where(pos[:, :, 0], eL[None, :], -eR[None, :]) * c[:, None]
    rhs = np.concatenate([B, np.broadcast_to(inflow[:, None, :, None], B.shape[:-1] + (1,))], axis=-1)
    sol = np.linalg.solve(A, rhs)
    P = np.ascontiguousarray(sol[..., :q])
    z = np.ascontiguousarray(sol[..., q])
    return P, z, np.sign(c).astype(np.int8)


def _width_classes(mesh):
    widths, cls = np.unique(mesh.widths, return_inverse=True)
    return widths, cls.astype(np.int64)


def midpoint_solve(X, speeds, dt, mesh, basis, periodic, factors=None):
    """Implicit-midpoint step of upwind DG advection along each row of ``X``.

    Parameters
    ----------
    X : ndarray, shape (nrow, n_cells * q)
        Values along the advection direction, one row per independent line.
    speeds : ndarray, shape (nrow,)
    dt : float
    mesh : Interval1DMesh
    basis : LagrangeBasis
    periodic : bool
        Periodic rows, otherwise zero inflow at the domain ends.
    factors : tuple, optional
        Precomputed output of :func:`midpoint_factors`.
    """
    widths, cls = _width_classes(mesh)
    if factors is None:
        factors = midpoint_factors(0.5 * dt * np.asarray(speeds, dtype=float), widths, basis)
    P, z, direction = factors
    X = np.ascontiguousarray(X)
    out = np.empty_like(X)
    _midpoint_sweep(X, P, z, cls, direction, basis.left, basis.right, bool(periodic), out)
    return out


class LinearSolveCache:
    """Sweep factors of the x subsystem keyed by ``(species, dt)``.

    Every velocity node of a species is stored in one entry, so a half step
    reuses them on both sides of the v subsystem.
    """

    def __init__(self, maxsize=8):
        self.maxsize = maxsize
        self._store = {}
        self.hits = 0
        self.misses = 0

    def get(self, grid, dt):
        key = (grid.species, id(grid), float(dt))
        entry = self._store.get(key)
        if entry is not None:
            self.hits += 1
            return entry[1]
        self.misses += 1
        widths, _ = _width_classes(grid.xmesh)
        factors = midpoint_factors(0.5 * dt * grid.v, widths, grid.basis)
        if len(self._store) >= self.maxsize:
            self._store.pop(next(iter(self._store)))
        # keep the grid alive so its id cannot be reused while cached
        self._store[key] = (grid, factors)
        return factors

    def clear(self):
        self._store.clear()


_DEFAULT_CACHE = LinearSolveCache()


def scheme_a(state, dt, cache=None):
    """Implicit-midpoint free streaming in x over ``dt`` (E unchanged).

    Returns a state with the same time and step counter.
    """
    if dt == 0:
        raise ConfigError("dt must be nonzero")
    cache = _DEFAULT_CACHE if cache is None else cache
    new = []
    for f in (state.fe, state.fi):
        g = f.grid
        factors = cache.get(g, dt)
        X = np.ascontiguousarray(f.values.T)
        Y = midpoint_solve(X, g.v, dt, g.xmesh, g.basis, True, factors)
        new.append(f.with_values(np.ascontiguousarray(Y.T)))
    return type(state)(new[0], new[1], state.E, state.t, state.step)


def _current(F, grid):
    return F @ (grid.wv * grid.v)


class _VelocitySolve:
    """Linear v subsystem for frozen node fields."""

    def __init__(self, fe, fi, dt):
        self.fe, self.fi, self.dt = fe, fi, dt
        self._cls = [_width_classes(f.grid.vmesh) for f in (fe, fi)]

    def __call__(self, ebar):
        out = []
        for f, (widths, cls) in zip((self.fe, self.fi), self._cls):
            g = f.grid
            P, z, d = midpoint_factors(0.5 * self.dt * g.mu * ebar, widths, g.basis)
            Y = np.empty_like(f.values)
            _midpoint_sweep(f.values, P, z, cls, d, g.basis.left, g.basis.right, False, Y)
            out.append(Y)
        return out

    def current(self, Ge, Gi):
        return _current(Gi, self.fi.grid) - _current(Ge, self.fe.grid)


def scheme_b_case1(state, dt, settings=None, stats=None):
    """v subsystem with no external current, solved node by node.

    At every x node the update is reduced to the scalar root
    ``Phi(E*) = E* - E^n + dt/2 (J^n + J(g(E*)))`` where ``g`` solves the
    linear midpoint system for the frozen field ``(E^n + E*)/2``.  The root
    is found by Newton's method with a one-sided difference slope, falling
    back to bisection once a sign change is bracketed.

    Parameters
    ----------
    state : State
    dt : float
    settings : SolverSettings, optional
    stats : dict, optional
        Receives ``newton_iterations`` and ``residual``.

    Raises
    ------
    SolverError
        If some node has not converged after ``max_newton`` iterations.
    """
    settings = SolverSettings() if settings is None else settings
    fe, fi, E = state.fe, state.fi, state.E
    solve = _VelocitySolve(fe, fi, dt)
    En = E.values
    Jn = solve.current(fe.values, fi.values)

    def phi(e_star):
        Ge, Gi = solve(0.5 * (En + e_star))
        return e_star - En + 0.5 * dt * (Jn + solve.current(Ge, Gi)), Ge, Gi

    e_star = En - dt * Jn
    r, Ge, Gi = phi(e_star)
    lo = np.full_like(En, -np.inf)
    hi = np.full_like(En, np.inf)
    it = 0
    while True:
        lo = np.where(r < 0, np.maximum(lo, e_star), lo)
        hi = np.where(r > 0, np.minimum(hi, e_star), hi)
        active = np.abs(r) >= settings.nl_tol
        if not active.any():
            break
        if it >= settings.max_newton:
            node = int(np.argmax(np.abs(r)))
            raise SolverError(
                f"scalar field solve did not converge at x node {node} (|Phi| = {abs(r[node]):.3e})",
                index=node, residual=float(abs(r[node])))
        it += 1
        delta = 1e-7 * np.maximum(1.0, np.abs(e_star))
        r_d, _, _ = phi(e_star + delta)
        slope = (r_d - r) / delta
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = e_star - r / slope
        ok = np.isfinite(trial) & (slope > 0) & (trial > lo) & (trial < hi)
        bracketed = np.isfinite(lo) & np.isfinite(hi)
        fallback = np.where(bracketed, 0.5 * (lo + hi), e_star - r)
        trial = np.where(ok, trial, fallback)
        e_star = np.where(active, trial, e_star)
        r, Ge, Gi = phi(e_star)
    if stats is not None:
        stats["newton_iterations"] = it
        stats["residual"] = float(np.max(np.abs(r)))
    check_finite((Ge, Gi, e_star), state.step + 1)
    return type(state)(fe.with_values(Ge), fi.with_values(Gi), E.with_values(e_star), state.t, state.step)


def scheme_b_case2(state, dt, settings=None, stats=None):
    """v subsystem with the external current equal to the mean current.

    Gauss-Seidel: the field is updated explicitly from the last iterate of
    the current (with its mean removed), then the linear v solve is redone
    with that field.  Stops when the max-norm change of both distributions
    drops below ``gs_tol``.

    Raises
    ------
    SolverError
        If ``max_outer`` iterations are exhausted.
    """
    settings = SolverSettings() if settings is None else settings
    fe, fi, E = state.fe, state.fi, state.E
    solve = _VelocitySolve(fe, fi, dt)
    En = E.values
    wx = fe.grid.wx
    L = fe.grid.xmesh.length
    e0 = float(np.dot(wx, En)) / L
    if abs(e0) > 1e-10:
        warnings.warn(f"mean field {e0:.3e} is not zero at the start of a j0 step", RuntimeWarning)
    Jn = solve.current(fe.values, fi.values)
    J0n = float(np.dot(wx, Jn)) / L
    Ge, Gi = fe.values, fi.values
    Jk, J0k = Jn, J0n
    increments = []
    for it in range(1, settings.max_outer + 1):
        E1 = En - 0.5 * dt * (Jn + Jk) + 0.5 * dt * (J0n + J0k)
        Ge_new, Gi_new = solve(0.5 * (En + E1))
        inc = max(np.max(np.abs(Ge_new - Ge)), np.max(np.abs(Gi_new - Gi)))
        increments.append(float(inc))
        Ge, Gi = Ge_new, Gi_new
        if not np.isfinite(inc):
            break
        if inc < settings.gs_tol:
            break
        Jk = solve.current(Ge, Gi)
        J0k = float(np.dot(wx, Jk)) / L
    else:
        raise SolverError(
            f"Gauss-Seidel did not converge in {settings.max_outer} iterations "
            f"(last increment {increments[-1]:.3e})", residual=increments[-1])
    if stats is not None:
        stats["gs_iterations"] = len(increments)
        stats["increments"] = increments
    check_finite((Ge, Gi, E1), state.step + 1)
    return type(state)(fe.with_values(Ge), fi.with_values(Gi), E.with_values(E1), state.t, state.step)


def scheme2_step(state, dt, jext_mode="zero", settings=None, cache=None, stats=None):
    """One step of ``a(dt/2) b(dt) a(dt/2)``.

    Parameters
    ----------
    state : State
    dt : float
    jext_mode : {'zero', 'j0'}
        Selects the node-wise root solve or the Gauss-Seidel loop for the
        v subsystem.
    settings : SolverSettings, optional
    cache : LinearSolveCache, optional
    stats : dict, optional
        Filled with solver statistics of the v subsystem.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if jext_mode == "zero":
        step_b = scheme_b_case1
    elif jext_mode == "j0":
        step_b = scheme_b_case2
    else:
        raise ConfigError(f"unknown jext_mode {jext_mode!r}")
    s = scheme_a(state, 0.5 * dt, cache)
    s = step_b(s, dt, settings, stats)
    s = scheme_a(s, 0.5 * dt, cache)
    return state.advanced(s.fe, s.fi, s.E, dt)
