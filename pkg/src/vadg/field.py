"""Nodal phase-space fields, the electric field, moments and snapshots.

A species distribution is stored as a 2D array ``values[x_dof, v_dof]`` with
``x_dof = r * q + l`` and ``v_dof = j * q + m`` (cell ``r``/``j``, node
``l``/``m``, ``q = k + 1``).  Rows are x nodes and columns are v nodes, so
both transport directions act on contiguous or uniformly strided data.
Snapshots are written in the cell-major ``(x-cell, v-cell, x-node, v-node)``
order; see :func:`write_snapshot`.
"""
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .quadmesh import build_gauss_rule, build_mesh, lagrange_tables

__all__ = [
    "SpeciesGrid",
    "NodalField",
    "ElectricField",
    "Moments",
    "State",
    "compute_moments",
    "spatial_average",
    "l2_norm",
    "kinetic_energy",
    "momentum",
    "particle_number",
    "entropy",
    "boundary_leak",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_MAGIC = b"VLA1"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIId6d")


@dataclass(frozen=True, eq=False)
class SpeciesGrid:
    """Discretization shared by all fields of one species.

    Parameters
    ----------
    species : {'e', 'i'}
    mu : float
        Charge-to-mass factor (-1 for electrons, ``m_e/m_i`` for ions).
    xmesh, vmesh : Interval1DMesh
    basis : LagrangeBasis
    """

    species: str
    mu: float
    xmesh: object
    vmesh: object
    basis: object
    x: np.ndarray = field(init=False, repr=False)
    v: np.ndarray = field(init=False, repr=False)
    wx: np.ndarray = field(init=False, repr=False)
    wv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.species not in ("e", "i"):
            raise ConfigError(f"unknown species {self.species!r}")
        if not self.xmesh.periodic or self.vmesh.periodic:
            raise ConfigError("x mesh must be periodic and v mesh non-periodic")
        rule = self.basis.rule
        object.__setattr__(self, "x", self.xmesh.nodes(rule))
        object.__setattr__(self, "v", self.vmesh.nodes(rule))
        object.__setattr__(self, "wx", self.xmesh.quad_weights(rule))
        object.__setattr__(self, "wv", self.vmesh.quad_weights(rule))

    @property
    def q(self):
        return self.basis.rule.order

    @property
    def degree(self):
        return self.q - 1

    @property
    def shape(self):
        return (self.x.size, self.v.size)

    @classmethod
    def build(cls, species, mu, L, n_x, v_cut, n_v, k):
        """Uniform grid on ``[0, L] x [-v_cut, v_cut]`` with degree ``k``."""
        basis = lagrange_tables(build_gauss_rule(k + 1))
        return cls(species, float(mu), build_mesh(0.0, L, n_x, True),
                   build_mesh(-v_cut, v_cut, n_v, False), basis)


@dataclass(eq=False)
class NodalField:
    """Values of ``f_alpha`` at tensor Gauss nodes."""

    grid: SpeciesGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    @property
    def species(self):
        return self.grid.species

    @property
    def mu(self):
        return self.grid.mu

    def with_values(self, values):
        return NodalField(self.grid, values)

    def copy(self):
        return NodalField(self.grid, self.values.copy())

    def cell_major(self):
        """Values flattened in ``(x-cell, v-cell, x-node, v-node)`` order."""
        nx, nv = self.grid.xmesh.n_cells, self.grid.vmesh.n_cells
        q = self.grid.q
        return self.values.reshape(nx, q, nv, q).transpose(0, 2, 1, 3).ravel()

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(x, v)`` at the nodes (broadcast over a 2D grid)."""
        vals = func(grid.x[:, None], grid.v[None, :])
        return cls(grid, np.broadcast_to(vals, grid.shape).copy())


@dataclass(eq=False)
class ElectricField:
    """Values of ``E_h`` at the x Gauss nodes of every cell."""

    xmesh: object
    basis: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.xmesh.n_cells * self.basis.rule.order
        if self.values.shape != (n,):
            raise ValueError(f"electric field must have {n} values, got {self.values.shape}")

    @property
    def x(self):
        return self.xmesh.nodes(self.basis.rule)

    @property
    def wx(self):
        return self.xmesh.quad_weights(self.basis.rule)

    def with_values(self, values):
        return ElectricField(self.xmesh, self.basis, values)

    def copy(self):
        return ElectricField(self.xmesh, self.basis, self.values.copy())

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid.xmesh, grid.basis, np.asarray(func(grid.x), dtype=float) * np.ones(grid.x.size))


@dataclass(frozen=True)
class State:
    """Solution at one time level.

    Attributes
    ----------
    fe, fi : NodalField
    E : ElectricField
    t : float
    step : int
    """

    fe: NodalField
    fi: NodalField
    E: ElectricField
    t: float = 0.0
    step: int = 0

    def advanced(self, fe, fi, E, dt):
        return replace(self, fe=fe, fi=fi, E=E, t=self.t + dt, step=self.step + 1)

    @property
    def L(self):
        return self.fe.grid.xmesh.length


@dataclass(frozen=True)
class Moments:
    """Velocity moments at x nodes and their spatial averages."""

    rho_e: np.ndarray
    rho_i: np.ndarray
    J_e: np.ndarray
    J_i: np.ndarray
    J: np.ndarray
    J0: float
    E0: float = float("nan")


def _current(f):
    g = f.grid
    return f.values @ (g.wv * g.v)


def compute_moments(fe, fi, E=None):
    """Densities and currents of both species at the x nodes.

    Parameters
    ----------
    fe, fi : NodalField
    E : ElectricField, optional
        When given, its spatial average is stored as ``E0``.

    Returns
    -------
    Moments
    """
    ge, gi = fe.grid, fi.grid
    if ge.x.shape != gi.x.shape or not np.array_equal(ge.x, gi.x):
        raise ValueError("species fields live on different x meshes")
    rho_e = fe.values @ ge.wv
    rho_i = fi.values @ gi.wv
    J_e = _current(fe)
    J_i = _current(fi)
    J = J_i - J_e
    J0 = float(np.dot(ge.wx, J)) / ge.xmesh.length
    E0 = spatial_average(E) if E is not None else float("nan")
    return Moments(rho_e, rho_i, J_e, J_i, J, J0, E0)


def spatial_average(E):
    """``(1/L) * integral of E over the periodic domain``."""
    return float(np.dot(E.wx, E.values)) / E.xmesh.length


def _integrate(f, weight_v):
    g = f.grid
    return float(g.wx @ (f.values @ (g.wv * weight_v)))


def particle_number(f):
    """Total number of particles, the integral of ``f`` over phase space."""
    return _integrate(f, 1.0)


def l2_norm(f):
    """Discrete L2 norm ``sqrt(integral of f**2)``."""
    g = f.grid
    return float(np.sqrt(g.wx @ ((f.values * f.values) @ g.wv)))


def kinetic_energy(f):
    """``integral of f v**2`` (no factor one half)."""
    return _integrate(f, f.grid.v ** 2)


def momentum(f):
    """``integral of f v``."""
    return _integrate(f, f.grid.v)


def entropy(f):
    """``-integral of f ln f`` over nodes with ``f > 0``.

    Returns
    -------
    value : float
    n_nonpositive : int
        Number of nodes excluded from the logarithm.
    """
    g = f.grid
    vals = f.values
    pos = vals > 0
    flogf = np.zeros_like(vals)
    flogf[pos] = vals[pos] * np.log(vals[pos])
    return -float(g.wx @ (flogf @ g.wv)), int(vals.size - np.count_nonzero(pos))


def boundary_leak(f):
    """Largest ``|f|`` on the first and last velocity cells."""
    q = f.grid.q
    edge = np.concatenate([f.values[:, :q], f.values[:, -q:]], axis=1)
    return float(np.max(np.abs(edge)))


def write_snapshot(path, state):
    """Write a little-endian binary snapshot.

    The header holds the magic ``b"VLA1"``, a format version, ``N_x``,
    ``N_v_e``, ``N_v_i``, ``k``, the time and the six domain bounds
    ``(x_lo, x_hi, ve_lo, ve_hi, vi_lo, vi_hi)``.  It is followed by ``f_e``,
    ``f_i`` (both cell-major) and ``E`` as float64.
    """
    ge, gi = state.fe.grid, state.fi.grid
    head = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, ge.xmesh.n_cells, ge.vmesh.n_cells,
        gi.vmesh.n_cells, ge.degree, float(state.t),
        ge.xmesh.lo, ge.xmesh.hi, ge.vmesh.lo, ge.vmesh.hi, gi.vmesh.lo, gi.vmesh.hi,
    )
    with open(path, "wb") as fh:
        fh.write(head)
        for arr in (state.fe.cell_major(), state.fi.cell_major(), state.E.values):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path, mass_ratio, step=0):
    """Load a snapshot written by :func:`write_snapshot`.

    Parameters
    ----------
    path : str or path-like
    mass_ratio : float
        ``m_i/m_e``; the snapshot stores geometry only.
    step : int, optional
        Step counter assigned to the returned state.

    Returns
    -------
    State
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"{path}: truncated snapshot header")
    magic, version, nx, nve, nvi, k, t, *bounds = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ConfigError(f"{path}: unsupported snapshot version {version}")
    basis = lagrange_tables(build_gauss_rule(k + 1))
    xmesh = build_mesh(bounds[0], bounds[1], nx, True)
    ge = SpeciesGrid("e", -1.0, xmesh, build_mesh(bounds[2], bounds[3], nve, False), basis)
    gi = SpeciesGrid("i", 1.0 / mass_ratio, xmesh, build_mesh(bounds[4], bounds[5], nvi, False), basis)
    q = k + 1
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    ne, ni, nE = nx * nve * q * q, nx * nvi * q * q, nx * q
    if data.size != ne + ni + nE:
        raise ConfigError(f"{path}: payload has {data.size} values, expected {ne + ni + nE}")

    def unpack(flat, nv):
        return flat.reshape(nx, nv, q, q).transpose(0, 2, 1, 3).reshape(nx * q, nv * q).astype(float)

    fe = NodalField(ge, unpack(data[:ne], nve))
    fi = NodalField(gi, unpack(data[ne:ne + ni], nvi))
    E = ElectricField(xmesh, basis, data[ne + ni:].astype(float))
    return State(fe, fi, E, float(t), int(step))
