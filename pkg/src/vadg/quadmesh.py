"""Meshes, Gauss-Legendre rules and nodal Lagrange tables.

All element operators live on the reference cell ``[-1, 1]`` and are mapped
to physical cells affinely.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "GaussRule",
    "LagrangeBasis",
    "Interval1DMesh",
    "build_gauss_rule",
    "build_mesh",
    "lagrange_tables",
]

MAX_ORDER = 16


@dataclass(frozen=True)
class GaussRule:
    """Gauss-Legendre quadrature rule on ``[-1, 1]``.

    Attributes
    ----------
    order : int
        Number of points ``q``.
    nodes : ndarray, shape (q,)
        Increasing nodes, symmetric about zero.
    weights : ndarray, shape (q,)
        Positive weights summing to 2.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, func):
        """Apply the rule to a callable on the reference cell."""
        return float(np.dot(self.weights, func(self.nodes)))


@dataclass(frozen=True)
class LagrangeBasis:
    """Lagrange polynomials through the nodes of a Gauss rule.

    Attributes
    ----------
    rule : GaussRule
    D : ndarray, shape (q, q)
        ``D[a, b]`` is the derivative of the ``b``-th basis polynomial at node
        ``a``, so ``D @ u`` differentiates the interpolant of ``u``.
    left, right : ndarray, shape (q,)
        Basis values at -1 and +1.
    """

    rule: GaussRule
    D: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def degree(self):
        return self.rule.order - 1

    @property
    def stiffness(self):
        """Weak-form volume matrix ``G[i, a] = w_a D[a, i]``."""
        return self.D.T * self.rule.weights[None, :]

    def evaluate(self, xi):
        """Values of every basis polynomial at points ``xi``.

        Returns an array of shape ``(len(xi), q)``.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        nodes = self.rule.nodes
        out = np.ones((xi.size, nodes.size))
        for b in range(nodes.size):
            for a in range(nodes.size):
                if a != b:
                    out[:, b] *= (xi - nodes[a]) / (nodes[b] - nodes[a])
        return out


@dataclass(frozen=True)
class Interval1DMesh:
    """Uniform partition of ``[lo, hi]``.

    Widths are stored per cell so that non-uniform meshes only change data.
    """

    lo: float
    hi: float
    n_cells: int
    periodic: bool
    edges: np.ndarray = field(repr=False)

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def nodes(self, rule):
        """Physical node coordinates, cell-major, shape ``(n_cells * q,)``."""
        h = self.widths
        return (self.centers[:, None] + 0.5 * h[:, None] * rule.nodes[None, :]).ravel()

    def quad_weights(self, rule):
        """Physical quadrature weights matching :meth:`nodes`."""
        return (0.5 * self.widths[:, None] * rule.weights[None, :]).ravel()


def _legendre(q, x):
    """Return ``P_q(x)`` and ``P_q'(x)`` by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if q == 0:
        return p0, np.zeros_like(x)
    for n in range(2, q + 1):
        p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
    dp = q * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def build_gauss_rule(q):
    """Build the ``q``-point Gauss-Legendre rule by Newton iteration.

    Parameters
    ----------
    q : int
        Number of points, ``1 <= q <= 16``.

    Returns
    -------
    GaussRule
    """
    if int(q) != q or not 1 <= q <= MAX_ORDER:
        raise ConfigError(f"quadrature order must be an integer in [1, {MAX_ORDER}], got {q!r}")
    q = int(q)
    if q == 1:
        return GaussRule(1, np.array([0.0]), np.array([2.0]))
    i = np.arange(1, q + 1)
    # Tricomi's initial guesses, descending
    x = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(100):
        p, dp = _legendre(q, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre(q, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1].copy()
    w = w[::-1].copy()
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    if q % 2:
        x[q // 2] = 0.0
    return GaussRule(q, x, w)


def build_mesh(lo, hi, n_cells, periodic):
    """Uniform 1D mesh.

    Parameters
    ----------
    lo, hi : float
        Domain bounds, ``hi > lo``.
    n_cells : int
        Number of cells.
    periodic : bool
        True for x meshes, False for velocity meshes.
    """
    lo = float(lo)
    hi = float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ConfigError("mesh bounds must be finite")
    if not hi > lo:
        raise ConfigError(f"mesh requires hi > lo, got [{lo}, {hi}]")
    if int(n_cells) != n_cells or n_cells < 1:
        raise ConfigError(f"n_cells must be a positive integer, got {n_cells!r}")
    n_cells = int(n_cells)
    h = (hi - lo) / n_cells
    edges = lo + h * np.arange(n_cells + 1)
    edges[-1] = hi
    return Interval1DMesh(lo, hi, n_cells, bool(periodic), edges)


def lagrange_tables(rule):
    """Differentiation matrix and boundary vectors for the nodal basis.

    Uses barycentric weights, which are stable for Gauss nodes.
    """
    x = rule.nodes
    q = x.size
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    lam = 1.0 / np.prod(diff, axis=1)
    D = np.zeros((q, q))
    for a in range(q):
        for b in range(q):
            if a != b:
                D[a, b] = (lam[b] / lam[a]) / (x[a] - x[b])
        D[a, a] = -np.sum(D[a])
    basis = LagrangeBasis(rule, D, np.empty(q), np.empty(q))
    left = basis.evaluate(-1.0)[0]
    right = basis.evaluate(1.0)[0]
    return LagrangeBasis(rule, D, left, right)
