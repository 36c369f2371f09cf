"""Linear electrostatic dispersion relation for drifting Maxwellian species.

The dielectric function is::

    eps(w, k) = 1 + sum_s  w_s / (k^2 s2_s) * (1 + xi_s Z(xi_s)),
    xi_s = (w/k - u_s) / sqrt(2 s2_s)

with plasma-frequency weight ``w_s`` (1 for electrons, ``mu_i`` for ions),
velocity variance ``s2_s`` and drift ``u_s``.  ``Z`` is the plasma
dispersion function, evaluated via the Faddeeva function.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import wofz

__all__ = [
    "Component",
    "plasma_z",
    "plasma_z_prime",
    "dielectric",
    "find_root",
    "modes",
    "least_damped_mode",
    "fastest_growing_mode",
    "components_for",
]


@dataclass(frozen=True)
class Component:
    """One Maxwellian species in the linear response."""

    weight: float
    variance: float
    drift: float = 0.0


def plasma_z(xi):
    """Plasma dispersion function ``Z(xi) = i sqrt(pi) w(xi)``."""
    return 1j * np.sqrt(np.pi) * wofz(xi)


def plasma_z_prime(xi):
    """``Z'(xi) = -2 (1 + xi Z(xi))``."""
    return -2.0 * (1.0 + xi * plasma_z(xi))


def dielectric(w, k, components):
    """Dielectric function and its derivative in ``w``."""
    eps = 1.0 + 0j
    deps = 0j
    for c in components:
        s = np.sqrt(2.0 * c.variance)
        xi = (w / k - c.drift) / s
        z = plasma_z(xi)
        chi = c.weight / (k * k * c.variance)
        eps = eps + chi * (1.0 + xi * z)
        # d/dxi (1 + xi Z) = Z + xi Z'
        deps = deps + chi * (z + xi * (-2.0 * (1.0 + xi * z))) / (k * s)
    return eps, deps


def find_root(k, components, guess, tol=1e-13, maxiter=100):
    """Newton iteration on ``eps(w, k) = 0`` from a complex guess.

    Returns ``None`` when the iteration diverges.
    """
    w = complex(guess)
    with np.errstate(all="ignore"):
        for _ in range(maxiter):
            eps, deps = dielectric(w, k, components)
            step = eps / deps
            w = w - step
            if not np.isfinite(w):
                return None
            if abs(step) < tol * max(1.0, abs(w)):
                eps, _ = dielectric(w, k, components)
                return w if abs(eps) < 1e-8 else None
    return None


def modes(k, components, re_range=(-3.0, 3.0), im_range=(-0.6, 0.5), n_re=31, n_im=9):
    """All distinct roots reached from a grid of starting points."""
    roots = []
    for wr in np.linspace(*re_range, n_re):
        for wi in np.linspace(*im_range, n_im):
            w = find_root(k, components, wr + 1j * wi)
            if w is None:
                continue
            if all(abs(w - r) > 1e-7 * max(1.0, abs(w)) for r in roots):
                roots.append(w)
    return sorted(roots, key=lambda r: -r.imag)


def least_damped_mode(k, components, **kw):
    """Root with the largest imaginary part among those found by :func:`modes`."""
    roots = modes(k, components, **kw)
    if not roots:
        raise RuntimeError(f"no dispersion roots found at k = {k}")
    return roots[0]


def fastest_growing_mode(components, k_min=0.05, k_max=1.5, n_k=60, **kw):
    """Wavenumber and frequency of the largest growth rate.

    Scans ``k`` on a grid, then refines the best grid point with a bounded
    scalar maximization.

    Returns
    -------
    k : float
    w : complex
    """
    from scipy.optimize import minimize_scalar

    ks = np.linspace(k_min, k_max, n_k)
    best = max(((k, least_damped_mode(k, components, **kw)) for k in ks), key=lambda kw_: kw_[1].imag)
    k0, w0 = best
    dk = ks[1] - ks[0]

    def neg_growth(k):
        w = find_root(k, components, w0)
        return np.inf if w is None else -w.imag

    res = minimize_scalar(neg_growth, bounds=(max(k_min, k0 - dk), min(k_max, k0 + dk)),
                          method="bounded", options={"xatol": 1e-8})
    k1 = float(res.x)
    return k1, find_root(k1, components, w0)


def components_for(params):
    """Electron and ion components for :class:`vadg.physics.PlasmaParams`."""
    return (
        Component(1.0, 1.0, params.v_de),
        Component(params.mu_i, params.ion_var, 0.0),
    )
