"""Dimensionless model parameters, initial conditions and presets.

Time is measured in inverse electron plasma periods, length in Debye lengths
and velocity in electron thermal speeds.  Electrons have ``mu_e = -1`` and
ions ``mu_i = m_e/m_i``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .field import ElectricField, NodalField, SpeciesGrid, State
from .quadmesh import build_mesh

__all__ = [
    "PlasmaParams",
    "Domain",
    "NoiseSpectrum",
    "PRNG_ALGORITHM",
    "maxwellian",
    "make_grids",
    "landau_ic",
    "cdiaw_ic",
    "equilibrium_ic",
    "preset_s1",
    "preset_landau",
    "PRESETS",
    "S1_PARAMETERS",
]

PRNG_ALGORITHM = "numpy.random.Philox-4x64-10"
ION_VARIANCE_CONVENTIONS = ("thermal", "literal")


@dataclass(frozen=True)
class PlasmaParams:
    """Two-species plasma parameters.

    Parameters
    ----------
    mass_ratio : float
        ``m_i/m_e >= 1``.
    temp_ratio : float
        ``T_e/T_i > 0``.
    v_de : float
        Electron drift velocity.
    jext_mode : {'zero', 'j0'}
        External current: none, or equal to the mean current.
    ion_variance : {'thermal', 'literal'}
        Variance of the ion Maxwellian.  ``'thermal'`` uses ``gamma**2``, the
        squared ion to electron thermal speed ratio.  ``'literal'`` uses
        ``gamma`` itself.

    Notes
    -----
    ``gamma = sqrt(T_i m_e / (T_e m_i))`` so that
    ``gamma**2 * temp_ratio * mass_ratio == 1``.
    """

    mass_ratio: float
    temp_ratio: float
    v_de: float = 0.0
    jext_mode: str = "zero"
    ion_variance: str = "thermal"

    def __post_init__(self):
        if not self.mass_ratio >= 1:
            raise ConfigError(f"mass_ratio must be >= 1, got {self.mass_ratio}")
        if not self.temp_ratio > 0:
            raise ConfigError(f"temp_ratio must be positive, got {self.temp_ratio}")
        if not np.isfinite(self.v_de):
            raise ConfigError("v_de must be finite")
        if self.jext_mode not in ("zero", "j0"):
            raise ConfigError(f"unknown jext_mode {self.jext_mode!r}")
        if self.ion_variance not in ION_VARIANCE_CONVENTIONS:
            raise ConfigError(f"ion_variance must be one of {ION_VARIANCE_CONVENTIONS}")

    @property
    def mu_e(self):
        return -1.0

    @property
    def mu_i(self):
        return 1.0 / self.mass_ratio

    @property
    def gamma(self):
        return float(np.sqrt(1.0 / (self.temp_ratio * self.mass_ratio)))

    @property
    def ion_var(self):
        """Variance of the ion Maxwellian."""
        return self.gamma ** 2 if self.ion_variance == "thermal" else self.gamma


@dataclass(frozen=True)
class Domain:
    """Phase-space box and cell counts."""

    L: float
    n_x: int
    v_ce: float
    n_ve: int
    v_ci: float
    n_vi: int


@dataclass(frozen=True)
class NoiseSpectrum:
    """Random-phase initial perturbation.

    Phases are drawn uniformly on ``[0, 2 pi)`` from a Philox generator
    seeded with ``seed``, so they are reproducible across platforms.
    """

    n_max: int
    e_tf: float
    L: float
    seed: int = 0
    phases: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ConfigError(f"N_max must be a positive integer, got {self.n_max}")
        if not self.L > 0:
            raise ConfigError("L must be positive")
        rng = np.random.Generator(np.random.Philox(int(self.seed) & (2 ** 64 - 1)))
        object.__setattr__(self, "phases", rng.uniform(0.0, 2.0 * np.pi, int(self.n_max)))

    @property
    def kappa0(self):
        return 2.0 * np.pi / self.L

    @property
    def kappas(self):
        return self.kappa0 * np.arange(1, self.n_max + 1)

    def electric_field(self, x):
        """``-sum_n E_tf sin(kappa_n x + phi_n)``."""
        x = np.asarray(x, dtype=float)
        arg = x[..., None] * self.kappas + self.phases
        return -self.e_tf * np.sum(np.sin(arg), axis=-1)

    def density(self, x):
        """``1 + sum_n E_tf kappa_n cos(kappa_n x + phi_n)``."""
        x = np.asarray(x, dtype=float)
        arg = x[..., None] * self.kappas + self.phases
        return 1.0 + self.e_tf * np.sum(self.kappas * np.cos(arg), axis=-1)


def maxwellian(v, variance=1.0, drift=0.0):
    """Normalized Gaussian in ``v``."""
    return np.exp(-((v - drift) ** 2) / (2.0 * variance)) / np.sqrt(2.0 * np.pi * variance)


def make_grids(params, domain, k):
    """Electron and ion grids sharing one periodic x mesh."""
    ge = SpeciesGrid.build("e", params.mu_e, domain.L, domain.n_x, domain.v_ce, domain.n_ve, k)
    vmesh = build_mesh(-domain.v_ci, domain.v_ci, domain.n_vi, False)
    gi = SpeciesGrid("i", params.mu_i, ge.xmesh, vmesh, ge.basis)
    return ge, gi


def _check_degree(k):
    if int(k) != k or not 0 <= k <= 15:
        raise ConfigError(f"degree k must be an integer in [0, 15], got {k}")


def landau_ic(params, A, kappa, domain, k):
    """Perturbed electrons over Maxwellian ions.

    ``f_e = (1 + A cos(kappa x)) M(v)``, ``f_i`` is a Maxwellian with the
    ion variance of ``params`` and ``E = -(A/kappa) sin(kappa x)``, which
    has zero mean and satisfies Gauss's law for these densities.
    """
    _check_degree(k)
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    periods = kappa * domain.L / (2.0 * np.pi)
    if abs(periods - round(periods)) > 1e-9 or round(periods) < 1:
        raise ConfigError(f"kappa L / 2pi = {periods} must be a positive integer")
    ge, gi = make_grids(params, domain, k)
    fe = NodalField.from_function(ge, lambda x, v: (1.0 + A * np.cos(kappa * x)) * maxwellian(v))
    fi = NodalField.from_function(gi, lambda x, v: maxwellian(v, params.ion_var) + 0.0 * x)
    E = ElectricField.from_function(ge, lambda x: -(A / kappa) * np.sin(kappa * x))
    return State(fe, fi, E)


def equilibrium_ic(params, domain, k):
    """x-uniform Maxwellians (electrons drifting at ``v_de``) with ``E = 0``."""
    _check_degree(k)
    ge, gi = make_grids(params, domain, k)
    fe = NodalField.from_function(ge, lambda x, v: maxwellian(v, 1.0, params.v_de) + 0.0 * x)
    fi = NodalField.from_function(gi, lambda x, v: maxwellian(v, params.ion_var) + 0.0 * x)
    E = ElectricField.from_function(ge, lambda x: 0.0 * x)
    return State(fe, fi, E)


def cdiaw_ic(params, noise, domain, k):
    """Drifting electrons with a random-phase density and field perturbation."""
    _check_degree(k)
    if abs(noise.L - domain.L) > 1e-12 * domain.L:
        raise ConfigError(f"noise spectrum length {noise.L} differs from domain length {domain.L}")
    resolvable = domain.n_x * (k + 1) // 2
    if noise.n_max > resolvable:
        raise ConfigError(f"N_max = {noise.n_max} exceeds the {resolvable} modes the mesh resolves")
    ge, gi = make_grids(params, domain, k)
    fe = NodalField.from_function(ge, lambda x, v: noise.density(x) * maxwellian(v, 1.0, params.v_de))
    fi = NodalField.from_function(gi, lambda x, v: maxwellian(v, params.ion_var) + 0.0 * x)
    E = ElectricField(ge.xmesh, ge.basis, noise.electric_field(ge.x))
    return State(fe, fi, E)


S1_PARAMETERS = {
    "mass_ratio": 25.0,
    "temp_ratio": 2.0,
    "lambda_min": 7.98,
    "lambda_max": 426.60,
    "v_ph_min": 0.23,
    "v_ph_max": 0.29,
    "V_ce": 10.30,
    "V_ci": 2.87,
    "N_x": 500,
    "N_v": 890,
    "k": 2,
    "E_tf": 6.76e-5,
    "v_de": 1.7,
    # plot-only scale factors to reference units
    "scale_factors": {"eta": 7.58e5},
}


def preset_s1():
    """Full-size current-driven ion-acoustic configuration.

    Returns
    -------
    RunConfig
    """
    from .config import MeshConfig, PhysicsConfig, RunConfig

    p = S1_PARAMETERS
    n_max = int(np.floor(p["lambda_max"] / p["lambda_min"]))
    phys = PhysicsConfig(
        ic="cdiaw", mass_ratio=p["mass_ratio"], temp_ratio=p["temp_ratio"], v_de=p["v_de"],
        E_tf=p["E_tf"], N_max=n_max,
    )
    mesh = MeshConfig(L=p["lambda_max"], N_x=p["N_x"], V_ce=p["V_ce"], V_ci=p["V_ci"],
                      N_ve=p["N_v"], N_vi=p["N_v"])
    meta = {k: p[k] for k in ("lambda_min", "lambda_max", "v_ph_min", "v_ph_max", "scale_factors")}
    return RunConfig(preset="s1", physics=phys, mesh=mesh, k=p["k"], scheme="implicit",
                     cfl=5.0, t_end=400.0, jext_mode="j0", metadata=meta)


def preset_landau(mass_ratio):
    """Large-amplitude Landau test on ``L = 4 pi``.

    The ion cutoff is the electron cutoff scaled by the ion thermal speed.
    """
    from .config import MeshConfig, PhysicsConfig, RunConfig

    phys = PhysicsConfig(ic="landau", mass_ratio=float(mass_ratio), temp_ratio=2.0, A=0.5, kappa=0.5)
    params = PlasmaParams(phys.mass_ratio, phys.temp_ratio)
    v_ce = 8.0
    mesh = MeshConfig(L=4.0 * np.pi, N_x=100, V_ce=v_ce, V_ci=float(np.sqrt(params.ion_var)) * v_ce,
                      N_ve=200, N_vi=200)
    name = f"landau{int(mass_ratio)}"
    return RunConfig(preset=name, physics=phys, mesh=mesh, k=2, scheme="explicit", cfl=0.13,
                     t_end=100.0, jext_mode="zero")


PRESETS = {
    "landau25": lambda: preset_landau(25),
    "landau1836": lambda: preset_landau(1836),
    "s1": preset_s1,
}
