"""Linear Landau damping with heavy ions.

A small cosine perturbation of the electron density launches a Langmuir
wave.  Its amplitude decays at the rate given by the kinetic dispersion
relation; we measure the decay from the peaks of the first Fourier mode of
E and compare it with the root of the dielectric function.

    python demos/landau_damping.py
"""
import numpy as np

from vadg import Simulation, config_from_dict
from vadg.diagnostics import log_fourier_mode
from vadg.dispersion import components_for, find_root
from vadg.driver import plasma_params

cfg = config_from_dict({
    "preset": "landau1836",
    "physics": {"A": 0.01},
    "mesh": {"N_x": 32, "N_ve": 128, "N_vi": 128},
    "t_end": 40.0,
})

# Reference: least-damped root of eps(w, k) = 0 at k = 0.5.
w = find_root(0.5, components_for(plasma_params(cfg)), 1.4 - 0.15j)
print(f"dispersion root at k = 0.5: w = {w.real:.6f} {w.imag:+.6f}i")

sim = Simulation(cfg)
t, fm = [0.0], [log_fourier_mode(sim.state.E, 1)]


def record(s, hit):
    t.append(s.state.t)
    fm.append(log_fourier_mode(s.state.E, 1))


sim.run(callback=record)
t, fm = np.array(t), np.array(fm)
print(f"{len(t) - 1} explicit steps to t = {t[-1]:g}")

# |E_1| oscillates at twice the wave frequency; fit its local maxima.
peaks = [i for i in range(1, t.size - 1) if fm[i] >= fm[i - 1] and fm[i] > fm[i + 1] and t[i] >= 5]
rate = np.polyfit(t[peaks], fm[peaks], 1)[0] * np.log(10)
print("\n   t_peak   log10|E_1|")
for i in peaks:
    print(f"  {t[i]:7.3f}  {fm[i]:9.4f}")

# The peak spacing is half the wave period.
omega = np.pi / np.mean(np.diff(t[peaks]))
print(f"\nmeasured:  gamma = {rate:.5f}, omega = {omega:.4f}")
print(f"predicted: gamma = {w.imag:.5f}, omega = {w.real:.4f}")
print(f"relative error in gamma: {abs(rate / w.imag - 1):.2%}")
