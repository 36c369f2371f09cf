"""Anomalous resistivity statistics from a small ensemble.

Each member starts from drifting electrons with a random-phase field
perturbation (seed = base_seed XOR r).  The electron drift exceeds the
ion-acoustic threshold, so the seeded waves grow and exchange momentum with
the electrons.  The run resistivity -(dJ0/dt)/J0 is then aligned on a
common grid, standardized across runs and tested for normality over
sliding windows.  This is a scaled-down version of the full 100-run
study and finishes in under a minute with the default 8 members.

    python demos/resistivity_ensemble.py [R] [out_dir]
"""
import sys

import numpy as np

from vadg import config_from_dict
from vadg.ensemble import pooled_histogram, run_ensemble, windowed_chi_square, write_stats_csv

R = int(sys.argv[1]) if len(sys.argv) > 1 else 8
out = sys.argv[2] if len(sys.argv) > 2 else "demo_ensemble"

cfg = config_from_dict({
    "preset": "s1",
    "physics": {"N_max": 4, "E_tf": 1e-3},
    "mesh": {"L": 4 * 2 * np.pi / 0.434102, "N_x": 64, "N_ve": 96, "N_vi": 64},
    "t_end": 60.0,
    "output": {"scalar_stride": 1},
})
print(f"running {R} members on a {cfg.mesh.N_x} x {cfg.mesh.N_ve} mesh to t = {cfg.t_end:g}")
ens = run_ensemble(cfg, R, base_seed=2024, out_dir=out)
write_stats_csv(f"{out}/stats.csv", ens, window=10, n_bins=5)

s = ens.stats
print("\n     t        mean eta      std eta    skew")
for n in range(0, ens.grid.size, max(1, ens.grid.size // 12)):
    print(f"  {ens.grid[n]:6.2f}  {s['mean'][n]: .3e}  {s['std'][n]:.3e}  {s['skew'][n]: .2f}")

chi2, p, rej = windowed_chi_square(ens.z, window=10, n_bins=5)
valid = np.isfinite(p)
print(f"\nwindows tested: {valid.sum()}, rejected at 0.05: {rej[0][valid].mean():.1%}, "
      f"at 0.01: {rej[1][valid].mean():.1%}")
edges, counts, expected = pooled_histogram(ens.z, ens.grid, 30.0, 60.0, n_bins=5)
print("pooled z histogram over t in [30, 60]:", counts.tolist(), f"(expected {expected:.1f} each)")
print(f"\nper-time statistics written to {out}/stats.csv")
