"""Pull a ceramic bar at both ends and follow the stress at a quarter of its length.

Two tensile steps of sigma_f/2 run inwards and meet at the centre at
T = L/(2c). Below the cohesive strength they superpose to sigma_f; at the
strength the centre opens and the gauge sees the release wave instead.

Runs at h = 0.25 mm (about a minute per case).
"""

import numpy as np

from beamfrac.cli import shipped_config
from beamfrac.config import parse_config
from beamfrac.scenarios import _replace, build_scenario

base = parse_config(shipped_config("spall"))

for ratio in (0.1, 1.0):
    cfg = _replace(base, sigma_f=ratio * base.sigma_c, h=2.5e-4, dt=5e-10, snapshot_stride=0)
    sc = build_scenario(cfg)
    res = sc.run()
    t = res.history["time"]
    sigma = res.history["gauge_force"] / sc.section.A
    ref = sc.oracle_stress(t, fractured=ratio >= 1.0)
    print(f"\nsigma_f = {ratio:g} sigma_c   (T_half = {1e6 * sc.T_half:.4f} us)")
    print("  t [us]   simulated/sigma_f   wave solution/sigma_f")
    for tk in np.arange(1.0, 10.01, 1.0) * 1e-6:
        k = np.searchsorted(t, tk)
        print(f"{1e6 * t[k]:8.2f} {sigma[k] / cfg.sigma_f:16.3f} {ref[k] / cfg.sigma_f:20.3f}")
    s = res.summary
    if s["fracture"]:
        print(f"  first initiation at s = {s['first_initiation_s']:.5f} m, "
              f"t = {s['first_initiation_over_T_half']:.4f} T_half; "
              f"{s['n_initiated']} interfaces initiated, {s['n_failed']} failed")
    else:
        print("  no fracture")
