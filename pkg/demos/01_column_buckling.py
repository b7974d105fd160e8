"""Compress a pinned column past its Euler load and watch it bow out.

The straight column carries load linearly until the axial force reaches
pi^3 E R^4 / (4 L^2); after that the shortening goes into lateral
deflection and the force stays on a plateau.
"""

from beamfrac.cli import shipped_config
from beamfrac.config import parse_config
from beamfrac.scenarios import build_scenario

cfg = parse_config(shipped_config("buckling"))
cfg.snapshot_stride = 0
result = build_scenario(cfg).run()
h = result.history
s = result.summary

print(f"Euler load          {s['f_cr_oracle']:.6g} N")
print(f"detected            {s['f_cr_detected']:.6g} N ({s['f_cr_relative_error']:+.3%})")
print(f"knee of the curve   {s['f_cr_knee']:.6g} N")
print()
print(" shortening [mm]   force [MN]   mid-span deflection [mm]")
for k in range(0, len(h["step"]), 100):
    print(f"{1e3 * h['load'][k]:14.3f} {1e-6 * h['gauge_force'][k]:12.5f} {1e3 * h['gauge_displacement'][k]:18.3f}")
