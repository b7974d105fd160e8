"""Bend a dry spaghetto into an arc, let go of the free end, and see where it breaks.

The release sends a bending wave from the free end to the clamp; it locally
raises the curvature above the preload kappa0 and the rod snaps somewhere
other than at the clamp. Table parameters, about two minutes.
"""

from beamfrac.cli import shipped_config
from beamfrac.config import parse_config
from beamfrac.scenarios import build_scenario

cfg = parse_config(shipped_config("spaghetti"))
cfg.snapshot_stride = 0
s = build_scenario(cfg).run().summary

print(f"preload curvature      {s['preload_curvature']:.3f} 1/m (target {s['kappa0']})")
print(f"breaking curvature     {s['kappa_cr']:.3f} 1/m")
print(f"peak before failure    {s['max_curvature_over_kappa0']:.2f} kappa0 at s = {s['max_curvature_s']:.4f} m, "
      f"t = {1e3 * s['max_curvature_time']:.3f} ms")
for where, when in zip(s["failed_at_s"], s["failure_times"]):
    print(f"broken at s = {where:.4f} m (L = {cfg.length} m) at t = {1e3 * when:.3f} ms")
