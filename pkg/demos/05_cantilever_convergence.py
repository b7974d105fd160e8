"""Wind a cantilever into a double circle and measure the centerline error
as the mesh is refined, for three penalty values."""

from beamfrac.cli import shipped_config
from beamfrac.config import parse_config
from beamfrac.scenarios import convergence_study

cfg = parse_config(shipped_config("cantilever_moment"))
print("   beta        h        error    order")
convergence_study(cfg, levels=5, on_row=lambda r: print(
    f"{r.beta:7g} {r.h:9.5f} {r.error:11.3e} "
    + ("     -" if r.observed_order is None else f"{r.observed_order:8.2f}")))
