"""Does the truncation boundary matter as it moves outward?

The half line is cut at ``R`` and the artificial endpoint gets a Dirichlet
or a Neumann condition.  When the operator is essentially self-adjoint the
local response near the origin forgets that choice as ``R`` grows; for a
limit-circle potential it never does.
"""

from formlab import build_interval_mesh, distance_from_base, radial_potential, weyl_classify_1d
from formlab.spectral import bc_sensitivity_sweep

mesh = build_interval_mesh(12.0, 2400)
r = distance_from_base(mesh).values
radii = [4.0, 6.0, 8.0, 10.0]

cases = {"-r^2": lambda t: -t ** 2, "-r^3": lambda t: -t ** 3, "-r^4": lambda t: -t ** 4}
for name, func in cases.items():
    sweep = bc_sensitivity_sweep(mesh, radial_potential(mesh, func, r=r), 0, radii)
    weyl = weyl_classify_1d(func, T=30.0)
    print(f"V = {name}  ({weyl.classification})")
    for row in sweep.rows:
        print(f"  R = {row.R:4.1f}  lowest D/N gap {row.gap:9.3f}  "
              f"resolvent gap {row.resolvent_gap:.4f}")
    print(f"  resolvent slope {sweep.resolvent_slope:.2f}, "
          f"boundary insensitive: {sweep.boundary_insensitive}\n")

# the lowest eigenvalues themselves run off to -inf for inverted potentials, so
# their Dirichlet/Neumann gap grows with R in both regimes
