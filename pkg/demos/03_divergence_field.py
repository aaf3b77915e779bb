"""Building a vector field with prescribed surface divergence.

Solve -Delta_G v = F + chi H with zero co-normal flux and set
V = -grad_G v + chi n. The result has div_G V = F and normal component
chi, with no flux through the rim. The construction needs the load F + chi H to
integrate to zero; on a spherical cap with chi = 1 it does not, and the
report says so instead of silently returning a field.
"""
import numpy as np

from surfpoisson import DomainSpec, flat_chart, generate_mesh, hemisphere_chart, quadrature
from surfpoisson.divfield import solve_div_system
from surfpoisson.errors import IncompatibleLoad
from surfpoisson.functions import constant, cos_r2_forcing, linear
from surfpoisson.mesh import refinement_sequence

disk = DomainSpec.disk()
q = quadrature(4)

print("flat disk, F = manufactured forcing, chi = 0")
for m in refinement_sequence(disk, 0.4, 4):
    rep = solve_div_system(flat_chart(), m, q, cos_r2_forcing(), None)
    print(f"  h={m.h:.4f}  div {rep.div_residual:8.4f}  normal {rep.normal_residual:.1e}  "
          f"conormal {rep.conormal_residual:8.4f}")

mesh = generate_mesh(disk, 0.1)
rep = solve_div_system(flat_chart(), mesh, q, None, linear((1, 0)))
print(f"\nflat disk, F = 0, chi = X1: max |V - X1 e3| = "
      f"{np.abs(rep.V.values - np.c_[0 * mesh.vertices, mesh.vertices[:, 0]]).max():.1e}")

cap = hemisphere_chart(2.0, 1.0)
rep = solve_div_system(cap, mesh, q, None, constant(1.0))
print(f"\ncap R=2, F = 0, chi = 1: compatibility defect {rep.compatibility_defect:.3f}")
print(f"  div residual {rep.div_residual:.3f} (div_G V cannot vanish: int chi H = -area)")
try:
    solve_div_system(cap, mesh, q, None, constant(1.0), strict=True)
except IncompatibleLoad as exc:
    print(f"  strict mode: {exc}")
