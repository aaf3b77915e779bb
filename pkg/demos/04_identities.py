"""Surface divergence theorem and integration by parts, checked numerically.

Both sides of each identity are integrated with analytic integrands and
the package's own quadrature, so the only error left is quadrature error
on the meshed surface. Each defect should fall quickly with h.
"""
from surfpoisson import DomainSpec, hemisphere_chart, monge_chart
from surfpoisson.functions import VectorField, constant, cos_r2, exp_sin, linear, monomial
from surfpoisson.mesh import quadrature, refinement_sequence
from surfpoisson.verify import check_divergence_theorem, check_integration_by_parts

disk = DomainSpec.disk()
q = quadrature(4)
cap = hemisphere_chart(2.0, 1.0)
graph = monge_chart({(2, 0): 0.3, (1, 1): 0.2, (0, 3): 0.1})
meshes = refinement_sequence(disk, 0.2, 3)

f = VectorField((constant(0.0), constant(0.0), constant(1.0)))
print("divergence theorem on the cap, f = e3")
for m in meshes:
    r = check_divergence_theorem(cap, m, q, f)
    print(f"  h={m.h:.4f}  lhs {r.lhs:+.3e}  curvature {r.terms['curvature']:+.8f}  "
          f"boundary {r.terms['boundary']:+.8f}  rel {r.rel_defect:.1e}")

f = VectorField((cos_r2(0.5), linear((1, 2), 0.3), exp_sin(2, 3)))
print("\ndivergence theorem on a cubic graph, mixed analytic f")
for m in meshes:
    r = check_divergence_theorem(graph, m, q, f)
    print(f"  h={m.h:.4f}  lhs {r.lhs:+.8f}  rhs {r.rhs:+.8f}  rel {r.rel_defect:.2e}")

print("\nintegration by parts")
for label, chart, f, psi, j in [("cap", cap, cos_r2(0.5), linear((1, 1)), 2),
                                ("graph", graph, cos_r2(0.5, (0.2, 0.0)), monomial(2, 1), 3)]:
    for m in meshes:
        r = check_integration_by_parts(chart, m, q, f, psi, j)
        print(f"  {label} j={j} h={m.h:.4f}  lhs {r.lhs:+.8f}  rhs {r.rhs:+.8f}  rel {r.rel_defect:.2e}")
