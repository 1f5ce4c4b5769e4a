"""Parse a multiplier spec and inspect its chart decomposition.

The running example is the cusp factor y^2 - x^3 raised to a small positive
power on a disk.  Its zero set has the two branches y = +-x^(3/2), so the
decomposition shifts coordinates onto each branch and certifies that the
factor is comparable to a monomial on every chart.
"""

import oscdecay2d as o

spec = o.parse_spec("""
factor { poly = "y^2 - x^3", gamma = 0.25 }
region { disk = 0.5 }
""")

print("factors:", [(f.poly.expr(), f.gamma) for f in spec.factors])
print("round trip:", o.parse_spec(o.serialize_spec(spec)) == spec)
print("integrable:", bool(o.integrability_check(spec)))

poly = spec.factors[0].poly
print("\nNewton polygon of", poly.expr())
np_ = o.newton_polygon(poly)
print("  vertices:", np_.vertices)
print("  edge slopes:", [s for s, _ in np_.edges])
print("branches:", [b.expr() for b in o.puiseux_branches(poly)])

res = o.resolve_spec(spec, eta=0.3)
print(f"\n{len(res.slivers)} charts, certified radius {res.x_max:g}, "
      f"geometric radius {res.a_geom:g}")
area = sum(s.area() for s in res.slivers)
print(f"chart areas sum to {area:.6f} vs covered {res.covered_area():.6f}")

shifted = [s for s in res.slivers if not s.shift.is_zero()][:3]
for s in shifted:
    print(f"  {s.ident}: shift {s.shift.expr()}, window "
          f"({s.lower.expr()}, {s.upper.expr()}), models {s.per_factor}")

cert = o.monomialize_check(shifted[0], poly, eta=0.3)
print(f"\ncertificate on {cert.sliver_id}: worst ratio error "
      f"{cert.max_observed_ratio_error:.3g} (target 0.3), "
      f"orders {cert.orders_checked}")
