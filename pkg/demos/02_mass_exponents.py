"""Disk-mass and strip-mass growth laws.

The mass of g over a shrinking disk follows c * r^eps * |ln r|^d; over a
shrinking strip it follows the directional law (delta_v, e_v).  Both are
measured by singular quadrature and fitted, and the log power is detected
automatically.
"""

import math

import oscdecay2d as o

# a law with a genuine logarithm: 1/|y| between a parabola and a line
spec = o.parse_spec("""
factor { poly = "y", gamma = -1.0 }
region { sector { lower = "y = x^2", upper = "y = x", side = in } radius = 0.5 }
""")
fit = o.mass_exponent(spec, tol=1e-6)
print(f"1/|y| on the parabola-line wedge: mass ~ r^{fit.power:.3f} "
      f"* |ln r|^{fit.logpower}  (residual {fit.residual:.2e})")

# the separable fixture: |x|^-0.8 |y|^-0.8
sep = o.parse_spec("""
factor { poly = "x", gamma = -0.8 }
factor { poly = "y", gamma = -0.8 }
region { disk = 0.75 }
amplitude { product_bump = 0.5 }
""")
eps = o.mass_exponent(sep)
print(f"\nseparable fixture: disk mass exponent {eps.power:.3f} "
      f"(closed form 0.4)")
for theta, label in ((0.0, "x-axis"), (math.pi / 2, "y-axis"),
                     (math.pi / 4, "diagonal")):
    d = o.directional_exponent(sep, o.Direction(theta))
    print(f"  strip along {label}: delta = {d.power:.4f}, log {d.logpower}")

law, const, tied = o.closed_form_mass_law(sep)
print(f"\nmonomial-model closed form: exponent {law.power:g}, "
      f"log {law.logpower}, tied={tied}")
