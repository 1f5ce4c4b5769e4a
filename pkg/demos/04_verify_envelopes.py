"""Predicted decay envelopes and their empirical verification.

The predicted envelope for a direction uses its strip-mass law below the
1/2 threshold (sharp there) and saturates at (1/2, log^2) above it; the
overall envelope is the slowest directional one.  verify_bounds fits the
smallest constant covering the measured |K| and checks the measured decay
rate against the prediction.
"""

import math

import numpy as np

import oscdecay2d as o

sep = o.parse_spec("""
factor { poly = "x", gamma = -0.8 }
factor { poly = "y", gamma = -0.8 }
region { disk = 0.75 }
amplitude { product_bump = 0.5 }
""")

eps = o.mass_exponent(sep)
for scope, label in ((o.Strip(o.Direction(0.0), 1.0), "strip along x"),
                     (o.Ray(o.Direction(math.pi / 4)), "diagonal ray"),
                     (o.Overall(), "overall")):
    est = o.predicted_estimate(sep, scope, eps_fit=eps)
    print(f"{label:16s}: power {est.exponents.power:.3f} "
          f"log {est.exponents.logpower} sharp={est.sharp}  [{est.source}]")

grid = np.geomspace(1e2, 1e4, 12)
rep = o.verify_bounds(sep, o.Ray(o.Direction(0.0)), grid, eps_fit=eps)
print(f"\nverify x-ray: {'PASS' if rep.passed else 'FAIL'} ({rep.detail})")

bad = o.DecayEstimate(o.Ray(o.Direction(0.0)), o.ExponentPair(0.3, 0),
                      False, "adversarial: power inflated by 0.1")
rep_bad = o.verify_bounds(sep, o.Ray(o.Direction(0.0)), grid, estimate=bad)
print(f"adversarial envelope: {'PASS' if rep_bad.passed else 'FAIL'} "
      f"({rep_bad.detail})")

hold = o.holder_estimate(sep, 1.2)
print(f"\nL^1.2 envelope: power {hold.exponents.power:.4f} "
      f"(complementary exponent 6)")
