"""Oscillatory evaluation of the convolution kernel and its decay rate.

K(t,u) is the inverse transform of the multiplier; for the unit-disk
indicator it equals 2 pi J1(rho)/rho, which makes a convenient oracle.
"""

import math

from scipy.special import j1

import oscdecay2d as o

disk = o.parse_spec("region { disk = 1.0 }")
print("disk indicator vs the Bessel closed form:")
for rho in (5.0, 20.0, 100.0, 1000.0):
    ks = o.kernel_eval(disk, rho, 0.0, 1e-4)
    oracle = 2 * math.pi * j1(rho) / rho
    print(f"  K({rho:6g},0) = {ks.value.real:+.6e}   "
          f"oracle {oracle:+.6e}   est_error {ks.est_error:.1e}")

fit = o.decay_fit(disk, o.Ray(o.Direction(0.0)), (1e2, 1e4), samples=32)
print(f"envelope fit over rho in [1e2, 1e4]: power {fit.power:.3f} "
      f"(Bessel envelope decays like rho^-3/2)")

sep = o.parse_spec("""
factor { poly = "x", gamma = -0.8 }
factor { poly = "y", gamma = -0.8 }
region { disk = 0.75 }
amplitude { product_bump = 0.5 }
""")
fx = o.decay_fit(sep, o.Ray(o.Direction(0.0)), (1e2, 1e4), samples=24)
fd = o.decay_fit(sep, o.Ray(o.Direction(math.pi / 4)), (1e2, 1e4), samples=24)
print(f"\nseparable fixture: x-ray power {fx.power:.3f} (strip law 0.2), "
      f"diagonal power {fd.power:.3f} (disk law 0.4)")
