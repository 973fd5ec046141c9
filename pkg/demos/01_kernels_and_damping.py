"""Why downward continuation is hard, and what the two trial-function classes look like.

Run: python3 demos/01_kernels_and_damping.py
"""
import numpy as np

from lrfmp.elements import AbelPoisson
from lrfmp.kernels import apk_eval, apk_upward, h2_inner

SIGMA = 1.06
north = np.array([0.0, 0.0, 1.0])

# Upward continuation damps degree n by sigma^-(n+1). Small at low degree,
# but a factor of hundreds by degree 100: inverting it amplifies noise.
print("degree  damping")
for n in (0, 10, 30, 60, 100):
    print(f"{n:6d}  {SIGMA ** (-n - 1.0):.3e}")

# An Abel-Poisson kernel P(h xi, .) is a bump centred at xi whose width
# shrinks as h -> 1. Print its half-width in degrees.
theta = np.radians(np.linspace(0, 90, 9001))
meridian = np.stack([np.sin(theta), 0 * theta, np.cos(theta)], axis=1)
for h in (0.5, 0.75, 0.9, 0.97):
    v = apk_eval(h * north, meridian)
    peak = v[0]
    width = np.degrees(theta[v >= peak / 2].max())
    print(f"h={h:4.2f}  peak {peak:9.3f}  half-width {width:5.1f} deg  "
          f"H2 norm {np.sqrt(h2_inner(AbelPoisson(tuple(h * north)), AbelPoisson(tuple(h * north)))):9.1f}")

# At satellite height the same kernel is a smoother bump: the continued
# kernel equals the surface kernel with h replaced by h / sigma.
x = 0.9 * north
print("peak at surface", float(apk_eval(x, north)),
      "peak at height", float(apk_upward(x, north, SIGMA)))
