"""
Weight constants along the power family
=======================================

|x|^alpha on [-1, 1) is an A_2 weight for -1 < alpha < 1.  The A_1 constant
blows up as alpha -> -1 and is infinite for alpha > 0, while the A_inf
constant stays moderate.  Everything below is a sup over dyadic cubes of a
2^12 grid.
"""
import numpy as np

from weightlab import GridSpec, a1_constant, ap_constant, fujii_wilson_constant, make_weight, rhi_check

grid = GridSpec.uniform(1, 4096)

print(f"{'alpha':>6} {'A_2':>8} {'A_1':>9} {'A_inf':>7} {'r_w':>6} {'RHI':>6}")
for alpha in np.round(np.arange(-0.9, 0.91, 0.15), 2):
    w = make_weight("power", {"alpha": alpha}, grid)
    rhi = rhi_check(w)
    print(f"{alpha:6.2f} {ap_constant(w, 2):8.3f} {a1_constant(w):9.3f} "
          f"{fujii_wilson_constant(w):7.3f} {rhi.r_w:6.3f} {rhi.worst_ratio:6.3f}")

# On the grid the A_1 constant of |x|^alpha, alpha > 0, is finite but grows
# with the resolution, since the smallest cell sits next to the zero of w.
for n in (256, 1024, 4096):
    w = make_weight("power", {"alpha": 0.5}, GridSpec.uniform(1, n))
    print(f"alpha=0.5, N={n:5d}: A_1 = {a1_constant(w):.2f}")
