"""
Mixed A_1-A_inf bounds along the power sweep
============================================

For each alpha the ratio ||Hf||_{L^2(w)} / (rhs) is printed next to the
weight constants that enter the rhs.  The A_1 constant grows as alpha -> -0.9
while the ratio stays below the frozen registry bound.
"""
from weightlab import GridSpec, hilbert, load_registry, make_function, make_weight
from weightlab.harness import ratio_corollary1, ratio_theorem1

grid = GridSpec.uniform(1, 4096)
K = hilbert()
f = make_function("bump", {"seed": 1}, grid)
bounds = load_registry()["ratio"]

print(f"{'alpha':>6} {'A_1':>7} {'A_inf':>6} {'cor1 a1':>8} {'thm1 0.5':>9}")
for alpha in (-0.9, -0.75, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9):
    w = make_weight("power", {"alpha": alpha}, grid)
    c1 = ratio_corollary1(f, w, K, 2.0, "a1")
    t1 = ratio_theorem1(f, w, K, 2.0, 2.0, 0.5)
    print(f"{alpha:6.2f} {c1.a1:7.2f} {c1.ainf:6.3f} {c1.ratio:8.4f} {t1.ratio:9.4f}")

print("frozen bounds: corollary1_a1 =", round(bounds["corollary1_a1"], 4),
      " theorem1 =", round(bounds["theorem1"], 4))
