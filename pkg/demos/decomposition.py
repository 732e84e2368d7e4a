"""
Smooth pieces of a rough kernel
===============================

The truncated Hilbert kernel is split into dyadic shells, each shell is
mollified at scale 2^(k - N(j)), and successive differences give the pieces
T_j.  Partial sums reconstruct T exactly once the mollifier is finer than a
cell, and the piece norms decay geometrically in N(j).
"""
from weightlab import GridSpec, hilbert, make_function
from weightlab.harness import reconstruction_errors
from weightlab.operators import DecompositionPlan, piece_decay_scan, summation_bound

grid = GridSpec.uniform(1, 4096)
plan = DecompositionPlan(1, j_max=6)
f = make_function("bump", {"seed": 0}, grid)

for J, err in enumerate(reconstruction_errors(f, hilbert(), plan)):
    print(f"J={J}: relative L2 error {err:.2e}")

scan = piece_decay_scan(hilbert(), plan, 2.0, GridSpec.uniform(1, 1024))
for j, nrm in scan.table:
    print(f"||T_{j}||_2 ~ {nrm:.3e}")
print(f"fitted decay alpha = {scan.alpha:.2f}")

# theta * sum_j (1 + N(j)) 2^(-alpha N(j-1) theta) stays bounded as theta -> 0
for theta in (0.5, 0.1, 0.01):
    print(f"theta={theta:5.2f}: theta * sum = {theta * summation_bound(scan.alpha, theta):.4f}")
