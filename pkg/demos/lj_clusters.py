"""Lennard-Jones clusters: seeding, local relaxation and basin-hopping.

Run with ``python demos/lj_clusters.py``; it takes well under a minute.
"""

# %% seeds relax to different local minima
import numpy as np

from hybridmin import (
    BasinHopOptions,
    LJCluster,
    OptimizerOptions,
    SeedSpec,
    basin_hopping,
    conjugate_gradient_pr,
    icosahedral_seed,
    lbfgs,
    make_seed,
    steepest_descent,
)
from hybridmin.bench import load_reference_minima

model = LJCluster()
tight = OptimizerOptions(max_steps=5000, energy_tol=1e-12, force_tol=1e-6)
reference = load_reference_minima()

for mode in ("icosahedral", "build_up", "random_sphere", "big_bang"):
    x = make_seed(SeedSpec(13, mode, rng_seed=0))
    tr = lbfgs(model, x, tight)
    print(f"N=13 {mode:13s} start {tr.initial_energy:12.6f} -> {tr.final_energy:.6f}")
print(f"reference N=13 {reference[13]:.6f}")

# %% the three local methods on the same start
x = make_seed(SeedSpec(20, "random_sphere", rng_seed=3))
for method in (steepest_descent, conjugate_gradient_pr, lbfgs):
    tr = method(model, x, tight)
    print(f"{method.__name__:22s} {tr.iterations:5d} iterations  E={tr.final_energy:.6f}  ({tr.reason})")

# %% basin-hopping walks the landscape of local minima
for n in (7, 13, 19):
    tr = basin_hopping(model, make_seed(SeedSpec(n, "random_sphere", rng_seed=1)),
                       BasinHopOptions(iterations=300, rng_seed=1))
    hit = next((k for k, e in enumerate(tr.best_so_far) if abs(e - reference[n]) <= 1e-4 * abs(reference[n])), None)
    print(f"N={n:2d} best {tr.best_energy:.6f} reference {reference[n]:.6f} first hit at step {hit}")

# %% LJ38: the icosahedral funnel is not the global minimum
ico = lbfgs(model, icosahedral_seed(38), tight)
print(f"N=38 relaxed icosahedral seed {ico.final_energy:.6f}, reference (fcc truncated octahedron) "
      f"{reference[38]:.6f}")
