"""The relaxation protocol on a small force-field chain and on LJ31.

A staged SD -> CG -> SD pipeline, then the sandwich: local search, annealing
and a second local search.  Run with ``python demos/hybrid_protocol.py``.
"""

# %% a toy six-atom chain under both functional forms
import numpy as np

from hybridmin import AnnealSchedule, ForceField, ForceFieldTopology, LJCluster, OptimizerOptions, SeedSpec
from hybridmin import hybrid_sandwich, make_seed, run_pipeline
from hybridmin.local_opt import parse_pipeline

top = ForceFieldTopology(
    n_atoms=6,
    bonds=[(i, i + 1, 300.0, 1.5) for i in range(5)],
    angles=[(i, i + 1, i + 2, 50.0, np.radians(109.5)) for i in range(4)],
    dihedrals=[(i, i + 1, i + 2, i + 3, 1.4, 3, 0.0) for i in range(3)],
    urey_bradley=[(0, 2, 10.0, 2.45)],
    impropers=[(0, 1, 2, 3, 20.0, 0.2)],
    charges=[0.4, 0.0, 0.0, 0.0, 0.0, -0.4],
    rmin_half=[1.9] * 6,
    epsilon=[0.1] * 6,
)
rng = np.random.default_rng(0)
steps = rng.normal(size=(6, 3))
x = np.cumsum(1.5 * steps / np.linalg.norm(steps, axis=1, keepdims=True), axis=0)
stages = parse_pipeline("sd:3000,cg:3000,sd:3000")
for form in ("amber", "charmm"):
    ff = ForceField(top, form=form, cutoff=12.0)
    rep = run_pipeline(stages, ff, x)
    print(f"{form:6s} start {rep.initial_energy:10.4f}  " + rep.table_row("phases"))
    print("       " + "  ".join(f"{k}={v:.3f}" for k, v in ff.breakdown(rep.final_config).as_dict().items()))

# %% the sandwich on LJ31: annealing lets the refinement reach lower minima
local = [("sd", OptimizerOptions()), ("cg", OptimizerOptions())]
lower = 0
for s in range(10):
    start = make_seed(SeedSpec(31, "random_sphere", rng_seed=s))
    rep = hybrid_sandwich(LJCluster(), start, local, AnnealSchedule(), local, rng_seed=s)
    d = rep.segment_drops()
    lower += rep.final_energy < rep.pre_energy - 1e-9
    print(f"seed {s}: local {rep.pre_energy:10.4f}  after SA {rep.sa_energy:10.4f}  refined {rep.final_energy:10.4f}"
          f"  drops pre/sa/post {d['pre']:.2f}/{d['sa']:.2f}/{d['post']:.2f}")
print(f"sandwich strictly below plain local search in {lower}/10 runs")
