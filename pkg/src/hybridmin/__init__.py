"""Hybrid energy minimization: Lennard-Jones clusters, force fields, local and
global optimizers, cluster seeding and protein contact analysis."""

from .potential import (
    DomainError,
    LJCluster,
    LJParams,
    finite_difference_gradient,
    lj_cluster_energy,
    lj_cluster_gradient,
    lj_pair_energy,
)
from .forcefield import (
    EnergyBreakdown,
    ForceField,
    ForceFieldTopology,
    bonded_energy,
    load_topology,
    nonbonded_energy,
    total_energy_and_gradient,
)
from .local_opt import (
    OptimizerOptions,
    OptimizerTrace,
    PipelineReport,
    conjugate_gradient_pr,
    lbfgs,
    run_pipeline,
    steepest_descent,
)
from .global_opt import (
    AnnealSchedule,
    BasinHopOptions,
    GlobalTrace,
    basin_hopping,
    hybrid_sandwich,
    simulated_annealing,
)
from .seeding import SeedSpec, build_up_grow, icosahedral_seed, make_seed, random_seed
from .structure import InteractionCriteria, analyze, parse_pdb
from .bench import load_reference_minima, run_benchmark

__version__ = "0.1.0"
