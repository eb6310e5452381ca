import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridmin.global_opt import (
    AnnealSchedule,
    BasinHopOptions,
    GlobalTrace,
    basin_hopping,
    hybrid_sandwich,
    metropolis_accept,
    multi_start,
    simulated_annealing,
)
from hybridmin.local_opt import OptimizerOptions, lbfgs, run_pipeline
from hybridmin.potential import DomainError, LJCluster
from hybridmin.seeding import SeedSpec, icosahedral_seed, random_seed

from .helpers import random_cluster, truncated_octahedron_38

TIGHT = OptimizerOptions(max_steps=3000, energy_tol=1e-12, force_tol=1e-6)


class FixedDelta:
    """Every single-atom move changes the energy by the same amount."""

    def __init__(self, delta):
        self.delta = delta

    def energy(self, x):
        return 0.0

    def atom_energy_change(self, x, k, new_pos):
        return self.delta


class Exploding(LJCluster):
    """LJ, but any move of atom 0 is outside the domain."""

    def atom_energy_change(self, x, k, new_pos):
        if k == 0:
            raise DomainError("no")
        return super().atom_energy_change(x, k, new_pos)


def lj_start(n, seed):
    return random_seed(SeedSpec(n, "random_sphere", seed))


def test_schedule_and_options_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(t_initial=0.1, t_final=0.2)
    with pytest.raises(ValueError):
        AnnealSchedule(t_final=0.0)
    with pytest.raises(ValueError):
        AnnealSchedule(decay=1.0)
    with pytest.raises(ValueError):
        BasinHopOptions(iterations=0)
    with pytest.raises(ValueError):
        BasinHopOptions(temperature=0.0)
    with pytest.raises(ValueError):
        BasinHopOptions(local_method="newton")


@settings(max_examples=50, deadline=None)
@given(de=st.floats(-1e6, 0.0), t=st.floats(1e-9, 1e6), seed=st.integers(0, 2**32))
def test_metropolis_downhill_always(de, t, seed):
    assert metropolis_accept(de, t, np.random.default_rng(seed))


def test_metropolis_rate_three_sigma():
    rng = np.random.default_rng(0)
    for de, t in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)]:
        p = math.exp(-de / t)
        n = 10_000
        k = sum(metropolis_accept(de, t, rng) for _ in range(n))
        assert abs(k / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_annealing_uphill_rate():
    sched = AnnealSchedule(t_initial=1.0, t_final=1.0, decay=0.5, sweeps=100, moves_per_sweep=100)
    tr = simulated_annealing(FixedDelta(1.0), np.zeros((4, 3)), sched, rng_seed=1)
    rate = np.mean(tr.accepted[1:])
    assert len(tr.accepted) == 10_001
    assert abs(rate - math.exp(-1.0)) < 0.02


def test_annealing_zero_temperature_is_descent():
    sched = AnnealSchedule(t_initial=1e-9, t_final=1e-9, decay=0.5, sweeps=10, moves_per_sweep=100)
    x = random_cluster(10, np.random.default_rng(3))
    tr = simulated_annealing(LJCluster(), x, sched, rng_seed=4)
    assert len(tr.proposed) == 1001
    assert np.all(np.diff(tr.best_so_far) <= 0)
    current = tr.proposed[0]
    for e, ok in zip(tr.proposed[1:], tr.accepted[1:]):
        if ok:
            assert e <= current + 1e-9
            current = e
    assert tr.best_energy < tr.proposed[0]


def test_annealing_best_is_consistent():
    x = random_cluster(12, np.random.default_rng(8))
    tr = simulated_annealing(LJCluster(), x, AnnealSchedule(sweeps=20), rng_seed=2)
    assert tr.best_energy == pytest.approx(LJCluster().energy(tr.best_config))
    assert tr.best_energy == pytest.approx(tr.best_so_far[-1], abs=1e-9)
    assert np.all(np.diff(tr.best_so_far) <= 0)


def test_annealing_rejects_nonfinite_moves():
    x = random_cluster(6, np.random.default_rng(1))
    tr = simulated_annealing(Exploding(), x, AnnealSchedule(sweeps=5, moves_per_sweep=60), rng_seed=0)
    assert tr.rejected_nonfinite > 0
    np.testing.assert_array_equal(tr.best_config[0], x[0])


def test_annealing_deterministic():
    x = random_cluster(8, np.random.default_rng(0))
    a = simulated_annealing(LJCluster(), x, AnnealSchedule(sweeps=10), rng_seed=42)
    b = simulated_annealing(LJCluster(), x, AnnealSchedule(sweeps=10), rng_seed=42)
    assert a.to_text() == b.to_text()
    np.testing.assert_array_equal(a.best_config, b.best_config)


def test_basin_hopping_degenerate_loop():
    x = random_cluster(7, np.random.default_rng(5))
    opts = BasinHopOptions(iterations=1, max_displacement=0.0, local_opts=TIGHT)
    tr = basin_hopping(LJCluster(), x, opts)
    plain = lbfgs(LJCluster(), x, TIGHT)
    assert tr.best_energy == pytest.approx(plain.final_energy, abs=1e-9)


def test_basin_hopping_lj7():
    tr = basin_hopping(LJCluster(), lj_start(7, 3), BasinHopOptions(iterations=200, rng_seed=3))
    assert tr.best_energy == pytest.approx(-16.505384, abs=1e-5)


def test_basin_hopping_trace_invariants():
    tr = basin_hopping(LJCluster(), lj_start(9, 1), BasinHopOptions(iterations=60, rng_seed=1))
    assert len(tr.proposed) == len(tr.accepted) == len(tr.best_so_far) == 61
    assert np.all(np.diff(tr.best_so_far) <= 0)
    accepted = [e for e, ok in zip(tr.proposed, tr.accepted) if ok]
    assert tr.best_energy == min(accepted)
    assert tr.best_energy == pytest.approx(LJCluster().energy(tr.best_config), abs=1e-9)


def test_basin_hopping_deterministic():
    opts = BasinHopOptions(iterations=30, rng_seed=11)
    a = basin_hopping(LJCluster(), lj_start(8, 0), opts)
    b = basin_hopping(LJCluster(), lj_start(8, 0), opts)
    assert a.to_text() == b.to_text()


@pytest.mark.parametrize("n", range(4, 16))
def test_basin_hopping_dominates_single_minimization(n):
    x = lj_start(n, n)
    opts = BasinHopOptions(iterations=25, rng_seed=n)
    tr = basin_hopping(LJCluster(), x, opts)
    plain = lbfgs(LJCluster(), x, opts.local_opts)
    assert tr.best_energy <= plain.final_energy


@pytest.mark.slow
def test_basin_hopping_lj13_hit_rate():
    hits = 0
    for s in range(100):
        tr = basin_hopping(LJCluster(), lj_start(13, s), BasinHopOptions(iterations=500, rng_seed=s))
        hits += abs(tr.best_energy + 44.326801) < 1e-5
    assert hits >= 95


def test_sandwich_without_sweeps_is_pipeline():
    x = random_cluster(10, np.random.default_rng(6))
    pre = [("sd", OptimizerOptions())]
    post = [("cg", OptimizerOptions()), ("sd", OptimizerOptions())]
    rep = hybrid_sandwich(LJCluster(), x, pre, AnnealSchedule(sweeps=0), post, rng_seed=0)
    ref = run_pipeline(pre + post, LJCluster(), x)
    assert [n for n, _ in rep.stages] == [n for n, _ in ref.stages]
    assert [t.energies for _, t in rep.stages] == [t.energies for _, t in ref.stages]
    np.testing.assert_array_equal(rep.final_config, ref.final_config)
    assert rep.segment_drops()["sa"] == 0.0


def test_sandwich_on_perturbed_truncated_octahedron():
    rng = np.random.default_rng(38)
    x = truncated_octahedron_38() + rng.normal(scale=0.05, size=(38, 3))
    stages = [("sd", OptimizerOptions()), ("cg", OptimizerOptions())]
    rep = hybrid_sandwich(LJCluster(), x, stages, AnnealSchedule(), stages, rng_seed=0)
    assert rep.final_energy <= rep.pre_energy
    assert [n for n, _ in rep.stages] == ["sd", "cg", "sa", "sd", "cg"]
    drops = rep.segment_drops()
    assert drops["pre"] + drops["sa"] + drops["post"] == pytest.approx(rep.initial_energy - rep.final_energy)


def test_sandwich_refinement_drop_majority():
    stages = [("sd", OptimizerOptions()), ("cg", OptimizerOptions())]
    nonzero = 0
    for s in range(50):
        rep = hybrid_sandwich(LJCluster(), lj_start(31, s), stages, AnnealSchedule(), stages, rng_seed=s)
        nonzero += rep.segment_drops()["post"] > 0
    assert nonzero > 25


def _bh_walker(seed):
    return basin_hopping(LJCluster(), icosahedral_seed(10), BasinHopOptions(iterations=10, rng_seed=seed))


@pytest.mark.parametrize("workers", [1, 2])
def test_multi_start_sorted(workers):
    traces = multi_start(_bh_walker, [3, 1, 2], workers=workers)
    assert all(isinstance(t, GlobalTrace) for t in traces)
    energies = [t.best_energy for t in traces]
    assert energies == sorted(energies)
    assert sorted(t.rng_seed for t in traces) == [1, 2, 3]
