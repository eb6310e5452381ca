"""Simulated annealing, basin-hopping and the local -> SA -> local hybrid.

Every routine takes an explicit integer seed and draws from
``numpy.random.default_rng(seed)``, so identical inputs give bit-identical
traces.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .local_opt import (
    OptimizationError,
    OptimizerOptions,
    OptimizerTrace,
    PipelineReport,
    get_method,
    run_pipeline,
)
from .potential import DomainError

THREADS_ENV = "HYBRIDMIN_THREADS"


@dataclass
class AnnealSchedule:
    t_initial: float = 0.5
    t_final: float = 0.01
    decay: float = 0.95
    sweeps: int = 100
    moves_per_sweep: int = 100
    max_displacement: float = 0.15

    def __post_init__(self):
        if not self.t_initial >= self.t_final > 0:
            raise ValueError("need t_initial >= t_final > 0")
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        if self.sweeps < 0 or self.moves_per_sweep < 1:
            raise ValueError("sweeps must be >= 0 and moves_per_sweep >= 1")
        if self.max_displacement <= 0:
            raise ValueError("max_displacement must be positive")


def _bh_local_opts() -> OptimizerOptions:
    return OptimizerOptions(max_steps=2000, energy_tol=1e-12, force_tol=1e-4)


@dataclass
class BasinHopOptions:
    iterations: int = 500
    temperature: float = 0.8
    max_displacement: float = 0.35
    local_opts: OptimizerOptions = field(default_factory=_bh_local_opts)
    local_method: str = "lbfgs"
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.max_displacement < 0:
            raise ValueError("max_displacement must be non-negative")
        get_method(self.local_method)


@dataclass
class GlobalTrace:
    """Per-step record of a stochastic search.

    Entry 0 is the starting point (always accepted).
    """

    best_config: np.ndarray
    best_energy: float
    proposed: list[float]
    accepted: list[bool]
    best_so_far: list[float]
    rng_seed: int
    method: str
    rejected_nonfinite: int = 0

    def to_text(self) -> str:
        lines = ["iter e_proposed accepted e_best"]
        for k, (e, a, b) in enumerate(zip(self.proposed, self.accepted, self.best_so_far)):
            lines.append(f"{k} {e:.12g} {int(a)} {b:.12g}")
        lines.append(f"{self.method} best {self.best_energy:.12g} seed {self.rng_seed}")
        return "\n".join(lines) + "\n"


def metropolis_accept(delta_e: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept downhill moves always and uphill ones with probability ``exp(-dE/T)``."""
    if delta_e <= 0.0:
        return True
    return bool(rng.random() < math.exp(-delta_e / temperature))


def _delta_energy(model, x, k, new_pos, e):
    if hasattr(model, "atom_energy_change"):
        return model.atom_energy_change(x, k, new_pos)
    trial = x.copy()
    trial[k] = new_pos
    return model.energy(trial) - e


def simulated_annealing(model, start, schedule: AnnealSchedule | None = None,
                        rng_seed: int = 0) -> GlobalTrace:
    """Metropolis annealing with single-atom uniform-cube moves.

    The temperature is multiplied by ``decay`` after every sweep and never
    drops below ``t_final``.  Proposals whose energy cannot be evaluated are
    rejected and counted.  Returns the lowest-energy configuration visited.
    """
    schedule = schedule or AnnealSchedule()
    rng = np.random.default_rng(rng_seed)
    x = np.array(start, dtype=float)
    n = len(x)
    e = float(model.energy(x))
    best_x, best_e = x.copy(), e
    proposed, accepted, best_hist = [e], [True], [e]
    bad = 0
    temperature = schedule.t_initial
    md = schedule.max_displacement
    for _ in range(schedule.sweeps):
        for _ in range(schedule.moves_per_sweep):
            k = int(rng.integers(n))
            new_pos = x[k] + rng.uniform(-md, md, size=3)
            try:
                de = float(_delta_energy(model, x, k, new_pos, e))
            except (DomainError, FloatingPointError, ZeroDivisionError):
                de = math.nan
            if not math.isfinite(de):
                bad += 1
                proposed.append(math.nan)
                accepted.append(False)
                best_hist.append(best_e)
                continue
            ok = metropolis_accept(de, temperature, rng)
            proposed.append(e + de)
            accepted.append(ok)
            if ok:
                x[k] = new_pos
                e += de
                if e < best_e:
                    best_e, best_x = e, x.copy()
            best_hist.append(best_e)
        # resynchronise the running energy with a full evaluation
        e = float(model.energy(x))
        temperature = max(temperature * schedule.decay, schedule.t_final)
    best_e = float(model.energy(best_x))
    return GlobalTrace(best_x, best_e, proposed, accepted, best_hist, rng_seed, "sa", bad)


def basin_hopping(model, seed_config, opts: BasinHopOptions | None = None) -> GlobalTrace:
    """Monte Carlo on the landscape of local-minimum energies.

    Each step displaces every coordinate uniformly within
    ``+-max_displacement``, relaxes with the chosen local method and applies
    the Metropolis test to the relaxed energies.  A failed relaxation counts
    as a rejection.
    """
    opts = opts or BasinHopOptions()
    local = get_method(opts.local_method)
    rng = np.random.default_rng(opts.rng_seed)
    first = local(model, seed_config, opts.local_opts)
    x, e = first.final_config, first.final_energy
    best_x, best_e = x.copy(), e
    proposed, accepted, best_hist = [e], [True], [e]
    bad = 0
    md = opts.max_displacement
    for _ in range(opts.iterations):
        trial = x + rng.uniform(-md, md, size=x.shape)
        trial -= trial.mean(axis=0)
        try:
            res = local(model, trial, opts.local_opts)
            e_new = res.final_energy
        except (OptimizationError, DomainError, FloatingPointError):
            e_new = math.nan
        if not math.isfinite(e_new):
            bad += 1
            proposed.append(math.nan)
            accepted.append(False)
            best_hist.append(best_e)
            continue
        ok = metropolis_accept(e_new - e, opts.temperature, rng)
        proposed.append(e_new)
        accepted.append(ok)
        if ok:
            x, e = res.final_config, e_new
            if e < best_e:
                best_x, best_e = x.copy(), e
        best_hist.append(best_e)
    return GlobalTrace(best_x, best_e, proposed, accepted, best_hist, opts.rng_seed, "bh", bad)


@dataclass
class SandwichReport(PipelineReport):
    """Pipeline report with the annealing segment kept alongside the local stages."""

    anneal: GlobalTrace | None = None
    pre_energy: float = float("nan")
    sa_energy: float = float("nan")

    def segment_drops(self) -> dict[str, float]:
        return {
            "pre": self.initial_energy - self.pre_energy,
            "sa": self.pre_energy - self.sa_energy,
            "post": self.sa_energy - self.final_energy,
        }


def hybrid_sandwich(model, start, pre_stages: Sequence[tuple], schedule: AnnealSchedule,
                    post_stages: Sequence[tuple], rng_seed: int = 0) -> SandwichReport:
    """Local relaxation, then annealing, then local refinement.

    The annealing segment starts from the pre-stages' final configuration
    and the refinement from the best configuration annealing visited.  With
    ``schedule.sweeps == 0`` the annealing stage is omitted from ``stages``.
    """
    pre = run_pipeline(pre_stages, model, start)
    report = SandwichReport(stages=list(pre.stages), initial_energy=pre.initial_energy)
    report.pre_energy = pre.final_energy
    x = pre.final_config
    if schedule.sweeps > 0:
        sa = simulated_annealing(model, x, schedule, rng_seed)
        report.anneal = sa
        x = sa.best_config
        report.stages.append(("sa", OptimizerTrace(
            "sa", [pre.final_energy, sa.best_energy], [math.nan, math.nan], x, "schedule")))
    report.sa_energy = float(model.energy(x)) if schedule.sweeps > 0 else pre.final_energy
    post = run_pipeline(post_stages, model, x)
    report.stages.extend(post.stages)
    report.final_energy = post.final_energy
    report.final_config = post.final_config
    return report


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def multi_start(fn: Callable[[int], GlobalTrace], seeds: Sequence[int],
                workers: int | None = None) -> list[GlobalTrace]:
    """Run independent walkers, one per seed, and return traces sorted by best energy.

    ``fn`` must be picklable when ``workers > 1``.  Ties keep seed order.
    """
    workers = workers or default_workers()
    if workers == 1:
        traces = [fn(s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(fn, seeds))
    order = sorted(range(len(traces)), key=lambda i: (traces[i].best_energy, i))
    return [traces[i] for i in order]
