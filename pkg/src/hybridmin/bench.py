"""Reference minima and the basin-hopping benchmark harness."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

import numpy as np

from .global_opt import BasinHopOptions, basin_hopping, default_workers
from .potential import LJCluster
from .seeding import MAX_ICOSAHEDRAL_ATOMS, SeedSpec, icosahedral_seed, random_seed

log = logging.getLogger(__name__)


class ReferenceTableError(ValueError):
    pass


@dataclass
class ReferenceMinimaTable:
    """Best known energy per cluster size, reduced units."""

    entries: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        prev_n, prev_e = None, None
        for n in sorted(self.entries):
            e = self.entries[n]
            if n < 2:
                raise ReferenceTableError(f"cluster size must be >= 2, got {n}")
            if prev_e is not None and not e < prev_e:
                raise ReferenceTableError(
                    f"energies must strictly decrease with N: E({n}) = {e} >= E({prev_n}) = {prev_e}")
            prev_n, prev_e = n, e

    def __contains__(self, n: int) -> bool:
        return n in self.entries

    def __getitem__(self, n: int) -> float:
        return self.entries[n]

    def __len__(self) -> int:
        return len(self.entries)


def parse_reference_minima(text: str, source: str = "<string>") -> ReferenceMinimaTable:
    entries: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ReferenceTableError(f"{source}:{lineno}: expected 'N,energy', got {raw!r}")
        try:
            n, e = int(parts[0]), float(parts[1])
        except ValueError:
            raise ReferenceTableError(f"{source}:{lineno}: bad number in {raw!r}") from None
        if n in entries:
            raise ReferenceTableError(f"{source}:{lineno}: duplicate entry for N={n}")
        entries[n] = e
    return ReferenceMinimaTable(entries)


def load_reference_minima(path=None) -> ReferenceMinimaTable:
    """Read a ``N,energy`` CSV; the bundled table (N = 2..150) when ``path`` is None."""
    if path is None:
        text = resources.files("hybridmin.data").joinpath("lj_minima.csv").read_text()
        return parse_reference_minima(text, source="lj_minima.csv")
    with open(path) as f:
        return parse_reference_minima(f.read(), source=str(path))


@dataclass
class BenchEntry:
    n: int
    rng_seed: int
    found: float
    reference: float
    wall_time: float
    iterations: int
    first_hit: int | None

    @property
    def gap(self) -> float:
        return (self.found - self.reference) / abs(self.reference)


@dataclass
class BenchReport:
    entries: list[BenchEntry] = field(default_factory=list)
    tolerance: float = 1e-4
    skipped: list[int] = field(default_factory=list)

    def hits(self) -> int:
        return sum(e.gap < self.tolerance for e in self.entries)

    @property
    def hit_rate(self) -> float:
        return self.hits() / len(self.entries) if self.entries else float("nan")

    def to_text(self, timing: bool = False) -> str:
        head = "N seed found reference rel_gap hit first_hit"
        lines = [head + (" wall_s" if timing else "")]
        for e in self.entries:
            row = (f"{e.n} {e.rng_seed} {e.found:.6f} {e.reference:.6f} {e.gap:.3e} "
                   f"{int(e.gap < self.tolerance)} {e.first_hit if e.first_hit is not None else '-'}")
            if timing:
                row += f" {e.wall_time:.2f}"
            lines.append(row)
        for n in self.skipped:
            lines.append(f"# skipped N={n}: no reference entry")
        lines.append(f"hit_rate {self.hits()}/{len(self.entries)} tol {self.tolerance:g}")
        return "\n".join(lines) + "\n"


def bench_seed(n: int, rng_seed: int) -> np.ndarray:
    if n <= MAX_ICOSAHEDRAL_ATOMS:
        return icosahedral_seed(n)
    return random_seed(SeedSpec(n, "random_sphere", rng_seed))


def _run_one(job) -> BenchEntry:
    n, seed, reference, opts_kwargs, tol = job
    opts = BasinHopOptions(rng_seed=seed, **opts_kwargs)
    t0 = time.perf_counter()
    trace = basin_hopping(LJCluster(), bench_seed(n, seed), opts)
    elapsed = time.perf_counter() - t0
    threshold = reference + tol * abs(reference)
    first_hit = next((k for k, b in enumerate(trace.best_so_far) if b < threshold), None)
    return BenchEntry(n, seed, trace.best_energy, reference, elapsed, opts.iterations, first_hit)


def run_benchmark(ns: Iterable[int], budget: int = 500, table: ReferenceMinimaTable | None = None,
                  seeds: Iterable[int] = (0,), temperature: float = 0.8,
                  max_displacement: float = 0.35, tolerance: float = 1e-4,
                  workers: int | None = None) -> BenchReport:
    """Basin-hop every (N, seed) job and compare against the reference table.

    Jobs are independent; with ``workers > 1`` they run in separate
    processes.  Entries are ordered by (N, seed) regardless of completion
    order.
    """
    table = table if table is not None else load_reference_minima()
    report = BenchReport(tolerance=tolerance)
    opts_kwargs = dict(iterations=budget, temperature=temperature, max_displacement=max_displacement)
    jobs = []
    for n in ns:
        if n not in table:
            log.warning("no reference energy for N=%d; skipped", n)
            report.skipped.append(n)
            continue
        for s in seeds:
            jobs.append((n, s, table[n], opts_kwargs, tolerance))
    workers = workers or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.entries = list(pool.map(_run_one, jobs))
    else:
        report.entries = [_run_one(j) for j in jobs]
    for e in report.entries:
        if e.gap < -1e-6:
            log.warning("N=%d seed %d found %.9f below the reference %.9f; the table entry looks wrong",
                        e.n, e.rng_seed, e.found, e.reference)
    return report
