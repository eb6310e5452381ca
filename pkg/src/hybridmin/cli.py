"""Command-line front end: ``hybridmin {ljopt,em,analyze,bench}``.

Exit codes: 0 success, 1 numeric/runtime failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings

import numpy as np

from . import bench, forcefield, global_opt, local_opt, seeding, structure, xyz
from .potential import DomainError, LJCluster

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _add_ljopt(sub):
    p = sub.add_parser("ljopt", help="minimize a Lennard-Jones cluster")
    p.add_argument("--n", type=_positive_int, required=True, help="number of atoms")
    p.add_argument("--seed-mode", default="random_sphere",
                   choices=["build_up", "icosahedral", "random_sphere", "big_bang"])
    p.add_argument("--lattice", default="IC", choices=["IC", "FC"], help="icosahedral outer-shell lattice")
    p.add_argument("--scale", type=_positive_float, default=1.0, help="random seed radius factor or sigma")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--method", default="lbfgs", choices=["sd", "cg", "lbfgs", "sa", "bh", "sandwich"])
    p.add_argument("--max-steps", type=_positive_int, default=10000)
    p.add_argument("--energy-tol", type=_positive_float, default=1e-12)
    p.add_argument("--force-tol", type=_positive_float, default=1e-6)
    p.add_argument("--history", type=_positive_int, default=10, help="L-BFGS memory")
    p.add_argument("--iterations", type=_positive_int, default=500, help="basin-hopping steps")
    p.add_argument("--temperature", type=_positive_float, default=0.8, help="basin-hopping temperature")
    p.add_argument("--displacement", type=float, default=0.35, help="basin-hopping step size")
    p.add_argument("--local-method", default="lbfgs", choices=["sd", "cg", "lbfgs"])
    p.add_argument("--t-initial", type=_positive_float, default=0.5)
    p.add_argument("--t-final", type=_positive_float, default=0.01)
    p.add_argument("--decay", type=float, default=0.95)
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--moves-per-sweep", type=_positive_int, default=100)
    p.add_argument("--sa-displacement", type=_positive_float, default=0.15)
    p.add_argument("--out", help="write the best structure as XYZ")
    p.add_argument("--trace", help="write the optimizer trace as text")
    p.set_defaults(func=cmd_ljopt)


def _add_em(sub):
    p = sub.add_parser("em", help="relax a force-field system with a staged SD/CG/L-BFGS pipeline")
    p.add_argument("--topology", required=True)
    p.add_argument("--coords", required=True, help="XYZ coordinates")
    p.add_argument("--pipeline", default="sd:3000,cg:3000,sd:3000")
    p.add_argument("--form", default="amber", choices=list(forcefield.FORMS))
    p.add_argument("--cutoff", type=_positive_float, default=12.0)
    p.add_argument("--no-cutoff", action="store_true")
    p.add_argument("--de-tol", type=_positive_float, default=0.005)
    p.add_argument("--force-tol", type=_positive_float, default=1.0)
    p.add_argument("--label", help="row label (defaults to the coordinate file name)")
    p.add_argument("--out", help="write the relaxed coordinates as XYZ")
    p.set_defaults(func=cmd_em)


def _add_analyze(sub):
    p = sub.add_parser("analyze", help="report contacts in a PDB structure")
    p.add_argument("--pdb", required=True)
    d = structure.InteractionCriteria()
    p.add_argument("--hbond-max-ha", type=_positive_float, default=d.hbond_max_ha)
    p.add_argument("--hbond-min-angle", type=_positive_float, default=d.hbond_min_dha_angle)
    p.add_argument("--salt-max", type=_positive_float, default=d.salt_max_dist)
    p.add_argument("--pipi-max", type=_positive_float, default=d.pipi_max_centroid)
    p.add_argument("--pication-max", type=_positive_float, default=d.pication_max)
    p.add_argument("--clique-max", type=_positive_float, default=d.clique_max_dist)
    p.add_argument("--sections", default=",".join(structure.SECTIONS))
    p.add_argument("--format", default="text", choices=["text", "records"])
    p.set_defaults(func=cmd_analyze)


def _add_bench(sub):
    p = sub.add_parser("bench", help="basin-hopping benchmark against reference minima")
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=15)
    p.add_argument("--iterations", type=_positive_int, default=500)
    p.add_argument("--temperature", type=_positive_float, default=0.8)
    p.add_argument("--displacement", type=float, default=0.35)
    p.add_argument("--seeds", type=_positive_int, default=1, help="number of rng seeds per N")
    p.add_argument("--rng-seed", type=int, default=0, help="first rng seed")
    p.add_argument("--tol", type=_positive_float, default=1e-4, help="relative hit tolerance")
    p.add_argument("--reference", help="N,energy CSV (default: bundled table)")
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--timing", action="store_true", help="include wall times (not reproducible)")
    p.set_defaults(func=cmd_bench)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridmin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_ljopt(sub)
    _add_em(sub)
    _add_analyze(sub)
    _add_bench(sub)
    return parser


def cmd_ljopt(args) -> int:
    try:
        spec = seeding.SeedSpec(args.n, args.seed_mode, args.rng_seed, args.scale)
        if args.seed_mode == "icosahedral":
            start = seeding.icosahedral_seed(args.n, args.lattice)
        else:
            start = seeding.make_seed(spec)
        opts = local_opt.OptimizerOptions(max_steps=args.max_steps, energy_tol=args.energy_tol,
                                          force_tol=args.force_tol, history_m=args.history)
        if args.method in ("sa", "sandwich"):
            schedule = global_opt.AnnealSchedule(args.t_initial, args.t_final, args.decay, args.sweeps,
                                                 args.moves_per_sweep, args.sa_displacement)
        if args.method == "bh":
            bh_opts = global_opt.BasinHopOptions(args.iterations, args.temperature, args.displacement,
                                                 local_method=args.local_method, rng_seed=args.rng_seed)
    except (ValueError, seeding.SeedError) as exc:
        raise UsageError(str(exc)) from exc
    if args.n < 2 and args.method != "sa":
        raise UsageError("minimization needs at least 2 atoms")
    model = LJCluster()
    if args.method in ("sd", "cg", "lbfgs"):
        trace = local_opt.get_method(args.method)(model, start, opts)
        best, energy, trace_text = trace.final_config, trace.final_energy, trace.to_text()
        summary = f"iterations {trace.iterations} reason {trace.reason}"
    elif args.method == "sa":
        trace = global_opt.simulated_annealing(model, start, schedule, args.rng_seed)
        best, energy, trace_text = trace.best_config, trace.best_energy, trace.to_text()
        summary = f"moves {len(trace.proposed) - 1} accepted {sum(trace.accepted) - 1}"
    elif args.method == "bh":
        trace = global_opt.basin_hopping(model, start, bh_opts)
        best, energy, trace_text = trace.best_config, trace.best_energy, trace.to_text()
        summary = f"iterations {bh_opts.iterations} accepted {sum(trace.accepted) - 1}"
    else:
        stages = [("sd", opts), ("cg", opts)]
        report = global_opt.hybrid_sandwich(model, start, stages, schedule, stages, args.rng_seed)
        best, energy = report.final_config, report.final_energy
        trace_text = "".join(f"# stage {name}\n{t.to_text()}" for name, t in report.stages)
        drops = report.segment_drops()
        summary = " ".join(f"drop_{k} {v:.9g}" for k, v in drops.items())
    print(f"method {args.method} n {args.n} seed_mode {args.seed_mode} rng_seed {args.rng_seed}")
    print(f"energy {energy:.9f}")
    print(summary)
    if args.out:
        xyz.write_xyz(args.out, best, ["X"] * len(best), f"LJ{args.n} E={energy:.12f} method={args.method}")
    if args.trace:
        with open(args.trace, "w") as f:
            f.write(trace_text)
    return EXIT_OK


def cmd_em(args) -> int:
    try:
        top = forcefield.load_topology(args.topology)
        coords, symbols, _ = xyz.read_xyz(args.coords)
        stages = local_opt.parse_pipeline(args.pipeline, energy_tol=args.de_tol, force_tol=args.force_tol)
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if len(coords) != top.n_atoms:
        raise UsageError(f"topology has {top.n_atoms} atoms but {args.coords} has {len(coords)}")
    cutoff = None if args.no_cutoff else args.cutoff
    model = forcefield.ForceField(top, args.form, cutoff)
    report = local_opt.run_pipeline(stages, model, coords)
    if any(t.reason == local_opt.ERROR for _, t in report.stages) and not np.isfinite(report.final_energy):
        print(f"error: {report.stages[-1][1].message}", file=sys.stderr)
        return EXIT_RUNTIME
    cut = "none" if cutoff is None else f"{cutoff:.3f}"
    print(f"# em form {args.form} cutoff {cut}, de_tol {args.de_tol:g}, force_tol {args.force_tol:.3f}, "
          f"pipeline {args.pipeline}")
    print(f"# initial_energy {report.initial_energy:.10g}")
    print("# input | " + " | ".join(f"E_{name} (iters)" for name, _ in report.stages))
    print(report.table_row(args.label or args.coords))
    print("# reasons " + " ".join(f"{name}:{t.reason}" for name, t in report.stages))
    for key, value in model.breakdown(report.final_config).as_dict().items():
        print(f"# final {key} {value:.10g}")
    if args.out:
        xyz.write_xyz(args.out, report.final_config, symbols, f"E={report.final_energy:.12g}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    sections = tuple(s.strip() for s in args.sections.split(",") if s.strip())
    bad = set(sections) - set(structure.SECTIONS)
    if bad:
        raise UsageError(f"unknown sections {sorted(bad)}; choose from {','.join(structure.SECTIONS)}")
    try:
        criteria = structure.InteractionCriteria(args.hbond_max_ha, args.hbond_min_angle, args.salt_max,
                                                 args.pipi_max, args.pication_max, args.clique_max)
        s = structure.parse_pdb(args.pdb)
    except OSError as exc:
        raise UsageError(f"cannot read {args.pdb}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = structure.analyze(s, criteria, sections)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    sys.stdout.write(report.to_text() if args.format == "text" else report.to_records())
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        table = bench.load_reference_minima(args.reference)
    except OSError as exc:
        raise UsageError(f"cannot read {args.reference}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    seeds = range(args.rng_seed, args.rng_seed + args.seeds)
    report = bench.run_benchmark(range(args.n_min, args.n_max + 1), args.iterations, table, seeds,
                                 args.temperature, args.displacement, args.tol, args.workers)
    sys.stdout.write(report.to_text(timing=args.timing))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hybridmin {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, local_opt.OptimizationError, FloatingPointError, RuntimeError) as exc:
        print(f"hybridmin {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
