"""Local minimizers: steepest descent, Polak-Ribiere CG and L-BFGS.

All three share one termination contract (``OptimizerOptions``) and return
an ``OptimizerTrace``.  ``run_pipeline`` chains them, e.g. the
SD -> CG -> SD relaxation protocol used for protein structures.

One iteration is one accepted step; line-search probes are not counted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .potential import DomainError

log = logging.getLogger(__name__)

ENERGY_TOL = "energy_tol"
FORCE_TOL = "force_tol"
MAX_STEPS = "max_steps"
LINE_SEARCH_FAILURE = "line_search_failure"
ERROR = "error"


class OptimizationError(RuntimeError):
    """Energy or gradient became non-finite during a minimization."""


@dataclass
class OptimizerOptions:
    """Termination and line-search settings.

    Defaults follow the protein relaxation protocol: 3000 steps, stop when
    the energy change between steps drops below 0.005 or when the force on
    every atom is below 1.0 (model units).
    """

    max_steps: int = 3000
    energy_tol: float = 0.005
    force_tol: float = 1.0
    history_m: int = 10
    line_search: str = "armijo"  # or "exact-quadratic"
    freeze_mask: np.ndarray | None = None
    c1: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.energy_tol <= 0 or self.force_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.history_m < 1:
            raise ValueError("history_m must be >= 1")
        if self.line_search not in ("armijo", "exact-quadratic"):
            raise ValueError(f"unknown line search {self.line_search!r}")


@dataclass
class OptimizerTrace:
    method: str
    energies: list[float]
    max_forces: list[float]
    final_config: np.ndarray
    reason: str
    message: str = ""

    @property
    def final_energy(self) -> float:
        return self.energies[-1]

    @property
    def initial_energy(self) -> float:
        return self.energies[0]

    @property
    def iterations(self) -> int:
        return len(self.energies) - 1

    def to_text(self) -> str:
        lines = ["iter energy max_force"]
        for k, (e, f) in enumerate(zip(self.energies, self.max_forces)):
            lines.append(f"{k} {e:.12g} {f:.6g}")
        lines.append(f"{self.method} {self.final_energy:.12g} {self.iterations} {self.reason}")
        return "\n".join(lines) + "\n"


@dataclass
class PipelineReport:
    stages: list[tuple[str, OptimizerTrace]] = field(default_factory=list)
    initial_energy: float = float("nan")
    final_energy: float = float("nan")
    final_config: np.ndarray | None = None

    def stage_energies(self) -> list[float]:
        return [t.final_energy for _, t in self.stages]

    def table_row(self, label: str) -> str:
        cells = [label] + [f"{t.final_energy:.10g} ({t.iterations})" for _, t in self.stages]
        return " | ".join(cells)


def max_force(g: np.ndarray) -> float:
    """Largest absolute gradient component."""
    return float(np.abs(g).max()) if g.size else 0.0


class _Objective:
    """Wraps a model: applies the freeze mask and checks finiteness."""

    def __init__(self, model, x0: np.ndarray, freeze_mask):
        self.model = model
        self.mask = None
        if freeze_mask is not None:
            mask = np.asarray(freeze_mask, dtype=bool)
            if mask.shape != x0.shape[:1]:
                raise ValueError("freeze_mask must have one entry per atom")
            self.mask = mask

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        e, g = self.model.energy_and_gradient(x)
        g = np.array(g, dtype=float).reshape(x.shape)
        if self.mask is not None:
            g[self.mask] = 0.0
        return float(e), g

    def probe(self, x: np.ndarray):
        """Evaluate a trial point; ``None`` if it lies outside the model's domain."""
        try:
            e, g = self(x)
        except (DomainError, FloatingPointError, ZeroDivisionError):
            return None
        if not np.isfinite(e) or not np.all(np.isfinite(g)):
            return None
        return e, g


def _line_search(obj: _Objective, x, e, g, d, alpha0, opts: OptimizerOptions):
    """Return ``(alpha, x_new, e_new, g_new)`` or ``None`` on failure."""
    slope = float(np.vdot(g, d))
    if slope >= 0:
        return None
    alpha = alpha0
    if opts.line_search == "exact-quadratic":
        alpha = _secant_step(obj, x, g, d, slope, alpha0)
    for _ in range(opts.max_backtracks):
        x_new = x + alpha * d
        res = obj.probe(x_new)
        if res is not None and res[0] <= e + opts.c1 * alpha * slope:
            return alpha, x_new, res[0], res[1]
        alpha *= opts.backtrack_factor
    return None


def _secant_step(obj, x, g, d, slope, t):
    """Minimizer of the 1-D quadratic fitted from two directional derivatives.

    Exact on quadratic objectives.  Falls back to ``t`` when curvature is
    not positive.
    """
    res = obj.probe(x + t * d)
    if res is None:
        return t
    slope_t = float(np.vdot(res[1], d))
    curv = (slope_t - slope) / t
    if curv <= 0 or not np.isfinite(curv):
        return t
    return -slope / curv


def _check_start(obj, x):
    e, g = obj(x)
    if not np.isfinite(e) or not np.all(np.isfinite(g)):
        raise OptimizationError(f"non-finite energy or gradient at start (E = {e})")
    return e, g


def _minimize(name, direction_rule, model, start, opts: OptimizerOptions):
    x = np.array(start, dtype=float)
    obj = _Objective(model, x, opts.freeze_mask)
    e, g = _check_start(obj, x)
    energies = [e]
    forces = [max_force(g)]
    direction_rule.init(x)
    reason = MAX_STEPS
    for _ in range(opts.max_steps):
        if forces[-1] < opts.force_tol:
            reason = FORCE_TOL
            break
        d, alpha0 = direction_rule.direction(g)
        step = _line_search(obj, x, e, g, d, alpha0, opts)
        if step is None and not direction_rule.is_steepest:
            # retry once along the steepest-descent direction
            direction_rule.reset()
            d, alpha0 = direction_rule.direction(g)
            step = _line_search(obj, x, e, g, d, alpha0, opts)
        if step is None:
            reason = LINE_SEARCH_FAILURE
            break
        alpha, x_new, e_new, g_new = step
        direction_rule.update(x, g, x_new, g_new, alpha, d)
        de = e - e_new
        x, e, g = x_new, e_new, g_new
        energies.append(e)
        forces.append(max_force(g))
        if de < opts.energy_tol:
            reason = ENERGY_TOL if forces[-1] >= opts.force_tol else FORCE_TOL
            break
    else:
        if forces[-1] < opts.force_tol:
            reason = FORCE_TOL
    return OptimizerTrace(name, energies, forces, x, reason)


class _SteepestRule:
    is_steepest = True

    def init(self, x):
        self.alpha = None
        self.n = x.size

    def reset(self):
        pass

    def direction(self, g):
        if self.alpha is None:
            return -g, 1.0 / max(np.linalg.norm(g), 1e-300)
        return -g, 2.0 * self.alpha

    def update(self, x, g, x_new, g_new, alpha, d):
        self.alpha = alpha


class _PolakRibiereRule:
    is_steepest = False

    def init(self, x):
        self.n = x.size
        self.d_prev = None
        self.g_prev = None
        self.since_restart = 0
        self.alpha = None
        self.slope_prev = None

    def reset(self):
        self.d_prev = None
        self.since_restart = 0
        self.is_steepest = True

    def direction(self, g):
        self.is_steepest = False
        d = -g
        if self.d_prev is not None and self.since_restart < self.n:
            beta = float(np.vdot(g, g - self.g_prev) / np.vdot(self.g_prev, self.g_prev))
            beta = max(beta, 0.0)
            d = -g + beta * self.d_prev
            if np.vdot(g, d) >= 0:
                d = -g
                beta = 0.0
            if beta == 0.0:
                self.since_restart = 0
        else:
            self.since_restart = 0
        if np.array_equal(d, -g):
            self.is_steepest = True
        if self.alpha is None:
            alpha0 = 1.0 / max(np.linalg.norm(g), 1e-300)
        else:
            # match the first-order change of the previous step
            alpha0 = self.alpha * self.slope_prev / float(np.vdot(g, d))
            alpha0 = min(alpha0, 10.0 * self.alpha) if alpha0 > 0 else self.alpha
        self._d = d
        return d, alpha0

    def update(self, x, g, x_new, g_new, alpha, d):
        self.alpha = alpha
        self.slope_prev = float(np.vdot(g, d))
        self.g_prev = g
        self.d_prev = d
        self.since_restart += 1


class _LBFGSRule:
    is_steepest = False

    def __init__(self, m: int):
        self.m = m

    def init(self, x):
        self.s: list[np.ndarray] = []
        self.y: list[np.ndarray] = []
        self.rho: list[float] = []
        self.first = True

    def reset(self):
        self.s.clear()
        self.y.clear()
        self.rho.clear()

    def direction(self, g):
        if not self.s:
            self.is_steepest = True
            step = 1.0 / max(np.linalg.norm(g), 1e-300) if self.first else 1.0
            return -g, step
        self.is_steepest = False
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            a = rho * np.vdot(s, q)
            alphas.append(a)
            q -= a * y
        gamma = np.vdot(self.s[-1], self.y[-1]) / np.vdot(self.y[-1], self.y[-1])
        r = gamma * q
        for (s, y, rho), a in zip(zip(self.s, self.y, self.rho), reversed(alphas)):
            b = rho * np.vdot(y, r)
            r += (a - b) * s
        return -r, 1.0

    def update(self, x, g, x_new, g_new, alpha, d):
        self.first = False
        s = x_new - x
        y = g_new - g
        sy = float(np.vdot(s, y))
        if sy <= 1e-12:
            return
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / sy)
        if len(self.s) > self.m:
            del self.s[0], self.y[0], self.rho[0]


def steepest_descent(model, start, opts: OptimizerOptions | None = None) -> OptimizerTrace:
    """Move along the negative gradient with a line-searched step."""
    return _minimize("sd", _SteepestRule(), model, start, opts or OptimizerOptions())


def conjugate_gradient_pr(model, start, opts: OptimizerOptions | None = None) -> OptimizerTrace:
    """Polak-Ribiere conjugate gradient.

    ``beta`` is clipped at zero and the direction is reset to steepest
    descent every ``x.size`` iterations.
    """
    return _minimize("cg", _PolakRibiereRule(), model, start, opts or OptimizerOptions())


def lbfgs(model, start, opts: OptimizerOptions | None = None) -> OptimizerTrace:
    """Limited-memory BFGS with the two-loop recursion.

    Keeps the last ``opts.history_m`` curvature pairs; pairs with
    ``s.y <= 1e-12`` are skipped.
    """
    opts = opts or OptimizerOptions()
    return _minimize("lbfgs", _LBFGSRule(opts.history_m), model, start, opts)


METHODS: dict[str, Callable] = {
    "sd": steepest_descent,
    "cg": conjugate_gradient_pr,
    "lbfgs": lbfgs,
}


def get_method(name):
    if callable(name):
        return name
    try:
        return METHODS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown local method {name!r}; choose from {sorted(METHODS)}") from None


def run_pipeline(stages: Sequence[tuple], model, start) -> PipelineReport:
    """Run local minimizers in sequence, each from the previous final configuration.

    A stage that raises is recorded with reason ``"error"`` and the next
    stage continues from the last valid configuration.
    """
    if not stages:
        raise ValueError("a pipeline needs at least one stage")
    x = np.array(start, dtype=float)
    report = PipelineReport()
    e0 = None
    for method, opts in stages:
        fn = get_method(method)
        name = method if isinstance(method, str) else getattr(fn, "__name__", "stage")
        try:
            trace = fn(model, x, opts)
        except (OptimizationError, DomainError, FloatingPointError) as exc:
            log.warning("stage %s failed: %s", name, exc)
            try:
                e = float(model.energy(x))
            except (DomainError, FloatingPointError):
                e = float("nan")
            trace = OptimizerTrace(name, [e], [float("nan")], x.copy(), ERROR, str(exc))
        if e0 is None:
            e0 = trace.initial_energy
        report.stages.append((name, trace))
        x = trace.final_config
    report.initial_energy = e0
    report.final_energy = report.stages[-1][1].final_energy
    report.final_config = x
    return report


def parse_pipeline(text: str, **option_kwargs) -> list[tuple[str, OptimizerOptions]]:
    """Parse ``"sd:3000,cg:3000,sd:3000"`` into pipeline stages."""
    stages = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        method, _, steps = item.partition(":")
        get_method(method)
        opts = OptimizerOptions(max_steps=int(steps) if steps else 3000, **option_kwargs)
        stages.append((method.lower(), opts))
    if not stages:
        raise ValueError(f"empty pipeline {text!r}")
    return stages
