"""Initial cluster configurations.

* ``icosahedral_seed`` - Mackay shells around a central atom, with a
  partially filled outer shell (Northby-style lattice starts).
* ``build_up_grow`` - add one atom at the best tetrahedral capping site
  and relax (Hoare-Pal growth).
* ``random_seed`` - uniform-in-ball or normal ("big bang") random starts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .local_opt import OptimizerOptions, lbfgs
from .potential import PAIR_MINIMUM, REDUCED, LJCluster, LJParams, as_config

MAX_ICOSAHEDRAL_ATOMS = 309
MIN_SEED_DISTANCE = 0.5

_RELAX = OptimizerOptions(max_steps=5000, energy_tol=1e-12, force_tol=1e-7)


class SeedError(ValueError):
    """A seed could not be constructed."""


def _icosahedron_vertices() -> np.ndarray:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = []
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            v.append((0.0, s1, s2 * phi))
            v.append((s1, s2 * phi, 0.0))
            v.append((s2 * phi, 0.0, s1))
    v = np.array(v)
    return v / np.linalg.norm(v[0])


def _icosahedron_faces(verts: np.ndarray) -> list[tuple[int, int, int]]:
    d = np.linalg.norm(verts[:, None] - verts[None], axis=-1)
    edge = d[d > 1e-9].min()
    adj = np.abs(d - edge) < 1e-6
    faces = [f for f in itertools.combinations(range(12), 3)
             if adj[f[0], f[1]] and adj[f[1], f[2]] and adj[f[0], f[2]]]
    assert len(faces) == 20
    return faces


_VERTS = _icosahedron_vertices()
_FACES = _icosahedron_faces(_VERTS)


def _unique_rows(points: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    keys = np.round(points / tol).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(idx)]


def mackay_shell(k: int) -> np.ndarray:
    """Sites of the k-th Mackay shell (``10 k**2 + 2`` points), unit radial spacing."""
    if k == 0:
        return np.zeros((1, 3))
    pts = []
    for a, b, c in _FACES:
        A, B, C = _VERTS[a] * k, _VERTS[b] * k, _VERTS[c] * k
        for i in range(k + 1):
            for j in range(k + 1 - i):
                pts.append(A + (B - A) * i / k + (C - A) * j / k)
    return _unique_rows(np.array(pts))


def anti_mackay_shell(k: int) -> np.ndarray:
    """Vertex sites plus stacking-fault caps over shell ``k`` (the FC outer layer)."""
    if k < 1:
        raise ValueError("anti-Mackay caps need a complete shell underneath")
    verts = _VERTS * (k + 1)
    caps = []
    for a, b, c in _FACES:
        A, B, C = _VERTS[a] * k, _VERTS[b] * k, _VERTS[c] * k
        normal = np.cross(B - A, C - A)
        normal /= np.linalg.norm(normal)
        if np.dot(normal, A + B + C) < 0:
            normal = -normal
        # "up" triangles share the face orientation
        for i in range(k):
            for j in range(k - i):
                p = A + (B - A) * i / k + (C - A) * j / k
                q = p + (B - A) / k
                r = p + (C - A) / k
                edge = np.mean([np.linalg.norm(q - p), np.linalg.norm(r - p), np.linalg.norm(r - q)])
                caps.append((p + q + r) / 3.0 + normal * edge * np.sqrt(2.0 / 3.0))
    return np.vstack([verts, np.array(caps)])


def shell_total(k: int) -> int:
    """Atoms in a complete Mackay icosahedron of ``k`` shells."""
    return (10 * k**3 + 15 * k**2 + 11 * k + 3) // 3


def _greedy_fill(core: np.ndarray, sites: np.ndarray, count: int, nn_cutoff: float) -> np.ndarray:
    """Pick ``count`` sites: most nearest neighbours first, then lowest energy, then index."""
    placed = core.copy()
    free = list(range(len(sites)))
    for _ in range(count):
        best = None
        for idx in free:
            d = np.linalg.norm(placed - sites[idx], axis=1)
            nn = int(np.count_nonzero(d < nn_cutoff))
            e = float(np.sum(4.0 * (d**-12 - d**-6)))
            key = (-nn, round(e, 10), idx)
            if best is None or key < best:
                best = key
        idx = best[2]
        free.remove(idx)
        placed = np.vstack([placed, sites[idx]])
    return placed


def icosahedral_seed(n: int, lattice: str = "IC") -> np.ndarray:
    """Icosahedral lattice start for ``n`` atoms.

    Complete Mackay shells (13, 55, 147, 309 atoms) are returned as they
    are; otherwise the largest complete core is topped up greedily from the
    next shell's sites.  ``lattice="IC"`` uses the next Mackay shell's sites,
    ``lattice="FC"`` the icosahedral vertices plus the stacking-fault caps.
    Nearest-neighbour (centre to first shell) spacing is ``2**(1/6)``.
    """
    if not 1 <= n <= MAX_ICOSAHEDRAL_ATOMS:
        raise SeedError(f"icosahedral seeds support 1 <= n <= {MAX_ICOSAHEDRAL_ATOMS}, got {n}")
    lattice = lattice.upper()
    if lattice not in ("IC", "FC"):
        raise ValueError(f"lattice must be 'IC' or 'FC', got {lattice!r}")
    k = 0
    while shell_total(k + 1) <= n:
        k += 1
    core = np.vstack([mackay_shell(s) for s in range(k + 1)]) * PAIR_MINIMUM
    remaining = n - len(core)
    if remaining:
        if lattice == "FC" and k >= 1:
            sites = anti_mackay_shell(k)
        else:
            sites = mackay_shell(k + 1)
        core = _greedy_fill(core, sites * PAIR_MINIMUM, remaining, 1.2 * PAIR_MINIMUM)
    return core


def _capping_sites(x: np.ndarray, bond_cutoff: float):
    d = np.linalg.norm(x[:, None] - x[None], axis=-1)
    bonded = d < bond_cutoff
    n = len(x)
    for i, j, k in itertools.combinations(range(n), 3):
        if not (bonded[i, j] and bonded[j, k] and bonded[i, k]):
            continue
        a, b, c = x[i], x[j], x[k]
        normal = np.cross(b - a, c - a)
        norm = np.linalg.norm(normal)
        if norm < 1e-10:
            continue
        normal /= norm
        edge = (d[i, j] + d[j, k] + d[i, k]) / 3.0
        centroid = (a + b + c) / 3.0
        h = edge * np.sqrt(2.0 / 3.0)
        yield centroid + h * normal
        yield centroid - h * normal


def build_up_grow(x, params: LJParams = REDUCED, relax_opts: OptimizerOptions | None = None) -> np.ndarray:
    """Grow a relaxed cluster by one atom at its best tetrahedral capping site.

    Every triangular face (three mutually bonded atoms) offers a capping
    site on each side; sites overlapping existing atoms are dropped, the
    remaining ones are scored by the energy of the grown cluster and the
    winner is relaxed with L-BFGS.
    """
    x = as_config(x)
    if len(x) < 3:
        raise SeedError("build-up growth needs at least 3 atoms")
    model = LJCluster(params)
    r0 = float(np.min(np.linalg.norm(x[:, None] - x[None], axis=-1) + np.eye(len(x)) * 1e9))
    best_e, best_x = np.inf, None
    for site in _capping_sites(x, 1.3 * r0):
        if np.min(np.linalg.norm(x - site, axis=1)) < 0.8 * r0:
            continue
        trial = np.vstack([x, site])
        e = model.energy(trial)
        if e < best_e - 1e-12:
            best_e, best_x = e, trial
    if best_x is None:
        raise SeedError("no valid tetrahedral capping site (degenerate geometry)")
    return lbfgs(model, best_x, relax_opts or _RELAX).final_config


def tetrahedron(edge: float = PAIR_MINIMUM) -> np.ndarray:
    """Regular tetrahedron, the starting seed of build-up growth."""
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return pts * edge / np.sqrt(8.0)


def build_up_seed(n: int, params: LJParams = REDUCED) -> np.ndarray:
    """Grow from the regular tetrahedron to ``n`` atoms."""
    if n < 1:
        raise SeedError("n must be >= 1")
    if n <= 4:
        return tetrahedron()[:n]
    x = tetrahedron()
    while len(x) < n:
        x = build_up_grow(x, params)
    return x


@dataclass(frozen=True)
class SeedSpec:
    n_atoms: int
    mode: str = "random_sphere"  # build_up | icosahedral | random_sphere | big_bang
    rng_seed: int = 0
    scale: float = 1.0
    min_distance: float = MIN_SEED_DISTANCE

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.mode not in ("build_up", "icosahedral", "random_sphere", "big_bang"):
            raise ValueError(f"unknown seed mode {self.mode!r}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


def _sample(rng: np.random.Generator, spec: SeedSpec, size: int) -> np.ndarray:
    if spec.mode == "big_bang":
        return rng.normal(0.0, spec.scale, size=(size, 3))
    radius = spec.scale * spec.n_atoms ** (1.0 / 3.0)
    direction = rng.normal(size=(size, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(size) ** (1.0 / 3.0)
    return direction * r[:, None]


def random_seed(spec: SeedSpec, max_retries: int = 1000) -> np.ndarray:
    """Random start with every pair at least ``spec.min_distance`` apart.

    ``random_sphere`` draws uniformly in a ball of radius
    ``scale * n**(1/3)``; ``big_bang`` draws every coordinate from
    ``normal(0, scale)``.  Atoms too close to an earlier atom are redrawn
    from the same distribution.
    """
    if spec.mode not in ("random_sphere", "big_bang"):
        raise ValueError(f"random_seed handles random modes only, got {spec.mode!r}")
    rng = np.random.default_rng(spec.rng_seed)
    x = _sample(rng, spec, spec.n_atoms)
    for i in range(1, spec.n_atoms):
        for _ in range(max_retries):
            if np.min(np.linalg.norm(x[:i] - x[i], axis=1)) >= spec.min_distance:
                break
            x[i] = _sample(rng, spec, 1)[0]
        else:
            raise SeedError(
                f"could not place atom {i} at >= {spec.min_distance} from the others "
                f"after {max_retries} retries; try a larger scale")
    return x


def make_seed(spec: SeedSpec) -> np.ndarray:
    """Seed configuration for any mode."""
    if spec.mode == "icosahedral":
        return icosahedral_seed(spec.n_atoms)
    if spec.mode == "build_up":
        return build_up_seed(spec.n_atoms)
    return random_seed(spec)
