"""AMBER- and CHARMM-form molecular mechanics energies with analytic gradients.

Terms::

    bonds          k_b (b - b0)^2
    angles         k_theta (theta - theta0)^2
    dihedrals      AMBER: (V_n / 2) [1 + cos(n phi - gamma)]
                   CHARMM: k_phi [1 + cos(n phi - delta)]
    Urey-Bradley   k_u (u - u0)^2              (CHARMM only)
    impropers      k_w (w - w0)^2              (CHARMM only)
    van der Waals  A_ij / r^12 - B_ij / r^6
    electrostatic  C q_i q_j / (dielectric r)

Per-atom van der Waals records use CHARMM combination rules:
``Rmin_ij = Rmin/2_i + Rmin/2_j``, ``eps_ij = sqrt(eps_i eps_j)`` and
``A = eps Rmin^12``, ``B = 2 eps Rmin^6`` so the pair minimum sits at
``Rmin_ij`` with depth ``eps_ij``.  Explicit pair coefficients override this.

Dihedral angles follow the IUPAC convention (0 for cis, pi for trans).
The nonbonded cutoff is a hard truncation, so the energy is discontinuous
at the cutoff distance.  CMAP corrections are not implemented.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .potential import MIN_DISTANCE, DomainError, as_config

FORMS = ("amber", "charmm")
FAMILIES = ("bond", "angle", "dihedral", "urey_bradley", "improper", "vdw", "electrostatic")


class TopologyError(ValueError):
    """Malformed or inconsistent topology."""


@dataclass
class ForceFieldTopology:
    n_atoms: int
    bonds: list[tuple[int, int, float, float]] = field(default_factory=list)
    angles: list[tuple[int, int, int, float, float]] = field(default_factory=list)
    dihedrals: list[tuple[int, int, int, int, float, int, float]] = field(default_factory=list)
    urey_bradley: list[tuple[int, int, float, float]] = field(default_factory=list)
    impropers: list[tuple[int, int, int, int, float, float]] = field(default_factory=list)
    charges: np.ndarray | None = None
    rmin_half: np.ndarray | None = None
    epsilon: np.ndarray | None = None
    pair_vdw: dict[tuple[int, int], tuple[float, float]] = field(default_factory=dict)
    exclusions: set[tuple[int, int]] = field(default_factory=set)
    dielectric: float = 1.0
    coulomb_constant: float = 1.0
    auto_exclude: bool = True

    def __post_init__(self):
        n = self.n_atoms
        if self.charges is None:
            self.charges = np.zeros(n)
        if self.rmin_half is None:
            self.rmin_half = np.zeros(n)
        if self.epsilon is None:
            self.epsilon = np.zeros(n)
        self.charges = np.asarray(self.charges, dtype=float)
        self.rmin_half = np.asarray(self.rmin_half, dtype=float)
        self.epsilon = np.asarray(self.epsilon, dtype=float)
        self.exclusions = {_pair(i, j) for i, j in self.exclusions}
        self.pair_vdw = {_pair(*k): tuple(v) for k, v in self.pair_vdw.items()}
        self.validate()

    def validate(self) -> None:
        n = self.n_atoms
        if n < 1:
            raise TopologyError("n_atoms must be >= 1")

        def check(kind, idx):
            for i in idx:
                if not 0 <= i < n:
                    raise TopologyError(f"{kind} references atom {i}, but the system has {n} atoms")
            if len(set(idx)) != len(idx):
                raise TopologyError(f"{kind} repeats an atom: {idx}")

        for b in self.bonds:
            check("bond", b[:2])
            _nonneg("bond", b[2])
        for a in self.angles:
            check("angle", a[:3])
            _nonneg("angle", a[3])
        for d in self.dihedrals:
            check("dihedral", d[:4])
            if int(d[5]) < 1:
                raise TopologyError(f"dihedral periodicity must be >= 1, got {d[5]}")
        for u in self.urey_bradley:
            check("ub", u[:2])
            _nonneg("ub", u[2])
        for m in self.impropers:
            check("improper", m[:4])
            _nonneg("improper", m[4])
        for p in self.exclusions:
            check("exclude", p)
        for p, (a, b) in self.pair_vdw.items():
            check("pairvdw", p)
        for name in ("charges", "rmin_half", "epsilon"):
            if getattr(self, name).shape != (n,):
                raise TopologyError(f"{name} must have one entry per atom")
        if np.any(self.epsilon < 0) or np.any(self.rmin_half < 0):
            raise TopologyError("van der Waals parameters must be non-negative")
        if self.dielectric <= 0:
            raise TopologyError("dielectric must be positive")

    def excluded_pairs(self) -> set[tuple[int, int]]:
        """Explicit exclusions plus 1-2 and 1-3 pairs when ``auto_exclude`` is set."""
        out = set(self.exclusions)
        if self.auto_exclude:
            for i, j, *_ in self.bonds:
                out.add(_pair(i, j))
            for i, _, k, *_ in self.angles:
                out.add(_pair(i, k))
        return out

    def nonbonded_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        excluded = self.excluded_pairs()
        ii, jj = np.triu_indices(self.n_atoms, k=1)
        if excluded:
            keep = np.array([(int(i), int(j)) not in excluded for i, j in zip(ii, jj)], dtype=bool)
            ii, jj = ii[keep], jj[keep]
        return ii, jj

    def vdw_coefficients(self, ii: np.ndarray, jj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rmin = self.rmin_half[ii] + self.rmin_half[jj]
        eps = np.sqrt(self.epsilon[ii] * self.epsilon[jj])
        a = eps * rmin**12
        b = 2.0 * eps * rmin**6
        if self.pair_vdw:
            lookup = {p: k for k, p in enumerate(zip(ii.tolist(), jj.tolist()))}
            for p, (pa, pb) in self.pair_vdw.items():
                if p in lookup:
                    a[lookup[p]], b[lookup[p]] = pa, pb
        return a, b


def _pair(i, j) -> tuple[int, int]:
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


def _nonneg(kind, k):
    if k < 0:
        raise TopologyError(f"{kind} force constant must be non-negative, got {k}")


@dataclass
class EnergyBreakdown:
    bond: float = 0.0
    angle: float = 0.0
    dihedral: float = 0.0
    urey_bradley: float = 0.0
    improper: float = 0.0
    vdw: float = 0.0
    electrostatic: float = 0.0

    @property
    def total(self) -> float:
        return float(sum(getattr(self, f.name) for f in fields(self)))

    @property
    def bonded(self) -> float:
        return self.bond + self.angle + self.dihedral + self.urey_bradley + self.improper

    @property
    def nonbonded(self) -> float:
        return self.vdw + self.electrostatic

    def as_dict(self) -> dict[str, float]:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["total"] = self.total
        return d


# -- geometric kernels ------------------------------------------------------

def _stretch(x, i, j, k, r0, grad):
    """Sum of k (r - r0)^2 over index arrays."""
    d = x[i] - x[j]
    r = np.linalg.norm(d, axis=1)
    if np.any(r < MIN_DISTANCE):
        bad = int(np.argmin(r))
        raise DomainError(f"atoms {i[bad]} and {j[bad]} are coincident")
    dr = r - r0
    if grad is not None:
        f = (2.0 * k * dr / r)[:, None] * d
        np.add.at(grad, i, f)
        np.add.at(grad, j, -f)
    return float(np.sum(k * dr * dr))


def _bend(x, i, j, k, kt, t0, grad):
    u = x[i] - x[j]
    v = x[k] - x[j]
    lu = np.linalg.norm(u, axis=1)
    lv = np.linalg.norm(v, axis=1)
    if np.any(lu < MIN_DISTANCE) or np.any(lv < MIN_DISTANCE):
        raise DomainError("degenerate angle: zero-length arm")
    eu = u / lu[:, None]
    ev = v / lv[:, None]
    cos = np.einsum("ij,ij->i", eu, ev)
    sin = np.linalg.norm(np.cross(eu, ev), axis=1)
    theta = np.arctan2(sin, cos)
    dt = theta - t0
    if grad is not None:
        if np.any((sin < 1e-10) & (np.abs(dt) > 1e-12)):
            raise DomainError("degenerate angle: collinear atoms away from a linear equilibrium")
        safe = np.where(sin < 1e-10, 1.0, sin)
        pref = np.where(sin < 1e-10, 0.0, 2.0 * kt * dt / safe)
        gi = pref[:, None] * (cos[:, None] * eu - ev) / lu[:, None]
        gk = pref[:, None] * (cos[:, None] * ev - eu) / lv[:, None]
        np.add.at(grad, i, gi)
        np.add.at(grad, k, gk)
        np.add.at(grad, j, -(gi + gk))
    return float(np.sum(kt * dt * dt))


def _torsion(x, i, j, k, l):
    """Dihedral angle and its derivatives w.r.t. the four atoms."""
    b1 = x[j] - x[i]
    b2 = x[k] - x[j]
    b3 = x[l] - x[k]
    n1 = np.cross(b1, b2)
    n2 = np.cross(b2, b3)
    lb2 = np.linalg.norm(b2, axis=1)
    n1sq = np.einsum("ij,ij->i", n1, n1)
    n2sq = np.einsum("ij,ij->i", n2, n2)
    if np.any(lb2 < MIN_DISTANCE) or np.any(n1sq < 1e-20) or np.any(n2sq < 1e-20):
        raise DomainError("degenerate dihedral: collinear atoms")
    y = lb2 * np.einsum("ij,ij->i", b1, n2)
    xx = np.einsum("ij,ij->i", n1, n2)
    phi = np.arctan2(y, xx)
    gi = -(lb2 / n1sq)[:, None] * n1
    gl = (lb2 / n2sq)[:, None] * n2
    p = (np.einsum("ij,ij->i", b1, b2) / lb2**2)[:, None]
    q = (np.einsum("ij,ij->i", b3, b2) / lb2**2)[:, None]
    gj = -(1.0 + p) * gi + q * gl
    gk = -(1.0 + q) * gl + p * gi
    return phi, (gi, gj, gk, gl)


def _scatter4(grad, idx, dE, parts):
    for a, g in zip(idx, parts):
        np.add.at(grad, a, dE[:, None] * g)


def _cols(records, n_cols):
    arr = np.array(records, dtype=float).reshape(-1, n_cols)
    return arr


def _bonded(top: ForceFieldTopology, x, form, grad, families):
    out = {}
    if "bond" in families and top.bonds:
        a = _cols(top.bonds, 4)
        out["bond"] = _stretch(x, a[:, 0].astype(int), a[:, 1].astype(int), a[:, 2], a[:, 3], grad)
    if "angle" in families and top.angles:
        a = _cols(top.angles, 5)
        idx = a[:, :3].astype(int)
        out["angle"] = _bend(x, idx[:, 0], idx[:, 1], idx[:, 2], a[:, 3], a[:, 4], grad)
    if "dihedral" in families and top.dihedrals:
        a = _cols(top.dihedrals, 7)
        idx = a[:, :4].astype(int).T
        kphi, n, delta = a[:, 4], a[:, 5], a[:, 6]
        if form == "amber":
            kphi = kphi / 2.0
        phi, parts = _torsion(x, *idx)
        arg = n * phi - delta
        out["dihedral"] = float(np.sum(kphi * (1.0 + np.cos(arg))))
        if grad is not None:
            _scatter4(grad, idx, -kphi * n * np.sin(arg), parts)
    if form == "charmm":
        if "urey_bradley" in families and top.urey_bradley:
            a = _cols(top.urey_bradley, 4)
            out["urey_bradley"] = _stretch(x, a[:, 0].astype(int), a[:, 1].astype(int),
                                           a[:, 2], a[:, 3], grad)
        if "improper" in families and top.impropers:
            a = _cols(top.impropers, 6)
            idx = a[:, :4].astype(int).T
            kw, w0 = a[:, 4], a[:, 5]
            w, parts = _torsion(x, *idx)
            dw = (w - w0 + np.pi) % (2.0 * np.pi) - np.pi
            out["improper"] = float(np.sum(kw * dw * dw))
            if grad is not None:
                _scatter4(grad, idx, 2.0 * kw * dw, parts)
    return out


def _nonbonded(top: ForceFieldTopology, x, cutoff, grad, families, pairs=None, coeffs=None):
    ii, jj = pairs if pairs is not None else top.nonbonded_pairs()
    out = {}
    if ii.size == 0:
        return out
    d = x[ii] - x[jj]
    r2 = np.einsum("ij,ij->i", d, d)
    if np.any(r2 < MIN_DISTANCE**2):
        bad = int(np.argmin(r2))
        raise DomainError(f"non-excluded atoms {ii[bad]} and {jj[bad]} are coincident")
    if cutoff is not None:
        inside = r2 <= cutoff * cutoff
        ii, jj, d, r2 = ii[inside], jj[inside], d[inside], r2[inside]
        if coeffs is not None:
            coeffs = (coeffs[0][inside], coeffs[1][inside])
    a, b = coeffs if coeffs is not None else top.vdw_coefficients(ii, jj)
    r = np.sqrt(r2)
    coef = np.zeros_like(r)
    if "vdw" in families:
        inv6 = 1.0 / (r2 * r2 * r2)
        out["vdw"] = float(np.sum(a * inv6 * inv6 - b * inv6))
        coef += (-12.0 * a * inv6 * inv6 + 6.0 * b * inv6) / r2
    if "electrostatic" in families:
        qq = top.coulomb_constant * top.charges[ii] * top.charges[jj] / top.dielectric
        out["electrostatic"] = float(np.sum(qq / r))
        coef += -qq / (r2 * r)
    if grad is not None:
        f = coef[:, None] * d
        np.add.at(grad, ii, f)
        np.add.at(grad, jj, -f)
    return out


def _check_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def _prepare(top, x):
    x = as_config(x)
    if len(x) != top.n_atoms:
        raise ValueError(f"topology has {top.n_atoms} atoms, configuration has {len(x)}")
    return x


def bonded_energy(topology: ForceFieldTopology, x, form: str = "amber",
                  families=FAMILIES) -> EnergyBreakdown:
    """Bond, angle and dihedral energies; Urey-Bradley and impropers for ``form="charmm"``."""
    _check_form(form)
    x = _prepare(topology, x)
    return EnergyBreakdown(**_bonded(topology, x, form, None, families))


def nonbonded_energy(topology: ForceFieldTopology, x, cutoff: float | None = None,
                     families=FAMILIES) -> EnergyBreakdown:
    """Van der Waals and electrostatic energies over non-excluded pairs within ``cutoff``."""
    if cutoff is not None and cutoff <= 0:
        raise ValueError("cutoff must be positive")
    x = _prepare(topology, x)
    return EnergyBreakdown(**_nonbonded(topology, x, cutoff, None, families))


def total_energy_and_gradient(topology: ForceFieldTopology, x, form: str = "amber",
                              cutoff: float | None = None,
                              families=FAMILIES) -> tuple[EnergyBreakdown, np.ndarray]:
    _check_form(form)
    if cutoff is not None and cutoff <= 0:
        raise ValueError("cutoff must be positive")
    x = _prepare(topology, x)
    grad = np.zeros_like(x)
    terms = _bonded(topology, x, form, grad, families)
    terms.update(_nonbonded(topology, x, cutoff, grad, families))
    return EnergyBreakdown(**terms), grad


class ForceField:
    """A topology bound to a functional form and cutoff; a potential model.

    ``families`` restricts evaluation to a subset of term families, which is
    how the gradient tests isolate one family at a time.
    """

    def __init__(self, topology: ForceFieldTopology, form: str = "amber",
                 cutoff: float | None = None, families=FAMILIES):
        _check_form(form)
        unknown = set(families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown term families {sorted(unknown)}")
        self.topology = topology
        self.form = form
        self.cutoff = cutoff
        self.families = tuple(families)
        self._pairs = topology.nonbonded_pairs()
        self._coeffs = topology.vdw_coefficients(*self._pairs)

    def breakdown(self, x) -> EnergyBreakdown:
        return self._evaluate(x, need_grad=False)[0]

    def _evaluate(self, x, need_grad):
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        grad = np.zeros_like(x) if need_grad else None
        terms = _bonded(self.topology, x, self.form, grad, self.families)
        terms.update(_nonbonded(self.topology, x, self.cutoff, grad, self.families,
                                self._pairs, self._coeffs))
        return EnergyBreakdown(**terms), grad

    def energy(self, x) -> float:
        return self._evaluate(x, need_grad=False)[0].total

    def gradient(self, x) -> np.ndarray:
        return self._evaluate(x, need_grad=True)[1]

    def energy_and_gradient(self, x) -> tuple[float, np.ndarray]:
        b, g = self._evaluate(x, need_grad=True)
        return b.total, g


# -- topology files -----------------------------------------------------------

_RECORDS = {
    # name: (number of integer fields, number of float fields)
    "bond": (2, 2),
    "angle": (3, 2),
    "dihedral": (4, 3),
    "ub": (2, 2),
    "improper": (4, 2),
    "charge": (1, 1),
    "vdw": (1, 2),
    "exclude": (2, 0),
    "pairvdw": (2, 2),
}


def load_topology(path) -> ForceFieldTopology:
    """Read a line-oriented topology file.

    Records (angles in degrees)::

        atoms N
        bond i j k_b b0
        angle i j k k_theta theta0
        dihedral i j k l k_phi n delta
        ub i k k_u u0
        improper i j k l k_w w0
        charge i q
        vdw i Rmin_half eps
        exclude i j
        pairvdw i j A B
        dielectric value

    ``#`` starts a comment.
    """
    with open(path) as f:
        text = f.read()
    return parse_topology(text, source=str(path))


def parse_topology(text: str, source: str = "<string>") -> ForceFieldTopology:
    n_atoms = None
    bonds, angles, dihedrals, ubs, impropers = [], [], [], [], []
    charges, vdw, exclusions, pair_vdw = {}, {}, set(), {}
    dielectric = 1.0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        kind, args = words[0].lower(), words[1:]

        def fail(msg):
            raise TopologyError(f"{source}:{lineno}: {msg}: {raw.strip()!r}")

        if kind == "atoms":
            if len(args) != 1:
                fail("expected 'atoms N'")
            try:
                n_atoms = int(args[0])
            except ValueError:
                fail("atom count must be an integer")
            continue
        if kind == "dielectric":
            try:
                (dielectric,) = map(float, args)
            except ValueError:
                fail("expected 'dielectric value'")
            continue
        if kind not in _RECORDS:
            fail(f"unknown record {kind!r}")
        n_int, n_float = _RECORDS[kind]
        if len(args) != n_int + n_float:
            fail(f"{kind} takes {n_int + n_float} fields, got {len(args)}")
        try:
            ints = [int(a) for a in args[:n_int]]
            floats = [float(a) for a in args[n_int:]]
        except ValueError:
            fail("bad number")
        if kind == "bond":
            bonds.append((*ints, *floats))
        elif kind == "angle":
            angles.append((*ints, floats[0], np.radians(floats[1])))
        elif kind == "dihedral":
            k_phi, n, delta = floats
            if n != int(n):
                fail("dihedral periodicity must be an integer")
            dihedrals.append((*ints, k_phi, int(n), np.radians(delta)))
        elif kind == "ub":
            ubs.append((*ints, *floats))
        elif kind == "improper":
            impropers.append((*ints, floats[0], np.radians(floats[1])))
        elif kind == "charge":
            charges[ints[0]] = floats[0]
        elif kind == "vdw":
            vdw[ints[0]] = tuple(floats)
        elif kind == "exclude":
            exclusions.add(_pair(*ints))
        elif kind == "pairvdw":
            pair_vdw[_pair(*ints)] = tuple(floats)
    if n_atoms is None:
        raise TopologyError(f"{source}: missing 'atoms N' record")
    for kind, table in (("charge", charges), ("vdw", vdw)):
        for i in table:
            if not 0 <= i < n_atoms:
                raise TopologyError(f"{source}: {kind} references atom {i}, "
                                    f"but the system has {n_atoms} atoms")
    q = np.zeros(n_atoms)
    rmin = np.zeros(n_atoms)
    eps = np.zeros(n_atoms)
    for i, v in charges.items():
        q[i] = v
    for i, (rh, e) in vdw.items():
        rmin[i], eps[i] = rh, e
    return ForceFieldTopology(
        n_atoms=n_atoms, bonds=bonds, angles=angles, dihedrals=dihedrals,
        urey_bradley=ubs, impropers=impropers, charges=q, rmin_half=rmin, epsilon=eps,
        pair_vdw=pair_vdw, exclusions=exclusions, dielectric=dielectric,
    )
