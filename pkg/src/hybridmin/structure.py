"""PDB parsing and protein contact analysis.

Detectors work on a parsed :class:`MolecularStructure` and a set of
:class:`InteractionCriteria` thresholds:

* hydrogen bonds (H...A distance and D-H...A angle),
* salt bridges between ASP/GLU carboxylate oxygens and ARG/LYS/HIS nitrogens,
* pi-pi stacking and pi-cation contacts from aromatic ring centroids,
* 3-10 helix segments from backbone i -> i+3 hydrogen bonds,
* groups of positively charged residues (connected components),
* pi-circles: closed trails through the graph of pi contacts.

All detectors are plain all-pairs computations; outputs are sorted so the
same input always yields the same report.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

ONE_LETTER = {
    "ALA": "A", "ARG": "R", "ASN": "N", "ASP": "D", "CYS": "C", "GLN": "Q", "GLU": "E",
    "GLY": "G", "HIS": "H", "ILE": "I", "LEU": "L", "LYS": "K", "MET": "M", "PHE": "F",
    "PRO": "P", "SER": "S", "THR": "T", "TRP": "W", "TYR": "Y", "VAL": "V",
    "HSD": "H", "HSE": "H", "HSP": "H", "HIE": "H", "HID": "H", "HIP": "H",
}
POSITIVE = {"ARG", "LYS", "HIS", "HSD", "HSE", "HSP", "HIE", "HID", "HIP"}
NEGATIVE = {"ASP", "GLU"}
AROMATIC = {"PHE", "TYR", "TRP", "HIS", "HSD", "HSE", "HSP", "HIE", "HID", "HIP"}

ANION_ATOMS = {"ASP": ("OD1", "OD2"), "GLU": ("OE1", "OE2")}
CATION_ATOMS = {"ARG": ("NE", "NH1", "NH2"), "LYS": ("NZ",), "HIS": ("ND1", "NE2")}
# atoms used as the cation point in pi-cation contacts
PI_CATION_ATOMS = {"ARG": ("CZ",), "LYS": ("NZ",), "HIS": ("ND1", "NE2")}
RINGS = {
    "PHE": (("CG", "CD1", "CD2", "CE1", "CE2", "CZ"),),
    "TYR": (("CG", "CD1", "CD2", "CE1", "CE2", "CZ"),),
    "TRP": (("CG", "CD1", "NE1", "CE2", "CD2"), ("CD2", "CE2", "CE3", "CZ2", "CZ3", "CH2")),
    "HIS": (("CG", "ND1", "CD2", "CE1", "NE2"),),
}
BACKBONE_H = ("H", "HN")
DONOR_H_BOND = 1.2


class PDBParseError(ValueError):
    pass


def canonical_resname(name: str) -> str:
    """Map protonation-state histidine names onto HIS."""
    return "HIS" if name in POSITIVE and ONE_LETTER.get(name) == "H" else name


def normalize_atom_name(name: str) -> str:
    """Convert old-style hydrogen names such as ``2HH1`` to ``HH12``."""
    name = name.strip()
    if len(name) > 1 and name[0].isdigit():
        return name[1:] + name[0]
    return name


def _infer_element(name: str) -> str:
    for ch in name:
        if ch.isalpha():
            return ch.upper()
    return "X"


@dataclass(frozen=True)
class Atom:
    serial: int
    name: str
    element: str
    res_name: str
    res_seq: int
    chain: str
    x: float
    y: float
    z: float
    icode: str = ""
    hetatm: bool = False

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def residue_key(self) -> tuple[str, int, str]:
        return (self.chain, self.res_seq, self.icode)


@dataclass(eq=False)
class Residue:
    chain: str
    seq: int
    icode: str
    name: str
    atoms: dict[str, Atom] = field(default_factory=dict)
    index: int = 0  # position within its chain

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.chain, self.seq, self.icode)

    @property
    def label(self) -> str:
        return f"{ONE_LETTER.get(self.name, 'X')}{self.seq}{self.icode}"

    @property
    def kind(self) -> str:
        return canonical_resname(self.name)

    def __repr__(self):
        return f"Residue({self.chain!r}, {self.label})"


class MolecularStructure:
    """Atoms from one model of a PDB file, grouped into residues."""

    def __init__(self, atoms: list[Atom]):
        if not atoms:
            raise PDBParseError("structure has no atoms")
        self.atoms = list(atoms)
        self.coords = np.array([[a.x, a.y, a.z] for a in self.atoms])
        if not np.all(np.isfinite(self.coords)):
            raise PDBParseError("non-finite coordinates")
        self.residues: list[Residue] = []
        self._by_key: dict[tuple, Residue] = {}
        self._atom_residue: list[Residue] = []
        chain_counts: dict[str, int] = {}
        for atom in self.atoms:
            res = self._by_key.get(atom.residue_key)
            if res is None:
                res = Residue(atom.chain, atom.res_seq, atom.icode, atom.res_name,
                              index=chain_counts.get(atom.chain, 0))
                chain_counts[atom.chain] = res.index + 1
                self._by_key[atom.residue_key] = res
                self.residues.append(res)
            if atom.name in res.atoms:
                raise PDBParseError(f"duplicate atom name {atom.name} in residue {res.label}")
            res.atoms[atom.name] = atom
            self._atom_residue.append(res)
        self.multi_chain = len(chain_counts) > 1

    def residue_of(self, atom_index: int) -> Residue:
        return self._atom_residue[atom_index]

    def residue(self, chain: str, seq: int, icode: str = "") -> Residue:
        return self._by_key[(chain, seq, icode)]

    def residue_label(self, res: Residue) -> str:
        return f"{res.chain}:{res.label}" if self.multi_chain and res.chain.strip() else res.label

    def atom_label(self, atom_index: int) -> str:
        return f"{self.residue_label(self.residue_of(atom_index))}.{self.atoms[atom_index].name}"

    @property
    def has_hydrogens(self) -> bool:
        return any(a.element == "H" for a in self.atoms)

    def __len__(self):
        return len(self.atoms)


def _field(line: str, lo: int, hi: int) -> str:
    return line[lo:hi].strip()


def parse_pdb_lines(lines, source: str = "<string>") -> MolecularStructure:
    atoms = []
    seen_model = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        record = line[:6].strip().upper()
        if record == "MODEL":
            if seen_model:
                break
            seen_model = True
            continue
        if record == "ENDMDL":
            break
        if record not in ("ATOM", "HETATM"):
            continue
        if line[16:17] not in (" ", "", "A", "1"):
            continue  # alternate location other than the first
        try:
            name = normalize_atom_name(line[12:16])
            element = _field(line, 76, 78).upper() if len(line) > 76 else ""
            element = "".join(c for c in element if c.isalpha())
            atom = Atom(
                serial=int(_field(line, 6, 11)),
                name=name,
                element=element or _infer_element(name),
                res_name=_field(line, 17, 20),
                res_seq=int(_field(line, 22, 26)),
                chain=line[21:22].strip(),
                icode=line[26:27].strip(),
                x=float(line[30:38]),
                y=float(line[38:46]),
                z=float(line[46:54]),
                hetatm=record == "HETATM",
            )
        except (ValueError, IndexError) as exc:
            raise PDBParseError(f"{source}:{lineno}: malformed {record} record ({exc}): {line!r}") from None
        if not name or not atom.res_name:
            raise PDBParseError(f"{source}:{lineno}: missing atom or residue name: {line!r}")
        atoms.append(atom)
    if not atoms:
        raise PDBParseError(f"{source}: no ATOM/HETATM records")
    return MolecularStructure(atoms)


def parse_pdb(path) -> MolecularStructure:
    """Fixed-column ATOM/HETATM parse; only the first MODEL of multi-model files."""
    with open(path) as f:
        return parse_pdb_lines(f, source=str(path))


def format_pdb(structure: MolecularStructure) -> str:
    out = []
    for a in structure.atoms:
        name = a.name if len(a.name) == 4 or len(a.element) == 2 else f" {a.name}"
        out.append(
            f"{'HETATM' if a.hetatm else 'ATOM  '}{a.serial:5d} {name:<4s} {a.res_name:>3s} "
            f"{a.chain or ' ':1s}{a.res_seq:4d}{a.icode or ' ':1s}   "
            f"{a.x:8.3f}{a.y:8.3f}{a.z:8.3f}{1.0:6.2f}{0.0:6.2f}          {a.element:>2s}"
        )
    out.append("END")
    return "\n".join(out) + "\n"


# -- criteria and report ---------------------------------------------------------

@dataclass(frozen=True)
class InteractionCriteria:
    """Distance thresholds in angstrom, angle in degrees."""

    hbond_max_ha: float = 2.5
    hbond_min_dha_angle: float = 120.0
    salt_max_dist: float = 5.0
    pipi_max_centroid: float = 7.0
    pication_max: float = 6.0
    clique_max_dist: float = 10.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class HBond:
    donor: int
    hydrogen: int
    acceptor: int
    distance: float
    angle: float


@dataclass(frozen=True)
class SaltBridge:
    anion: int
    cation: int
    distance: float


@dataclass(frozen=True)
class PiContact:
    first: Residue
    second: Residue
    distance: float


def _res_order(res: Residue):
    return (res.chain, res.seq, res.icode)


def detect_hbonds(s: MolecularStructure, c: InteractionCriteria = InteractionCriteria()) -> list[HBond]:
    """Hydrogen bonds D-H...A with D, A in {N, O}.

    A hydrogen's donor is the closest N/O within 1.2 A.  Acceptors in the
    donor's residue must not be the donor or covalently bonded to it.
    """
    h_idx = np.array([i for i, a in enumerate(s.atoms) if a.element == "H"], dtype=int)
    if h_idx.size == 0:
        warnings.warn("no hydrogens found; hydrogen bonds need explicit hydrogens", stacklevel=2)
        return []
    polar = np.array([i for i, a in enumerate(s.atoms) if a.element in ("N", "O")], dtype=int)
    if polar.size == 0:
        return []
    x = s.coords
    d_hp = np.linalg.norm(x[h_idx][:, None, :] - x[polar][None, :, :], axis=-1)
    found = []
    for hi, h in enumerate(h_idx):
        k = int(np.argmin(d_hp[hi]))
        if d_hp[hi, k] > DONOR_H_BOND:
            continue
        donor = int(polar[k])
        donor_res = s.residue_of(donor)
        for ai in np.nonzero(d_hp[hi] <= c.hbond_max_ha)[0]:
            acc = int(polar[ai])
            if acc == donor:
                continue
            if s.residue_of(acc) is donor_res and np.linalg.norm(x[acc] - x[donor]) < 1.9:
                continue
            v1 = x[donor] - x[h]
            v2 = x[acc] - x[h]
            cos = float(np.dot(v1, v2) / (np.linalg.norm(v1) * np.linalg.norm(v2)))
            angle = float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
            if angle >= c.hbond_min_dha_angle:
                found.append(HBond(donor, int(h), acc, float(d_hp[hi, ai]), angle))
    found.sort(key=lambda b: (_res_order(s.residue_of(b.donor)), _res_order(s.residue_of(b.acceptor)),
                              b.distance, b.hydrogen, b.acceptor))
    return found


def _side_chain_atoms(s: MolecularStructure, table) -> list[int]:
    out = []
    for i, a in enumerate(s.atoms):
        names = table.get(canonical_resname(a.res_name))
        if names and a.name in names:
            out.append(i)
    return out


def detect_salt_bridges(s: MolecularStructure, c: InteractionCriteria = InteractionCriteria()) -> list[SaltBridge]:
    """ASP/GLU carboxylate O to ARG/LYS/HIS side-chain N within ``salt_max_dist``, per atom pair."""
    anions = _side_chain_atoms(s, ANION_ATOMS)
    cations = _side_chain_atoms(s, CATION_ATOMS)
    out = []
    for i in anions:
        for j in cations:
            d = float(np.linalg.norm(s.coords[i] - s.coords[j]))
            if d <= c.salt_max_dist:
                out.append(SaltBridge(i, j, d))
    out.sort(key=lambda b: (_res_order(s.residue_of(b.anion)), _res_order(s.residue_of(b.cation)),
                            b.distance, b.anion, b.cation))
    return out


def ring_centroids(s: MolecularStructure) -> list[tuple[Residue, np.ndarray]]:
    """Centroids of aromatic rings; TRP contributes two rings."""
    out = []
    for res in s.residues:
        rings = RINGS.get(res.kind)
        if not rings:
            continue
        for ring in rings:
            missing = [n for n in ring if n not in res.atoms]
            if missing:
                warnings.warn(f"{res.label}: ring atoms {missing} missing, ring skipped", stacklevel=2)
                continue
            out.append((res, np.mean([res.atoms[n].position for n in ring], axis=0)))
    return out


def detect_pi_interactions(s: MolecularStructure, c: InteractionCriteria = InteractionCriteria()
                           ) -> tuple[list[PiContact], list[PiContact]]:
    """pi-pi stacks (centroid distance) and pi-cation contacts (cation atom to centroid).

    Residue pairs are reported once, at their smallest distance.  pi-cation
    contacts are ``PiContact(cation_residue, ring_residue, distance)``.
    """
    rings = ring_centroids(s)
    pipi: dict[tuple, PiContact] = {}
    for a in range(len(rings)):
        for b in range(a + 1, len(rings)):
            ra, ca = rings[a]
            rb, cb = rings[b]
            if ra is rb:
                continue
            d = float(np.linalg.norm(ca - cb))
            if d <= c.pipi_max_centroid:
                first, second = sorted((ra, rb), key=_res_order)
                key = (first.key, second.key)
                if key not in pipi or d < pipi[key].distance:
                    pipi[key] = PiContact(first, second, d)
    cations: dict[tuple, PiContact] = {}
    for res in s.residues:
        names = PI_CATION_ATOMS.get(res.kind, ())
        for name in names:
            if name not in res.atoms:
                continue
            pos = res.atoms[name].position
            for ring_res, cen in rings:
                if ring_res is res:
                    continue
                d = float(np.linalg.norm(pos - cen))
                if d <= c.pication_max:
                    key = (res.key, ring_res.key)
                    if key not in cations or d < cations[key].distance:
                        cations[key] = PiContact(res, ring_res, d)
    order = lambda p: (_res_order(p.first), _res_order(p.second), p.distance)  # noqa: E731
    return sorted(pipi.values(), key=order), sorted(cations.values(), key=order)


def detect_310_helix(s: MolecularStructure, hbonds: list[HBond]) -> list[tuple[Residue, Residue]]:
    """Segments built from backbone O(i)...H-N(i+3) hydrogen bonds.

    Runs of consecutive ``i`` values merge into one segment ``(i, last + 3)``.
    """
    starts = set()
    for hb in hbonds:
        acc = s.atoms[hb.acceptor]
        don = s.atoms[hb.donor]
        hyd = s.atoms[hb.hydrogen]
        if acc.name != "O" or don.name != "N" or hyd.name not in BACKBONE_H:
            continue
        ra, rd = s.residue_of(hb.acceptor), s.residue_of(hb.donor)
        if ra.chain == rd.chain and rd.index - ra.index == 3:
            starts.add((ra.chain, ra.index))
    by_index = {(r.chain, r.index): r for r in s.residues}
    segments = []
    for chain, i in sorted(starts):
        if segments and segments[-1][0] == chain and segments[-1][2] == i - 1:
            segments[-1][2] = i
        else:
            segments.append([chain, i, i])
    return [(by_index[(ch, a)], by_index[(ch, b + 3)]) for ch, a, b in segments]


def _charged_positions(res: Residue) -> np.ndarray | None:
    names = [n for n in CATION_ATOMS.get(res.kind, ()) if n in res.atoms]
    if not names:
        return None
    return np.array([res.atoms[n].position for n in names])


def charged_cliques(s: MolecularStructure, c: InteractionCriteria = InteractionCriteria()) -> list[list[Residue]]:
    """Connected components of positive residues linked within ``clique_max_dist``.

    Distances are between the closest side-chain charged atoms (ARG NE/NH1/NH2,
    LYS NZ, HIS ND1/NE2).  Residues lacking those atoms are ignored.
    """
    members = []
    for res in s.residues:
        if res.kind in CATION_ATOMS:
            pos = _charged_positions(res)
            if pos is not None:
                members.append((res, pos))
    n = len(members)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(n):
        for b in range(a + 1, n):
            d = np.linalg.norm(members[a][1][:, None] - members[b][1][None], axis=-1).min()
            if d <= c.clique_max_dist:
                parent[find(a)] = find(b)
    groups: dict[int, list[Residue]] = {}
    for k in range(n):
        groups.setdefault(find(k), []).append(members[k][0])
    out = [sorted(g, key=_res_order) for g in groups.values()]
    out.sort(key=lambda g: _res_order(g[0]))
    return out


def _canonical_cycle(seq: list) -> tuple:
    """Rotation/reflection-invariant form of a closed walk (without the repeated end)."""
    n = len(seq)
    best = None
    for s in (seq, seq[::-1]):
        for k in range(n):
            rot = tuple(s[k:] + s[:k])
            if best is None or rot < best:
                best = rot
    return best


def pi_circle(pipi: list[PiContact], pications: list[PiContact], min_length: int = 3,
              max_cycles: int = 100_000) -> list[list]:
    """Closed trails (no edge used twice) through the pi-contact multigraph.

    Nodes are residues (any hashable, orderable labels work too); residues
    may repeat along a trail.  Trails are returned longest first, each
    starting and ending at the same node, in a canonical rotation and
    direction.
    """
    edges = []
    for p in list(pipi) + list(pications):
        a, b = (p.first, p.second) if isinstance(p, PiContact) else p
        edges.append((a, b))
    return closed_trails(edges, min_length=min_length, max_cycles=max_cycles)


def _node_key(node):
    return _res_order(node) if isinstance(node, Residue) else node


def closed_trails(edges, min_length: int = 3, max_cycles: int = 100_000) -> list[list]:
    adj: dict = {}
    for e, (a, b) in enumerate(edges):
        if a == b:
            continue
        adj.setdefault(a, []).append((b, e))
        adj.setdefault(b, []).append((a, e))
    nodes = sorted(adj, key=_node_key)
    key_of = {node: _node_key(node) for node in nodes}
    found: dict[tuple, list] = {}

    def dfs(start, node, path, used):
        if len(found) >= max_cycles:
            return
        for nxt, e in adj[node]:
            if e in used:
                continue
            if nxt == start:
                if len(used) + 1 >= min_length:
                    walk = path[:]
                    canon = _canonical_cycle([key_of[v] for v in walk])
                    if canon not in found:
                        by_key = {key_of[v]: v for v in walk}
                        found[canon] = [by_key[k] for k in canon] + [by_key[canon[0]]]
                continue
            used.add(e)
            path.append(nxt)
            dfs(start, nxt, path, used)
            path.pop()
            used.discard(e)

    for start in nodes:
        dfs(start, start, [start], set())
    cycles = list(found.values())
    cycles.sort(key=lambda cyc: (-len(cyc), [key_of[v] for v in cyc]))
    return cycles


def same_cycle(a, b) -> bool:
    """True when two closed walks (first node repeated at the end) match up to rotation/reversal."""
    if a[0] != a[-1] or b[0] != b[-1]:
        raise ValueError("closed walks must repeat their start node at the end")
    return _canonical_cycle(list(a[:-1])) == _canonical_cycle(list(b[:-1]))


# -- combined report --------------------------------------------------------------

SECTIONS = ("hbond", "salt", "pi", "helix", "clique", "circle")


@dataclass
class InteractionReport:
    structure: MolecularStructure
    criteria: InteractionCriteria
    sections: tuple[str, ...] = SECTIONS
    hbonds: list[HBond] = field(default_factory=list)
    salt_bridges: list[SaltBridge] = field(default_factory=list)
    pipi: list[PiContact] = field(default_factory=list)
    pications: list[PiContact] = field(default_factory=list)
    helices_310: list[tuple[Residue, Residue]] = field(default_factory=list)
    cliques: list[list[Residue]] = field(default_factory=list)
    pi_circles: list[list[Residue]] = field(default_factory=list)

    def to_text(self) -> str:
        s = self.structure
        rl = s.residue_label
        lines = []
        if "hbond" in self.sections:
            lines.append("# HBOND donor hydrogen acceptor dist")
            lines += [f"HBOND {s.atom_label(h.donor)} {s.atom_label(h.hydrogen)} "
                      f"{s.atom_label(h.acceptor)} {h.distance:.2f}" for h in self.hbonds]
        if "salt" in self.sections:
            lines.append("# SALT anion cation dist")
            lines += [f"SALT {s.atom_label(b.anion)} {s.atom_label(b.cation)} {b.distance:.2f}"
                      for b in self.salt_bridges]
        if "pi" in self.sections:
            lines.append("# PIPI ring ring centroid_dist")
            lines += [f"PIPI {rl(p.first)} {rl(p.second)} {p.distance:.2f}" for p in self.pipi]
            lines.append("# PICATION cation ring dist")
            lines += [f"PICATION {rl(p.first)} {rl(p.second)} {p.distance:.2f}" for p in self.pications]
        if "helix" in self.sections:
            lines.append("# HELIX310 start end")
            lines += [f"HELIX310 {rl(a)} {rl(b)}" for a, b in self.helices_310]
        if "clique" in self.sections:
            lines.append("# CLIQUE residues")
            lines += ["CLIQUE (" + ", ".join(rl(r) for r in g) + ")" for g in self.cliques]
        if "circle" in self.sections:
            lines.append("# PICIRCLE walk")
            lines += ["PICIRCLE " + "--".join(rl(r) for r in cyc) for cyc in self.pi_circles]
        return "\n".join(lines) + "\n"

    def to_records(self) -> str:
        """Line-oriented ``key=value`` dump."""
        s = self.structure
        rl = s.residue_label
        out = []
        if "hbond" in self.sections:
            out += [f"type=hbond donor={s.atom_label(h.donor)} hydrogen={s.atom_label(h.hydrogen)} "
                    f"acceptor={s.atom_label(h.acceptor)} dist={h.distance:.4f} angle={h.angle:.2f}"
                    for h in self.hbonds]
        if "salt" in self.sections:
            out += [f"type=salt anion={s.atom_label(b.anion)} cation={s.atom_label(b.cation)} "
                    f"dist={b.distance:.4f}" for b in self.salt_bridges]
        if "pi" in self.sections:
            out += [f"type=pipi a={rl(p.first)} b={rl(p.second)} dist={p.distance:.4f}" for p in self.pipi]
            out += [f"type=pication cation={rl(p.first)} ring={rl(p.second)} dist={p.distance:.4f}"
                    for p in self.pications]
        if "helix" in self.sections:
            out += [f"type=helix310 start={rl(a)} end={rl(b)}" for a, b in self.helices_310]
        if "clique" in self.sections:
            out += ["type=clique members=" + ",".join(rl(r) for r in g) for g in self.cliques]
        if "circle" in self.sections:
            out += ["type=picircle walk=" + ",".join(rl(r) for r in cyc) for cyc in self.pi_circles]
        return "\n".join(out) + ("\n" if out else "")


def analyze(s: MolecularStructure, criteria: InteractionCriteria = InteractionCriteria(),
            sections=SECTIONS) -> InteractionReport:
    sections = tuple(sections)
    unknown = set(sections) - set(SECTIONS)
    if unknown:
        raise ValueError(f"unknown sections {sorted(unknown)}; choose from {SECTIONS}")
    report = InteractionReport(s, criteria, sections)
    if {"hbond", "helix"} & set(sections):
        if s.has_hydrogens:
            report.hbonds = detect_hbonds(s, criteria)
        else:
            warnings.warn("no hydrogens found; hydrogen bonds need explicit hydrogens", stacklevel=2)
    if "helix" in sections:
        report.helices_310 = detect_310_helix(s, report.hbonds)
    if "salt" in sections:
        report.salt_bridges = detect_salt_bridges(s, criteria)
    if {"pi", "circle"} & set(sections):
        report.pipi, report.pications = detect_pi_interactions(s, criteria)
    if "clique" in sections:
        report.cliques = charged_cliques(s, criteria)
    if "circle" in sections:
        report.pi_circles = pi_circle(report.pipi, report.pications)
    return report
