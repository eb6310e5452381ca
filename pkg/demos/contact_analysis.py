"""Contact analysis of a relaxed protein structure.

Recipe for tabulating hydrogen bonds, salt bridges, pi contacts, charged
cliques, 3-10 helix segments and pi-circles of a prion-protein loop:

    python demos/contact_analysis.py relaxed_model.pdb

Structures must carry explicit hydrogens for the hydrogen-bond section.
Without an argument a small synthetic structure is analysed instead.
"""

# %% load a structure
import sys

import numpy as np

from hybridmin import InteractionCriteria, analyze, parse_pdb
from hybridmin.structure import parse_pdb_lines


def synthetic_lines():
    """Three stacked aromatic rings and an arginine above the last one."""
    lines, serial = [], 1
    names = ("CG", "CD1", "CE1", "CZ", "CE2", "CD2")
    for seq, (res, cx) in enumerate([("PHE", 0.0), ("TYR", 4.6), ("PHE", 2.3)], start=1):
        cy = 0.0 if seq < 3 else 4.0
        for k, name in enumerate(names):
            a = 2 * np.pi * k / 6
            xyz = (cx + 1.39 * np.cos(a), cy + 1.39 * np.sin(a), 0.0)
            lines.append(f"ATOM  {serial:5d}  {name:<3s} {res} A{seq:4d}    "
                         f"{xyz[0]:8.3f}{xyz[1]:8.3f}{xyz[2]:8.3f}  1.00  0.00           C")
            serial += 1
    lines.append(f"ATOM  {serial:5d}  CZ  ARG A   4    {2.3:8.3f}{4.0:8.3f}{4.2:8.3f}  1.00  0.00           C")
    return lines + ["END"]


s = parse_pdb(sys.argv[1]) if len(sys.argv) > 1 else parse_pdb_lines(synthetic_lines(), source="synthetic")
print(f"{len(s)} atoms, {len(s.residues)} residues, hydrogens: {s.has_hydrogens}")

# %% every section with default thresholds
report = analyze(s)
print(report.to_text())

# %% tighter geometric criteria shrink the contact lists
strict = analyze(s, InteractionCriteria(pipi_max_centroid=4.605, pication_max=4.0))
print(strict.to_text())
