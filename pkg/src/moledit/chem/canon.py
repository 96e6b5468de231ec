"""Canonical atom ranking and canonical SMILES."""

from __future__ import annotations

from moledit.chem.elements import ATOMIC_NUMBER
from moledit.chem.graph import Molecule


def _bond_code(mol: Molecule, bi: int) -> int:
    return int(mol.bonds[bi].order)


def _dense(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def atom_invariants(mol: Molecule) -> list[tuple]:
    """Initial per-atom invariant used to seed refinement.

    Degree leads so that terminal atoms rank first and start the string.
    """
    inv = []
    ring = mol.atom_in_ring
    for i, a in enumerate(mol.atoms):
        inv.append(
            (
                mol.degree(i),
                ATOMIC_NUMBER.get(a.element, 200),
                a.element,
                a.isotope or 0,
                a.charge,
                mol.hcount[i],
                a.aromatic,
                ring[i],
                a.map_num or 0,
            )
        )
    return inv


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    n = len(ranks)
    nclass = len(set(ranks))
    while True:
        keys = [
            (
                ranks[i],
                tuple(sorted((ranks[nb], _bond_code(mol, bi)) for nb, bi in mol.neighbors(i))),
            )
            for i in range(n)
        ]
        new = _dense(keys)
        m = len(set(new))
        ranks = new
        if m == nclass:
            return ranks
        nclass = m


def canonical_ranks(mol: Molecule) -> list[int]:
    """Distinct canonical rank per atom (0 = first).

    Iterative neighbourhood refinement followed by tie breaking: the lowest
    tied class is split by promoting one member, and refinement resumes.
    Tied atoms that survive refinement are treated as symmetry-equivalent.
    """
    n = len(mol.atoms)
    if n == 0:
        return []
    ranks = _refine(mol, _dense(atom_invariants(mol)))
    while len(set(ranks)) < n:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        chosen = min(i for i in range(n) if ranks[i] == tied)
        ranks = _dense([(2 * r + (0 if (r != tied or i == chosen) else 1)) for i, r in enumerate(ranks)])
        ranks = _refine(mol, ranks)
    return ranks


def canonical_smiles(mol: Molecule, include_maps: bool = True) -> str:
    """Deterministic SMILES: equal strings iff equal constitution (maps included)."""
    from moledit.chem.writer import write

    if not include_maps:
        mol = mol.strip_maps(keep_dummies=False)
    return write(mol, canonical_ranks(mol))
