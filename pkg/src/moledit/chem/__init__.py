"""Molecular graph model: perception, canonicalization and descriptors."""

from moledit.chem.canon import canonical_ranks, canonical_smiles
from moledit.chem.descriptors import Descriptors, descriptors, mol_weight
from moledit.chem.graph import Atom, Bond, BondOrder, Molecule
from moledit.chem.perceive import perceive

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "Descriptors",
    "Molecule",
    "canonical_ranks",
    "canonical_smiles",
    "descriptors",
    "mol_weight",
    "perceive",
]
