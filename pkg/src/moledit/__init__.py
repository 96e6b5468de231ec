"""Deterministic molecular editing: parse, edit, generate and score molecules."""

from moledit.chem import Atom, Bond, BondOrder, Molecule, canonical_smiles, descriptors, perceive
from moledit.smiles import (
    SmilesDialect,
    number_atoms,
    parse_smiles,
    random_smiles,
    write_smiles,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "Molecule",
    "SmilesDialect",
    "canonical_smiles",
    "descriptors",
    "number_atoms",
    "parse_smiles",
    "perceive",
    "random_smiles",
    "write_smiles",
]
