"""Simple whole-molecule descriptors."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from moledit.chem.elements import DUMMY, HYDROGEN_MASS, MASS
from moledit.chem.graph import Molecule


@dataclass(frozen=True)
class Descriptors:
    mol_weight: float
    heavy_atoms: int
    rings: int
    hbd: int
    hba: int

    def as_dict(self) -> dict:
        return asdict(self)


def mol_weight(mol: Molecule) -> float:
    """Average molecular weight in Da, hydrogens included; dummies weigh nothing."""
    total = 0.0
    for i, a in enumerate(mol.atoms):
        if a.element == DUMMY:
            continue
        total += MASS.get(a.element, 0.0) + mol.hcount[i] * HYDROGEN_MASS
    return total


def descriptors(mol: Molecule) -> Descriptors:
    hbd = hba = 0
    for i, a in enumerate(mol.atoms):
        if a.element in ("N", "O"):
            hba += 1
            if mol.hcount[i] > 0:
                hbd += 1
    return Descriptors(
        mol_weight=mol_weight(mol),
        heavy_atoms=mol.num_heavy,
        rings=len(mol.rings),
        hbd=hbd,
        hba=hba,
    )
