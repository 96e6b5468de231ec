"""Atom, bond and molecule value types.

A :class:`Molecule` is only ever built by :func:`moledit.chem.perceive.perceive`,
which fills in rings, aromaticity, the Kekulé bond orders and hydrogen
counts.  After that it is treated as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from functools import cached_property
from typing import Iterator, Sequence

from moledit.chem.elements import ATOMIC_NUMBER, DUMMY


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


@dataclass(frozen=True, slots=True)
class Atom:
    element: str
    aromatic: bool = False
    charge: int = 0
    explicit_h: int | None = None
    isotope: int | None = None
    map_num: int | None = None

    @property
    def is_dummy(self) -> bool:
        return self.element == DUMMY

    @property
    def atomic_number(self) -> int:
        return ATOMIC_NUMBER.get(self.element, -1)

    def with_(self, **changes) -> "Atom":
        return replace(self, **changes)


@dataclass(frozen=True, slots=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE

    def other(self, idx: int) -> int:
        return self.end if idx == self.begin else self.begin


class Molecule:
    """A perceived molecular graph.

    Attributes:
        atoms: atoms with perceived aromatic flags.
        bonds: bonds; aromatic bonds carry ``BondOrder.AROMATIC``.
        kekule: Kekulé order (1, 2 or 3) of every bond.
        hcount: total hydrogen count of every atom.
        rings: smallest set of smallest rings, each a cyclic atom sequence.
        ring_bonds: indices of bonds that lie on a cycle.
        stereo_dropped: True when stereo tokens were discarded on input.
    """

    __slots__ = (
        "atoms",
        "bonds",
        "kekule",
        "hcount",
        "rings",
        "ring_bonds",
        "stereo_dropped",
        "_adj",
        "__dict__",
    )

    def __init__(
        self,
        atoms: Sequence[Atom],
        bonds: Sequence[Bond],
        kekule: Sequence[int],
        hcount: Sequence[int],
        rings: Sequence[tuple[int, ...]],
        ring_bonds: frozenset[int],
        stereo_dropped: bool = False,
    ):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        self.kekule: tuple[int, ...] = tuple(kekule)
        self.hcount: tuple[int, ...] = tuple(hcount)
        self.rings: tuple[tuple[int, ...], ...] = tuple(rings)
        self.ring_bonds = ring_bonds
        self.stereo_dropped = stereo_dropped
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bi, b in enumerate(self.bonds):
            adj[b.begin].append((b.end, bi))
            adj[b.end].append((b.begin, bi))
        self._adj = tuple(tuple(a) for a in adj)

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        from moledit.chem.canon import canonical_smiles

        try:
            return f"Molecule({canonical_smiles(self)!r})"
        except Exception:  # pragma: no cover - debugging aid only
            return f"Molecule(<{len(self.atoms)} atoms>)"

    def neighbors(self, idx: int) -> tuple[tuple[int, int], ...]:
        """(neighbor index, bond index) pairs of atom ``idx``."""
        return self._adj[idx]

    def degree(self, idx: int) -> int:
        return len(self._adj[idx])

    def heavy_degree(self, idx: int) -> int:
        return sum(1 for n, _ in self._adj[idx] if self.atoms[n].element != "H")

    def bond_between(self, a: int, b: int) -> int | None:
        for n, bi in self._adj[a]:
            if n == b:
                return bi
        return None

    @cached_property
    def atom_in_ring(self) -> tuple[bool, ...]:
        flags = [False] * len(self.atoms)
        for bi in self.ring_bonds:
            b = self.bonds[bi]
            flags[b.begin] = flags[b.end] = True
        return tuple(flags)

    def iter_bonds(self) -> Iterator[tuple[int, Bond]]:
        return enumerate(self.bonds)

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by first atom."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            comp = []
            while stack:
                a = stack.pop()
                comp.append(a)
                for n, _ in self._adj[a]:
                    if not seen[n]:
                        seen[n] = True
                        stack.append(n)
            out.append(sorted(comp))
        return out

    def kekule_form(self) -> tuple[list[Atom], list[Bond]]:
        """Raw atoms/bonds with aromaticity removed and Kekulé orders written out.

        Hydrogen counts that the default valence model would reproduce are
        released (``explicit_h=None``) so that graph surgery on this form
        recomputes them.
        """
        from moledit.chem.elements import ORGANIC_SUBSET, default_hydrogens

        ksum = [0] * len(self.atoms)
        bonds = []
        for bi, b in enumerate(self.bonds):
            k = self.kekule[bi]
            ksum[b.begin] += k
            ksum[b.end] += k
            bonds.append(Bond(b.begin, b.end, BondOrder(k)))
        atoms = []
        for i, a in enumerate(self.atoms):
            eh = a.explicit_h
            if eh is not None and a.element in ORGANIC_SUBSET and a.isotope is None:
                if default_hydrogens(a.element, a.charge, ksum[i]) == self.hcount[i]:
                    eh = None
            atoms.append(Atom(a.element, False, a.charge, eh, a.isotope, a.map_num))
        return atoms, bonds

    def with_atoms(self, atoms: Sequence[Atom]) -> "Molecule":
        """Re-perceive with replaced atom records (same bonds)."""
        from moledit.chem.perceive import perceive

        _, bonds = self.kekule_form()
        return perceive(list(atoms), bonds, stereo_dropped=self.stereo_dropped)

    def strip_maps(self, keep_dummies: bool = True) -> "Molecule":
        from moledit.chem.perceive import perceive

        atoms, bonds = self.kekule_form()
        new = [
            a if (keep_dummies and a.is_dummy) else a.with_(map_num=None) for a in atoms
        ]
        return perceive(new, bonds, stereo_dropped=self.stereo_dropped)

    @property
    def num_heavy(self) -> int:
        return sum(1 for a in self.atoms if a.element not in ("H", DUMMY))
