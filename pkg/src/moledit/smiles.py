"""SMILES reading and writing, atom numbering and ``.smi`` file streaming."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, TextIO

from moledit.chem.canon import canonical_ranks, canonical_smiles
from moledit.chem.elements import (
    AROMATIC_BRACKET,
    ATOMIC_NUMBER,
    DUMMY,
)
from moledit.chem.graph import Atom, Bond, BondOrder, Molecule
from moledit.chem.perceive import perceive
from moledit.chem.writer import write
from moledit.errors import MapCollision, MolEditError, SmilesSyntaxError

log = logging.getLogger(__name__)

_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}
_ORGANIC_TWO = ("Cl", "Br")
_ORGANIC_ONE = set("BCNOPSFI")
_AROMATIC_ONE = set("bcnops")


@dataclass(frozen=True)
class SmilesDialect:
    kekulized_output: bool = False
    include_maps: bool = True


DEFAULT_DIALECT = SmilesDialect()


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[Atom] = []
        self.bonds: list[tuple[int, int, BondOrder | None]] = []
        self.stereo = False

    def error(self, msg: str, pos: int | None = None) -> SmilesSyntaxError:
        return SmilesSyntaxError(msg, self.text, self.pos if pos is None else pos)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> None:
        text = self.text
        if not text:
            raise self.error("empty SMILES", 0)
        prev: int | None = None
        stack: list[int | None] = []
        pending_bond: BondOrder | None = None
        pending_pos = 0
        rings: dict[int, tuple[int, BondOrder | None, int]] = {}
        expect_atom = True  # at start, after '(' or '.' or a bond
        while self.pos < len(text):
            c = text[self.pos]
            start = self.pos
            if c in _BOND_SYMBOLS:
                if prev is None or pending_bond is not None:
                    raise self.error(f"unexpected bond symbol {c!r}")
                if c in "/\\":
                    self.stereo = True
                pending_bond = _BOND_SYMBOLS[c]
                pending_pos = start
                self.pos += 1
                expect_atom = True
                continue
            if c == "(":
                if prev is None or pending_bond is not None:
                    raise self.error("branch opened without a preceding atom")
                stack.append(prev)
                self.pos += 1
                expect_atom = True
                continue
            if c == ")":
                if not stack:
                    raise self.error("unmatched ')'")
                if pending_bond is not None or expect_atom:
                    raise self.error("empty branch or dangling bond before ')'")
                prev = stack.pop()
                self.pos += 1
                continue
            if c == ".":
                if pending_bond is not None or prev is None or expect_atom:
                    raise self.error("misplaced '.'")
                prev = None
                self.pos += 1
                expect_atom = True
                continue
            if c.isdigit() or c == "%":
                if prev is None or (expect_atom and pending_bond is None):
                    raise self.error("ring bond without a preceding atom")
                if c == "%":
                    digits = text[self.pos + 1 : self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        raise self.error("'%' must be followed by two digits")
                    num = int(digits)
                    self.pos += 3
                else:
                    num = int(c)
                    self.pos += 1
                if num in rings:
                    other, order, _ = rings.pop(num)
                    if other == prev:
                        raise self.error(f"ring bond {num} closes on its own atom", start)
                    if order is not None and pending_bond is not None and order != pending_bond:
                        raise self.error(f"conflicting bond orders on ring bond {num}", start)
                    self._add_bond(other, prev, pending_bond if pending_bond is not None else order, start)
                else:
                    rings[num] = (prev, pending_bond, start)
                pending_bond = None
                expect_atom = False
                continue
            # atom
            idx = self._read_atom()
            if prev is not None:
                self._add_bond(prev, idx, pending_bond, start)
            elif pending_bond is not None:  # pragma: no cover - guarded above
                raise self.error("bond without preceding atom", pending_pos)
            pending_bond = None
            prev = idx
            expect_atom = False
        if pending_bond is not None:
            raise self.error("dangling bond at end of input", pending_pos)
        if stack:
            raise self.error("unclosed branch '('", len(text))
        if expect_atom:
            raise self.error("unexpected end of input", len(text))
        if rings:
            num, (_, _, p) = min(rings.items(), key=lambda kv: kv[1][2])
            raise SmilesSyntaxError(f"unclosed ring bond {num}", self.text, p)

    def _add_bond(self, a: int, b: int, order: BondOrder | None, pos: int) -> None:
        for x, y, _ in self.bonds:
            if {x, y} == {a, b}:
                raise self.error("duplicate bond between the same atoms", pos)
        self.bonds.append((a, b, order))

    def _read_atom(self) -> int:
        text, p = self.text, self.pos
        c = text[p]
        if c == "[":
            atom = self._read_bracket()
        elif text.startswith(_ORGANIC_TWO, p):
            atom = Atom(text[p : p + 2])
            self.pos += 2
        elif c in _ORGANIC_ONE:
            atom = Atom(c)
            self.pos += 1
        elif c in _AROMATIC_ONE:
            atom = Atom(c.upper(), aromatic=True)
            self.pos += 1
        elif c == "*":
            atom = Atom(DUMMY)
            self.pos += 1
        else:
            raise self.error(f"unexpected character {c!r}")
        self.atoms.append(atom)
        return len(self.atoms) - 1

    def _read_bracket(self) -> Atom:
        text = self.text
        start = self.pos
        end = text.find("]", start)
        if end < 0:
            raise self.error("unclosed '['")
        body = text[start + 1 : end]
        i = 0

        def err(msg):
            return SmilesSyntaxError(msg, text, start + 1 + i)

        isotope = None
        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        if j > i:
            isotope = int(body[i:j])
            if isotope == 0:
                raise err("isotope must be positive")
            i = j
        if i >= len(body):
            raise err("missing element symbol")
        aromatic = False
        if body[i] == "*":
            element = DUMMY
            i += 1
        elif body[i].isupper():
            two = body[i : i + 2]
            if len(two) == 2 and two[1].islower() and two in ATOMIC_NUMBER:
                element = two
                i += 2
            elif body[i] in ATOMIC_NUMBER:
                element = body[i]
                i += 1
            else:
                raise err(f"unknown element {body[i]!r}")
        elif body[i].islower():
            two = body[i : i + 2]
            if two in ("se", "as", "te"):
                element = two.capitalize()
                i += 2
            elif body[i] in "bcnops":
                element = body[i].upper()
                i += 1
            else:
                raise err(f"unknown aromatic symbol {body[i]!r}")
            aromatic = True
            if element not in AROMATIC_BRACKET:  # pragma: no cover - table guard
                raise err(f"{element} cannot be aromatic")
        else:
            raise err(f"unexpected character {body[i]!r}")
        # chirality
        if i < len(body) and body[i] == "@":
            self.stereo = True
            i += 1
            if i < len(body) and body[i] == "@":
                i += 1
            else:
                for tag in ("TH", "AL", "SP", "TB", "OH"):
                    if body.startswith(tag, i):
                        i += 2
                        while i < len(body) and body[i].isdigit():
                            i += 1
                        break
        hcount = 0
        if i < len(body) and body[i] == "H":
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            hcount = int(body[i:j]) if j > i else 1
            i = j
        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j > i:
                charge = sign * int(body[i:j])
                i = j
            else:
                charge = sign
                while i < len(body) and body[i] == body[i - 1]:
                    charge += sign
                    i += 1
        map_num = None
        if i < len(body) and body[i] == ":":
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j == i:
                raise err("atom map ':' must be followed by digits")
            map_num = int(body[i:j])
            if map_num == 0:
                map_num = None
            i = j
        if i != len(body):
            raise err(f"unexpected {body[i]!r} in bracket atom")
        self.pos = end + 1
        if element == DUMMY:
            return Atom(DUMMY, False, charge, None, isotope, map_num)
        return Atom(element, aromatic, charge, hcount, isotope, map_num)


def parse_smiles(text: str) -> Molecule:
    """Parse SMILES into a perceived Molecule.

    Stereo marks (``@``, ``/``, ``\\``) are accepted and discarded; the
    result then has ``stereo_dropped`` set.

    Raises:
        SmilesSyntaxError: with the failing character offset.
        ValenceError, KekulizationError: from perception.
    """
    text = text.strip()
    r = _Reader(text)
    r.parse()
    bonds = []
    for a, b, order in r.bonds:
        if order is None:
            both_arom = r.atoms[a].aromatic and r.atoms[b].aromatic
            order = BondOrder.AROMATIC if both_arom else BondOrder.SINGLE
        bonds.append(Bond(a, b, order))
    if r.stereo:
        log.debug("stereo marks dropped from %s", text)
    return perceive(r.atoms, bonds, stereo_dropped=r.stereo)


def write_smiles(mol: Molecule, dialect: SmilesDialect = DEFAULT_DIALECT) -> str:
    """Canonical SMILES for ``mol`` in the requested dialect."""
    if not dialect.include_maps:
        mol = mol.strip_maps(keep_dummies=False)
    return write(mol, canonical_ranks(mol), kekulized=dialect.kekulized_output)


def random_smiles(mol: Molecule, rng: random.Random, kekulized: bool = False) -> str:
    """A random valid spelling of ``mol`` (random root and branch order)."""
    ranks = list(range(len(mol.atoms)))
    rng.shuffle(ranks)
    return write(mol, ranks, kekulized=kekulized)


def _order_ranks(mol: Molecule, order: str) -> list[int]:
    if order == "canonical":
        return canonical_ranks(mol)
    if order == "input":
        return list(range(len(mol.atoms)))
    raise ValueError(f"unknown numbering order {order!r}")


def atom_numbering(mol: Molecule, order: str = "canonical") -> list[int | None]:
    """Number per atom (1-based) in writer traversal order; dummies get None."""
    visit: list[int] = []
    write(mol, _order_ranks(mol, order), visit_log=visit)
    numbers: list[int | None] = [None] * len(mol.atoms)
    k = 0
    for i in visit:
        if not mol.atoms[i].is_dummy:
            k += 1
            numbers[i] = k
    return numbers


def number_atoms(mol: Molecule, order: str = "canonical") -> str:
    """SMILES with every non-dummy atom bracketed and mapped 1..n.

    With ``order="canonical"`` numbers follow the canonical writer's
    depth-first order and do not depend on how the input was spelled.
    ``order="input"`` walks atoms in parse order instead, which keeps the
    numbering close to the way a user wrote the molecule.

    Raises:
        MapCollision: a non-dummy atom already carries a map number.
    """
    for a in mol.atoms:
        if a.map_num is not None and not a.is_dummy:
            raise MapCollision("molecule already has atom maps on non-dummy atoms")
    numbers = atom_numbering(mol, order)
    return write(mol, _order_ranks(mol, order), label=lambda i: numbers[i])


@dataclass
class SmiRecord:
    smiles: str
    id: str | None
    line: int


@dataclass
class SmiReadStats:
    records: int = 0
    malformed: int = 0
    errors: list[tuple[int, str]] | None = None


def iter_smi(
    source: str | Path | TextIO,
    stats: SmiReadStats | None = None,
    validate: bool = True,
) -> Iterator[tuple[SmiRecord, Molecule | None]]:
    """Stream ``SMILES[<TAB>id]`` records.

    Blank lines and ``#`` comments are skipped.  With ``validate`` set,
    unparseable lines are logged with their line number, counted in
    ``stats.malformed`` and skipped; otherwise molecules are not built.
    """
    if stats is not None and stats.errors is None:
        stats.errors = []
    close = False
    if isinstance(source, (str, Path)):
        fh = open(source, encoding="utf-8")
        close = True
    else:
        fh = source
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" in line:
                smi, _, ident = line.partition("\t")
                ident = ident.strip() or None
            else:
                parts = line.split(None, 1)
                smi = parts[0]
                ident = parts[1].strip() if len(parts) > 1 else None
            rec = SmiRecord(smi.strip(), ident, lineno)
            mol = None
            if validate:
                try:
                    mol = parse_smiles(rec.smiles)
                except MolEditError as exc:
                    log.warning("line %d: %s", lineno, exc)
                    if stats is not None:
                        stats.malformed += 1
                        stats.errors.append((lineno, str(exc)))
                    continue
            if stats is not None:
                stats.records += 1
            yield rec, mol
    finally:
        if close:
            fh.close()


def canonical(text: str) -> str:
    """Shorthand: canonical SMILES of a SMILES string."""
    return canonical_smiles(parse_smiles(text))
