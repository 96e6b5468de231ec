"""SMARTS-subset queries and subgraph matching.

Supported primitives: element symbols (aliphatic uppercase, aromatic
lowercase), ``*``, ``R`` / ``!R``, ``H<n>``, formal charge, ``:<map>``,
implicit and ``;`` / ``&`` conjunction, and the bond symbols ``- = # : ~``.
Everything else raises :class:`UnsupportedPrimitive`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

from moledit.chem.elements import ATOMIC_NUMBER, DUMMY
from moledit.chem.graph import Atom, Bond, BondOrder, Molecule
from moledit.chem.perceive import perceive
from moledit.errors import SmilesSyntaxError, UnsupportedPrimitive

ANY_BOND = 0
SINGLE_OR_AROMATIC = -1


@dataclass(frozen=True)
class QueryAtom:
    element: str | None = None  # None = wildcard
    aromatic: bool | None = None
    hcount: int | None = None
    charge: int | None = None
    in_ring: bool | None = None
    map_num: int | None = None

    @property
    def is_wildcard(self) -> bool:
        return self.element is None

    def matches(self, mol: Molecule, i: int) -> bool:
        a = mol.atoms[i]
        if self.element is None:
            if a.element == "H":  # wildcards stand for heavy atoms only
                return False
        elif a.element != self.element:
            return False
        if self.aromatic is not None and a.aromatic != self.aromatic:
            return False
        if self.hcount is not None and mol.hcount[i] != self.hcount:
            return False
        if self.charge is not None and a.charge != self.charge:
            return False
        if self.in_ring is not None and mol.atom_in_ring[i] != self.in_ring:
            return False
        return True


@dataclass(frozen=True)
class QueryBond:
    begin: int
    end: int
    order: int  # BondOrder value, ANY_BOND or SINGLE_OR_AROMATIC

    def matches(self, mol: Molecule, bi: int) -> bool:
        o = mol.bonds[bi].order
        if self.order == ANY_BOND:
            return True
        if self.order == SINGLE_OR_AROMATIC:
            return o in (BondOrder.SINGLE, BondOrder.AROMATIC)
        return o == self.order


@dataclass(frozen=True)
class Pattern:
    atoms: tuple[QueryAtom, ...]
    bonds: tuple[QueryBond, ...]
    text: str = ""
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.adjacency:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for bi, b in enumerate(self.bonds):
                adj[b.begin].append((b.end, bi))
                adj[b.end].append((b.begin, bi))
            object.__setattr__(self, "adjacency", tuple(tuple(x) for x in adj))

    @property
    def anchors(self) -> dict[int, int]:
        """map number -> query index of every mapped wildcard."""
        return {q.map_num: i for i, q in enumerate(self.atoms) if q.is_wildcard and q.map_num}

    @property
    def arity(self) -> int:
        return len(self.anchors)

    def to_molecule(self) -> Molecule:
        """Concrete fragment for grafting.

        Unconstrained hydrogen counts come from the default valence model,
        as if the atom had been written without brackets.
        """
        atoms = []
        for q in self.atoms:
            if q.is_wildcard:
                atoms.append(Atom(DUMMY, map_num=q.map_num))
            else:
                atoms.append(
                    Atom(q.element, bool(q.aromatic), q.charge or 0, q.hcount, None, q.map_num)
                )
        bonds = []
        for b in self.bonds:
            if b.order in (ANY_BOND, SINGLE_OR_AROMATIC):
                both = self.atoms[b.begin].aromatic and self.atoms[b.end].aromatic
                order = BondOrder.AROMATIC if both else BondOrder.SINGLE
            else:
                order = BondOrder(b.order)
            bonds.append(Bond(b.begin, b.end, order))
        return perceive(atoms, bonds)

    @classmethod
    def from_molecule(cls, mol: Molecule, text: str = "") -> "Pattern":
        """Exact query for a concrete fragment: dummies become anchors."""
        qa = []
        for i, a in enumerate(mol.atoms):
            if a.is_dummy:
                qa.append(QueryAtom(map_num=a.map_num))
            else:
                qa.append(QueryAtom(a.element, a.aromatic, None, a.charge, None, a.map_num))
        qb = tuple(QueryBond(b.begin, b.end, int(b.order)) for b in mol.bonds)
        return cls(tuple(qa), qb, text)


# ---------------------------------------------------------------- parsing

_UNSUPPORTED = set(",$#^@")


class _PatternReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[QueryAtom] = []
        self.bonds: list[QueryBond] = []

    def error(self, msg, pos=None):
        return SmilesSyntaxError(msg, self.text, self.pos if pos is None else pos)

    def parse(self) -> Pattern:
        text = self.text
        if not text:
            raise self.error("empty pattern", 0)
        prev = None
        stack: list[int] = []
        pending: int | None = None
        rings: dict[int, tuple[int, int | None, int]] = {}
        expect = True
        while self.pos < len(text):
            c = text[self.pos]
            start = self.pos
            if c in "-=#:~/\\":
                if prev is None or pending is not None:
                    raise self.error(f"unexpected bond symbol {c!r}")
                pending = {
                    "-": int(BondOrder.SINGLE),
                    "/": int(BondOrder.SINGLE),
                    "\\": int(BondOrder.SINGLE),
                    "=": int(BondOrder.DOUBLE),
                    "#": int(BondOrder.TRIPLE),
                    ":": int(BondOrder.AROMATIC),
                    "~": ANY_BOND,
                }[c]
                self.pos += 1
                expect = True
                continue
            if c == "(":
                if prev is None or pending is not None:
                    raise self.error("branch opened without a preceding atom")
                stack.append(prev)
                self.pos += 1
                expect = True
                continue
            if c == ")":
                if not stack or expect:
                    raise self.error("unmatched or empty branch")
                prev = stack.pop()
                self.pos += 1
                continue
            if c == ".":
                raise UnsupportedPrimitive("disconnected patterns ('.') are not supported")
            if c.isdigit() or c == "%":
                if prev is None or (expect and pending is None):
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
                    self._bond(other, prev, pending if pending is not None else order)
                else:
                    rings[num] = (prev, pending, start)
                pending = None
                expect = False
                continue
            idx = self._atom()
            if prev is not None:
                self._bond(prev, idx, pending)
            pending = None
            prev = idx
            expect = False
        if pending is not None or expect:
            raise self.error("unexpected end of pattern", len(text))
        if stack:
            raise self.error("unclosed branch '('", len(text))
        if rings:
            num, (_, _, p) = min(rings.items(), key=lambda kv: kv[1][2])
            raise SmilesSyntaxError(f"unclosed ring bond {num}", text, p)
        maps = [q.map_num for q in self.atoms if q.map_num]
        if len(maps) != len(set(maps)):
            raise self.error("duplicate atom map numbers in pattern", 0)
        return Pattern(tuple(self.atoms), tuple(self.bonds), text)

    def _bond(self, a, b, order):
        if order is None:
            order = SINGLE_OR_AROMATIC
        self.bonds.append(QueryBond(a, b, order))

    def _atom(self) -> int:
        text, p = self.text, self.pos
        c = text[p]
        if c == "[":
            q = self._bracket()
        elif text.startswith(("Cl", "Br"), p):
            q = QueryAtom(text[p : p + 2], False)
            self.pos += 2
        elif c in "BCNOPSFI":
            q = QueryAtom(c, False)
            self.pos += 1
        elif c in "bcnops":
            q = QueryAtom(c.upper(), True)
            self.pos += 1
        elif c == "*":
            q = QueryAtom()
            self.pos += 1
        elif c in "ARa":
            raise UnsupportedPrimitive(f"primitive {c!r} outside the supported subset")
        else:
            raise self.error(f"unexpected character {c!r}")
        self.atoms.append(q)
        return len(self.atoms) - 1

    def _bracket(self) -> QueryAtom:
        text = self.text
        start = self.pos
        end = text.find("]", start)
        if end < 0:
            raise self.error("unclosed '['")
        body = text[start + 1 : end]
        if not body:
            raise self.error("empty bracket atom", start)
        for ch in body:
            if ch in _UNSUPPORTED:
                raise UnsupportedPrimitive(f"primitive {ch!r} in [{body}] is not supported")
        props: dict = {}
        map_num = None
        if ":" in body:
            body, _, m = body.rpartition(":")
            if not m.isdigit():
                raise SmilesSyntaxError("atom map must be digits", text, start)
            map_num = int(m)
        for part in body.replace("&", ";").split(";"):
            if not part:
                raise SmilesSyntaxError("empty conjunction term", text, start)
            self._terms(part, props, start)
        self.pos = end + 1
        return QueryAtom(
            props.get("element"),
            props.get("aromatic"),
            props.get("hcount"),
            props.get("charge"),
            props.get("in_ring"),
            map_num,
        )

    def _terms(self, part: str, props: dict, start: int) -> None:
        i = 0
        text = self.text

        def setp(key, val):
            if key in props and props[key] != val:
                # contradictory conjunction: keep a never-matching marker
                props[key] = val if key != "element" else "\x00"
            else:
                props[key] = val

        while i < len(part):
            ch = part[i]
            if ch == "!":
                if part[i + 1 : i + 2] == "R":
                    setp("in_ring", False)
                    i += 2
                    continue
                raise UnsupportedPrimitive(f"negation only supported for R: [{part}]")
            if ch == "R":
                if part[i + 1 : i + 2].isdigit():
                    raise UnsupportedPrimitive("ring-count primitives (R<n>) are not supported")
                setp("in_ring", True)
                i += 1
                continue
            if ch == "*":
                i += 1
                continue
            if ch == "H" and "element" in props:
                j = i + 1
                while j < len(part) and part[j].isdigit():
                    j += 1
                setp("hcount", int(part[i + 1 : j]) if j > i + 1 else 1)
                i = j
                continue
            if ch in "+-":
                sign = 1 if ch == "+" else -1
                j = i + 1
                while j < len(part) and part[j].isdigit():
                    j += 1
                if j > i + 1:
                    q = sign * int(part[i + 1 : j])
                else:
                    q = sign
                    while j < len(part) and part[j] == ch:
                        q += sign
                        j += 1
                setp("charge", q)
                i = j
                continue
            if ch.isupper():
                two = part[i : i + 2]
                if len(two) == 2 and two[1].islower() and two in ATOMIC_NUMBER:
                    setp("element", two)
                    setp("aromatic", False)
                    i += 2
                    continue
                if ch in ATOMIC_NUMBER:
                    setp("element", ch)
                    setp("aromatic", False)
                    i += 1
                    continue
                raise UnsupportedPrimitive(f"primitive {ch!r} in [{part}] is not supported")
            if ch.islower():
                two = part[i : i + 2]
                if two in ("se", "as", "te"):
                    setp("element", two.capitalize())
                    setp("aromatic", True)
                    i += 2
                    continue
                if ch in "bcnops":
                    setp("element", ch.upper())
                    setp("aromatic", True)
                    i += 1
                    continue
                raise UnsupportedPrimitive(f"primitive {ch!r} in [{part}] is not supported")
            if ch.isdigit():
                raise UnsupportedPrimitive("isotope / atomic-number primitives are not supported")
            raise SmilesSyntaxError(f"unexpected {ch!r} in bracket atom", text, start)


@lru_cache(maxsize=4096)
def parse_pattern(text: str) -> Pattern:
    """Parse a SMARTS-subset query.

    Raises:
        SmilesSyntaxError: malformed text.
        UnsupportedPrimitive: valid SMARTS outside the supported subset.
    """
    return _PatternReader(text.strip()).parse()


# ---------------------------------------------------------------- matching


@dataclass(frozen=True)
class Match:
    """An embedding: ``mapping[k]`` is the molecule atom for query atom ``k``."""

    mapping: tuple[int, ...]

    @property
    def atoms(self) -> frozenset[int]:
        return frozenset(self.mapping)


def _query_order(pat: Pattern, mol: Molecule, cands: list[list[int]]) -> list[int]:
    """Connected visiting order: rarest candidate set first, then neighbours."""
    n = len(pat.atoms)
    order: list[int] = []
    placed = [False] * n
    while len(order) < n:
        # seed a new component with the most constrained unplaced atom
        seed = min((k for k in range(n) if not placed[k]), key=lambda k: (len(cands[k]), k))
        order.append(seed)
        placed[seed] = True
        frontier = True
        while frontier:
            frontier = False
            best = None
            for k in range(n):
                if placed[k]:
                    continue
                if any(placed[nb] for nb, _ in pat.adjacency[k]):
                    key = (len(cands[k]), k)
                    if best is None or key < best[0]:
                        best = (key, k)
            if best is not None:
                order.append(best[1])
                placed[best[1]] = True
                frontier = True
    return order


def iter_embeddings(mol: Molecule, pat: Pattern) -> Iterator[tuple[int, ...]]:
    """Yield every injective, bond-consistent mapping (no deduplication)."""
    n = len(pat.atoms)
    if n == 0 or n > len(mol.atoms):
        return
    cands = [[i for i in range(len(mol.atoms)) if q.matches(mol, i)] for q in pat.atoms]
    if any(not c for c in cands):
        return
    order = _query_order(pat, mol, cands)
    pos_in_order = {k: t for t, k in enumerate(order)}
    # for each query atom: earlier-placed neighbours and the query bond
    back: list[list[tuple[int, QueryBond]]] = []
    for k in order:
        back.append(
            [(nb, pat.bonds[bi]) for nb, bi in pat.adjacency[k] if pos_in_order[nb] < pos_in_order[k]]
        )
    cand_sets = [set(c) for c in cands]
    mapping = [-1] * n
    used: set[int] = set()

    def extend(t: int) -> Iterator[tuple[int, ...]]:
        if t == n:
            yield tuple(mapping)
            return
        k = order[t]
        preds = back[t]
        if preds:
            anchor_q, _ = preds[0]
            pool = [nb for nb, _ in mol.neighbors(mapping[anchor_q])]
        else:
            pool = cands[k]
        for i in pool:
            if i in used or i not in cand_sets[k]:
                continue
            ok = True
            for nb_q, qb in preds:
                bi = mol.bond_between(i, mapping[nb_q])
                if bi is None or not qb.matches(mol, bi):
                    ok = False
                    break
            if not ok:
                continue
            mapping[k] = i
            used.add(i)
            yield from extend(t + 1)
            used.discard(i)
            mapping[k] = -1

    yield from extend(0)


def verify_match(mol: Molecule, pat: Pattern, mapping: tuple[int, ...]) -> bool:
    """Independent bond-by-bond check of an embedding."""
    if len(set(mapping)) != len(mapping):
        return False
    for k, q in enumerate(pat.atoms):
        if not q.matches(mol, mapping[k]):
            return False
    for qb in pat.bonds:
        bi = mol.bond_between(mapping[qb.begin], mapping[qb.end])
        if bi is None or not qb.matches(mol, bi):
            return False
    return True


def find_matches(mol: Molecule, pat: Pattern) -> list[Match]:
    """All embeddings, one per distinct matched-atom set, in lexicographic order."""
    best: dict[frozenset[int], tuple[int, ...]] = {}
    for m in iter_embeddings(mol, pat):
        key = frozenset(m)
        if key not in best or m < best[key]:
            best[key] = m
    return [Match(m) for m in sorted(best.values())]

