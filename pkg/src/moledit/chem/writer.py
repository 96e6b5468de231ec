"""Depth-first SMILES writer driven by an atom ranking."""

from __future__ import annotations

import sys
from typing import Callable, Sequence

from moledit.chem.elements import (
    AROMATIC_ORGANIC,
    DUMMY,
    ORGANIC_SUBSET,
    default_hydrogens,
)
from moledit.chem.graph import BondOrder, Molecule
from moledit.chem.perceive import needs_pi_bond


def _charge_text(q: int) -> str:
    if q == 0:
        return ""
    sign = "+" if q > 0 else "-"
    return sign if abs(q) == 1 else f"{sign}{abs(q)}"


def _implicit_ok(mol: Molecule, i: int, kekulized: bool) -> bool:
    """Would an unbracketed symbol re-derive this atom's hydrogen count?"""
    a = mol.atoms[i]
    if a.element not in ORGANIC_SUBSET or a.charge or a.isotope:
        return False
    h = mol.hcount[i]
    if a.aromatic and not kekulized:
        if a.element not in AROMATIC_ORGANIC:
            return False
        nonarom = 0
        narom = 0
        has_pi = False
        for _, bi in mol.neighbors(i):
            if mol.bonds[bi].order == BondOrder.AROMATIC:
                narom += 1
                if mol.kekule[bi] == 2:
                    has_pi = True
            else:
                nonarom += int(mol.bonds[bi].order)
        plain = a.with_(explicit_h=None)
        need = needs_pi_bond(plain, nonarom, narom)
        if need != has_pi:
            return False
        derived = default_hydrogens(a.element, 0, nonarom + narom + (1 if need else 0))
        return derived == h
    bsum = sum(mol.kekule[bi] for _, bi in mol.neighbors(i))
    return default_hydrogens(a.element, 0, bsum) == h


def atom_token(
    mol: Molecule,
    i: int,
    *,
    kekulized: bool = False,
    include_maps: bool = True,
    force_map: int | None = None,
) -> str:
    a = mol.atoms[i]
    aromatic = a.aromatic and not kekulized
    sym = a.element.lower() if aromatic else a.element
    map_num = force_map if force_map is not None else (a.map_num if include_maps else None)
    if a.element == DUMMY:
        if map_num is None and not a.isotope and not a.charge:
            return "*"
        return f"[{a.isotope or ''}*{_charge_text(a.charge)}{f':{map_num}' if map_num else ''}]"
    if map_num is None and force_map is None and _implicit_ok(mol, i, kekulized):
        return sym
    h = mol.hcount[i]
    htext = "" if h == 0 else ("H" if h == 1 else f"H{h}")
    iso = str(a.isotope) if a.isotope else ""
    mtext = f":{map_num}" if map_num else ""
    return f"[{iso}{sym}{htext}{_charge_text(a.charge)}{mtext}]"


def bond_token(mol: Molecule, bi: int, kekulized: bool) -> str:
    b = mol.bonds[bi]
    if kekulized:
        k = mol.kekule[bi]
        return {1: "", 2: "=", 3: "#"}[k]
    if b.order == BondOrder.AROMATIC:
        return ""
    if b.order == BondOrder.SINGLE:
        if mol.atoms[b.begin].aromatic and mol.atoms[b.end].aromatic:
            return "-"
        return ""
    return {BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#"}[b.order]


def write(
    mol: Molecule,
    ranks: Sequence[int],
    *,
    kekulized: bool = False,
    include_maps: bool = True,
    label: Callable[[int], int | None] | None = None,
    visit_log: list[int] | None = None,
) -> str:
    """Write ``mol`` as SMILES, starting each component at its lowest-ranked
    atom and visiting neighbours in rank order.

    ``label`` may force an atom-map number per atom (used for numbering);
    ``visit_log`` receives atom indices in output order.
    """
    n = len(mol.atoms)
    if n == 0:
        return ""
    if n > sys.getrecursionlimit() // 4:
        sys.setrecursionlimit(n * 4 + 100)
    visited = [False] * n
    order: list[int] = []
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    # ring closures: atom -> list of (partner, bond index, opens?)
    closures: list[list[tuple[int, int, bool]]] = [[] for _ in range(n)]
    used_bond = [False] * len(mol.bonds)

    def dfs(a: int, parent_bond: int | None) -> None:
        visited[a] = True
        order.append(a)
        nbrs = sorted(mol.neighbors(a), key=lambda t: ranks[t[0]])
        for nb, bi in nbrs:
            if bi == parent_bond or used_bond[bi]:
                continue
            if visited[nb]:
                used_bond[bi] = True
                closures[nb].append((a, bi, True))
                closures[a].append((nb, bi, False))
        for nb, bi in nbrs:
            if bi == parent_bond or used_bond[bi]:
                continue
            if not visited[nb]:
                used_bond[bi] = True
                children[a].append((nb, bi))
                dfs(nb, bi)
            else:
                # became visited through an earlier child: ring closure back to a
                pass

    comps = mol.components()
    comps.sort(key=lambda c: min(ranks[i] for i in c))
    roots = []
    for comp in comps:
        root = min(comp, key=lambda i: ranks[i])
        roots.append(root)
        dfs(root, None)
    # A neighbour reached through an earlier child leaves its bond unused only
    # if the dfs never came back; every bond must be covered exactly once.
    for bi, used in enumerate(used_bond):
        if not used:
            b = mol.bonds[bi]
            first, second = sorted((b.begin, b.end), key=order.index)
            closures[first].append((second, bi, True))
            closures[second].append((first, bi, False))
            used_bond[bi] = True

    pos = {a: k for k, a in enumerate(order)}
    for lst in closures:
        lst.sort(key=lambda t: (not t[2], pos[t[0]]))
    if visit_log is not None:
        visit_log.extend(order)

    digit_of: dict[int, int] = {}
    free: list[int] = []
    next_digit = [1]

    def ring_text(d: int) -> str:
        return str(d) if d < 10 else f"%{d}"

    def take_digit(exclude: set[int]) -> int:
        for d in sorted(free):
            if d not in exclude:
                free.remove(d)
                return d
        d = next_digit[0]
        next_digit[0] += 1
        return d

    out: list[str] = []

    def emit(a: int) -> None:
        forced = label(a) if label is not None else None
        out.append(
            atom_token(mol, a, kekulized=kekulized, include_maps=include_maps, force_map=forced)
        )
        closing = [d for _, bi, opens in closures[a] if not opens for d in [digit_of[bi]]]
        exclude = set(closing)
        for partner, bi, opens in closures[a]:
            if opens:
                d = take_digit(exclude)
                digit_of[bi] = d
                out.append(bond_token(mol, bi, kekulized) + ring_text(d))
            else:
                d = digit_of.pop(bi)
                out.append(ring_text(d))
                free.append(d)
        kids = children[a]
        for k, (nb, bi) in enumerate(kids):
            last = k == len(kids) - 1
            if not last:
                out.append("(")
            out.append(bond_token(mol, bi, kekulized))
            emit(nb)
            if not last:
                out.append(")")

    pieces = []
    for root in roots:
        out = []
        emit(root)
        pieces.append("".join(out))
    return ".".join(pieces)
