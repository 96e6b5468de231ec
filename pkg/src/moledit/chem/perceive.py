"""Perception: kekulization, valence/hydrogen assignment, rings and aromaticity.

Lowercase (aromatic) input is first reduced to a Kekulé structure; the
aromatic flags of the result are then recomputed from scratch with a
Hückel 4n+2 count over rings and fused ring unions.  Aromatic and Kekulé
spellings of the same compound therefore perceive identically.
"""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

from moledit.chem.elements import DUMMY, allowed_valences, default_hydrogens
from moledit.chem.graph import Atom, Bond, BondOrder, Molecule
from moledit.chem.rings import ring_bond_set, sssr
from moledit.errors import KekulizationError, MolEditError, ValenceError

_LONE_PAIR_ELEMENTS = {"O", "S", "Se", "Te"}
_MAX_FUSED_UNION = 6


def perceive(
    atoms: Sequence[Atom] | Molecule,
    bonds: Sequence[Bond] | None = None,
    *,
    stereo_dropped: bool = False,
) -> Molecule:
    """Build a perceived :class:`Molecule` from raw atoms and bonds.

    Passing an existing Molecule re-perceives its Kekulé form, which is a
    no-op up to object identity.

    Raises:
        ValenceError: an atom exceeds its allowed valence.
        KekulizationError: aromatic input that cannot be kekulized.
    """
    if isinstance(atoms, Molecule):
        stereo_dropped = atoms.stereo_dropped
        atoms, bonds = atoms.kekule_form()
    atoms = list(atoms)
    bonds = list(bonds or ())
    n = len(atoms)
    _validate(atoms, bonds)

    edges = [(b.begin, b.end) for b in bonds]
    ring_bonds = ring_bond_set(n, edges)

    # aromatic bonds off any ring cannot be aromatic (e.g. biphenyl link)
    orders = []
    for bi, b in enumerate(bonds):
        o = b.order
        if o == BondOrder.AROMATIC:
            if bi not in ring_bonds:
                o = BondOrder.SINGLE
            elif not (atoms[b.begin].aromatic and atoms[b.end].aromatic):
                raise KekulizationError(
                    f"aromatic bond between non-aromatic atoms {b.begin} and {b.end}"
                )
        orders.append(o)

    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, b in enumerate(bonds):
        adj[b.begin].append((b.end, bi))
        adj[b.end].append((b.begin, bi))

    kekule = _kekulize(atoms, orders, adj, ring_bonds, bonds)
    hcount = _hydrogens(atoms, kekule, adj)
    rings = sssr(n, edges, ring_bonds)
    arom_atoms, arom_bonds = _huckel(atoms, kekule, adj, hcount, rings, bonds)

    final_atoms = [
        a if a.aromatic == (i in arom_atoms) else a.with_(aromatic=i in arom_atoms)
        for i, a in enumerate(atoms)
    ]
    final_bonds = []
    for bi, b in enumerate(bonds):
        order = BondOrder.AROMATIC if bi in arom_bonds else BondOrder(kekule[bi])
        final_bonds.append(b if b.order == order else Bond(b.begin, b.end, order))
    return Molecule(final_atoms, final_bonds, kekule, hcount, rings, ring_bonds, stereo_dropped)


def _validate(atoms: list[Atom], bonds: list[Bond]) -> None:
    n = len(atoms)
    seen = set()
    for b in bonds:
        if not (0 <= b.begin < n and 0 <= b.end < n):
            raise MolEditError(f"bond references missing atom: {b}")
        if b.begin == b.end:
            raise MolEditError(f"bond endpoints must differ: {b}")
        key = (min(b.begin, b.end), max(b.begin, b.end))
        if key in seen:
            raise MolEditError(f"duplicate bond between atoms {key}")
        seen.add(key)
    for a in atoms:
        if a.map_num is not None and a.map_num < 1:
            raise MolEditError("atom map numbers must be positive")
        if a.explicit_h is not None and a.explicit_h < 0:
            raise MolEditError("hydrogen count must be non-negative")


def needs_pi_bond(atom: Atom, nonarom_sum: int, n_arom: int) -> bool:
    """Whether an aromatic atom must take a double bond when kekulized.

    ``nonarom_sum`` is the order sum of its non-aromatic bonds and
    ``n_arom`` the number of its aromatic bonds.  The SMILES writer relies
    on the same rule to decide when a lowercase atom needs brackets.
    """
    s = nonarom_sum + n_arom
    if atom.explicit_h is None:
        if atom.element in _LONE_PAIR_ELEMENTS or atom.element == "B":
            return False
        t = s
    else:
        t = s + atom.explicit_h
    for v in allowed_valences(atom.element, atom.charge):
        if v >= t:
            return v - t >= 1
    return False


def _kekulize(atoms, orders, adj, ring_bonds, bonds) -> list[int]:
    kek = [1 if o == BondOrder.AROMATIC else int(o) for o in orders]
    arom_idx = [i for i, a in enumerate(atoms) if a.aromatic]
    if not arom_idx:
        return kek
    need: set[int] = set()
    for i in arom_idx:
        a = atoms[i]
        if a.element == DUMMY:
            raise KekulizationError("dummy atoms cannot be aromatic")
        if not any(bi in ring_bonds for _, bi in adj[i]):
            raise KekulizationError(f"non-ring atom {i} marked aromatic")
        nonarom = sum(int(orders[bi]) for _, bi in adj[i] if orders[bi] != BondOrder.AROMATIC)
        narom = sum(1 for _, bi in adj[i] if orders[bi] == BondOrder.AROMATIC)
        if needs_pi_bond(a, nonarom, narom):
            need.add(i)
    if not need:
        return kek
    # candidate partners over aromatic bonds
    cand: dict[int, list[tuple[int, int]]] = {
        i: sorted((nb, bi) for nb, bi in adj[i] if nb in need and orders[bi] == BondOrder.AROMATIC)
        for i in need
    }
    match = _perfect_matching(sorted(need), cand)
    if match is None:
        raise KekulizationError("aromatic system cannot be kekulized")
    for bi in match:
        kek[bi] = 2
    return kek


def _perfect_matching(nodes: list[int], cand: dict[int, list[tuple[int, int]]]) -> list[int] | None:
    """Perfect matching on ``nodes`` by constraint propagation plus backtracking."""
    matched: dict[int, int] = {}
    chosen: list[int] = []

    def free_options(i):
        return [(nb, bi) for nb, bi in cand[i] if nb not in matched]

    def solve() -> bool:
        trail = []
        # forced moves
        changed = True
        while changed:
            changed = False
            for i in nodes:
                if i in matched:
                    continue
                opts = free_options(i)
                if not opts:
                    _undo(trail)
                    return False
                if len(opts) == 1:
                    nb, bi = opts[0]
                    matched[i] = matched[nb] = bi
                    chosen.append(bi)
                    trail.append((i, nb))
                    changed = True
        rest = [i for i in nodes if i not in matched]
        if not rest:
            return True
        i = min(rest, key=lambda x: (len(free_options(x)), x))
        for nb, bi in free_options(i):
            matched[i] = matched[nb] = bi
            chosen.append(bi)
            if solve():
                return True
            chosen.pop()
            del matched[i], matched[nb]
        _undo(trail)
        return False

    def _undo(trail):
        for i, nb in reversed(trail):
            del matched[i], matched[nb]
            chosen.pop()
        trail.clear()

    return sorted(chosen) if solve() else None


def _hydrogens(atoms, kekule, adj) -> list[int]:
    out = []
    for i, a in enumerate(atoms):
        bsum = sum(kekule[bi] for _, bi in adj[i])
        if a.element == DUMMY:
            out.append(0)
            continue
        if a.explicit_h is not None:
            h = a.explicit_h
            vals = allowed_valences(a.element, a.charge)
            if vals and bsum + h > max(vals):
                raise ValenceError(
                    f"atom {i} ({a.element}) has valence {bsum + h}, allowed {vals}"
                )
            out.append(h)
            continue
        h = default_hydrogens(a.element, a.charge, bsum)
        if h is None:
            raise ValenceError(
                f"atom {i} ({a.element}) has valence {bsum}, "
                f"allowed {allowed_valences(a.element, a.charge)}"
            )
        out.append(h)
    return out


def _pi_electrons(i, atoms, kekule, adj, hcount, ring_atoms) -> int | None:
    a = atoms[i]
    if a.element == DUMMY or i not in ring_atoms:
        return None
    doubles = []
    for nb, bi in adj[i]:
        k = kekule[bi]
        if k == 3:
            return None
        if k == 2:
            doubles.append(nb)
    if len(doubles) > 1:
        return None
    conn = len(adj[i]) + hcount[i]
    el, q = a.element, a.charge
    if doubles:
        nb = doubles[0]
        if nb in ring_atoms:
            return 1
        if el == "C" and atoms[nb].element in ("O", "N", "S", "Se"):
            return 0
        return None
    if el == "C":
        return {-1: 2, 1: 0}.get(q)
    if el in ("N", "P"):
        if q == 0 and conn == 3:
            return 2
        if q == -1 and conn == 2:
            return 2
        return None
    if el in _LONE_PAIR_ELEMENTS:
        return 2 if q == 0 and conn == 2 else None
    if el == "B":
        return 0 if q == 0 and conn == 3 else None
    return None


def _huckel(atoms, kekule, adj, hcount, rings, bonds) -> tuple[set[int], set[int]]:
    arom_atoms: set[int] = set()
    arom_bonds: set[int] = set()
    if not rings:
        return arom_atoms, arom_bonds
    ring_atoms = {i for r in rings for i in r}
    pi = {i: _pi_electrons(i, atoms, kekule, adj, hcount, ring_atoms) for i in ring_atoms}

    def ring_bond_ids(r):
        ids = []
        for k in range(len(r)):
            a, b = r[k], r[(k + 1) % len(r)]
            for nb, bi in adj[a]:
                if nb == b:
                    ids.append(bi)
                    break
        return ids

    rbonds = [frozenset(ring_bond_ids(r)) for r in rings]
    usable = [k for k, r in enumerate(rings) if all(pi[i] is not None for i in r)]
    # fused systems: rings sharing a bond
    groups: list[list[int]] = []
    placed: dict[int, int] = {}
    for k in usable:
        hits = {placed[j] for j in usable if j in placed and rbonds[j] & rbonds[k]}
        if not hits:
            placed[k] = len(groups)
            groups.append([k])
            continue
        target = min(hits)
        for g in sorted(hits - {target}, reverse=True):
            for j in groups[g]:
                placed[j] = target
            groups[target].extend(groups[g])
            groups[g] = []
        groups[target].append(k)
        placed[k] = target
    for g in groups:
        if not g:
            continue
        g = sorted(g)
        limit = min(len(g), _MAX_FUSED_UNION)
        for size in range(1, limit + 1):
            for combo in combinations(g, size):
                if size > 1 and not _connected(combo, rbonds):
                    continue
                union = set()
                for k in combo:
                    union.update(rings[k])
                electrons = sum(pi[i] for i in union)
                if electrons % 4 == 2:
                    arom_atoms.update(union)
                    for k in combo:
                        arom_bonds.update(rbonds[k])
    return arom_atoms, arom_bonds


def _connected(combo, rbonds) -> bool:
    combo = list(combo)
    seen = {combo[0]}
    stack = [combo[0]]
    while stack:
        k = stack.pop()
        for j in combo:
            if j not in seen and rbonds[j] & rbonds[k]:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(combo)
