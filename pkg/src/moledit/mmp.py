"""Matched molecular pairs, Murcko scaffolds and mapped-reaction diffing.

Fragments are molecules whose attachment points are dummy atoms ``[*:n]``.
A single cut splits one acyclic single bond; a double cut splits two and
keeps the middle piece as the variable core.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from moledit.chem.canon import canonical_smiles
from moledit.chem.elements import DUMMY
from moledit.chem.graph import Atom, Bond, BondOrder, Molecule
from moledit.chem.perceive import perceive
from moledit.editor import EditAction, make_action
from moledit.errors import MolEditError, ReactionParseError, UnmappedAtoms
from moledit.smiles import parse_smiles

TERMINAL, CORE, OTHER = "Terminal", "Core", "Other"


def _build(
    atoms: Sequence[Atom],
    bonds: Sequence[Bond],
    keep: Iterable[int],
    dummies: Sequence[tuple[int, int, BondOrder]] = (),
    stereo_dropped: bool = False,
) -> Molecule:
    """Induced submolecule on ``keep`` (Kekulé input) plus dummy atoms.

    ``dummies`` holds (kept atom, map number, bond order) triples.
    """
    keep = sorted(set(keep))
    idx = {a: k for k, a in enumerate(keep)}
    new_atoms = [atoms[i].with_(map_num=None) if not atoms[i].is_dummy else atoms[i] for i in keep]
    new_bonds = [Bond(idx[b.begin], idx[b.end], b.order) for b in bonds if b.begin in idx and b.end in idx]
    for anchor, m, order in dummies:
        new_atoms.append(Atom(DUMMY, map_num=m))
        new_bonds.append(Bond(idx[anchor], len(new_atoms) - 1, order))
    return perceive(new_atoms, new_bonds, stereo_dropped=stereo_dropped)


def _components(n: int, bonds: Sequence[Bond], skip: set[int], nodes: Iterable[int] | None = None) -> list[list[int]]:
    allowed = set(range(n)) if nodes is None else set(nodes)
    adj: dict[int, list[int]] = {i: [] for i in allowed}
    for bi, b in enumerate(bonds):
        if bi in skip or b.begin not in allowed or b.end not in allowed:
            continue
        adj[b.begin].append(b.end)
        adj[b.end].append(b.begin)
    seen: set[int] = set()
    out = []
    for s in sorted(allowed):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in adj[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        out.append(sorted(comp))
    return out


# ------------------------------------------------------------ fragmentation


@dataclass(frozen=True)
class CutResult:
    core: Molecule
    side_fragments: tuple[Molecule, ...]
    cut_bonds: tuple[tuple[int, int], ...]

    @property
    def arity(self) -> int:
        return len(self.cut_bonds)


def cuttable_bonds(mol: Molecule) -> list[int]:
    """Acyclic single bonds between two heavy, non-dummy atoms."""
    out = []
    for bi, b in enumerate(mol.bonds):
        if bi in mol.ring_bonds or b.order != BondOrder.SINGLE:
            continue
        a1, a2 = mol.atoms[b.begin], mol.atoms[b.end]
        if a1.element in ("H", DUMMY) or a2.element in ("H", DUMMY):
            continue
        out.append(bi)
    return sorted(out, key=lambda bi: (min(mol.bonds[bi].begin, mol.bonds[bi].end), max(mol.bonds[bi].begin, mol.bonds[bi].end)))


def _split(mol: Molecule, cut: Sequence[int]) -> list[Molecule]:
    """Pieces after cutting ``cut`` (already sorted); maps follow cut order."""
    atoms, bonds = mol.kekule_form()
    pieces = []
    for comp in _components(len(atoms), bonds, set(cut)):
        cs = set(comp)
        dummies = []
        for k, bi in enumerate(cut, start=1):
            b = bonds[bi]
            if b.begin in cs:
                dummies.append((b.begin, k, BondOrder.SINGLE))
            if b.end in cs:
                dummies.append((b.end, k, BondOrder.SINGLE))
        pieces.append(_build(atoms, bonds, comp, dummies, mol.stereo_dropped))
    return pieces


def _piece_key(m: Molecule) -> tuple:
    return (-m.num_heavy, canonical_smiles(m))


def fragment_mol(mol: Molecule, max_cuts: int = 2) -> list[CutResult]:
    """All single cuts, plus all double cuts when ``max_cuts`` is 2.

    For a single cut the core is the larger piece (ties by canonical
    string); for a double cut it is the middle piece that carries both
    attachment points.
    """
    if max_cuts not in (1, 2):
        raise ValueError("max_cuts must be 1 or 2")
    mol = mol.strip_maps(keep_dummies=True)
    bonds = cuttable_bonds(mol)
    pair = lambda bi: (min(mol.bonds[bi].begin, mol.bonds[bi].end), max(mol.bonds[bi].begin, mol.bonds[bi].end))
    out = []
    for bi in bonds:
        a, b = sorted(_split(mol, [bi]), key=_piece_key)
        out.append(CutResult(a, (b,), (pair(bi),)))
    if max_cuts == 2:
        for b1, b2 in itertools.combinations(bonds, 2):
            pieces = _split(mol, [b1, b2])
            middle = [p for p in pieces if sum(1 for x in p.atoms if x.is_dummy) == 2]
            if len(middle) != 1:
                continue
            sides = tuple(sorted((p for p in pieces if p is not middle[0]), key=_map_of))
            out.append(CutResult(middle[0], sides, (pair(b1), pair(b2))))
    return out


def _map_of(frag: Molecule) -> int:
    return min(a.map_num for a in frag.atoms if a.is_dummy)


def join_fragments(frags: Sequence[Molecule]) -> Molecule:
    """Reconnect fragments by pairing dummies with equal map numbers."""
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    ends: dict[int, list[tuple[int, BondOrder]]] = {}
    for f in frags:
        fa, fb = f.kekule_form()
        off = {}
        for i, a in enumerate(fa):
            if not a.is_dummy:
                off[i] = len(atoms)
                atoms.append(a)
        for b in fb:
            d1, d2 = fa[b.begin].is_dummy, fa[b.end].is_dummy
            if d1 or d2:
                dummy, inner = (b.begin, b.end) if d1 else (b.end, b.begin)
                ends.setdefault(fa[dummy].map_num, []).append((off[inner], b.order))
            else:
                bonds.append(Bond(off[b.begin], off[b.end], b.order))
    for m, pts in sorted(ends.items()):
        if len(pts) != 2:
            raise ValueError(f"attachment {m} appears {len(pts)} time(s)")
        (x, o1), (y, _) = pts
        bonds.append(Bond(x, y, o1))
    return perceive(atoms, bonds)


def reassemble(cut: CutResult) -> Molecule:
    return join_fragments((cut.core,) + cut.side_fragments)


# ------------------------------------------------------------ pairing


@dataclass(frozen=True)
class MatchedPair:
    mol_a: str
    mol_b: str
    core: str
    frag_a: str
    frag_b: str
    arity: int
    group_id: str
    classification: str = OTHER

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def swapped(self) -> "MatchedPair":
        p = MatchedPair(self.mol_b, self.mol_a, self.core, self.frag_b, self.frag_a, self.arity, self.group_id)
        return _with_class(p)


def _with_class(p: MatchedPair) -> MatchedPair:
    return MatchedPair(p.mol_a, p.mol_b, p.core, p.frag_a, p.frag_b, p.arity, p.group_id, classify_pair(p))


def _relabel(frag: Molecule, mapping: dict[int, int]) -> Molecule:
    atoms, bonds = frag.kekule_form()
    atoms = [a.with_(map_num=mapping[a.map_num]) if a.is_dummy else a for a in atoms]
    return perceive(atoms, bonds)


def _double_key(cut: CutResult) -> tuple[str, str]:
    """Canonical (context, variable) strings for a double cut.

    Sides are ordered by their map-free canonical form; for symmetric
    contexts the labelling giving the smaller linker string wins.
    """
    s1, s2 = cut.side_fragments
    unm = [canonical_smiles(s, include_maps=False) for s in (s1, s2)]
    m1, m2 = _map_of(s1), _map_of(s2)
    labelings = []
    if unm[0] < unm[1]:
        labelings.append({m1: 1, m2: 2})
    elif unm[1] < unm[0]:
        labelings.append({m1: 2, m2: 1})
    else:
        labelings += [{m1: 1, m2: 2}, {m1: 2, m2: 1}]
    best = None
    for lab in labelings:
        sides = sorted((_relabel(s1, lab), _relabel(s2, lab)), key=_map_of)
        ctx = ".".join(canonical_smiles(s) for s in sides)
        var = canonical_smiles(_relabel(cut.core, lab))
        if best is None or (var, ctx) < (best[1], best[0]):
            best = (ctx, var)
    return best


def index_molecule(mol: Molecule, max_cuts: int = 2) -> list[tuple[str, str, int]]:
    """(context key, variable fragment, arity) entries for one molecule."""
    out = []
    for cut in fragment_mol(mol, max_cuts):
        if cut.arity == 1:
            big, small = cut.core, cut.side_fragments[0]
            out.append((canonical_smiles(big), canonical_smiles(small), 1))
            if big.num_heavy == small.num_heavy:
                out.append((canonical_smiles(small), canonical_smiles(big), 1))
        else:
            ctx, var = _double_key(cut)
            out.append((ctx, var, 2))
    return sorted(set(out))


def pair_index(records: Iterable[tuple[str, str]], max_cuts: int = 2) -> list[MatchedPair]:
    """Matched pairs within each group.

    Molecules sharing a context yield a pair; ``mol_a`` is the one that
    appears first in the input.  Duplicate molecules, identical fragments
    and repeated (mol_a, mol_b, core) triples are skipped.
    """
    groups: dict[str, list[str]] = {}
    for smi, gid in records:
        try:
            key = canonical_smiles(parse_smiles(smi).strip_maps())
        except MolEditError:
            continue
        lst = groups.setdefault(gid, [])
        if key not in lst:
            lst.append(key)
    pairs: list[MatchedPair] = []
    for gid in sorted(groups):
        mols = groups[gid]
        order = {m: k for k, m in enumerate(mols)}
        index: dict[tuple[str, int], list[tuple[str, str]]] = {}
        for m in mols:
            for ctx, var, ar in index_molecule(parse_smiles(m), max_cuts):
                index.setdefault((ctx, ar), []).append((m, var))
        seen = set()
        for (ctx, ar), entries in sorted(index.items()):
            for (ma, fa), (mb, fb) in itertools.combinations(entries, 2):
                if ma == mb or fa == fb:
                    continue
                if order[ma] > order[mb]:
                    ma, mb, fa, fb = mb, ma, fb, fa
                key = (ma, mb, ctx)
                if key in seen:
                    continue
                seen.add(key)
                pairs.append(_with_class(MatchedPair(ma, mb, ctx, fa, fb, ar, gid)))
    pairs.sort(key=lambda p: (p.group_id, order_key(p)))
    return pairs


def order_key(p: MatchedPair) -> tuple:
    return (p.mol_a, p.mol_b, p.arity, p.core)


# ------------------------------------------------------------ scaffolds


def murcko_scaffold(mol: Molecule) -> Molecule:
    """Ring systems plus the linkers between them.

    Terminal non-ring atoms are pruned until none remain; acyclic input
    gives an empty molecule.
    """
    ring = mol.atom_in_ring
    alive = set(range(len(mol.atoms)))
    deg = {i: sum(1 for nb, _ in mol.neighbors(i)) for i in alive}
    queue = [i for i in alive if not ring[i] and deg[i] <= 1]
    while queue:
        i = queue.pop()
        if i not in alive:
            continue
        alive.discard(i)
        for nb, _ in mol.neighbors(i):
            if nb in alive:
                deg[nb] -= 1
                if not ring[nb] and deg[nb] <= 1:
                    queue.append(nb)
    if not any(ring):
        alive = set()
    atoms, bonds = mol.kekule_form()
    return _build(atoms, bonds, alive)


def _ring_count(frag: Molecule) -> int:
    return len(frag.rings)


def _nonring_heavy(frag: Molecule) -> int:
    ring = frag.atom_in_ring
    return sum(1 for i, a in enumerate(frag.atoms) if a.element != "H" and not ring[i])


def classify_pair(pair: MatchedPair) -> str:
    """Terminal, Core or Other.

    Core needs every one of: arity >= 2 on both sides, different Murcko
    scaffolds, a ring in both fragments, at most 5 non-ring heavy atoms per
    fragment (dummies included) and frag_a under half of mol_a's heavy
    atoms.  Terminal needs arity 1 and frag_a at most 30% of mol_a.
    Ratios count real atoms only, not the dummies.
    """
    fa, fb = parse_smiles(pair.frag_a), parse_smiles(pair.frag_b)
    ma = parse_smiles(pair.mol_a)
    na = sum(1 for a in fa.atoms if a.is_dummy)
    nb = sum(1 for a in fb.atoms if a.is_dummy)
    heavy_a = ma.num_heavy
    if na >= 2 and na == nb:
        ok = (
            canonical_smiles(murcko_scaffold(fa)) != canonical_smiles(murcko_scaffold(fb))
            and _ring_count(fa) >= 1
            and _ring_count(fb) >= 1
            and _nonring_heavy(fa) <= 5
            and _nonring_heavy(fb) <= 5
            and fa.num_heavy < 0.5 * heavy_a
        )
        return CORE if ok else OTHER
    if na == 1 and nb == 1 and fa.num_heavy <= 0.3 * heavy_a:
        return TERMINAL
    return OTHER


def core_criteria(pair: MatchedPair) -> dict[str, bool]:
    """Each Core criterion separately (for diagnostics)."""
    fa, fb = parse_smiles(pair.frag_a), parse_smiles(pair.frag_b)
    ma = parse_smiles(pair.mol_a)
    na = sum(1 for a in fa.atoms if a.is_dummy)
    nb = sum(1 for a in fb.atoms if a.is_dummy)
    return {
        "attachment": na >= 2 and na == nb,
        "scaffold": canonical_smiles(murcko_scaffold(fa)) != canonical_smiles(murcko_scaffold(fb)),
        "rings": _ring_count(fa) >= 1 and _ring_count(fb) >= 1,
        "nonring": _nonring_heavy(fa) <= 5 and _nonring_heavy(fb) <= 5,
        "ratio": fa.num_heavy < 0.5 * ma.num_heavy,
    }


# ------------------------------------------------------------ reactions


@dataclass(frozen=True)
class MappedReaction:
    reactant: Molecule
    product: Molecule
    text: str = ""


def parse_reaction(text: str) -> MappedReaction:
    """``reactants>>product`` or ``reactants>agents>product``."""
    parts = text.strip().split()[0].split(">") if text.strip() else []
    if len(parts) != 3:
        raise ReactionParseError(f"not a reaction SMILES: {text!r}")
    left, _, right = parts
    if not left or not right:
        raise ReactionParseError(f"reaction has an empty side: {text!r}")
    try:
        r, p = parse_smiles(left), parse_smiles(right)
    except MolEditError as exc:
        raise ReactionParseError(f"bad reaction SMILES: {exc}") from exc
    for side, mol in (("reactant", r), ("product", p)):
        maps = [a.map_num for a in mol.atoms if a.map_num is not None]
        if len(maps) != len(set(maps)):
            raise ReactionParseError(f"duplicate atom maps on the {side} side")
    return MappedReaction(r, p, text.strip())


def _maps(mol: Molecule, comp: Iterable[int]) -> dict[int, int]:
    return {mol.atoms[i].map_num: i for i in comp if mol.atoms[i].map_num is not None}


def diff_mapped_reaction(rxn: MappedReaction | str) -> tuple[Molecule, EditAction] | None:
    """Single-site edit between a mapped reactant and product.

    Returns (core with dummies, action) or None when the change is empty,
    spans more than one site, or attaches at different core atoms on the
    two sides.

    Raises:
        ReactionParseError: malformed reaction text.
        UnmappedAtoms: a side has no mapped atoms, or a changed region has
            no mapped anchor atom.
    """
    if isinstance(rxn, str):
        rxn = parse_reaction(rxn)
    R, P = rxn.reactant, rxn.product
    pcomps = P.components()
    pcomp = max(pcomps, key=lambda c: (sum(1 for i in c if P.atoms[i].element != "H"), -c[0]))
    pmap = _maps(P, pcomp)
    if not pmap:
        raise UnmappedAtoms("product has no mapped atoms")
    rcomps = R.components()
    rcomp = max(rcomps, key=lambda c: (len(set(_maps(R, c)) & set(pmap)), -c[0]))
    rmap = _maps(R, rcomp)
    shared = set(rmap) & set(pmap)
    if not shared:
        raise UnmappedAtoms("no atom maps shared between reactant and product")

    def same_atom(m):
        a, b = R.atoms[rmap[m]], P.atoms[pmap[m]]
        return a.element == b.element and a.charge == b.charge and a.aromatic == b.aromatic

    def bond_order(mol, idx, i, m2):
        j = idx.get(m2)
        if j is None:
            return None
        bi = mol.bond_between(i, j)
        return None if bi is None else mol.bonds[bi].order

    core = {m for m in shared if same_atom(m)}
    changed = True
    while changed:
        changed = False
        for m in sorted(core):
            i, j = rmap[m], pmap[m]
            nbr_maps = {R.atoms[n].map_num for n, _ in R.neighbors(i)} | {P.atoms[n].map_num for n, _ in P.neighbors(j)}
            for m2 in nbr_maps:
                if m2 is None or m2 not in core:
                    continue
                if bond_order(R, rmap, i, m2) != bond_order(P, pmap, j, m2):
                    core.discard(m)
                    changed = True
                    break
    r_core = {rmap[m] for m in core}
    p_core = {pmap[m] for m in core}
    r_changed = [i for i in rcomp if i not in r_core and R.atoms[i].element != "H"]
    p_changed = [i for i in pcomp if i not in p_core and P.atoms[i].element != "H"]
    if not r_changed and not p_changed:
        return None  # identity
    if not r_changed or not p_changed or not core:
        return None

    ra, rb = R.kekule_form()
    pa, pb = P.kekule_form()

    def region(mol, bonds, idx_changed, core_idx):
        comps = _components(len(mol.atoms), bonds, set(), idx_changed)
        links = []  # (core atom, changed atom, order)
        for b in bonds:
            if b.begin in core_idx and b.end in idx_changed:
                links.append((b.begin, b.end, b.order))
            elif b.end in core_idx and b.begin in idx_changed:
                links.append((b.end, b.begin, b.order))
        return comps, links

    rc, rlinks = region(R, rb, set(r_changed), r_core)
    pc, plinks = region(P, pb, set(p_changed), p_core)
    if len(rc) != 1 or len(pc) != 1:
        return None
    if not rlinks or not plinks:
        raise UnmappedAtoms("changed region has no mapped anchor atom")
    r_anchor_maps = [R.atoms[c].map_num for c, _, _ in rlinks]
    p_anchor_maps = [P.atoms[c].map_num for c, _, _ in plinks]
    if len(set(r_anchor_maps)) != len(r_anchor_maps) or sorted(r_anchor_maps) != sorted(p_anchor_maps):
        return None
    number = {m: k for k, m in enumerate(sorted(r_anchor_maps), start=1)}
    frag_r = _build(ra, rb, r_changed, [(x, number[R.atoms[c].map_num], o) for c, x, o in rlinks])
    frag_p = _build(pa, pb, p_changed, [(x, number[P.atoms[c].map_num], o) for c, x, o in plinks])
    core_mol = _build(ra, rb, sorted(r_core & set(rcomp)), [(c, number[R.atoms[c].map_num], o) for c, x, o in rlinks])
    try:
        action = make_action(canonical_smiles(frag_r), canonical_smiles(frag_p))
    except MolEditError:
        return None
    return core_mol, action
