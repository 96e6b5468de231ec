"""Edit actions and their execution.

An action reads ``replace <original> connected at <atoms> with <replacement>``.
Both fragments carry numbered dummy atoms (``[*:n]``) marking attachment
points.  Executing it deletes one complete occurrence of the original group
and bonds each replacement dummy's neighbour to the context atom that held
the same map number.

Atom numbers in actions refer to the numbering produced by
:func:`moledit.smiles.number_atoms` on the *source* molecule of a script.
Numbers survive earlier edits; atoms introduced by an edit have none.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from moledit.chem.canon import canonical_smiles
from moledit.chem.graph import Atom, Bond, BondOrder, Molecule
from moledit.chem.perceive import perceive
from moledit.errors import (
    ActionSyntaxError,
    AmbiguousSite,
    ArityMismatch,
    GroupNotFound,
    JsonError,
    KekulizationError,
    MolEditError,
    SmilesSyntaxError,
    ValenceError,
)
from moledit.patterns import Pattern, iter_embeddings, parse_pattern
from moledit.smiles import atom_numbering, parse_smiles, write_smiles

# ------------------------------------------------------------ fragments


@lru_cache(maxsize=8192)
def query_from_text(text: str) -> Pattern:
    """Query for an original fragment.

    Text that is valid SMILES becomes an exact query (aromaticity perceived,
    so Kekulé spellings still match aromatic rings).  Anything else is read
    as a SMARTS-subset pattern, which keeps ``;!R`` constraints and lets
    slightly malformed aromatic fragments match leniently.
    """
    try:
        mol = parse_smiles(text)
    except (SmilesSyntaxError, KekulizationError, ValenceError):
        return parse_pattern(text)
    return Pattern.from_molecule(mol, text)


@lru_cache(maxsize=8192)
def fragment_from_text(text: str) -> Molecule:
    """Concrete molecule for a replacement fragment (SMILES or SMARTS subset)."""
    try:
        return parse_smiles(text)
    except SmilesSyntaxError:
        return parse_pattern(text).to_molecule()


def fragment_maps(mol: Molecule) -> list[int]:
    """Sorted attachment map numbers; validates the fragment invariants."""
    maps = []
    for i, a in enumerate(mol.atoms):
        if a.is_dummy:
            if a.map_num is None:
                raise ActionSyntaxError("attachment dummies must carry a map number ([*:n])")
            if mol.degree(i) != 1:
                raise ActionSyntaxError("attachment dummies must have exactly one neighbour")
            maps.append(a.map_num)
    if not maps:
        raise ActionSyntaxError("fragment has no attachment point")
    if len(maps) != len(set(maps)):
        raise ActionSyntaxError("duplicate attachment map numbers in fragment")
    return sorted(maps)


def arity(text: str) -> int:
    return len(fragment_maps(fragment_from_text(text)))


# ------------------------------------------------------------ actions


@dataclass(frozen=True)
class EditAction:
    original: str
    replacement: str
    attachment_atoms: tuple[int, ...] | None = None

    @property
    def query(self) -> Pattern:
        return query_from_text(self.original)

    @property
    def replacement_fragment(self) -> Molecule:
        return fragment_from_text(self.replacement)

    @property
    def arity(self) -> int:
        return self.query.arity

    def to_text(self) -> str:
        if self.attachment_atoms:
            atoms = ", ".join(str(a) for a in self.attachment_atoms)
            return f"replace {self.original} connected at atom {atoms} with {self.replacement}"
        return f"replace {self.original} with {self.replacement}"

    def to_dict(self) -> dict:
        return {
            "original": self.original,
            "attachment_atoms": list(self.attachment_atoms) if self.attachment_atoms else [],
            "replacement": self.replacement,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EditAction":
        atoms = d.get("attachment_atoms") or None
        return make_action(d["original"], d["replacement"], tuple(atoms) if atoms else None)


@dataclass(frozen=True)
class EditScript:
    actions: tuple[EditAction, ...]

    def __post_init__(self):
        if not self.actions:
            raise ActionSyntaxError("an edit script needs at least one action")

    def to_json(self) -> str:
        return json.dumps({"actions": [a.to_dict() for a in self.actions]})

    def to_dict(self) -> dict:
        return {"actions": [a.to_dict() for a in self.actions]}

    @classmethod
    def from_json(cls, text: str | dict) -> "EditScript":
        data = json.loads(text) if isinstance(text, str) else text
        if not isinstance(data, dict) or not isinstance(data.get("actions"), list):
            raise JsonError("edit script JSON must be an object with an 'actions' list")
        return cls(tuple(EditAction.from_dict(a) for a in data["actions"]))


def make_action(original: str, replacement: str, atoms: Sequence[int] | None = None) -> EditAction:
    """Build an action after checking both fragments and their arity."""
    try:
        q = query_from_text(original)
    except MolEditError as exc:
        raise ActionSyntaxError(f"bad original fragment {original!r}: {exc}") from exc
    try:
        repl = fragment_from_text(replacement)
        rmaps = fragment_maps(repl)
    except ActionSyntaxError:
        raise
    except MolEditError as exc:
        raise ActionSyntaxError(f"bad replacement fragment {replacement!r}: {exc}") from exc
    omaps = sorted(q.anchors)
    if not omaps:
        raise ActionSyntaxError(f"original fragment {original!r} has no attachment point")
    if len(omaps) != len(rmaps) or omaps != rmaps:
        raise ArityMismatch(
            f"original has attachment maps {omaps}, replacement has {rmaps}"
        )
    atoms = tuple(atoms) if atoms else None
    if atoms is not None and len(atoms) > len(omaps):
        raise ActionSyntaxError(
            f"{len(atoms)} attachment atoms given for a fragment with {len(omaps)} attachment points"
        )
    return EditAction(original, replacement, atoms)


_ACTION_RE = re.compile(
    r"^\s*replace\s+(?P<orig>\S+)\s+(?:connected\s+(?:at|to)\s+(?P<atoms>.*?)\s+)?with\s+(?P<repl>\S+?)\s*[.;]?\s*$",
    re.IGNORECASE | re.DOTALL,
)
_QUOTES = "\"'`"


def _strip_quotes(tok: str) -> str:
    return tok.strip().strip(_QUOTES).rstrip(",")


def _atom_numbers(text: str | None) -> tuple[int, ...] | None:
    if not text:
        return None
    nums = []
    for tok in re.split(r"[\s,;]+|\band\b", text):
        tok = tok.strip().strip(_QUOTES)
        if not tok:
            continue
        m = re.fullmatch(r"(?:atoms?)?#?(\d+)", tok, re.IGNORECASE)
        if m:
            nums.append(int(m.group(1)))
    return tuple(nums) or None


def parse_action(text: str) -> EditAction:
    """Parse one ``replace ... with ...`` action.

    Raises:
        ActionSyntaxError: text does not follow the grammar or a fragment is bad.
        ArityMismatch: attachment points differ between the two fragments.
    """
    m = _ACTION_RE.match(text.replace("\n", " "))
    if not m:
        raise ActionSyntaxError(f"not an edit action: {text!r}")
    orig = _strip_quotes(m.group("orig"))
    repl = _strip_quotes(m.group("repl"))
    return make_action(orig, repl, _atom_numbers(m.group("atoms")))


def parse_smirks(text: str) -> EditAction:
    """Action from ``original>>replacement`` transform text."""
    if text.count(">>") != 1:
        raise ActionSyntaxError(f"expected one '>>' in {text!r}")
    left, right = text.strip().split(">>")
    return make_action(left, right)


# ------------------------------------------------------------ normalization

_BAD_MAP = re.compile(r"\[\*(\d+):?\]")


def _unbracketed_aromatic_n(frag: str) -> list[int]:
    out, depth = [], 0
    for i, ch in enumerate(frag):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "n" and depth == 0:
            out.append(i)
    return out


def _repair_fragment(frag: str, log: list[str]) -> str:
    try:
        parse_smiles(frag)
        return frag
    except KekulizationError:
        pass
    except MolEditError:
        return frag
    for pos in _unbracketed_aromatic_n(frag):
        cand = frag[:pos] + "[nH]" + frag[pos + 1 :]
        try:
            parse_smiles(cand)
        except MolEditError:
            continue
        log.append(f"added explicit H to aromatic nitrogen: {frag} -> {cand}")
        return cand
    return frag


def normalize_action_log(text: str) -> tuple[str, list[str]]:
    """Like :func:`normalize_action` but also returns the repair log."""
    log: list[str] = []
    fixed = _BAD_MAP.sub(lambda m: f"[*:{m.group(1)}]", text)
    if fixed != text:
        log.append("rewrote malformed attachment maps to [*:n]")
    m = _ACTION_RE.match(fixed.replace("\n", " "))
    if m:
        for key in ("repl", "orig"):
            raw = m.group(key)
            frag = _strip_quotes(raw)
            rep = _repair_fragment(frag, log)
            if rep != frag:
                s, e = m.span(key)
                fixed = fixed[:s] + raw.replace(frag, rep) + fixed[e:]
                m = _ACTION_RE.match(fixed.replace("\n", " "))
    else:
        fixed2 = _repair_fragment(fixed.strip(), log)
        if fixed2 != fixed.strip():
            fixed = fixed2
    return fixed, log


def normalize_action(text: str) -> str:
    """Best-effort repair of near-miss action text.

    Fixes ``[*n:]`` / ``[*n]`` to ``[*:n]`` and adds an explicit hydrogen to
    an aromatic nitrogen when that is what makes a fragment kekulizable.
    Well-formed input comes back unchanged.
    """
    return normalize_action_log(text)[0]


# ------------------------------------------------------------ execution


@dataclass(frozen=True)
class EditOutcome:
    products: tuple[Molecule, ...]
    applied_site: tuple[tuple[int, ...], ...]
    warnings: tuple[str, ...] = ()

    @property
    def smiles(self) -> list[str]:
        return [canonical_smiles(p) for p in self.products]


@dataclass
class _Branch:
    mol: Molecule
    tags: list[int | None]


def source_tags(mol: Molecule) -> tuple[Molecule, list[int | None]]:
    """Atom numbers used by actions, plus the molecule to edit.

    A fully numbered input (every non-dummy atom mapped) supplies its own
    numbers and has the maps removed; otherwise the canonical numbering of
    :func:`moledit.smiles.number_atoms` applies.
    """
    heavy = [a for a in mol.atoms if not a.is_dummy]
    if heavy and all(a.map_num for a in heavy):
        tags = [None if a.is_dummy else a.map_num for a in mol.atoms]
        return mol.strip_maps(keep_dummies=True), tags
    return mol, atom_numbering(mol)


def complete_embeddings(mol: Molecule, pat: Pattern) -> list[tuple[int, ...]]:
    """Embeddings whose non-anchor atoms form a whole group.

    Every bond leaving a matched group atom must be a pattern bond, so that
    deleting the group touches nothing except the anchor bonds.
    """
    anchors = set(pat.anchors.values())
    group_q = [k for k in range(len(pat.atoms)) if k not in anchors]
    qdeg = [len(pat.adjacency[k]) for k in range(len(pat.atoms))]
    out = []
    for emb in iter_embeddings(mol, pat):
        ok = True
        for k in group_q:
            i = emb[k]
            deg = sum(1 for nb, _ in mol.neighbors(i) if mol.atoms[nb].element != "H")
            if deg != qdeg[k]:
                ok = False
                break
        if ok:
            out.append(emb)
    out.sort()
    return out


def attachment_numbers(
    pat: Pattern, emb: tuple[int, ...], tags: Sequence[int | None]
) -> tuple[set[int], set[int]]:
    """(context-atom numbers, dummy-adjacent group-atom numbers) of an embedding."""
    ctx, inner = set(), set()
    anchors = pat.anchors
    anchor_q = set(anchors.values())
    for k in anchor_q:
        t = tags[emb[k]]
        if t is not None:
            ctx.add(t)
        for nb, _ in pat.adjacency[k]:
            if nb not in anchor_q:
                t2 = tags[emb[nb]]
                if t2 is not None:
                    inner.add(t2)
    return ctx, inner


def _consistent(pat, emb, tags, atoms: Sequence[int]) -> bool:
    ctx, inner = attachment_numbers(pat, emb, tags)
    allowed = ctx | inner
    return all(a in allowed for a in atoms)


def graft(
    mol: Molecule,
    tags: Sequence[int | None],
    pat: Pattern,
    emb: tuple[int, ...],
    repl: Molecule,
) -> tuple[Molecule, list[int | None]]:
    """Delete the matched group and bond the replacement in its place."""
    anchors = pat.anchors
    anchor_q = set(anchors.values())
    group = {emb[k] for k in range(len(pat.atoms)) if k not in anchor_q}
    # explicit hydrogens hanging off the group go with it
    for i in list(group):
        for nb, _ in mol.neighbors(i):
            if mol.atoms[nb].element == "H" and nb not in set(emb):
                group.add(nb)
    ctx_of = {m: emb[k] for m, k in anchors.items()}
    atoms, bonds = mol.kekule_form()
    remap: dict[int, int] = {}
    new_atoms: list[Atom] = []
    new_tags: list[int | None] = []
    for i, a in enumerate(atoms):
        if i in group:
            continue
        remap[i] = len(new_atoms)
        new_atoms.append(a)
        new_tags.append(tags[i])
    new_bonds = [
        Bond(remap[b.begin], remap[b.end], b.order)
        for b in bonds
        if b.begin not in group and b.end not in group
    ]
    ratoms, rbonds = repl.kekule_form()
    roff: dict[int, int] = {}
    for i, a in enumerate(ratoms):
        if a.is_dummy:
            continue
        roff[i] = len(new_atoms)
        new_atoms.append(a.with_(map_num=None))
        new_tags.append(None)
    for b in rbonds:
        da, db = ratoms[b.begin].is_dummy, ratoms[b.end].is_dummy
        if da and db:
            raise ActionSyntaxError("replacement fragment bonds two dummies together")
        if da or db:
            dummy, inner = (b.begin, b.end) if da else (b.end, b.begin)
            m = ratoms[dummy].map_num
            if m not in ctx_of:
                raise ArityMismatch(f"replacement attachment [*:{m}] has no counterpart")
            order = b.order if b.order != BondOrder.AROMATIC else BondOrder.SINGLE
            new_bonds.append(Bond(remap[ctx_of[m]], roff[inner], order))
        else:
            new_bonds.append(Bond(roff[b.begin], roff[b.end], b.order))
    product = perceive(new_atoms, new_bonds, stereo_dropped=mol.stereo_dropped)
    return product, new_tags


def site_groups(pat: Pattern, embs: Iterable[tuple[int, ...]]) -> list[list[tuple[int, ...]]]:
    """Embeddings grouped by matched atom set, groups in first-embedding order."""
    groups: dict[frozenset[int], list[tuple[int, ...]]] = {}
    for e in embs:
        groups.setdefault(frozenset(e), []).append(e)
    return sorted(groups.values(), key=lambda g: g[0])


def _site_products(mol, tags, pat, site_embs, repl, warnings):
    """Products over distinct anchor assignments of one site."""
    anchors = sorted(pat.anchors.items())
    seen_assign = set()
    results: dict[str, tuple[Molecule, list[int | None]]] = {}
    errors = []
    for emb in site_embs:
        assign = tuple(emb[k] for _, k in anchors)
        if assign in seen_assign:
            continue
        seen_assign.add(assign)
        try:
            prod, ptags = graft(mol, tags, pat, emb, repl)
        except (ValenceError, KekulizationError) as exc:
            errors.append(exc)
            continue
        key = canonical_smiles(prod)
        results.setdefault(key, (prod, ptags))
    if not results:
        raise errors[0]
    if errors:
        warnings.append(f"{len(errors)} attachment permutation(s) gave invalid valences")
    return results


def apply_action(
    mol: Molecule,
    tags: Sequence[int | None],
    action: EditAction,
    rng: random.Random,
    *,
    strict: bool = False,
    warnings: list[str] | None = None,
) -> tuple[dict[str, tuple[Molecule, list[int | None]]], tuple[int, ...]]:
    """Apply one action to one molecule.

    Returns the products keyed by canonical SMILES and the matched atoms of
    the site that was edited.
    """
    if warnings is None:
        warnings = []
    pat = action.query
    repl = action.replacement_fragment
    embs = complete_embeddings(mol, pat)
    if not embs:
        raise GroupNotFound(f"group {action.original} not present in the molecule")
    if action.attachment_atoms:
        embs = [e for e in embs if _consistent(pat, e, tags, action.attachment_atoms)]
        if not embs:
            atoms = ", ".join(map(str, action.attachment_atoms))
            raise GroupNotFound(f"group {action.original} not found at atom(s) {atoms}")
    sites = site_groups(pat, embs)
    if len(sites) == 1:
        chosen = sites[0]
        return _site_products(mol, tags, pat, chosen, repl, warnings), tuple(sorted(chosen[0]))
    per_site = []
    for s in sites:
        try:
            per_site.append(_site_products(mol, tags, pat, s, repl, []))
        except (ValenceError, KekulizationError):
            per_site.append(None)
    keysets = {frozenset(p) if p is not None else None for p in per_site}
    if len(keysets) == 1 and None not in keysets:
        return per_site[0], tuple(sorted(sites[0][0]))
    if strict:
        raise AmbiguousSite(
            f"group {action.original} matches {len(sites)} non-equivalent sites"
        )
    valid = [k for k, p in enumerate(per_site) if p is not None]
    if not valid:
        raise ValenceError(f"replacing {action.original} gives invalid valences at every site")
    k = valid[rng.randrange(len(valid))]
    warnings.append(
        f"ambiguous site for {action.original}: {len(sites)} candidates, chose #{k} by seed"
    )
    return per_site[k], tuple(sorted(sites[k][0]))


def apply_script(
    mol: Molecule,
    script: EditScript | Sequence[EditAction],
    site_seed: int = 0,
    *,
    strict: bool = False,
) -> EditOutcome:
    """Execute actions in order.

    When the original fragment is symmetric and the replacement is not, all
    attachment permutations are kept; later actions run on each of them.

    Raises:
        GroupNotFound: an action's group is absent (or absent at its atoms).
        AmbiguousSite: only with ``strict``; otherwise the seed decides.
        ValenceError: no graft yields legal valences.
    """
    actions = script.actions if isinstance(script, EditScript) else tuple(script)
    if not actions:
        raise ActionSyntaxError("an edit script needs at least one action")
    rng = random.Random(site_seed)
    mol, tags = source_tags(mol)
    branches = [_Branch(mol, list(tags))]
    warnings: list[str] = []
    sites: list[tuple[int, ...]] = []
    for action in actions:
        new: dict[str, _Branch] = {}
        first_error: MolEditError | None = None
        site = None
        for br in branches:
            try:
                prods, s = apply_action(br.mol, br.tags, action, rng, strict=strict, warnings=warnings)
            except (GroupNotFound, ValenceError, KekulizationError) as exc:
                first_error = first_error or exc
                continue
            if site is None:
                site = s
            for key, (p, t) in prods.items():
                new.setdefault(key, _Branch(p, t))
        if not new:
            assert first_error is not None
            raise first_error
        if first_error is not None:
            warnings.append(f"action '{action.to_text()}' failed on some permutations: {first_error}")
        sites.append(site)
        branches = [new[k] for k in sorted(new)]
    return EditOutcome(tuple(b.mol for b in branches), tuple(sites), tuple(warnings))


def apply_text(smiles: str, actions: Sequence[str], site_seed: int = 0) -> EditOutcome:
    """Convenience wrapper: SMILES plus action strings in, outcome out."""
    mol = parse_smiles(smiles)
    return apply_script(mol, EditScript(tuple(parse_action(normalize_action(a)) for a in actions)), site_seed)


# ------------------------------------------------------------ text exports


def emit_reaction_smirks(action: EditAction) -> str:
    """``original>>replacement`` with attachment maps preserved."""
    return f"{action.original}>>{action.replacement}"


_SNIPPET = '''from rdkit import Chem
from rdkit.Chem import AllChem
from rdkit.Chem.rdChemReactions import ChemicalReaction

source = Chem.MolFromSmiles({source!r})
transforms = [
{transforms}]

mol = source
for smirks, attachment_atoms in transforms:
    rxn: ChemicalReaction = AllChem.ReactionFromSmarts(smirks)
    outcomes = rxn.RunReactants((mol,))
    if not outcomes:
        raise ValueError("group not found: " + smirks)
    mol = outcomes[0][0]
    Chem.SanitizeMol(mol)

print(Chem.MolToSmiles(mol))
'''


def emit_rdkit_snippet(mol: Molecule, script: EditScript | Sequence[EditAction]) -> str:
    """Python text applying the script with an external toolkit.

    Only rendered, never executed here.  Output is a pure function of the
    inputs.
    """
    actions = script.actions if isinstance(script, EditScript) else tuple(script)
    lines = []
    for a in actions:
        atoms = list(a.attachment_atoms) if a.attachment_atoms else []
        lines.append(f"    ({emit_reaction_smirks(a)!r}, {atoms!r}),\n")
    return _SNIPPET.format(source=write_smiles(mol), transforms="".join(lines))


# ------------------------------------------------------------ wrapper JSON


@dataclass
class WrapperParse:
    actions: list[EditAction]
    claimed_target: str | None
    repairs: list[str] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _load_wrapper(text: str):
    m = _FENCE.search(text)
    if m:
        text = m.group(1)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        s, e = text.find("{"), text.rfind("}")
        if s >= 0 and e > s:
            try:
                return json.loads(text[s : e + 1])
            except json.JSONDecodeError as exc:
                raise JsonError(f"invalid JSON: {exc}") from exc
        raise JsonError("no JSON object found")


def parse_wrapper_json(text: str | dict) -> WrapperParse:
    """Parse a response object with ``Action Description`` and
    ``Final Target Molecule`` keys.

    Each action string is normalized then parsed; failures are collected
    rather than raised.

    Raises:
        JsonError: not an object, or no ``Action Description`` list.
    """
    data = _load_wrapper(text) if isinstance(text, str) else text
    if not isinstance(data, dict):
        raise JsonError("wrapper must be a JSON object")
    if "Action Description" not in data:
        raise JsonError("wrapper lacks 'Action Description'")
    raw = data["Action Description"]
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list):
        raise JsonError("'Action Description' must be a list of strings")
    out = WrapperParse([], data.get("Final Target Molecule"))
    for k, item in enumerate(raw):
        if not isinstance(item, str):
            out.failures.append((k, "action is not a string"))
            continue
        fixed, log = normalize_action_log(item)
        out.repairs.extend(log)
        try:
            out.actions.append(parse_action(fixed))
        except MolEditError as exc:
            out.failures.append((k, str(exc)))
    target = out.claimed_target
    if target is not None and not isinstance(target, str):
        out.claimed_target = str(target)
    return out
