"""Synthetic edit samples by iterative moiety replacement.

Built-in pools hold common substituents (one attachment point) and common
linkers (two).  Each generated sample records the edits made and an edit
script that reproduces the final molecule when executed on the source.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from moledit.chem.canon import canonical_smiles
from moledit.chem.graph import Molecule
from moledit.editor import (
    EditAction,
    EditScript,
    apply_script,
    attachment_numbers,
    complete_embeddings,
    emit_rdkit_snippet,
    fragment_maps,
    fragment_from_text,
    graft,
    query_from_text,
    site_groups,
    source_tags,
)
from moledit.errors import AmbiguousSite, GroupNotFound, KekulizationError, MolEditError, ValenceError
from moledit.smiles import number_atoms, write_smiles


@dataclass(frozen=True)
class PoolEntry:
    name: str
    category: str
    smiles: str

    @property
    def arity(self) -> int:
        return len(fragment_maps(fragment_from_text(self.smiles)))


SUBSTITUENTS: tuple[PoolEntry, ...] = tuple(
    PoolEntry(n, c, s)
    for c, n, s in [
        ("Halogens", "Fluoro", "[*:1]F"),
        ("Halogens", "Chloro", "[*:1]Cl"),
        ("Halogens", "Bromo", "[*:1]Br"),
        ("Halogens", "Iodo", "[*:1]I"),
        ("Alkyl", "Methyl", "[*:1]C"),
        ("Alkyl", "Ethyl", "[*:1]CC"),
        ("Alkyl", "Isopropyl", "[*:1]C(C)C"),
        ("Alkyl", "tert-Butyl", "[*:1]C(C)(C)C"),
        ("Aryl", "Phenyl", "[*:1]c1ccccc1"),
        ("Aryl", "p-Tolyl", "[*:1]c1ccc(cc1)C"),
        ("Aryl", "p-Chlorophenyl", "[*:1]c1ccc(cc1)Cl"),
        ("Oxygen-containing", "Hydroxyl", "[*:1]O"),
        ("Oxygen-containing", "Methoxy", "[*:1]OC"),
        ("Oxygen-containing", "Ethoxy", "[*:1]OCC"),
        ("Oxygen-containing", "Carboxyl", "[*:1]C(=O)O"),
        ("Oxygen-containing", "Aldehyde", "[*:1]C=O"),
        ("Oxygen-containing", "Ketone", "[*:1]C(=O)C"),
        ("Nitrogen-containing", "Amino", "[*:1]N"),
        ("Nitrogen-containing", "Methylamino", "[*:1]NC"),
        ("Nitrogen-containing", "Dimethylamino", "[*:1]N(C)C"),
        ("Nitrogen-containing", "Cyano", "[*:1]C#N"),
        ("Nitrogen-containing", "Nitro", "[*:1][N+](=O)[O-]"),
        ("Sulfur-containing", "Thiol", "[*:1]S"),
        ("Sulfur-containing", "Methylthio", "[*:1]SC"),
        ("Sulfur-containing", "Sulfonyl", "[*:1]S(=O)(=O)C"),
    ]
)

LINKERS: tuple[PoolEntry, ...] = tuple(
    PoolEntry(n, c, s)
    for c, n, s in [
        ("Aromatic linkers", "Meta-phenylene", "[*:1]c1cc([*:2])ccc1"),
        ("Aromatic linkers", "Para-phenylene", "[*:1]c1ccc([*:2])cc1"),
        ("Aromatic linkers", "Ortho-phenylene", "[*:1]c1c([*:2])cccc1"),
        ("Carbonyl-based linkers", "Amide", "[*:1][C;!R](=O)[N;!R][*:2]"),
        ("Carbonyl-based linkers", "Reverse amide", "[*:1][N;!R][C;!R](=O)[*:2]"),
        ("Carbonyl-based linkers", "Ester", "[*:1][C;!R](=O)[O;!R][*:2]"),
        ("Carbonyl-based linkers", "Ketone bridge", "[*:1][C;!R](=O)[*:2]"),
        ("Carbonyl-based linkers", "Urea", "[*:1][N;!R][C;!R](=O)[N;!R][*:2]"),
        ("Carbonyl-based linkers", "Carbamate", "[*:1][O;!R][C;!R](=O)[N;!R][*:2]"),
        ("Carbonyl-based linkers", "Sulfonamide", "[*:1]S(=O)(=O)[N;!R][*:2]"),
        ("Alkyl / heteroatom linkers", "Methylene", "[*:1][C;!R][*:2]"),
        ("Alkyl / heteroatom linkers", "Ethylene", "[*:1][C;!R][C;!R][*:2]"),
        ("Alkyl / heteroatom linkers", "Ether", "[*:1][O;!R][*:2]"),
        ("Alkyl / heteroatom linkers", "Thioether", "[*:1][S;!R][*:2]"),
        ("Alkyl / heteroatom linkers", "Secondary amine", "[*:1][N;!R][*:2]"),
        ("Extended / heterocyclic linkers", "1,2,3-Triazole", "[*:1]c1nnn([*:2])c1"),
        ("Extended / heterocyclic linkers", "Imidazole-type", "[*:1]c1[nH]cc([*:2])n1"),
        ("Extended / heterocyclic linkers", "Piperazine", "[*:1]N1CCN([*:2])CC1"),
        ("Extended / heterocyclic linkers", "Piperidine", "[*:1]N1CCC([*:2])CC1"),
        ("Polar chain linker", "PEG unit (ethylene glycol)", "[*:1][O;!R][C;!R][C;!R][O;!R][*:2]"),
    ]
)


@dataclass(frozen=True)
class PatternPool:
    by_arity: dict[int, tuple[PoolEntry, ...]]

    def __post_init__(self):
        for k, entries in self.by_arity.items():
            seen = set()
            for e in entries:
                if e.arity != k:
                    raise ValueError(f"{e.smiles} has arity {e.arity}, listed under {k}")
                key = _fragment_key(e.smiles)
                if key in seen:
                    raise ValueError(f"duplicate pool fragment {e.smiles}")
                seen.add(key)

    @property
    def all(self) -> tuple[PoolEntry, ...]:
        return tuple(e for k in sorted(self.by_arity) for e in self.by_arity[k])

    def __getitem__(self, arity: int) -> tuple[PoolEntry, ...]:
        return self.by_arity.get(arity, ())

    @classmethod
    def from_smiles(cls, items: Iterable[str]) -> "PatternPool":
        groups: dict[int, list[PoolEntry]] = {}
        for s in items:
            e = PoolEntry(s, "custom", s)
            groups.setdefault(e.arity, []).append(e)
        return cls({k: tuple(v) for k, v in groups.items()})


def _fragment_key(text: str) -> str:
    q = query_from_text(text)
    # SMARTS text has no canonical form here; the text itself is the identity
    try:
        return canonical_smiles(fragment_from_text(text)) + "|" + str(sorted(q.anchors))
    except MolEditError:
        return text


def builtin_pools() -> PatternPool:
    return PatternPool({1: SUBSTITUENTS, 2: LINKERS})


# ------------------------------------------------------------ samples


@dataclass(frozen=True)
class EditRecord:
    pattern: str
    site: tuple[int | None, ...]
    replacement: str

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "site": list(self.site), "replacement": self.replacement}


@dataclass(frozen=True)
class SynthSample:
    source: str
    numbered_source: str
    edits: tuple[EditRecord, ...]
    script: EditScript
    target: str
    prompt: str
    rdkit_snippet: str
    ground_truths: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "numbered_source": self.numbered_source,
            "edits": [e.to_dict() for e in self.edits],
            "script": self.script.to_dict(),
            "target": self.target,
            "ground_truths": list(self.ground_truths),
            "prompt": self.prompt,
            "rdkit_snippet": self.rdkit_snippet,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSample":
        return cls(
            source=d["source"],
            numbered_source=d["numbered_source"],
            edits=tuple(EditRecord(e["pattern"], tuple(e["site"]), e["replacement"]) for e in d["edits"]),
            script=EditScript.from_json(d["script"]),
            target=d["target"],
            prompt=d["prompt"],
            rdkit_snippet=d["rdkit_snippet"],
            ground_truths=tuple(d.get("ground_truths", ())),
        )


_PROMPT_HEAD = (
    'You are given a molecule in SMILES format: \n'
    '"{numbered}". \n'
    '\n'
    'For reference, atoms where new groups will be attached are marked with \n'
    '"[*:n]", where "n" is the atom mapping number. \n'
    '\n'
    'Future connected atoms in groups are labeled using the same numbers, \n'
    'ensuring one-to-one attachment correspondence. You will then be given \n'
    'multiple instructions on how to edit the molecule.\n'
)
_PROMPT_EDIT = (
    '\n'
    'Replace the substructure corresponding to \n'
    '"{original}" \n'
    '{connected}'
    'with "{replacement}".\n'
)
_PROMPT_TAIL = (
    '\n'
    'Generate a Python code snippet that performs these replacements \n'
    'using RDKit via ChemicalReaction.\n'
    '\n'
    'Ensure the code is executable and returns the modified molecule as\n'
    'a new SMILES string.\n'
    '\n'
    'You must return a Python code snippet wrapped in triple backticks.\n'
    '\n'
    'The code should import modules from RDKit, perform the operation, \n'
    'and print only the modified molecule in SMILES format.'
)


def render_prompt_parts(numbered_source: str, actions: Sequence[EditAction]) -> str:
    parts = [_PROMPT_HEAD.format(numbered=numbered_source)]
    for a in actions:
        connected = ""
        if a.attachment_atoms:
            connected = f"connected at atom {', '.join(map(str, a.attachment_atoms))} \n"
        parts.append(_PROMPT_EDIT.format(original=a.original, connected=connected, replacement=a.replacement))
    parts.append(_PROMPT_TAIL)
    return "".join(parts)


def render_prompt(sample: SynthSample) -> str:
    """Training prompt for a sample: numbered source, one block per edit,
    then the code-generation instructions."""
    return render_prompt_parts(sample.numbered_source, sample.script.actions)


def _attachment_atoms(pat, emb, tags) -> tuple[int, ...] | None:
    """Context-atom numbers in map order, else the group-side numbers."""
    ctx = [tags[emb[k]] for _, k in sorted(pat.anchors.items())]
    if all(t is not None for t in ctx):
        return tuple(ctx)
    _, inner = attachment_numbers(pat, emb, tags)
    if inner:
        return tuple(sorted(inner))
    return None


def _script_ok(source: Molecule, actions: list[EditAction], expected: str) -> tuple[str, ...] | None:
    """Products of re-executing the script when it is seed-independent and
    reaches ``expected``; otherwise None."""
    try:
        out = apply_script(source, actions, strict=True)
    except (AmbiguousSite, GroupNotFound, ValenceError, KekulizationError):
        return None
    prods = tuple(out.smiles)
    return prods if expected in prods else None


def generate_sample(
    mol: Molecule,
    pool: PatternPool | None = None,
    iterations: int | None = None,
    seed: int = 0,
) -> SynthSample | None:
    """Run iterative moiety replacement on one molecule.

    All randomness comes from ``random.Random(seed)``.  ``iterations`` is
    drawn from {1, 2, 3} when not given.  Returns None when the first
    iteration finds nothing to replace.

    A drawn replacement is discarded (and another drawn) when it would
    leave the molecule unchanged, break valence rules, or yield an action
    whose outcome depends on site-selection randomness.
    """
    pool = pool or builtin_pools()
    rng = random.Random(seed)
    if iterations is None:
        iterations = rng.choice((1, 2, 3))
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    source, tags = source_tags(mol)
    cur, cur_tags = source, list(tags)
    actions: list[EditAction] = []
    records: list[EditRecord] = []
    products: tuple[str, ...] = ()
    everything = list(pool.all)
    for _ in range(iterations):
        avail = list(everything)
        replaced = False
        while avail and not replaced:
            p = avail.pop(rng.randrange(len(avail)))
            pat = query_from_text(p.smiles)
            embs = complete_embeddings(cur, pat)
            if not embs:
                continue
            sites = site_groups(pat, embs)
            site = sites[rng.randrange(len(sites))]
            emb = site[rng.randrange(len(site))]
            cur_key = canonical_smiles(cur)
            p_key = _fragment_key(p.smiles)
            choices = [r for r in pool[pat.arity] if _fragment_key(r.smiles) != p_key]
            while choices and not replaced:
                r = choices.pop(rng.randrange(len(choices)))
                try:
                    new, new_tags = graft(cur, cur_tags, pat, emb, fragment_from_text(r.smiles))
                except (ValenceError, KekulizationError):
                    continue
                new_key = canonical_smiles(new)
                if new_key == cur_key:
                    continue
                action = EditAction(p.smiles, r.smiles, _attachment_atoms(pat, emb, cur_tags))
                prods = _script_ok(source, actions + [action], new_key)
                if prods is None:
                    continue
                actions.append(action)
                records.append(EditRecord(p.smiles, tuple(cur_tags[i] for i in sorted(set(emb))), r.smiles))
                cur, cur_tags, products = new, new_tags, prods
                replaced = True
        if not replaced:
            break
    if not actions:
        return None
    script = EditScript(tuple(actions))
    numbered = number_atoms(source)
    target = canonical_smiles(cur)
    return SynthSample(
        source=write_smiles(source),
        numbered_source=numbered,
        edits=tuple(records),
        script=script,
        target=target,
        prompt=render_prompt_parts(numbered, script.actions),
        rdkit_snippet=emit_rdkit_snippet(source, script),
        ground_truths=products,
    )


def generate_corpus(
    mols: Iterable[Molecule],
    pool: PatternPool | None = None,
    seed: int = 42,
    iterations: int | None = None,
) -> Iterator[SynthSample]:
    """Samples for a stream of molecules; item k uses seed ``seed + k``,
    so chunks can be generated independently."""
    pool = pool or builtin_pools()
    for k, mol in enumerate(mols):
        s = generate_sample(mol, pool, iterations, seed + k)
        if s is not None:
            yield s
