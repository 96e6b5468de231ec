"""Compound preprocessing filters and fragment-similarity decontamination."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from moledit.chem.canon import canonical_smiles
from moledit.chem.descriptors import mol_weight
from moledit.chem.graph import Molecule
from moledit.chem.perceive import perceive
from moledit.fprint import Fingerprint, ecfp, tanimoto

ALLOWED_ELEMENTS = frozenset({"H", "C", "N", "O", "F", "Cl", "Br", "I", "S", "P", "B", "Se"})


@dataclass(frozen=True)
class FilterConfig:
    min_mw: float = 100.0
    max_mw: float = 800.0
    allowed_elements: frozenset[str] = ALLOWED_ELEMENTS
    max_chain: int = 6


@dataclass(frozen=True)
class Failure:
    rule: str  # salt | mw | atoms | chain
    detail: str


@dataclass
class FilterReport:
    passed: bool
    kept_fragment: str
    failures: list[Failure] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "kept_fragment": self.kept_fragment,
            "failures": [{"rule": f.rule, "detail": f.detail} for f in self.failures],
        }


def submolecule(mol: Molecule, keep: Sequence[int]) -> Molecule:
    keep = sorted(keep)
    idx = {a: k for k, a in enumerate(keep)}
    atoms, bonds = mol.kekule_form()
    new_bonds = [b.__class__(idx[b.begin], idx[b.end], b.order) for b in bonds if b.begin in idx and b.end in idx]
    return perceive([atoms[i] for i in keep], new_bonds, stereo_dropped=mol.stereo_dropped)


def largest_fragment(mol: Molecule) -> Molecule:
    """Component with most heavy atoms; ties go to higher weight, then the
    smaller canonical string."""
    comps = mol.components()
    if len(comps) <= 1:
        return mol
    frags = [submolecule(mol, c) for c in comps]
    return min(frags, key=lambda f: (-f.num_heavy, -mol_weight(f), canonical_smiles(f)))


def longest_chain(mol: Molecule) -> int:
    """Atoms in the longest path of acyclic heavy atoms with heavy degree <= 2."""
    ring = mol.atom_in_ring
    ok = [
        a.element != "H" and not ring[i] and mol.heavy_degree(i) <= 2
        for i, a in enumerate(mol.atoms)
    ]
    # such atoms induce paths (no cycles possible outside rings), so measure components
    seen = [False] * len(mol.atoms)
    best = 0
    for s in range(len(mol.atoms)):
        if not ok[s] or seen[s]:
            continue
        stack, size = [s], 0
        seen[s] = True
        while stack:
            i = stack.pop()
            size += 1
            for nb, _ in mol.neighbors(i):
                if ok[nb] and not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
        best = max(best, size)
    return best


def filter_compound(mol: Molecule, config: FilterConfig = FilterConfig()) -> FilterReport:
    """Apply the salt, weight, element and chain rules.

    Every failing rule is reported, not just the first.
    """
    frag = largest_fragment(mol)
    failures: list[Failure] = []
    mw = mol_weight(frag)
    if not config.min_mw <= mw <= config.max_mw:
        failures.append(Failure("mw", f"molecular weight {mw:.2f} outside [{config.min_mw:g}, {config.max_mw:g}]"))
    bad = sorted({a.element for a in frag.atoms if a.element not in config.allowed_elements})
    if bad:
        failures.append(Failure("atoms", "disallowed element(s): " + ", ".join(bad)))
    chain = longest_chain(frag)
    if chain > config.max_chain:
        failures.append(Failure("chain", f"unbranched acyclic chain of {chain} heavy atoms"))
    return FilterReport(not failures, canonical_smiles(frag), failures)


def decontaminate(
    test_pairs: Iterable[tuple[Molecule, Molecule]],
    train_moieties: Iterable[Molecule],
    threshold: float = 0.6,
) -> list[int]:
    """Indices of test pairs kept.

    A pair is dropped when either fragment reaches ``threshold`` Tanimoto
    similarity (inclusive) with any training moiety.
    """
    train_fps: list[Fingerprint] = [ecfp(m) for m in train_moieties]
    kept = []
    for k, (a, b) in enumerate(test_pairs):
        fa, fb = ecfp(a), ecfp(b)
        worst = max((max(tanimoto(fa, t), tanimoto(fb, t)) for t in train_fps), default=0.0)
        if worst < threshold:
            kept.append(k)
    return kept


def max_similarity(frag: Molecule, train_moieties: Iterable[Molecule]) -> float:
    fp = ecfp(frag)
    return max((tanimoto(fp, ecfp(t)) for t in train_moieties), default=0.0)
