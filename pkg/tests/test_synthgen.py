import json

import pytest

from conftest import read_smi
from moledit import canonical_smiles, parse_smiles
from moledit.editor import apply_script, arity
from moledit.synthgen import (
    LINKERS,
    SUBSTITUENTS,
    PatternPool,
    SynthSample,
    builtin_pools,
    generate_corpus,
    generate_sample,
    render_prompt,
)


def test_pool_sizes_and_members():
    pool = builtin_pools()
    assert len(pool[1]) == 25 and len(pool[2]) == 20
    smiles1 = {e.smiles for e in pool[1]}
    smiles2 = {e.smiles for e in pool[2]}
    assert "[*:1]C#N" in smiles1
    assert "[*:1]N1CCN([*:2])CC1" in smiles2
    assert "[*:1][C;!R](=O)[N;!R][*:2]" in smiles2
    assert all(arity(e.smiles) == 1 for e in SUBSTITUENTS)
    assert all(arity(e.smiles) == 2 for e in LINKERS)


def test_pool_validation():
    with pytest.raises(ValueError):
        PatternPool.from_smiles(["[*:1]F", "F[*:1]"])
    p = PatternPool.from_smiles(["[*:1]F", "[*:1]O[*:2]"])
    assert len(p.all) == 2


def test_sample_contract():
    mol = parse_smiles("COc1ccc(cc1)C(=O)Nc1ccccc1")
    s = generate_sample(mol, seed=7, iterations=2)
    assert s is not None
    assert 1 <= len(s.edits) <= 2
    out = apply_script(parse_smiles(s.source), s.script, 0)
    assert s.target in out.smiles
    assert set(out.smiles) == set(s.ground_truths)
    for e in s.edits:
        assert arity(e.pattern) == arity(e.replacement)
        assert e.pattern != e.replacement


def test_deterministic():
    mol = parse_smiles("Clc1ccc(cc1)C(=O)N1CCOCC1")
    a = generate_sample(mol, seed=3)
    b = generate_sample(parse_smiles("Clc1ccc(cc1)C(=O)N1CCOCC1"), seed=3)
    assert a.to_json() == b.to_json()


def test_no_match_returns_none():
    assert generate_sample(parse_smiles("C1CCCCC1"), seed=0) is None


def test_iterations_validation():
    with pytest.raises(ValueError):
        generate_sample(parse_smiles("Cc1ccccc1"), iterations=0)


def test_prompt():
    s = generate_sample(parse_smiles("COc1ccc(cc1)C(=O)Nc1ccccc1"), seed=11, iterations=3)
    text = render_prompt(s)
    assert text.startswith("You are given a molecule in SMILES format")
    assert text.count("Replace the substructure corresponding to") == len(s.edits)
    assert s.numbered_source in text
    assert text == s.prompt
    assert "ChemicalReaction" in text


def test_json_round_trip():
    s = generate_sample(parse_smiles("Brc1ccc(cc1)S(=O)(=O)N1CCCC1"), seed=5)
    d = json.loads(s.to_json())
    assert set(d) >= {"source", "numbered_source", "edits", "script", "target", "prompt", "rdkit_snippet"}
    assert SynthSample.from_dict(d) == s


def test_seed_splitting_is_order_independent():
    mols = [parse_smiles(x) for x in read_smi("corpus_1000.smi")[:12]]
    whole = [s.to_json() for s in generate_corpus(mols, seed=100)]
    parts = [s.to_json() for s in generate_corpus(mols[:6], seed=100)]
    parts += [s.to_json() for s in generate_corpus(mols[6:], seed=106)]
    assert whole == parts
