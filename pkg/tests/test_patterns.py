import pytest

import oracles
from conftest import read_smi
from moledit import parse_smiles
from moledit.errors import SmilesSyntaxError, UnsupportedPrimitive
from moledit.patterns import find_matches, parse_pattern, verify_match


def test_amide_linker_pattern():
    p = parse_pattern("[*:1][C;!R](=O)[N;!R][*:2]")
    assert len(p.atoms) == 5
    assert sum(q.in_ring is False for q in p.atoms) == 2
    assert sorted(p.anchors) == [1, 2]


def test_single_anchor():
    p = parse_pattern("[*:1]")
    assert len(p.atoms) == 1 and p.atoms[0].is_wildcard and p.arity == 1


def test_unterminated_bracket():
    with pytest.raises(SmilesSyntaxError):
        parse_pattern("[C;!R")


@pytest.mark.parametrize("text", ["[C,N]", "[CD2]", "[$(CO)]", "[CX4]"])
def test_unsupported(text):
    with pytest.raises(UnsupportedPrimitive):
        parse_pattern(text)


def test_anisole_methoxy():
    ms = find_matches(parse_smiles("COc1ccccc1"), parse_pattern("[*:1]OC"))
    assert len(ms) == 1
    m = parse_smiles("COc1ccccc1")
    anchor = ms[0].mapping[0]
    assert m.atoms[anchor].aromatic


def test_benzene_in_toluene_deduplicated():
    assert len(find_matches(parse_smiles("Cc1ccccc1"), parse_pattern("c1ccccc1"))) == 1


def test_no_chlorine_in_ethanol():
    assert find_matches(parse_smiles("CCO"), parse_pattern("[*:1]Cl")) == []


def test_wildcard_skips_explicit_hydrogen():
    mol = parse_smiles("[H]OC")
    ms = find_matches(mol, parse_pattern("[*:1]O"))
    assert len(ms) == 1
    assert mol.atoms[ms[0].mapping[0]].element == "C"


def test_ring_constraint():
    assert find_matches(parse_smiles("C1CCNC1=O"), parse_pattern("[*:1][C;!R](=O)[N;!R][*:2]")) == []
    assert len(find_matches(parse_smiles("CC(=O)NC"), parse_pattern("[*:1][C;!R](=O)[N;!R][*:2]"))) == 1


def test_h_count_primitive():
    assert len(find_matches(parse_smiles("CCC"), parse_pattern("[CH2]"))) == 1
    assert len(find_matches(parse_smiles("c1ccccc1C"), parse_pattern("[cH]"))) == 5


def test_unspecified_bond_between_aromatic_atoms():
    # matches aromatic or single
    assert find_matches(parse_smiles("c1ccccc1-c1ccccc1"), parse_pattern("cc"))
    assert len(find_matches(parse_smiles("c1ccccc1-c1ccccc1"), parse_pattern("c:c"))) == 12


def test_matches_sorted_and_verified():
    mol = parse_smiles("OCCOCCO")
    pat = parse_pattern("[*:1]O")
    ms = find_matches(mol, pat)
    keys = [tuple(sorted(m.mapping)) for m in ms]
    assert keys == sorted(keys)
    assert len({m.atoms for m in ms}) == len(ms)
    assert all(verify_match(mol, pat, m.mapping) for m in ms)


PATTERNS = ["[*:1]C", "[*:1]O[*:2]", "c1ccccc1", "[*:1]C(=O)N", "C=O", "[*:1]c1ccc([*:2])cc1", "[N;!R]", "CC"]


@pytest.mark.parametrize("pat", PATTERNS)
def test_against_brute_force(pat):
    q = parse_pattern(pat)
    for smi in read_smi("robust_500.smi")[:200:5]:
        mol = parse_smiles(smi)
        if mol.num_heavy > 12:
            continue
        got = {m.atoms for m in find_matches(mol, q)}
        assert got == oracles.brute_force_atom_sets(mol, q), smi
