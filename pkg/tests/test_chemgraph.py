import random

import pytest

from moledit import canonical_smiles, descriptors, parse_smiles, random_smiles
from moledit.chem import perceive
from moledit.chem.descriptors import mol_weight
from moledit.chem.graph import Atom, Bond, BondOrder
from moledit.errors import KekulizationError, ValenceError


def test_benzene_perception():
    m = parse_smiles("c1ccccc1")
    assert len(m.rings) == 1 and len(m.rings[0]) == 6
    assert all(a.aromatic for a in m.atoms)
    assert list(m.hcount) == [1] * 6


def test_cyclopropane():
    m = parse_smiles("C1CC1")
    assert [len(r) for r in m.rings] == [3]
    assert not any(a.aromatic for a in m.atoms)


def test_pentavalent_carbon():
    with pytest.raises(ValenceError):
        parse_smiles("C(C)(C)(C)(C)C")


def test_bad_aromatic_system():
    with pytest.raises(KekulizationError):
        parse_smiles("c1cccc1")


@pytest.mark.parametrize(
    "a,b",
    [
        ("OCC", "CCO"),
        ("c1ccccc1", "C1=CC=CC=C1"),
        ("c1ccncc1", "C1=CC=NC=C1"),
        ("Cc1ccc2[nH]ccc2c1", "CC1=CC2=C(NC=C2)C=C1"),
    ],
)
def test_canonical_equivalence(a, b):
    assert canonical_smiles(parse_smiles(a)) == canonical_smiles(parse_smiles(b))


def test_canonical_fixpoint():
    s = canonical_smiles(parse_smiles("CC(=O)Nc1ccc(O)cc1"))
    assert canonical_smiles(parse_smiles(s)) == s


def test_maps_and_isotopes_are_identity():
    assert canonical_smiles(parse_smiles("[*:1]C")) != canonical_smiles(parse_smiles("[*:2]C"))
    assert canonical_smiles(parse_smiles("[13CH4]")) != canonical_smiles(parse_smiles("C"))


def test_stereo_dropped():
    m = parse_smiles("C/C=C/C")
    assert m.stereo_dropped
    assert canonical_smiles(m) == canonical_smiles(parse_smiles("CC=CC"))
    assert canonical_smiles(parse_smiles("N[C@@H](C)C(=O)O")) == canonical_smiles(parse_smiles("NC(C)C(=O)O"))


def test_descriptors():
    d = descriptors(parse_smiles("C"))
    assert d.mol_weight == pytest.approx(16.04, abs=0.01)
    assert d.heavy_atoms == 1
    w = descriptors(parse_smiles("O"))
    assert (w.hbd, w.hba) == (1, 1)
    b = descriptors(parse_smiles("c1ccccc1"))
    assert (b.rings, b.heavy_atoms) == (1, 6)


def test_mass_additivity():
    total = mol_weight(parse_smiles("CCO.c1ccccc1"))
    assert total == pytest.approx(mol_weight(parse_smiles("CCO")) + mol_weight(parse_smiles("c1ccccc1")))


def test_explicit_h_overrides_valence_model():
    m = parse_smiles("[CH2]C")
    assert m.hcount[0] == 2
    assert parse_smiles("[nH]1cccc1").hcount[0] == 1


def test_perceive_is_deterministic():
    atoms = [Atom("C"), Atom("C"), Atom("O")]
    bonds = [Bond(0, 1), Bond(1, 2)]
    a, b = perceive(atoms, bonds), perceive(atoms, bonds)
    assert (a.hcount, a.rings, a.kekule) == (b.hcount, b.rings, b.kekule)


def test_valences_legal_after_perception():
    from moledit.chem.elements import allowed_valences

    for smi in ["CS(=O)(=O)N", "O=P(O)(O)O", "C[N+](C)(C)C", "[O-][N+](=O)c1ccccc1", "c1ccsc1"]:
        m = parse_smiles(smi)
        for i, a in enumerate(m.atoms):
            total = sum(m.kekule[bi] for _, bi in m.neighbors(i)) + m.hcount[i]
            assert total in allowed_valences(a.element, a.charge), (smi, i)


def test_canonical_invariant_under_spelling():
    rng = random.Random(5)
    for smi in ["CC(C)Cc1ccc(cc1)C(C)C(=O)O", "O=C1NC(=O)C(N1)(c1ccccc1)c1ccccc1", "Cn1cnc2c1c(=O)n(C)c(=O)n2C"]:
        m = parse_smiles(smi)
        ref = canonical_smiles(m)
        assert {canonical_smiles(parse_smiles(random_smiles(m, rng))) for _ in range(30)} == {ref}


def test_aromatic_bond_order_enum():
    m = parse_smiles("c1ccccc1")
    assert {b.order for b in m.bonds} == {BondOrder.AROMATIC}
    assert sorted(m.kekule) == [1, 1, 1, 2, 2, 2]
