"""Periodic-table data and the default valence model."""

from __future__ import annotations

# symbol, standard atomic weight
_TABLE = """
H 1.008 He 4.0026 Li 6.94 Be 9.0122 B 10.81 C 12.011 N 14.007 O 15.999 F 18.998
Ne 20.180 Na 22.990 Mg 24.305 Al 26.982 Si 28.085 P 30.974 S 32.06 Cl 35.45
Ar 39.948 K 39.098 Ca 40.078 Sc 44.956 Ti 47.867 V 50.942 Cr 51.996 Mn 54.938
Fe 55.845 Co 58.933 Ni 58.693 Cu 63.546 Zn 65.38 Ga 69.723 Ge 72.630 As 74.922
Se 78.971 Br 79.904 Kr 83.798 Rb 85.468 Sr 87.62 Y 88.906 Zr 91.224 Nb 92.906
Mo 95.95 Tc 98.0 Ru 101.07 Rh 102.91 Pd 106.42 Ag 107.87 Cd 112.41 In 114.82
Sn 118.71 Sb 121.76 Te 127.60 I 126.90 Xe 131.29 Cs 132.91 Ba 137.33 La 138.91
Ce 140.12 Pr 140.91 Nd 144.24 Pm 145.0 Sm 150.36 Eu 151.96 Gd 157.25 Tb 158.93
Dy 162.50 Ho 164.93 Er 167.26 Tm 168.93 Yb 173.05 Lu 174.97 Hf 178.49 Ta 180.95
W 183.84 Re 186.21 Os 190.23 Ir 192.22 Pt 195.08 Au 196.97 Hg 200.59 Tl 204.38
Pb 207.2 Bi 208.98 Po 209.0 At 210.0 Rn 222.0 Fr 223.0 Ra 226.0 Ac 227.0
Th 232.04 Pa 231.04 U 238.03 Np 237.0 Pu 244.0 Am 243.0 Cm 247.0 Bk 247.0
Cf 251.0 Es 252.0 Fm 257.0 Md 258.0 No 259.0 Lr 262.0 Rf 267.0 Db 268.0
Sg 269.0 Bh 270.0 Hs 277.0 Mt 278.0 Ds 281.0 Rg 282.0 Cn 285.0 Nh 286.0
Fl 289.0 Mc 290.0 Lv 293.0 Ts 294.0 Og 294.0
"""

_tokens = _TABLE.split()
SYMBOLS: tuple[str, ...] = tuple(_tokens[0::2])
ATOMIC_NUMBER: dict[str, int] = {sym: i + 1 for i, sym in enumerate(SYMBOLS)}
ATOMIC_NUMBER["*"] = 0
MASS: dict[str, float] = {sym: float(m) for sym, m in zip(_tokens[0::2], _tokens[1::2])}
MASS["*"] = 0.0
HYDROGEN_MASS = MASS["H"]

DUMMY = "*"

# Neutral-atom allowed valences.  Elements absent here have no valence model:
# their hydrogens must be written explicitly and nothing is checked.
DEFAULT_VALENCE: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
    "Se": (2, 4, 6),
}

ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_ORGANIC = frozenset({"B", "C", "N", "O", "P", "S"})
# Symbols that may be written lowercase inside brackets.
AROMATIC_BRACKET = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As", "Te"})


def is_element(symbol: str) -> bool:
    return symbol in ATOMIC_NUMBER


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...]:
    """Return the legal total valences of ``element`` carrying ``charge``.

    Charged atoms follow the isoelectronic rule: group 15-17 elements gain
    one bond per positive charge and lose one per negative charge; carbon
    loses one bond per unit of either sign; boron behaves like the
    isoelectronic carbon when negative.
    """
    base = DEFAULT_VALENCE.get(element)
    if base is None:
        return ()
    if charge == 0:
        return base
    if element == "C":
        vals = tuple(v - abs(charge) for v in base)
    elif element == "B":
        vals = tuple(v - charge for v in base)
    else:
        vals = tuple(v + charge for v in base)
    return tuple(v for v in vals if v >= 0)


def default_hydrogens(element: str, charge: int, bond_sum: int) -> int | None:
    """Implicit hydrogen count for an unbracketed atom, or None if over-valent."""
    vals = allowed_valences(element, charge)
    if not vals:
        return 0
    for v in vals:
        if v >= bond_sum:
            return v - bond_sum
    return None
