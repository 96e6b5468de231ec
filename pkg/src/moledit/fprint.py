"""Circular (ECFP-style) fingerprints and Tanimoto similarity.

Identifiers are 64-bit FNV-1a hashes over fixed-width integer encodings, so
fingerprints are identical on every platform and Python version.  Bits are
not meant to agree with other toolkits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from moledit.chem.canon import canonical_smiles
from moledit.chem.elements import ATOMIC_NUMBER
from moledit.chem.graph import Molecule
from moledit.errors import WidthMismatch

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK
    return h


def _hash_ints(values) -> int:
    return fnv1a64(struct.pack(f"<{len(values)}q", *[v - (1 << 64) if v >= 1 << 63 else v for v in values]))


@dataclass(frozen=True)
class Fingerprint:
    bits: int
    nbits: int = 2048

    def __post_init__(self):
        if self.nbits <= 0 or self.nbits & (self.nbits - 1):
            raise ValueError("fingerprint width must be a power of two")

    def popcount(self) -> int:
        return self.bits.bit_count()

    def on_bits(self) -> list[int]:
        return [i for i in range(self.nbits) if self.bits >> i & 1]

    def to_hex(self) -> str:
        return format(self.bits, f"0{self.nbits // 4}x")

    @classmethod
    def from_hex(cls, text: str, nbits: int | None = None) -> "Fingerprint":
        return cls(int(text, 16), nbits or len(text) * 4)


def atom_identifiers(mol: Molecule) -> list[int]:
    """Radius-0 identifiers."""
    ring = mol.atom_in_ring
    out = []
    for i, a in enumerate(mol.atoms):
        out.append(
            _hash_ints(
                (
                    ATOMIC_NUMBER[a.element],
                    mol.heavy_degree(i),
                    a.charge,
                    mol.hcount[i],
                    int(ring[i]),
                    int(a.is_dummy),
                )
            )
        )
    return out


def ecfp_identifiers(mol: Molecule, radius: int = 2) -> list[int]:
    """Every identifier from every iteration (radius 0..radius)."""
    ids = atom_identifiers(mol)
    every = list(ids)
    for it in range(1, radius + 1):
        nxt = []
        for i in range(len(mol.atoms)):
            env = sorted((int(mol.bonds[b].order), ids[nb]) for nb, b in mol.neighbors(i))
            flat = [it, ids[i]]
            for order, nid in env:
                flat.extend((order, nid))
            nxt.append(_hash_ints(flat))
        ids = nxt
        every.extend(ids)
    return every


def ecfp(mol: Molecule, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Folded circular fingerprint; radius 2 corresponds to ECFP4.

    Dummy atoms take part as element 0.
    """
    bits = 0
    for ident in ecfp_identifiers(mol, radius):
        bits |= 1 << (ident % nbits)
    return Fingerprint(bits, nbits)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b|, and 1.0 when both are empty."""
    if a.nbits != b.nbits:
        raise WidthMismatch(f"fingerprint widths differ: {a.nbits} vs {b.nbits}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


class FingerprintCache:
    """Fingerprints keyed by canonical SMILES, optionally persisted as TSV."""

    def __init__(self, path: str | Path | None = None, radius: int = 2, nbits: int = 2048):
        self.path = Path(path) if path else None
        self.radius = radius
        self.nbits = nbits
        self._data: dict[str, Fingerprint] = {}
        if self.path and self.path.exists():
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                smi, hexbits = line.split("\t")
                self._data[smi] = Fingerprint.from_hex(hexbits, nbits)

    def get(self, mol: Molecule) -> Fingerprint:
        key = canonical_smiles(mol)
        fp = self._data.get(key)
        if fp is None:
            fp = self._data[key] = ecfp(mol, self.radius, self.nbits)
        return fp

    def __len__(self) -> int:
        return len(self._data)

    def save(self, path: str | Path | None = None) -> None:
        target = Path(path) if path else self.path
        if target is None:
            raise ValueError("no cache path given")
        target.write_text("".join(f"{k}\t{v.to_hex()}\n" for k, v in sorted(self._data.items())))
