"""Benchmark protein instances with their per-lattice qubit counts."""

from __future__ import annotations

from dataclasses import dataclass

from .lattice import Lattice


@dataclass(frozen=True)
class ProteinInstance:
    pdb_id: str
    sequence: str
    qubits: dict[Lattice, int]

    @property
    def n(self) -> int:
        return len(self.sequence)

    @property
    def supported_lattices(self) -> tuple[Lattice, ...]:
        return tuple(lat for lat in Lattice if lat in self.qubits)


def _row(pdb_id: str, sequence: str, tetra: int | None, bcc: int | None, fcc: int | None) -> ProteinInstance:
    cells = {Lattice.TETRA: tetra, Lattice.BCC: bcc, Lattice.FCC: fcc}
    return ProteinInstance(pdb_id, sequence, {k: v for k, v in cells.items() if v is not None})


# "ABCP" is the alpha-bag cell peptide, which has no PDB entry
INSTANCES: tuple[ProteinInstance, ...] = (
    _row("4QXX", "GNLVS", None, None, 10),
    _row("2OL9", "SNQNNF", None, None, 14),
    _row("ABCP", "APRLRFY", None, 14, None),
    _row("2M6C", "GCVLYPWC", None, 17, 22),
    _row("1N9U", "DRVYIHPFHL", None, 23, None),
    _row("5AWL", "YYDPETGTWY", 13, 23, 30),
    _row("2K2R", "DLDALLADLE", 13, None, 30),
    _row("2MZX", "QYQFWKNFQT", 13, None, 30),
    _row("1IXU", "FATMRYPSDSDE", 17, None, 38),
    _row("2N5R", "VRRFDLLKRILK", 17, 29, 38),
    _row("2L24", "IFGAIAGFIKNIW", 19, 32, 42),
    _row("6Q08", "INWLKLGKKIIASL", 21, None, None),
    _row("1K43", "RGKWTYNGITYEGR", 21, 35, 46),
    _row("8T61", "RHYYKFNSTGRHYHYY", 25, 41, None),
    _row("8T63", "WHMWNTVPNAKQVIAA", 25, None, None),
    _row("2NDC", "GGLRSLGRKILRAWKKYG", 29, None, None),
    _row("2NDE", "IGLRGLGRKIALIHKKYG", 29, None, None),
    _row("2JOF", "DAYAQWLKDGGPSSGRPPPS", 33, None, None),
    _row("8B1X", "KKPGASLAALQALQALQAAQAAKKY", 43, None, None),
    _row("6A8Y", "YYHFWHRGVTKRSLSPHRPRHSRLQR", 45, None, None),
)

BY_ID = {inst.pdb_id: inst for inst in INSTANCES}


def get_instance(pdb_id: str) -> ProteinInstance:
    try:
        return BY_ID[pdb_id.upper()]
    except KeyError:
        raise KeyError(f"unknown instance {pdb_id!r}; known: {', '.join(BY_ID)}") from None
