"""Turn-based lattice encodings for coarse-grained protein chains.

Three lattices are supported: tetrahedral (2 bits per turn, two alternating
sublattice tables), body-centred cubic (3 bits) and face-centred cubic
(4 bits, with four unused patterns that decode to "redundant" markers).

Bitstring convention: qubit 0 is the leftmost character, and within one turn
the bits are read most-significant first.  A fixed bit prefix removes the
global rotation/reflection symmetry; measured bitstrings only carry the bits
that follow it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from ._io import write_csv

Vec3 = tuple[int, int, int]
Label = Union[int, str]


class CodecError(ValueError):
    """Raised for malformed bitstrings or turn sequences."""


class Lattice(str, enum.Enum):
    TETRA = "tetra"
    BCC = "bcc"
    FCC = "fcc"

    @classmethod
    def parse(cls, value: "Lattice | str") -> "Lattice":
        if isinstance(value, Lattice):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise CodecError(f"unknown lattice {value!r}; expected tetra, bcc or fcc") from None


@dataclass(frozen=True)
class LatticeSpec:
    kind: Lattice
    qubits_per_turn: int
    # one table for BCC/FCC; (A, B) for the tetrahedral sublattices.
    # Each table maps label -> (bit pattern, turn vector).
    tables: tuple[tuple[tuple[str, Vec3], ...], ...]
    knn_squared: tuple[int, ...]
    redundant_patterns: frozenset[str]
    fixed_prefix: str
    qubit_offset: int
    min_residues: int
    _lookup: tuple[dict[str, tuple[int, Vec3]], ...] = field(repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        lookup = tuple({bits: (label, vec) for label, (bits, vec) in enumerate(t)} for t in self.tables)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def knn_distances(self) -> tuple[float, ...]:
        return tuple(math.sqrt(s) for s in self.knn_squared)

    def table_for_turn(self, i: int) -> int:
        """Index of the turn table used by turn ``i`` (sublattice-aware)."""
        return i % len(self.tables)

    def resolve(self, i: int, pattern: str) -> tuple[Label, Vec3 | None]:
        """Map the bit pattern of turn ``i`` to (label, vector); redundant -> (pattern, None)."""
        hit = self._lookup[self.table_for_turn(i)].get(pattern)
        if hit is None:
            if pattern in self.redundant_patterns:
                return pattern, None
            raise CodecError(f"pattern {pattern!r} is not a turn on {self.kind.value}")
        return hit

    def pattern(self, i: int, label: Label) -> str:
        if isinstance(label, str):
            if label not in self.redundant_patterns and label not in self._lookup[self.table_for_turn(i)]:
                raise CodecError(f"pattern {label!r} is not valid on {self.kind.value}")
            return label
        table = self.tables[self.table_for_turn(i)]
        if not 0 <= label < len(table):
            raise CodecError(f"turn label {label} out of range for {self.kind.value}")
        return table[label][0]


_TETRA_A = (
    ("00", (1, 1, 1)),
    ("01", (-1, -1, 1)),
    ("10", (1, -1, -1)),
    ("11", (-1, 1, -1)),
)
_TETRA_B = (
    ("00", (-1, -1, -1)),
    ("01", (1, 1, -1)),
    ("10", (1, -1, 1)),
    ("11", (-1, 1, 1)),
)
_BCC = (
    ("000", (1, 1, -1)),
    ("001", (-1, 1, -1)),
    ("010", (-1, -1, 1)),
    ("011", (-1, 1, 1)),
    ("100", (1, -1, -1)),
    ("101", (1, -1, 1)),
    ("110", (-1, -1, -1)),
    ("111", (1, 1, 1)),
)
_FCC = (
    ("0000", (1, 1, 0)),
    ("0011", (-1, -1, 0)),
    ("1100", (-1, 1, 0)),
    ("1111", (1, -1, 0)),
    ("1001", (0, 1, 1)),
    ("0101", (0, -1, -1)),
    ("1010", (0, 1, -1)),
    ("0110", (0, -1, 1)),
    ("1000", (1, 0, 1)),
    ("0100", (-1, 0, -1)),
    ("1011", (1, 0, -1)),
    ("0111", (-1, 0, 1)),
)

SPECS: dict[Lattice, LatticeSpec] = {
    Lattice.TETRA: LatticeSpec(
        kind=Lattice.TETRA,
        qubits_per_turn=2,
        tables=(_TETRA_A, _TETRA_B),
        knn_squared=(3, 8, 11),
        redundant_patterns=frozenset(),
        fixed_prefix="01" "00" "0",
        qubit_offset=5,
        min_residues=4,
    ),
    Lattice.BCC: LatticeSpec(
        kind=Lattice.BCC,
        qubits_per_turn=3,
        tables=(_BCC,),
        knn_squared=(3, 4, 8),
        redundant_patterns=frozenset(),
        fixed_prefix="000" "0",
        qubit_offset=4,
        min_residues=3,
    ),
    Lattice.FCC: LatticeSpec(
        kind=Lattice.FCC,
        qubits_per_turn=4,
        tables=(_FCC,),
        knn_squared=(2, 4, 6),
        redundant_patterns=frozenset({"0001", "0010", "1101", "1110"}),
        fixed_prefix="0000" "10",
        qubit_offset=6,
        min_residues=3,
    ),
}


def get_spec(lattice: Lattice | LatticeSpec | str) -> LatticeSpec:
    if isinstance(lattice, LatticeSpec):
        return lattice
    return SPECS[Lattice.parse(lattice)]


@dataclass(frozen=True)
class TurnSequence:
    lattice: LatticeSpec
    turns: tuple[Vec3 | None, ...]
    raw_bits: tuple[str, ...]
    labels: tuple[Label, ...]

    @property
    def redundant_count(self) -> int:
        return sum(t is None for t in self.turns)


@dataclass(frozen=True)
class Conformation:
    coords: np.ndarray
    redundant_count: int = 0

    @property
    def n_residues(self) -> int:
        return len(self.coords)


def qubit_count(lattice: Lattice | LatticeSpec | str, n: int) -> int:
    """Number of configuration qubits for a chain of ``n`` residues."""
    spec = get_spec(lattice)
    if n < spec.min_residues:
        raise CodecError(f"{spec.kind.value} needs at least {spec.min_residues} residues, got {n}")
    return spec.qubits_per_turn * (n - 1) - spec.qubit_offset


def knn_distance(lattice: Lattice | LatticeSpec | str, k: int) -> float:
    spec = get_spec(lattice)
    if not 1 <= k <= len(spec.knn_squared):
        raise CodecError(f"k-NN order {k} unsupported (1..{len(spec.knn_squared)})")
    return math.sqrt(spec.knn_squared[k - 1])


def _check_bits(bits: str) -> None:
    if any(c not in "01" for c in bits):
        raise CodecError(f"bitstring contains characters other than 0/1: {bits!r}")


def decode_bitstring(bits: str, lattice: Lattice | LatticeSpec | str, n: int) -> TurnSequence:
    spec = get_spec(lattice)
    expected = qubit_count(spec, n)
    if len(bits) != expected:
        raise CodecError(f"expected {expected} bits for n={n} on {spec.kind.value}, got {len(bits)}")
    _check_bits(bits)
    full = spec.fixed_prefix + bits
    q = spec.qubits_per_turn
    raw = tuple(full[i * q:(i + 1) * q] for i in range(n - 1))
    labels, turns = [], []
    for i, pattern in enumerate(raw):
        label, vec = spec.resolve(i, pattern)
        labels.append(label)
        turns.append(vec)
    return TurnSequence(spec, tuple(turns), raw, tuple(labels))


def encode_turns(turns: TurnSequence | Sequence[Label], lattice: Lattice | LatticeSpec | str, n: int) -> str:
    """Inverse of :func:`decode_bitstring`.

    ``turns`` holds one label per turn (an ``int`` table label, or the raw
    pattern string for an FCC redundant turn), or a decoded TurnSequence.
    """
    spec = get_spec(lattice)
    labels = turns.labels if isinstance(turns, TurnSequence) else tuple(turns)
    if len(labels) != n - 1:
        raise CodecError(f"expected {n - 1} turns, got {len(labels)}")
    full = "".join(spec.pattern(i, lab) for i, lab in enumerate(labels))
    prefix = spec.fixed_prefix
    if not full.startswith(prefix):
        raise CodecError(f"turns do not match the fixed prefix {prefix!r}")
    bits = full[len(prefix):]
    if len(bits) != qubit_count(spec, n):
        raise CodecError("turn sequence length inconsistent with n")
    return bits


def turns_to_conformation(ts: TurnSequence) -> Conformation:
    coords = np.zeros((len(ts.turns) + 1, 3), dtype=np.int64)
    for i, vec in enumerate(ts.turns):
        coords[i + 1] = coords[i] if vec is None else coords[i] + vec
    return Conformation(coords, ts.redundant_count)


def decode_conformation(bits: str, lattice: Lattice | LatticeSpec | str, n: int) -> Conformation:
    return turns_to_conformation(decode_bitstring(bits, lattice, n))


# -- vectorised decoding -----------------------------------------------------

def _pattern_tables(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """(n_tables, 2**q, 3) vectors and (n_tables, 2**q) redundancy flags."""
    size = 2 ** spec.qubits_per_turn
    vecs = np.zeros((len(spec.tables), size, 3), dtype=np.int64)
    redundant = np.zeros((len(spec.tables), size), dtype=bool)
    for t, table in enumerate(spec.tables):
        for bits, vec in table:
            vecs[t, int(bits, 2)] = vec
        for bits in spec.redundant_patterns:
            redundant[t, int(bits, 2)] = True
    return vecs, redundant


def index_to_bitstring(index: int, width: int) -> str:
    return format(int(index), f"0{width}b") if width else ""


def decode_indices(indices: np.ndarray, lattice: Lattice | LatticeSpec | str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode integer-coded bitstrings (qubit 0 = most significant bit).

    Returns bead coordinates of shape (B, n, 3) and per-row redundant counts.
    """
    spec = get_spec(lattice)
    m = qubit_count(spec, n)
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    var_bits = (idx[:, None] >> shifts) & 1
    prefix = np.array([int(c) for c in spec.fixed_prefix], dtype=np.int64)
    bits = np.concatenate([np.broadcast_to(prefix, (len(idx), len(prefix))), var_bits], axis=1)
    q = spec.qubits_per_turn
    weights = 1 << np.arange(q - 1, -1, -1, dtype=np.int64)
    patterns = bits.reshape(len(idx), n - 1, q) @ weights
    vecs, redundant = _pattern_tables(spec)
    which = np.arange(n - 1) % len(spec.tables)
    steps = vecs[which, patterns]
    coords = np.zeros((len(idx), n, 3), dtype=np.int64)
    np.cumsum(steps, axis=1, out=coords[:, 1:])
    return coords, redundant[which, patterns].sum(axis=1)


# -- reference table export --------------------------------------------------

def turn_table_rows() -> list[dict[str, object]]:
    rows = []
    for kind, spec in SPECS.items():
        for t, table in enumerate(spec.tables):
            for label, (bits, vec) in enumerate(table):
                name = str(label) if len(spec.tables) == 1 else ("" if t == 0 else "~") + str(label)
                rows.append({"lattice": kind.value, "label": name, "bits": bits,
                             "dx": vec[0], "dy": vec[1], "dz": vec[2]})
    return rows


def write_turn_table_csv(path: str | Path) -> None:
    fields = ["lattice", "label", "bits", "dx", "dy", "dz"]
    write_csv(path, fields, ([r[f] for f in fields] for r in turn_table_rows()))
