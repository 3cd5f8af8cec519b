"""Classical energy function for lattice conformations.

E = E_olap + E_int + E_redun, where the interaction term sums contact
energies of bead pairs sitting exactly at the lattice's k-th neighbour
distance, each scaled by d(1)/d(k).
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .lattice import (
    Conformation,
    Lattice,
    LatticeSpec,
    TurnSequence,
    decode_bitstring,
    decode_indices,
    get_spec,
    turns_to_conformation,
)

AMINO_ACIDS = "CMFILVWYAGTSNQDEHRKP"
_SQ_TOL = 1e-9


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ContactMatrix:
    residues: str
    eps: np.ndarray

    def __post_init__(self) -> None:
        eps = np.array(self.eps, dtype=float)
        if eps.shape != (len(self.residues), len(self.residues)):
            raise ParameterError(f"matrix shape {eps.shape} does not match {len(self.residues)} residues")
        if len(set(self.residues)) != len(self.residues):
            raise ParameterError("duplicate residue codes in contact matrix")
        if np.max(np.abs(eps - eps.T), initial=0.0) > 1e-12:
            raise ParameterError("contact matrix is not symmetric")
        eps.setflags(write=False)
        object.__setattr__(self, "eps", eps)

    @classmethod
    def uniform(cls, value: float, residues: str = AMINO_ACIDS) -> "ContactMatrix":
        return cls(residues, np.full((len(residues), len(residues)), float(value)))

    def index(self, sequence: str) -> np.ndarray:
        lookup = {r: i for i, r in enumerate(self.residues)}
        try:
            return np.array([lookup[c] for c in sequence], dtype=np.intp)
        except KeyError as exc:
            raise ParameterError(f"residue {exc.args[0]!r} not in contact matrix") from None

    def pair_matrix(self, sequence: str) -> np.ndarray:
        """ε_ij for every pair of positions in ``sequence``."""
        idx = self.index(sequence)
        return self.eps[np.ix_(idx, idx)]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.eps)))

    def digest(self) -> str:
        h = hashlib.sha256(self.residues.encode())
        h.update(np.ascontiguousarray(self.eps, dtype="<f8").tobytes())
        return h.hexdigest()


def load_contact_matrix(path: str | Path | io.TextIOBase) -> ContactMatrix:
    """Read a CSV whose first row and column hold the residue codes."""
    if isinstance(path, (str, Path)):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(path))
    rows = [r for r in rows if any(c.strip() for c in r)]
    header = [c.strip() for c in rows[0][1:]]
    body = rows[1:]
    if [r[0].strip() for r in body] != header:
        raise ParameterError("row labels must match column labels")
    eps = np.array([[float(c) for c in r[1:]] for r in body])
    return ContactMatrix("".join(header), eps)


def mj_matrix() -> ContactMatrix:
    """Miyazawa-Jernigan (1996) contact energies, RT units."""
    text = resources.files("latfold").joinpath("data/mj1996.csv").read_text()
    return load_contact_matrix(io.StringIO(text))


@dataclass(frozen=True)
class EnergyParams:
    contact: ContactMatrix
    lambda_olap: float
    lambda_redun: float
    max_k: int = 1
    exclude_bonded: bool = False

    def __post_init__(self) -> None:
        if self.lambda_olap <= 0 or self.lambda_redun <= 0:
            raise ParameterError("penalties must be positive")
        if self.max_k < 1:
            raise ParameterError("max_k must be >= 1")

    @classmethod
    def default(cls, contact: ContactMatrix, n: int, max_k: int = 1, exclude_bonded: bool = False,
                lambda_olap: float | None = None, lambda_redun: float | None = None) -> "EnergyParams":
        lam = default_penalty(contact, n)
        return cls(contact, lam if lambda_olap is None else lambda_olap,
                   lam if lambda_redun is None else lambda_redun, max_k, exclude_bonded)


def default_penalty(contact: ContactMatrix, n: int) -> float:
    # exceeds the largest possible total attraction: every pair at d(1) with max |ε|
    return n * (n - 1) / 2 * contact.max_abs + 1.0


@dataclass(frozen=True)
class EnergyBreakdown:
    e_olap: float
    e_int: float
    e_redun: float
    e_total: float
    per_k: tuple[float, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {"e_olap": self.e_olap, "e_int": self.e_int, "e_redun": self.e_redun,
                "e_total": self.e_total, "per_k": list(self.per_k)}


def _ladder(spec: LatticeSpec, max_k: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    if max_k > len(spec.knn_squared):
        raise ParameterError(f"max_k={max_k} exceeds supported order {len(spec.knn_squared)}")
    sq = spec.knn_squared[:max_k]
    d1 = spec.knn_distances[0]
    return sq, tuple(d1 / np.sqrt(s) for s in sq)


def distance_matrix(conf: Conformation) -> np.ndarray:
    c = np.asarray(conf.coords, dtype=np.int64)
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt((diff * diff).sum(-1).astype(float))


def overlap_energy(D: np.ndarray, params: EnergyParams) -> float:
    iu = np.triu_indices(len(D), k=1)
    return params.lambda_olap * int(np.count_nonzero(D[iu] == 0.0))


def redundancy_energy(ts: TurnSequence, params: EnergyParams) -> float:
    return params.lambda_redun * ts.redundant_count


def interaction_energy(D: np.ndarray, sequence: str, params: EnergyParams,
                       lattice: Lattice | LatticeSpec | str) -> tuple[list[float], float]:
    spec = get_spec(lattice)
    if len(sequence) != len(D):
        raise ParameterError(f"sequence length {len(sequence)} != {len(D)} beads")
    eps = params.contact.pair_matrix(sequence)
    sq_ladder, scale = _ladder(spec, params.max_k)
    iu = np.triu_indices(len(D), k=1 + int(params.exclude_bonded))
    sq = D[iu] ** 2
    pair_eps = eps[iu]
    per_k = [float(np.sum(pair_eps[np.abs(sq - s) < _SQ_TOL]) * w) for s, w in zip(sq_ladder, scale)]
    return per_k, float(sum(per_k))


def conformation_energy(conf: Conformation, ts: TurnSequence, sequence: str,
                        params: EnergyParams) -> EnergyBreakdown:
    D = distance_matrix(conf)
    e_olap = overlap_energy(D, params)
    e_redun = redundancy_energy(ts, params)
    per_k, e_int = interaction_energy(D, sequence, params, ts.lattice)
    return EnergyBreakdown(e_olap, e_int, e_redun, e_olap + e_int + e_redun, tuple(per_k))


def total_energy(bits: str, sequence: str, lattice: Lattice | LatticeSpec | str,
                 params: EnergyParams) -> EnergyBreakdown:
    ts = decode_bitstring(bits, lattice, len(sequence))
    return conformation_energy(turns_to_conformation(ts), ts, sequence, params)


class BatchScorer:
    """Vectorised e_total for many integer-coded bitstrings of one instance."""

    def __init__(self, sequence: str, lattice: Lattice | LatticeSpec | str, params: EnergyParams,
                 chunk: int = 1 << 15):
        self.spec = get_spec(lattice)
        self.sequence = sequence
        self.params = params
        self.chunk = chunk
        n = len(sequence)
        eps = params.contact.pair_matrix(sequence)
        self._iu = np.triu_indices(n, k=1)
        self._olap_pairs = self._iu
        self._int_pairs = np.triu_indices(n, k=1 + int(params.exclude_bonded))
        self._pair_eps = eps[self._int_pairs]
        self._ladder = _ladder(self.spec, params.max_k)

    def __call__(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        out = np.empty(len(idx))
        for lo in range(0, len(idx), self.chunk):
            out[lo:lo + self.chunk] = self._score(idx[lo:lo + self.chunk])
        return out

    def _score(self, idx: np.ndarray) -> np.ndarray:
        coords, redundant = decode_indices(idx, self.spec, len(self.sequence))
        i, j = self._olap_pairs
        diff = coords[:, i] - coords[:, j]
        sq = (diff * diff).sum(-1)
        e_olap = self.params.lambda_olap * np.count_nonzero(sq == 0, axis=1)
        e_redun = self.params.lambda_redun * redundant
        if len(self._int_pairs[0]) != len(i):
            diff = coords[:, self._int_pairs[0]] - coords[:, self._int_pairs[1]]
            sq = (diff * diff).sum(-1)
        e_int = np.zeros(len(idx))
        for s, w in zip(*self._ladder):
            e_int += np.where(sq == s, self._pair_eps, 0.0).sum(axis=1) * w
        return e_olap + e_int + e_redun


def batch_energies(indices: np.ndarray, sequence: str, lattice: Lattice | LatticeSpec | str,
                   params: EnergyParams) -> np.ndarray:
    return BatchScorer(sequence, lattice, params)(indices)
