"""Exact simulation and sampling of the real-amplitude ansatz."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._io import write_csv
from .ansatz import AnsatzSpec, Gate, build_ansatz
from .mps import MPS, run_mps
from .statevector import run_dense

__all__ = [
    "AnsatzSpec", "Backend", "Gate", "MPS", "QuantumState", "SampleSet", "SimulationError",
    "build_ansatz", "exact_distribution", "probabilities", "read_samples_csv", "sample",
    "sample_indices", "simulate", "write_samples_csv",
]

DENSE_QUBIT_LIMIT = 28


class SimulationError(ValueError):
    pass


class Backend(str, enum.Enum):
    DENSE = "dense"
    MPS = "mps"

    @classmethod
    def parse(cls, value: "Backend | str") -> "Backend":
        return value if isinstance(value, Backend) else cls(str(value).lower())


@dataclass(frozen=True)
class QuantumState:
    backend: Backend
    m_qubits: int
    amplitudes: np.ndarray | None = None
    mps: MPS | None = field(default=None, repr=False)

    def norm(self) -> float:
        if self.backend is Backend.DENSE:
            return float(np.linalg.norm(self.amplitudes))
        return self.mps.norm()


@dataclass(frozen=True)
class SampleSet:
    counts: dict[str, int]
    shots: int
    seed: int | None = None

    def energies(self, energy_of) -> list[float]:
        """Per-shot energy multiset given a bitstring -> energy mapping."""
        out: list[float] = []
        for b, c in self.counts.items():
            out.extend([energy_of[b]] * c)
        return out


def simulate(spec: AnsatzSpec, theta, backend: Backend | str = Backend.DENSE, bond_cap: int = 16,
             dense_limit: int = DENSE_QUBIT_LIMIT) -> QuantumState:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.parameter_count,):
        raise SimulationError(f"expected {spec.parameter_count} angles, got {theta.shape}")
    backend = Backend.parse(backend)
    if backend is Backend.DENSE:
        if spec.m_qubits > dense_limit:
            raise SimulationError(f"{spec.m_qubits} qubits exceeds dense limit {dense_limit}; use mps")
        amps = run_dense(spec, theta)
        amps.setflags(write=False)
        return QuantumState(backend, spec.m_qubits, amplitudes=amps)
    if bond_cap < 2:
        raise SimulationError("bond_cap must be >= 2")
    return QuantumState(backend, spec.m_qubits, mps=run_mps(spec, theta, bond_cap))


def probabilities(state: QuantumState) -> np.ndarray:
    """Dense probability vector (index = integer-coded bitstring)."""
    amps = state.amplitudes if state.backend is Backend.DENSE else state.mps.to_dense()
    return amps * amps


def exact_distribution(state: QuantumState, threshold: float = 0.0) -> dict[str, float]:
    p = probabilities(state)
    width = state.m_qubits
    return {format(i, f"0{width}b"): float(p[i]) for i in np.flatnonzero(p > threshold)}


def sample_indices(state: QuantumState, shots: int, rng: np.random.Generator) -> np.ndarray:
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    if state.backend is Backend.DENSE:
        cdf = np.cumsum(state.amplitudes ** 2)
        idx = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
        return np.minimum(idx, len(cdf) - 1).astype(np.int64)
    return state.mps.sample(shots, rng)


def counts_from_indices(indices: np.ndarray, width: int) -> dict[str, int]:
    codes, counts = np.unique(indices, return_counts=True)
    return {format(int(c), f"0{width}b"): int(k) for c, k in zip(codes, counts)}


def sample(state: QuantumState, shots: int, seed: int | None = None) -> SampleSet:
    rng = np.random.default_rng(seed)
    idx = sample_indices(state, shots, rng)
    return SampleSet(counts_from_indices(idx, state.m_qubits), shots, seed)


def write_samples_csv(samples: SampleSet, path: str | Path) -> None:
    write_csv(path, ["bitstring", "count"], ((b, samples.counts[b]) for b in sorted(samples.counts)))


def read_samples_csv(path: str | Path, seed: int | None = None) -> SampleSet:
    with open(path, newline="") as fh:
        counts = {row["bitstring"]: int(row["count"]) for row in csv.DictReader(fh)}
    return SampleSet(counts, sum(counts.values()), seed)
