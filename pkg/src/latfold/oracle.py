"""Exact ground states by exhaustive enumeration of self-avoiding walks.

The depth-first search walks turn choices under the codec's fixed prefix,
cutting a branch as soon as a bead lands on an occupied site or an FCC
redundant pattern appears.  ``naive_enumerate`` scores every bitstring with
no pruning and serves as the independent reference.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .energy import BatchScorer, EnergyParams
from .lattice import Lattice, LatticeSpec, get_spec, index_to_bitstring, qubit_count

TIE_TOL = 1e-9
DEFAULT_MAX_QUBITS = 30
NAIVE_MAX_QUBITS = 20


class OracleError(RuntimeError):
    pass


class OracleBudgetError(OracleError):
    """The instance exceeds the enumeration budget; no partial answer is given."""


@dataclass
class OracleResult:
    e_gs: float
    argmin_bitstrings: list[str]
    states_enumerated: int
    states_pruned: int
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"e_gs": self.e_gs, "argmin_bitstrings": self.argmin_bitstrings,
               "states_enumerated": self.states_enumerated, "states_pruned": self.states_pruned,
               "wall_time": self.wall_time}
        out.update(self.extra)
        return out


class _Walker:
    def __init__(self, sequence: str, spec: LatticeSpec, params: EnergyParams,
                 max_nodes: int | None, time_limit: float | None):
        self.n = len(sequence)
        self.spec = spec
        self.eps = params.contact.pair_matrix(sequence).tolist()
        d1 = spec.knn_distances[0]
        self.weight = {s: d1 / np.sqrt(s) for s in spec.knn_squared[:params.max_k]}
        self.bonded = not params.exclude_bonded
        self.max_nodes = max_nodes
        self.deadline = None if time_limit is None else time.monotonic() + time_limit
        self.nodes = 0
        self.pruned = 0
        self.leaves = 0
        self.options = [self._options(t) for t in range(self.n - 1)]

    def _options(self, t: int) -> list[tuple[tuple[int, int, int] | None, str]]:
        q = self.spec.qubits_per_turn
        fixed = self.spec.fixed_prefix[q * t:q * (t + 1)]
        out = []
        for code in range(1 << q):
            pattern = format(code, f"0{q}b")
            if not pattern.startswith(fixed):
                continue
            _, vec = self.spec.resolve(t, pattern)
            out.append((vec, pattern[len(fixed):]))
        return out

    def _tick(self) -> None:
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise OracleBudgetError(f"node budget {self.max_nodes} exhausted")
        if self.deadline is not None and self.nodes % 4096 == 0 and time.monotonic() > self.deadline:
            raise OracleBudgetError("wall-clock budget exhausted")

    def leaves_iter(self) -> Iterator[tuple[float, str]]:
        """Yield (interaction energy, bitstring) for every valid conformation."""
        pos = [(0, 0, 0)]
        occupied = {(0, 0, 0)}
        bits: list[str] = []
        n, eps, weight, bonded = self.n, self.eps, self.weight, self.bonded

        def grow(t: int, energy: float) -> Iterator[tuple[float, str]]:
            if t == n - 1:
                self.leaves += 1
                yield energy, "".join(bits)
                return
            j = t + 1
            x0, y0, z0 = pos[t]
            row = eps[j]
            for vec, var in self.options[t]:
                self._tick()
                if vec is None:
                    self.pruned += 1
                    continue
                p = (x0 + vec[0], y0 + vec[1], z0 + vec[2])
                if p in occupied:
                    self.pruned += 1
                    continue
                e = energy
                for i in range(j if bonded else j - 1):
                    xi, yi, zi = pos[i]
                    w = weight.get((p[0] - xi) ** 2 + (p[1] - yi) ** 2 + (p[2] - zi) ** 2)
                    if w is not None:
                        e += row[i] * w
                pos.append(p)
                occupied.add(p)
                bits.append(var)
                yield from grow(j, e)
                bits.pop()
                occupied.discard(p)
                pos.pop()

        yield from grow(0, 0.0)


def _check_budget(lattice: LatticeSpec, n: int, max_qubits: int) -> int:
    m = qubit_count(lattice, n)
    if m > max_qubits:
        raise OracleBudgetError(f"{m} qubits exceeds the enumeration budget of {max_qubits}")
    return m


def ground_state(sequence: str, lattice: Lattice | LatticeSpec | str, params: EnergyParams,
                 max_qubits: int = DEFAULT_MAX_QUBITS, max_nodes: int | None = None,
                 time_limit: float | None = None) -> OracleResult:
    spec = get_spec(lattice)
    _check_budget(spec, len(sequence), max_qubits)
    start = time.perf_counter()
    walker = _Walker(sequence, spec, params, max_nodes, time_limit)
    best = np.inf
    candidates: list[tuple[float, str]] = []
    for e, bits in walker.leaves_iter():
        if e < best - TIE_TOL:
            best = e
            candidates = [c for c in candidates if c[0] <= best + TIE_TOL]
        if e <= best + TIE_TOL:
            candidates.append((e, bits))
    if not candidates:
        raise OracleError("no self-avoiding conformation exists for this instance")
    exact = _rescore([b for _, b in candidates], sequence, spec, params)
    e_gs = min(exact.values())
    argmin = sorted(b for b, e in exact.items() if e <= e_gs + TIE_TOL)
    return OracleResult(e_gs, argmin, walker.leaves, walker.pruned, time.perf_counter() - start)


def _rescore(bitstrings: list[str], sequence: str, spec: LatticeSpec, params: EnergyParams) -> dict[str, float]:
    # same scoring path as the training ledger, so energies compare bit-for-bit
    if not bitstrings:
        return {}
    codes = np.array([int(b, 2) if b else 0 for b in bitstrings], dtype=np.int64)
    return dict(zip(bitstrings, BatchScorer(sequence, spec, params)(codes).tolist()))


def naive_enumerate(sequence: str, lattice: Lattice | LatticeSpec | str, params: EnergyParams,
                    max_qubits: int = NAIVE_MAX_QUBITS) -> OracleResult:
    spec = get_spec(lattice)
    m = _check_budget(spec, len(sequence), max_qubits)
    start = time.perf_counter()
    energies = BatchScorer(sequence, spec, params)(np.arange(1 << m, dtype=np.int64))
    e_gs = float(energies.min())
    argmin = [index_to_bitstring(i, m) for i in np.flatnonzero(energies <= e_gs + TIE_TOL)]
    return OracleResult(e_gs, argmin, 1 << m, 0, time.perf_counter() - start)


def low_energy_spectrum(sequence: str, lattice: Lattice | LatticeSpec | str, params: EnergyParams,
                        top_m: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> list[tuple[float, str]]:
    """The ``top_m`` lowest-energy valid conformations, ascending, ties by bitstring."""
    spec = get_spec(lattice)
    _check_budget(spec, len(sequence), max_qubits)
    walker = _Walker(sequence, spec, params, None, None)
    # keep a small margin so float reordering at the cut cannot drop a state
    head = heapq.nsmallest(top_m + 16, walker.leaves_iter())
    scored = sorted((e, b) for b, e in _rescore([b for _, b in head], sequence, spec, params).items())
    return scored[:top_m]
