"""RealAmplitudes-style ansatz: Ry layers separated by a CNOT staircase."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple


class Gate(NamedTuple):
    name: str  # "ry" or "cx"
    qubits: tuple[int, ...]
    param: int = -1


@dataclass(frozen=True)
class AnsatzSpec:
    m_qubits: int
    reps: int = 1

    def __post_init__(self) -> None:
        if self.m_qubits < 1 or self.reps < 1:
            raise ValueError("ansatz needs m_qubits >= 1 and reps >= 1")

    @property
    def parameter_count(self) -> int:
        return (self.reps + 1) * self.m_qubits

    @property
    def entangler_pairs(self) -> list[tuple[int, int]]:
        """(control, target) pairs of one staircase, in application order."""
        return [(i, i + 1) for i in range(self.m_qubits - 2, -1, -1)]

    @property
    def two_qubit_gate_count(self) -> int:
        return self.reps * (self.m_qubits - 1)

    def gates(self) -> Iterator[Gate]:
        m = self.m_qubits
        for q in range(m):
            yield Gate("ry", (q,), q)
        for r in range(1, self.reps + 1):
            for c, t in self.entangler_pairs:
                yield Gate("cx", (c, t))
            for q in range(m):
                yield Gate("ry", (q,), r * m + q)

    def logical_depth(self) -> int:
        """ASAP-scheduled depth of the abstract circuit (no transpilation)."""
        level = [0] * self.m_qubits
        for g in self.gates():
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level)

    def describe(self) -> dict:
        return {
            "m_qubits": self.m_qubits,
            "reps": self.reps,
            "parameter_count": self.parameter_count,
            "rotation": "ry",
            "entanglement": "reverse_linear",
            "cnot_order": [list(p) for p in self.entangler_pairs],
            "two_qubit_gates": self.two_qubit_gate_count,
            "logical_depth": self.logical_depth(),
        }


def build_ansatz(m: int, reps: int = 1) -> AnsatzSpec:
    return AnsatzSpec(m, reps)
