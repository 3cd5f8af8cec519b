"""Dense real statevector kernels.

Amplitudes are stored as a flat float64 array indexed with qubit 0 as the
most significant bit, so ``format(i, "0Mb")`` is the measured bitstring.
"""

from __future__ import annotations

import numpy as np

from .ansatz import AnsatzSpec


def apply_ry(psi: np.ndarray, q: int, m: int, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v = psi.reshape(1 << q, 2, 1 << (m - q - 1))
    a0, a1 = v[:, 0], v[:, 1]
    out = np.empty_like(v)
    out[:, 0] = c * a0 - s * a1
    out[:, 1] = s * a0 + c * a1
    return out.reshape(-1)


def apply_cx_adjacent(psi: np.ndarray, control: int, m: int) -> np.ndarray:
    """CNOT with target ``control + 1``; operates in place."""
    v = psi.reshape(1 << control, 2, 2, 1 << (m - control - 2))
    v[:, 1] = v[:, 1, ::-1].copy()
    return psi


def product_state(angles: np.ndarray) -> np.ndarray:
    """Ry(angles[q])|0> on every qubit."""
    psi = np.ones(1)
    for a in angles:
        psi = np.kron(psi, np.array([np.cos(a / 2), np.sin(a / 2)]))
    return psi


def run_dense(spec: AnsatzSpec, theta: np.ndarray) -> np.ndarray:
    m = spec.m_qubits
    psi = product_state(theta[:m])
    for r in range(1, spec.reps + 1):
        for c, t in spec.entangler_pairs:
            psi = apply_cx_adjacent(psi, c, m)
        for q in range(m):
            psi = apply_ry(psi, q, m, theta[r * m + q])
    return psi
