"""Matrix-product-state backend for nearest-neighbour Ry/CNOT circuits.

Site tensors have shape (left bond, 2, right bond) and are real.  A single
orthogonality centre is tracked; two-site gates are applied with the centre
inside the pair so SVD truncation is locally optimal.
"""

from __future__ import annotations

import numpy as np

from .ansatz import AnsatzSpec

_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float).reshape(2, 2, 2, 2)


class MPS:
    def __init__(self, tensors: list[np.ndarray], center: int = 0, bond_cap: int = 16,
                 cutoff: float = 1e-12):
        self.tensors = tensors
        self.center = center
        self.bond_cap = bond_cap
        self.cutoff = cutoff
        self.discarded_weight = 0.0

    @classmethod
    def product(cls, angles: np.ndarray, bond_cap: int = 16, cutoff: float = 1e-12) -> "MPS":
        tensors = [np.array([np.cos(a / 2), np.sin(a / 2)]).reshape(1, 2, 1) for a in angles]
        return cls(tensors, 0, bond_cap, cutoff)

    @property
    def m(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def apply_ry(self, q: int, theta: float) -> None:
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        g = np.array([[c, -s], [s, c]])
        self.tensors[q] = np.einsum("ab,lbr->lar", g, self.tensors[q])

    def move_center(self, to: int) -> None:
        while self.center < to:
            i = self.center
            a = self.tensors[i]
            dl, _, dr = a.shape
            qm, r = np.linalg.qr(a.reshape(dl * 2, dr))
            self.tensors[i] = qm.reshape(dl, 2, -1)
            self.tensors[i + 1] = np.einsum("ab,bpr->apr", r, self.tensors[i + 1])
            self.center += 1
        while self.center > to:
            i = self.center
            a = self.tensors[i]
            dl, _, dr = a.shape
            qm, r = np.linalg.qr(a.reshape(dl, 2 * dr).T)
            self.tensors[i] = qm.T.reshape(-1, 2, dr)
            self.tensors[i - 1] = np.einsum("lpa,ba->lpb", self.tensors[i - 1], r)
            self.center -= 1

    def apply_cx(self, control: int) -> None:
        """CNOT on (control, control + 1)."""
        q = control
        if self.center not in (q, q + 1):
            self.move_center(q)
        a, b = self.tensors[q], self.tensors[q + 1]
        dl, dr = a.shape[0], b.shape[2]
        theta = np.einsum("lpa,aqr->lpqr", a, b)
        theta = np.einsum("pqst,lstr->lpqr", _CX, theta)
        u, s, vh = np.linalg.svd(theta.reshape(dl * 2, 2 * dr), full_matrices=False)
        total = float(np.sum(s * s))
        keep = len(s)
        # drop the smallest singular values while their weight stays below cutoff
        tail = np.cumsum((s * s)[::-1])[::-1]
        while keep > 1 and (keep > self.bond_cap or tail[keep - 1] <= self.cutoff * total):
            keep -= 1
        self.discarded_weight += float(np.sum(s[keep:] ** 2))
        s = s[:keep]
        self.tensors[q] = (u[:, :keep] * s).reshape(dl, 2, keep)
        self.tensors[q + 1] = vh[:keep].reshape(keep, 2, dr)
        self.center = q

    def norm(self) -> float:
        a = self.tensors[self.center]
        return float(np.sqrt(np.sum(a * a)))

    def to_dense(self) -> np.ndarray:
        psi = self.tensors[0].reshape(2, -1)
        for t in self.tensors[1:]:
            psi = (psi @ t.reshape(t.shape[0], -1)).reshape(-1, t.shape[2])
        return psi.reshape(-1)

    def sample(self, shots: int, rng: np.random.Generator) -> np.ndarray:
        """Perfect sampling, qubit by qubit; returns integer-coded outcomes."""
        self.move_center(0)
        env = np.ones((shots, 1))
        codes = np.zeros(shots, dtype=np.int64)
        for t in self.tensors:
            v = np.einsum("sl,lpr->spr", env, t)
            p = np.einsum("spr,spr->sp", v, v)
            p1 = p[:, 1] / (p[:, 0] + p[:, 1])
            bit = (rng.random(shots) < p1).astype(np.int64)
            chosen = v[np.arange(shots), bit]
            env = chosen / np.sqrt(p[np.arange(shots), bit])[:, None]
            codes = (codes << 1) | bit
        return codes


def run_mps(spec: AnsatzSpec, theta: np.ndarray, bond_cap: int = 16, cutoff: float = 1e-12) -> MPS:
    m = spec.m_qubits
    state = MPS.product(theta[:m], bond_cap, cutoff)
    for r in range(1, spec.reps + 1):
        for c, _ in spec.entangler_pairs:
            state.apply_cx(c)
        for q in range(m):
            state.apply_ry(q, theta[r * m + q])
    return state
