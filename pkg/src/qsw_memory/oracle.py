"""Brute-force tensor-product oracle for small atom numbers.

Builds the collective operators as explicit sums of single-site
transition operators on the full 3^N atomic space times a photon
ladder, then projects onto permutation-symmetric states.  Shares no code
with the collective matrix elements in :mod:`qsw_memory.algebra`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Dict

import numpy as np
import scipy.sparse as sp

MAX_ORACLE_N = 6

# single-atom levels
B, A_LVL, C_LVL = 0, 1, 2


class ResourceLimitError(RuntimeError):
    pass


def _sigma(alpha: int, beta: int) -> sp.csr_matrix:
    """|alpha><beta| on one three-level atom."""
    m = sp.lil_matrix((3, 3), dtype=complex)
    m[alpha, beta] = 1.0
    return m.tocsr()


def _site_sum(N: int, single: sp.csr_matrix) -> sp.csr_matrix:
    eye = sp.identity(3, format="csr", dtype=complex)
    total = sp.csr_matrix((3 ** N, 3 ** N), dtype=complex)
    for j in range(N):
        factors = [single if k == j else eye for k in range(N)]
        total = total + reduce(lambda x, y: sp.kron(x, y, format="csr"), factors)
    return total


def _symmetric_states(N: int) -> Dict[tuple, np.ndarray]:
    """Normalized symmetric vectors keyed by (n_a, n_c)."""
    vecs: Dict[tuple, np.ndarray] = {}
    for config in itertools.product((B, A_LVL, C_LVL), repeat=N):
        key = (config.count(A_LVL), config.count(C_LVL))
        idx = 0
        for level in config:
            idx = 3 * idx + level
        v = vecs.setdefault(key, np.zeros(3 ** N, dtype=complex))
        v[idx] = 1.0
    return {k: v / np.linalg.norm(v) for k, v in vecs.items()}


@dataclass
class TensorOracle:
    N: int
    G: float
    Omega: float
    photon_cutoff: int
    full_ops: Dict[str, sp.csr_matrix]
    symmetric: Dict[tuple, np.ndarray]

    @property
    def symmetric_dimension(self) -> int:
        return len(self.symmetric)

    def sector_labels(self, M: int):
        labels = []
        for n_ph in range(M + 1):
            for n_a in range(M - n_ph + 1):
                n_c = M - n_ph - n_a
                if n_a + n_c <= self.N and n_ph <= self.photon_cutoff:
                    labels.append((n_ph, n_a, n_c))
        return sorted(labels)

    def embedding(self, M: int) -> np.ndarray:
        """Columns are product states photon(n_ph) x symmetric(n_a, n_c)."""
        labels = self.sector_labels(M)
        dim_ph = self.photon_cutoff + 1
        cols = []
        for n_ph, n_a, n_c in labels:
            e = np.zeros(dim_ph, dtype=complex)
            e[n_ph] = 1.0
            cols.append(np.kron(self.symmetric[(n_a, n_c)], e))
        if not cols:
            return np.zeros((3 ** self.N * dim_ph, 0), dtype=complex)
        return np.stack(cols, axis=1)

    def block(self, name: str, M_from: int, M_to: int) -> np.ndarray:
        """Matrix elements <sym, M_to| O |sym, M_from> in sorted-label order."""
        op = self.full_ops[name]
        return self.embedding(M_to).conj().T @ (op @ self.embedding(M_from))

    def full_hamiltonian(self) -> sp.csr_matrix:
        return self.full_ops["H"]


def tensor_oracle(N: int, G: float, Omega: float, photon_cutoff: int) -> TensorOracle:
    """Collective operators on the full product space of N atoms.

    Wave-vector phases are set to one.  ``photon_cutoff`` must exceed the
    highest photon number reached by any block of interest.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > MAX_ORACLE_N:
        raise ResourceLimitError(f"tensor oracle limited to N <= {MAX_ORACLE_N}, got {N}")
    dim_ph = photon_cutoff + 1
    eye_ph = sp.identity(dim_ph, format="csr", dtype=complex)
    eye_at = sp.identity(3 ** N, format="csr", dtype=complex)
    a = sp.diags(np.sqrt(np.arange(1, dim_ph)).astype(complex), 1, format="csr")

    def atoms(x):
        return sp.kron(x, eye_ph, format="csr")

    s_ab = _site_sum(N, _sigma(A_LVL, B))  # b -> a
    s_ac = _site_sum(N, _sigma(A_LVL, C_LVL))  # c -> a
    s_cb = _site_sum(N, _sigma(C_LVL, B))  # b -> c
    s_aa = _site_sum(N, _sigma(A_LVL, A_LVL))
    s_cc = _site_sum(N, _sigma(C_LVL, C_LVL))
    root = math.sqrt(N)
    g = G / root

    ops = {
        "a": sp.kron(eye_at, a, format="csr"),
        "A_dag": atoms(s_ab) / root,
        "C_dag": atoms(s_cb) / root,
        "T_plus": atoms(s_ac),
        "T_3": atoms(0.5 * (s_aa - s_cc)),
    }
    for name in ("A", "C"):
        ops[name] = ops[name + "_dag"].conj().T.tocsr()
    ops["a_dag"] = ops["a"].conj().T.tocsr()
    ops["T_minus"] = ops["T_plus"].conj().T.tocsr()
    coupling = g * ops["a"] @ atoms(s_ab) + Omega * atoms(s_ac)
    ops["H"] = (coupling + coupling.conj().T).tocsr()
    return TensorOracle(N, G, Omega, photon_cutoff, ops, _symmetric_states(N))
