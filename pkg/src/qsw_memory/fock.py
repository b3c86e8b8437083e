"""Excitation-number sectors and a small sparse linear-algebra layer.

Every Hamiltonian in this package conserves the total excitation number
M = n_ph + n_A + n_C (bosonic) or n_ph + n_a + n_c (Dicke), so the Hilbert
space is handled one sector at a time.  Raising operators are rectangular
maps from sector M to sector M + 1; no per-mode Fock cutoff is ever applied.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

ZERO_DROP = 1e-15


class Flavor(enum.Enum):
    BOSONIC = "bosonic"
    DICKE = "dicke"

    @classmethod
    def coerce(cls, value) -> "Flavor":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class ShapeError(ValueError):
    """Operands live on incompatible sectors."""


class InvalidParameterError(ValueError):
    pass


class FlavorError(ValueError):
    """Operation is not defined for the requested flavor."""


@dataclass(frozen=True)
class BasisState:
    """Occupation label (photon, first exciton, second exciton).

    For the bosonic flavor the exciton entries are the A and C mode
    occupations; for the Dicke flavor they count atoms in |a> and |c>
    out of ``N``.
    """

    flavor: Flavor
    n_ph: int
    n_1: int
    n_2: int
    N: Optional[int] = None

    def __post_init__(self):
        if min(self.n_ph, self.n_1, self.n_2) < 0:
            raise InvalidParameterError(f"negative occupation in {self.occupations}")
        if self.flavor is Flavor.DICKE:
            if self.N is None or self.N < 1:
                raise InvalidParameterError("Dicke basis state needs N >= 1")
            if self.n_1 + self.n_2 > self.N:
                raise InvalidParameterError(
                    f"n_a + n_c = {self.n_1 + self.n_2} exceeds N = {self.N}"
                )

    @property
    def occupations(self) -> Tuple[int, int, int]:
        return (self.n_ph, self.n_1, self.n_2)

    @property
    def excitations(self) -> int:
        return self.n_ph + self.n_1 + self.n_2


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Ordered basis of one excitation sector.

    ``M < 0`` is allowed only internally, as the empty codomain of a
    lowering operator acting on the vacuum sector.
    """

    flavor: Flavor
    M: int
    N: Optional[int]
    states: Tuple[BasisState, ...]
    index: Dict[Tuple[int, int, int], int] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def key(self):
        return (self.flavor, self.M, self.N)

    def labels(self) -> np.ndarray:
        """(dim, 3) integer array of occupations."""
        if not self.states:
            return np.zeros((0, 3), dtype=int)
        return np.array([s.occupations for s in self.states], dtype=int)

    def __eq__(self, other):
        return isinstance(other, SectorBasis) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __len__(self):
        return self.dim


def _check_flavor_N(flavor: Flavor, N):
    if flavor is Flavor.DICKE:
        if N is None or int(N) < 1:
            raise InvalidParameterError("Dicke flavor requires atom count N >= 1")
        return int(N)
    return None


@lru_cache(maxsize=None)
def _sector(flavor: Flavor, M: int, N: Optional[int]) -> SectorBasis:
    states = []
    if M >= 0:
        for n_ph in range(M, -1, -1):
            rest = M - n_ph
            for n_1 in range(rest, -1, -1):
                n_2 = rest - n_1
                if N is not None and n_1 + n_2 > N:
                    continue
                states.append(BasisState(flavor, n_ph, n_1, n_2, N))
    # lexicographic in (n_ph, n_1, n_2)
    states.sort(key=lambda s: s.occupations)
    index = {s.occupations: i for i, s in enumerate(states)}
    return SectorBasis(flavor, M, N, tuple(states), index)


def enumerate_sector(flavor, M: int, N: Optional[int] = None) -> SectorBasis:
    """Complete basis of the ``M``-excitation sector.

    >>> enumerate_sector("bosonic", 2).dim
    6
    """
    flavor = Flavor.coerce(flavor)
    if M < 0:
        raise InvalidParameterError(f"excitation number must be >= 0, got {M}")
    return _sector(flavor, int(M), _check_flavor_N(flavor, N))


def sector_or_empty(flavor: Flavor, M: int, N: Optional[int] = None) -> SectorBasis:
    """Like :func:`enumerate_sector` but returns an empty basis for M < 0."""
    flavor = Flavor.coerce(flavor)
    return _sector(flavor, int(M), _check_flavor_N(flavor, N))


def _prune(mat) -> sp.csr_matrix:
    mat = sp.csr_matrix(mat, dtype=complex)
    if mat.nnz:
        mat.data[np.abs(mat.data) < ZERO_DROP] = 0.0
        mat.eliminate_zeros()
    mat.sort_indices()
    return mat


class SparseOperator:
    """Complex sparse map from ``domain`` to ``codomain``."""

    __slots__ = ("domain", "codomain", "_mat")

    def __init__(self, domain: SectorBasis, codomain: SectorBasis, matrix):
        mat = _prune(matrix)
        if mat.shape != (codomain.dim, domain.dim):
            raise ShapeError(
                f"matrix shape {mat.shape} does not match "
                f"{codomain.dim}x{domain.dim} sector map"
            )
        self.domain = domain
        self.codomain = codomain
        self._mat = mat

    @classmethod
    def zero(cls, domain, codomain=None):
        codomain = domain if codomain is None else codomain
        return cls(domain, codomain, sp.csr_matrix((codomain.dim, domain.dim)))

    @classmethod
    def identity(cls, sector):
        return cls(sector, sector, sp.identity(sector.dim, format="csr"))

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._mat

    @property
    def shape(self):
        return self._mat.shape

    @property
    def nnz(self) -> int:
        return self._mat.nnz

    def toarray(self) -> np.ndarray:
        return self._mat.toarray()

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._mat.data))) if self._mat.nnz else 0.0

    def adjoint(self) -> "SparseOperator":
        return op_adjoint(self)

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(other, -1.0))

    def __neg__(self):
        return op_scale(self, -1.0)

    def __mul__(self, scalar):
        return op_scale(self, scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply(self, other)
        return op_mul(self, other)

    def __repr__(self):
        return (
            f"SparseOperator({self.domain.M}->{self.codomain.M}, "
            f"shape={self.shape}, nnz={self.nnz})"
        )


def _same(a: SectorBasis, b: SectorBasis, what: str):
    if a != b:
        raise ShapeError(f"{what}: sector {a.key} incompatible with {b.key}")


def op_add(x: SparseOperator, y: SparseOperator) -> SparseOperator:
    _same(x.domain, y.domain, "add")
    _same(x.codomain, y.codomain, "add")
    return SparseOperator(x.domain, x.codomain, x.matrix + y.matrix)


def op_scale(x: SparseOperator, scalar: complex) -> SparseOperator:
    return SparseOperator(x.domain, x.codomain, x.matrix * scalar)


def op_mul(x: SparseOperator, y: SparseOperator) -> SparseOperator:
    """Composition x∘y (apply y first)."""
    _same(x.domain, y.codomain, "mul")
    return SparseOperator(y.domain, x.codomain, x.matrix @ y.matrix)


def op_adjoint(x: SparseOperator) -> SparseOperator:
    return SparseOperator(x.codomain, x.domain, x.matrix.conj().T)


def op_commutator(x: SparseOperator, y: SparseOperator) -> SparseOperator:
    """x y - y x for two square maps on the same sector."""
    return op_add(op_mul(x, y), op_scale(op_mul(y, x), -1.0))


class StateVector:
    """Complex amplitudes on one sector basis."""

    __slots__ = ("sector", "amplitudes")

    def __init__(self, sector: SectorBasis, amplitudes):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != sector.dim:
            raise ShapeError(f"{amps.shape[0]} amplitudes for a {sector.dim}-dim sector")
        self.sector = sector
        self.amplitudes = amps

    @classmethod
    def basis(cls, sector: SectorBasis, occupations) -> "StateVector":
        amps = np.zeros(sector.dim, dtype=complex)
        amps[sector.index[tuple(occupations)]] = 1.0
        return cls(sector, amps)

    def normalized(self) -> "StateVector":
        return StateVector(self.sector, self.amplitudes / norm(self))

    def __add__(self, other):
        _same(self.sector, other.sector, "state add")
        return StateVector(self.sector, self.amplitudes + other.amplitudes)

    def __sub__(self, other):
        _same(self.sector, other.sector, "state sub")
        return StateVector(self.sector, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar):
        return StateVector(self.sector, self.amplitudes * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"StateVector(M={self.sector.M}, dim={self.sector.dim})"


def apply(op: SparseOperator, state: StateVector) -> StateVector:
    _same(op.domain, state.sector, "apply")
    return StateVector(op.codomain, op.matrix @ state.amplitudes)


def inner(x: StateVector, y: StateVector) -> complex:
    """<x|y>, conjugate-linear in ``x``."""
    _same(x.sector, y.sector, "inner")
    return complex(np.vdot(x.amplitudes, y.amplitudes))


def norm(x: StateVector) -> float:
    return float(np.linalg.norm(x.amplitudes))
