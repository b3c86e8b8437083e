"""Operators and Hamiltonians of the two-mode exciton-photon model.

Two representations share one labeling (n_ph, n_1, n_2):

* bosonic: A and C are exact bosons, T+ = A^dag C, T- = C^dag A;
* Dicke: the permutation-symmetric states of N three-level atoms with
  n_a atoms in |a> and n_c atoms in |c>.  Matrix elements carry the
  finite-N factors and vanish at the hard wall n_a + n_c = N.

The collective coupling ``G`` (= g sqrt(N)) is the parameter held fixed
when N varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
import scipy.sparse as sp

from .fock import (
    Flavor,
    FlavorError,
    InvalidParameterError,
    SectorBasis,
    SparseOperator,
    op_add,
    op_adjoint,
    op_mul,
    op_scale,
    sector_or_empty,
)


@dataclass(frozen=True)
class ModelParams:
    G: float
    Omega: float = 0.0
    N: Optional[int] = None

    def __post_init__(self):
        if not self.G > 0:
            raise InvalidParameterError(f"collective coupling G must be > 0, got {self.G}")
        if self.Omega < 0:
            raise InvalidParameterError(f"Rabi frequency must be >= 0, got {self.Omega}")
        if self.N is not None and self.N < 1:
            raise InvalidParameterError(f"atom count N must be >= 1, got {self.N}")

    @property
    def g(self) -> float:
        """Single-atom coupling; needs N."""
        if self.N is None:
            raise InvalidParameterError("single-atom coupling requires N")
        return self.G / math.sqrt(self.N)

    def with_omega(self, omega: float) -> "ModelParams":
        return ModelParams(self.G, omega, self.N)


@dataclass(frozen=True)
class PolaritonAngle:
    """Mixing angle with tan(theta) = G / Omega."""

    theta: float
    G: float = 1.0

    @classmethod
    def from_params(cls, params: ModelParams) -> "PolaritonAngle":
        return cls(mixing_angle(params.G, params.Omega), params.G)

    @property
    def sin(self) -> float:
        return math.sin(self.theta)

    @property
    def cos(self) -> float:
        return math.cos(self.theta)

    @property
    def omega(self) -> float:
        c = self.cos
        return 0.0 if abs(c) < 1e-300 else self.G * c / self.sin

    @property
    def epsilon(self) -> float:
        return self.G / self.sin if self.sin > 0 else math.hypot(self.G, self.omega)


def mixing_angle(G, Omega):
    """theta = arctan(G / Omega), pi/2 at Omega = 0.  Vectorized."""
    return np.arctan2(G, Omega) if np.ndim(Omega) else math.atan2(G, Omega)


def dressed_gap(G, Omega):
    return np.hypot(G, Omega)


class LadderOp:
    """Operator family defined on every sector, shifting M by ``shift``.

    ``block(M)`` materializes the map sector(M) -> sector(M + shift).
    Products compose blocks through the intermediate sector, which is
    always fully represented, so identities such as [a, a^dag] = 1 hold
    on the whole sector without truncation artefacts.
    """

    def __init__(self, shift: int, block: Callable[[int], SparseOperator], label: str = "?"):
        self.shift = shift
        self._block = block
        self.label = label
        self._cache: Dict[int, SparseOperator] = {}

    def block(self, M: int) -> SparseOperator:
        op = self._cache.get(M)
        if op is None:
            op = self._block(M)
            self._cache[M] = op
        return op

    def dag(self) -> "LadderOp":
        s = self.shift
        return LadderOp(-s, lambda M: op_adjoint(self.block(M - s)), f"{self.label}^dag")

    def __add__(self, other: "LadderOp") -> "LadderOp":
        if other.shift != self.shift:
            raise InvalidParameterError(
                f"cannot add operators with shifts {self.shift} and {other.shift}"
            )
        return LadderOp(
            self.shift,
            lambda M: op_add(self.block(M), other.block(M)),
            f"({self.label} + {other.label})",
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar) -> "LadderOp":
        return LadderOp(self.shift, lambda M: op_scale(self.block(M), scalar), f"{scalar}*{self.label}")

    __rmul__ = __mul__

    def __matmul__(self, other: "LadderOp") -> "LadderOp":
        return LadderOp(
            self.shift + other.shift,
            lambda M: op_mul(self.block(M + other.shift), other.block(M)),
            f"{self.label} {other.label}",
        )

    def __repr__(self):
        return f"LadderOp({self.label}, shift={self.shift:+d})"


def commutator(x: LadderOp, y: LadderOp) -> LadderOp:
    return x @ y - y @ x


def _raising(domain: SectorBasis, codomain: SectorBasis, rule) -> SparseOperator:
    rows, cols, vals = [], [], []
    for j, st in enumerate(domain.states):
        out = rule(st.n_ph, st.n_1, st.n_2)
        if out is None:
            continue
        target, amp = out
        i = codomain.index.get(target)
        if i is None or amp == 0.0:
            continue
        rows.append(i)
        cols.append(j)
        vals.append(amp)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(codomain.dim, domain.dim), dtype=complex)
    return SparseOperator(domain, codomain, mat)


class Model:
    """Operator factory for one flavor (and atom count, for Dicke)."""

    def __init__(self, flavor, N: Optional[int] = None):
        self.flavor = Flavor.coerce(flavor)
        if self.flavor is Flavor.DICKE:
            if N is None or N < 1:
                raise InvalidParameterError("Dicke model requires N >= 1")
            self.N = int(N)
        else:
            self.N = None
        self._ops: Dict[str, LadderOp] = {}
        self._build_base()

    def sector(self, M: int) -> SectorBasis:
        return sector_or_empty(self.flavor, M, self.N)

    def _lift(self, shift, rule, label) -> LadderOp:
        return LadderOp(shift, lambda M: _raising(self.sector(M), self.sector(M + shift), rule), label)

    def _build_base(self):
        N = self.N
        ops = self._ops
        ops["a_dag"] = self._lift(1, lambda p, x, y: ((p + 1, x, y), math.sqrt(p + 1)), "a^dag")
        if self.flavor is Flavor.BOSONIC:
            ops["A_dag"] = self._lift(1, lambda p, x, y: ((p, x + 1, y), math.sqrt(x + 1)), "A^dag")
            ops["C_dag"] = self._lift(1, lambda p, x, y: ((p, x, y + 1), math.sqrt(y + 1)), "C^dag")
        else:
            def a_up(p, x, y):
                free = N - x - y
                return None if free <= 0 else ((p, x + 1, y), math.sqrt((x + 1) * free / N))

            def c_up(p, x, y):
                free = N - x - y
                return None if free <= 0 else ((p, x, y + 1), math.sqrt((y + 1) * free / N))

            ops["A_dag"] = self._lift(1, a_up, "A^dag")
            ops["C_dag"] = self._lift(1, c_up, "C^dag")
        for name in ("a", "A", "C"):
            ops[name] = ops[name + "_dag"].dag()
            ops[name].label = name
        if self.flavor is Flavor.BOSONIC:
            ops["T_plus"] = ops["A_dag"] @ ops["C"]
        else:
            ops["T_plus"] = self._lift(
                0,
                lambda p, x, y: None if y == 0 else ((p, x + 1, y - 1), math.sqrt(y * (x + 1))),
                "T+",
            )
        ops["T_plus"].label = "T+"
        ops["T_minus"] = ops["T_plus"].dag()
        ops["T_minus"].label = "T-"
        # bosonic image is the Schwinger form (n_A - n_C)/2
        ops["T_3"] = self.diagonal(lambda p, x, y: 0.5 * (x - y), "T3")
        ops["n_ph"] = self.diagonal(lambda p, x, y: p, "n_ph")
        ops["n_1"] = self.diagonal(lambda p, x, y: x, "n_A" if self.flavor is Flavor.BOSONIC else "n_a")
        ops["n_2"] = self.diagonal(lambda p, x, y: y, "n_C" if self.flavor is Flavor.BOSONIC else "n_c")
        ops["identity"] = LadderOp(0, lambda M: SparseOperator.identity(self.sector(M)), "1")

    def diagonal(self, fn, label="diag") -> LadderOp:
        def block(M):
            sec = self.sector(M)
            vals = [fn(*s.occupations) for s in sec.states]
            return SparseOperator(sec, sec, sp.diags(np.asarray(vals, dtype=complex), format="csr"))

        return LadderOp(0, block, label)

    def op(self, name: str) -> LadderOp:
        return self._ops[name]

    def __getitem__(self, name: str) -> LadderOp:
        return self._ops[name]

    def zero(self, shift: int = 0) -> LadderOp:
        return LadderOp(shift, lambda M: SparseOperator.zero(self.sector(M), self.sector(M + shift)), "0")

    # Hamiltonian pieces: H = G * coupling + Omega * control
    def coupling(self) -> LadderOp:
        o = self._ops
        return o["a"] @ o["A_dag"] + o["a_dag"] @ o["A"]

    def control(self) -> LadderOp:
        o = self._ops
        return o["T_plus"] + o["T_minus"]

    def hamiltonian(self, params: ModelParams) -> LadderOp:
        self._check_params(params)
        return params.G * self.coupling() + params.Omega * self.control()

    def _check_params(self, params: ModelParams):
        if self.flavor is Flavor.DICKE and params.N is not None and params.N != self.N:
            raise InvalidParameterError(f"params.N={params.N} does not match model N={self.N}")

    def polaritons(self, angle) -> Dict[str, LadderOp]:
        """Dark (D), bright (B) and dressed ladder (Q+, Q-) operators."""
        if self.flavor is not Flavor.BOSONIC:
            raise FlavorError("polariton operators are exact only in the bosonic flavor")
        theta = angle.theta if isinstance(angle, PolaritonAngle) else float(angle)
        c, s = math.cos(theta), math.sin(theta)
        o = self._ops
        D = c * o["a"] - s * o["C"]
        B = s * o["a"] + c * o["C"]
        r = 1.0 / math.sqrt(2.0)
        out = {
            "D": D,
            "B": B,
            "D_dag": D.dag(),
            "B_dag": B.dag(),
            "Q_plus": r * (o["A"] + B),
            "Q_minus": r * (o["A"] - B),
        }
        out["Q_plus_dag"] = out["Q_plus"].dag()
        out["Q_minus_dag"] = out["Q_minus"].dag()
        for k, v in out.items():
            v.label = k
        return out


_MODELS: Dict[tuple, Model] = {}


def get_model(flavor, N: Optional[int] = None) -> Model:
    """Shared model instance; operator blocks are cached on it."""
    flavor = Flavor.coerce(flavor)
    key = (flavor, N if flavor is Flavor.DICKE else None)
    model = _MODELS.get(key)
    if model is None:
        model = _MODELS[key] = Model(flavor, key[1])
    return model


def _model_for(flavor, params: ModelParams, sector: Optional[SectorBasis] = None) -> Model:
    flavor = Flavor.coerce(flavor)
    N = params.N
    if flavor is Flavor.DICKE:
        if N is None and sector is not None:
            N = sector.N
        if N is None:
            raise InvalidParameterError("Dicke flavor requires params.N")
    if sector is not None and sector.flavor is not flavor:
        raise InvalidParameterError(f"sector flavor {sector.flavor} != {flavor}")
    if sector is not None and flavor is Flavor.DICKE and sector.N != N:
        raise InvalidParameterError(f"sector N={sector.N} != params N={N}")
    return get_model(flavor, N)


@dataclass(frozen=True)
class OperatorSet:
    """Operator blocks acting on one sector (domain = that sector)."""

    sector: SectorBasis
    a: SparseOperator
    a_dag: SparseOperator
    A: SparseOperator
    A_dag: SparseOperator
    C: SparseOperator
    C_dag: SparseOperator
    T_plus: SparseOperator
    T_minus: SparseOperator
    T_3: SparseOperator


def build_operators(flavor, params: ModelParams, sector: SectorBasis) -> OperatorSet:
    model = _model_for(flavor, params, sector)
    M = sector.M
    return OperatorSet(
        sector,
        **{name: model[name].block(M) for name in
           ("a", "a_dag", "A", "A_dag", "C", "C_dag", "T_plus", "T_minus", "T_3")},
    )


def build_hamiltonian(flavor, params: ModelParams, sector: SectorBasis) -> SparseOperator:
    model = _model_for(flavor, params, sector)
    return model.hamiltonian(params).block(sector.M)


def polariton_ops(angle, sector: SectorBasis) -> Dict[str, SparseOperator]:
    """D, D^dag, B, B^dag, Q+^dag, Q-^dag blocks with domain ``sector``."""
    if sector.flavor is not Flavor.BOSONIC:
        raise FlavorError("polariton operators are exact only in the bosonic flavor")
    pol = get_model(Flavor.BOSONIC).polaritons(angle)
    names = ("D", "D_dag", "B", "B_dag", "Q_plus_dag", "Q_minus_dag")
    return {n: pol[n].block(sector.M) for n in names}


def op_norm(op: SparseOperator) -> float:
    """Spectral norm (dense; sectors are small)."""
    if op.shape[0] == 0 or op.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(op.toarray(), 2))


def algebra_relations(model: Model) -> Dict[str, LadderOp]:
    """Residual operators that vanish when each algebra relation holds.

    In the bosonic flavor N is infinite, so the T-/N term drops out of
    the [A, C^dag] relation.
    """
    o = model
    one = o["identity"]
    inv_n = 0.0 if model.N is None else 1.0 / model.N
    return {
        "[A,A+]-1": commutator(o["A"], o["A_dag"]) - one,
        "[C,C+]-1": commutator(o["C"], o["C_dag"]) - one,
        "[A,C]": commutator(o["A"], o["C"]),
        "[A,C+]+T-/N": commutator(o["A"], o["C_dag"]) + inv_n * o["T_minus"],
        "[T-,C]+A": commutator(o["T_minus"], o["C"]) + o["A"],
        "[T+,A]+C": commutator(o["T_plus"], o["A"]) + o["C"],
        "[T+,T-]-2T3": commutator(o["T_plus"], o["T_minus"]) - 2.0 * o["T_3"],
        "[T3,T+]-T+": commutator(o["T_3"], o["T_plus"]) - o["T_plus"],
        "[T3,T-]+T-": commutator(o["T_3"], o["T_minus"]) + o["T_minus"],
    }


# relations that are algebraically exact at every finite N
EXACT_DICKE_RELATIONS = ("[A,C]", "[A,C+]+T-/N", "[T-,C]+A", "[T+,A]+C",
                         "[T+,T-]-2T3", "[T3,T+]-T+", "[T3,T-]+T-")


def commutator_report(flavor, params: ModelParams, sector: SectorBasis) -> Dict[str, float]:
    """Spectral norm of every relation residual on ``sector``."""
    model = _model_for(flavor, params, sector)
    return {name: op_norm(rel.block(sector.M)) for name, rel in algebra_relations(model).items()}


def hamiltonian_mismatch(params: ModelParams, M: int, N: int) -> float:
    """Max |H_Dicke - H_bosonic| over matrix elements on shared labels."""
    hb = get_model(Flavor.BOSONIC).hamiltonian(ModelParams(params.G, params.Omega)).block(M)
    hd = get_model(Flavor.DICKE, N).hamiltonian(ModelParams(params.G, params.Omega, N)).block(M)
    keep = [hb.domain.index[s.occupations] for s in hd.domain.states]
    sub = hb.toarray()[np.ix_(keep, keep)]
    return float(np.max(np.abs(sub - hd.toarray()))) if keep else 0.0
