"""Dressed eigenstates built by ladder action, spectrum checks and the
adiabatic connection among zero-energy states.

The dressed state |e(m,k;n)> is

    (m! k! n!)^(-1/2) (Q+^dag)^m (Q-^dag)^k (D^dag)^n |0>

with eigenvalue (m - k) * eps, eps = sqrt(G^2 + Omega^2).  States with
m == k have zero energy and are the (generalized) dark states d(m, n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import LadderOp, ModelParams, PolaritonAngle, get_model, mixing_angle
from .fock import (
    Flavor,
    FlavorError,
    InvalidParameterError,
    SparseOperator,
    StateVector,
    enumerate_sector,
)


@dataclass(frozen=True, order=True)
class DressedLabel:
    m: int
    k: int
    n: int

    def __post_init__(self):
        if min(self.m, self.k, self.n) < 0:
            raise InvalidParameterError(f"negative dressed quantum number in {self}")

    @property
    def M(self) -> int:
        return self.m + self.k + self.n

    @property
    def is_dark(self) -> bool:
        return self.m == self.k

    def energy(self, epsilon: float) -> float:
        return (self.m - self.k) * epsilon

    def __str__(self):
        return f"e({self.m},{self.k};{self.n})"


def dressed_labels(M: int) -> List[DressedLabel]:
    return [DressedLabel(m, k, M - m - k) for m in range(M + 1) for k in range(M + 1 - m)]


def dark_labels(M: int) -> List[DressedLabel]:
    return [DressedLabel(m, m, M - 2 * m) for m in range(M // 2 + 1)]


def expected_multiplicity(q: int, M: int) -> int:
    """#{(m,k,n) >= 0 : m - k = q, m + k + n = M}."""
    return sum(1 for lab in dressed_labels(M) if lab.m - lab.k == q)


def _theta(angle) -> float:
    return angle.theta if isinstance(angle, PolaritonAngle) else float(angle)


def _vacuum() -> StateVector:
    return StateVector.basis(enumerate_sector(Flavor.BOSONIC, 0), (0, 0, 0))


def _apply_chain(ops: Sequence[LadderOp], state: StateVector) -> StateVector:
    M = state.sector.M
    amps = state.amplitudes
    for op in ops:
        blk = op.block(M)
        amps = blk.matrix @ amps
        M += op.shift
    return StateVector(get_model(Flavor.BOSONIC).sector(M), amps)


def dressed_state(label: DressedLabel, angle, flavor=Flavor.BOSONIC) -> StateVector:
    """|e(m,k;n)> at mixing angle ``angle`` by ladder action on |0>."""
    if Flavor.coerce(flavor) is not Flavor.BOSONIC:
        raise FlavorError("dressed states are defined in the bosonic flavor only")
    pol = get_model(Flavor.BOSONIC).polaritons(_theta(angle))
    chain = ([pol["D_dag"]] * label.n + [pol["Q_minus_dag"]] * label.k
             + [pol["Q_plus_dag"]] * label.m)
    scale = 1.0 / math.sqrt(math.factorial(label.m) * math.factorial(label.k)
                            * math.factorial(label.n))
    return _apply_chain(chain, _vacuum()) * scale


def dressed_state_derivative(label: DressedLabel, angle) -> StateVector:
    """Analytic d/dtheta of :func:`dressed_state`.

    Uses dD^dag/dtheta = -B^dag and dQ+-^dag/dtheta = +-D^dag/sqrt(2); all
    creation operators commute, so the product rule needs no ordering.
    """
    pol = get_model(Flavor.BOSONIC).polaritons(_theta(angle))
    m, k, n = label.m, label.k, label.n
    r = 1.0 / math.sqrt(2.0)
    base = [pol["Q_plus_dag"]] * m + [pol["Q_minus_dag"]] * k + [pol["D_dag"]] * n
    sector = get_model(Flavor.BOSONIC).sector(label.M)
    total = np.zeros(sector.dim, dtype=complex)
    terms = (
        (m, pol["Q_plus_dag"], r * pol["D_dag"]),
        (k, pol["Q_minus_dag"], -r * pol["D_dag"]),
        (n, pol["D_dag"], -1.0 * pol["B_dag"]),
    )
    for count, op, dop in terms:
        if count == 0:
            continue
        chain = list(base)
        chain.remove(op)
        chain.append(dop)
        total += count * _apply_chain(chain, _vacuum()).amplitudes
    scale = 1.0 / math.sqrt(math.factorial(m) * math.factorial(k) * math.factorial(n))
    return StateVector(sector, total * scale)


def dressed_basis(angle, M: int) -> Tuple[List[DressedLabel], np.ndarray]:
    """Labels and the (dim x dim) matrix whose columns are |e(m,k;n)>."""
    labels = dressed_labels(M)
    cols = [dressed_state(lab, angle).amplitudes for lab in labels]
    return labels, np.stack(cols, axis=1)


def dark_projector(angle, sector) -> SparseOperator:
    """Orthogonal projector onto span{d(m,n) : 2m + n = M}."""
    if sector.flavor is not Flavor.BOSONIC:
        raise FlavorError("dark projector is built from bosonic dressed states")
    V = np.stack([dressed_state(lab, angle).amplitudes for lab in dark_labels(sector.M)], axis=1)
    return SparseOperator(sector, sector, V @ V.conj().T)


@dataclass
class SpectrumReport:
    sector: int
    epsilon: float
    eigenvalues: List[float]
    multiplicities: List[int]
    expected_multiplicities: List[int]
    max_residual: float
    dark_dimension: int
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "sector": self.sector,
            "epsilon": self.epsilon,
            "eigenvalues": self.eigenvalues,
            "multiplicities": self.multiplicities,
            "expected_multiplicities": self.expected_multiplicities,
            "residuals": {"max_ladder_residual": self.max_residual},
            "dark_dimension": self.dark_dimension,
            "passed": self.passed,
            "failures": self.failures,
        }


def _cluster(values: np.ndarray, tol: float) -> List[List[float]]:
    groups: List[List[float]] = []
    for v in np.sort(values):
        if groups and v - groups[-1][-1] <= tol:
            groups[-1].append(float(v))
        else:
            groups.append([float(v)])
    return groups


def sector_spectrum(params: ModelParams, M: int, match_tol: float = 1e-10,
                    cluster_tol: float = 1e-8) -> SpectrumReport:
    """Dense diagonalization of sector ``M`` checked against (m - k) eps."""
    model = get_model(Flavor.BOSONIC)
    H = model.hamiltonian(params).block(M)
    eps = math.hypot(params.G, params.Omega)
    evals = np.linalg.eigvalsh(H.toarray())
    failures = []
    values, mults, expected = [], [], []
    for group in _cluster(evals, cluster_tol * eps):
        mean = float(np.mean(group))
        q = int(round(mean / eps))
        worst = max(abs(v - q * eps) for v in group)
        if worst > match_tol * eps:
            failures.append(f"M={M}: eigenvalue {mean!r} is not an integer multiple of eps={eps!r}")
        want = expected_multiplicity(q, M)
        if want != len(group):
            failures.append(f"M={M}: eigenvalue {q}*eps has multiplicity {len(group)}, expected {want}")
        values.append(mean)
        mults.append(len(group))
        expected.append(want)
    angle = mixing_angle(params.G, params.Omega)
    residual = 0.0
    for lab in dressed_labels(M):
        psi = dressed_state(lab, angle).amplitudes
        r = H.matrix @ psi - lab.energy(eps) * psi
        residual = max(residual, float(np.linalg.norm(r)))
    if residual > match_tol * max(eps, 1.0):
        failures.append(f"M={M}: ladder-state residual {residual:.3e}")
    return SpectrumReport(M, eps, values, mults, expected, residual,
                          len(dark_labels(M)), failures)


def verify_spectrum(params: ModelParams, M_max: int) -> List[SpectrumReport]:
    if M_max > 10:
        raise InvalidParameterError(f"M_max={M_max} beyond desk scale (<= 10)")
    return [sector_spectrum(params, M) for M in range(M_max + 1)]


@dataclass
class ConnectionMatrix:
    """<e(m',k';n')| d/dtheta |d(m,n)> with rows over all dressed labels and
    columns over dark labels of one sector."""

    theta: float
    M: int
    delta: Optional[float]
    rows: List[DressedLabel]
    cols: List[DressedLabel]
    matrix: np.ndarray

    def _rows(self, dark: bool) -> np.ndarray:
        return np.array([lab.is_dark == dark for lab in self.rows])

    @property
    def dark_dark(self) -> np.ndarray:
        return self.matrix[self._rows(True)]

    @property
    def dark_bright(self) -> np.ndarray:
        return self.matrix[self._rows(False)]

    @property
    def max_dark_dark(self) -> float:
        return float(np.max(np.abs(self.dark_dark))) if self.dark_dark.size else 0.0

    @property
    def max_dark_bright(self) -> float:
        return float(np.max(np.abs(self.dark_bright))) if self.dark_bright.size else 0.0

    def entry(self, row: DressedLabel, col: DressedLabel) -> complex:
        return complex(self.matrix[self.rows.index(row), self.cols.index(col)])

    def nonzero_targets(self, col: DressedLabel, tol: float = 1e-6) -> List[DressedLabel]:
        j = self.cols.index(col)
        return [lab for i, lab in enumerate(self.rows) if abs(self.matrix[i, j]) > tol]

    def to_dict(self) -> dict:
        def block(mask):
            rows = [str(r) for r, keep in zip(self.rows, mask) if keep]
            vals = self.matrix[mask]
            return {"rows": rows, "cols": [str(c) for c in self.cols],
                    "real": vals.real.tolist(), "imag": vals.imag.tolist()}
        return {
            "sector": self.M,
            "theta": self.theta,
            "delta": self.delta,
            "connection_blocks": {
                "dark_dark": block(self._rows(True)),
                "dark_bright": block(self._rows(False)),
            },
            "max_dark_dark": self.max_dark_dark,
            "max_dark_bright": self.max_dark_bright,
        }


def connection_matrix(theta: float, M: int, delta: float = 1e-5,
                      method: str = "finite-difference") -> ConnectionMatrix:
    """Connection of the dark states of sector ``M`` at angle ``theta``.

    ``method`` is ``"finite-difference"`` (central difference with step
    ``delta``) or ``"analytic"`` (ladder derivative rules).
    """
    if method == "finite-difference":
        if not 1e-6 <= delta <= 1e-4:
            raise InvalidParameterError(f"finite-difference step {delta} outside [1e-6, 1e-4]")
    elif method != "analytic":
        raise InvalidParameterError(f"unknown connection method {method!r}")
    rows, basis = dressed_basis(theta, M)
    cols = dark_labels(M)
    derivs = []
    for lab in cols:
        if method == "analytic":
            derivs.append(dressed_state_derivative(lab, theta).amplitudes)
        else:
            plus = dressed_state(lab, theta + delta).amplitudes
            minus = dressed_state(lab, theta - delta).amplitudes
            derivs.append((plus - minus) / (2.0 * delta))
    mat = basis.conj().T @ np.stack(derivs, axis=1)
    return ConnectionMatrix(theta, M, delta if method != "analytic" else None, rows, cols, mat)


def dark_expansion_coefficients(m: int, n: int = 0, theta: float = 0.7) -> np.ndarray:
    """Coefficients c_j with d(m,n) = sum_j c_j A^dag^(2(m-j)) B^dag^(2j) |d_n>,
    recovered by least squares from the ladder-built state."""
    model = get_model(Flavor.BOSONIC)
    pol = model.polaritons(theta)
    seed = dressed_state(DressedLabel(0, 0, n), theta)
    cols = []
    for j in range(m + 1):
        chain = [model["A_dag"]] * (2 * (m - j)) + [pol["B_dag"]] * (2 * j)
        cols.append(_apply_chain(chain, seed).amplitudes)
    target = dressed_state(DressedLabel(m, m, n), theta).amplitudes
    coeffs, *_ = np.linalg.lstsq(np.stack(cols, axis=1), target, rcond=None)
    return coeffs.real
