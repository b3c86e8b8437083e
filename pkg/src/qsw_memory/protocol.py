"""Write / hold / read cycle of the quasi-spin-wave memory.

A photonic code sum_n c_n |n>_L is loaded as the dark-state family
sum_n c_n |d(m, n)> at the initial mixing angle, carried to theta = pi/2
(all information in the C exciton, up to the (-1)^n transport sign),
held at Omega = 0 and carried back.  Each excitation sector evolves
independently; the family is recombined for fidelities and reduced
density matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .algebra import ModelParams, get_model, mixing_angle
from .dynamics import (
    DecayConfig,
    IntegratorConfig,
    Trajectory,
    adiabaticity_trace,
    evolve,
    zero_energy_projector,
)
from .fock import Flavor, InvalidParameterError, StateVector, enumerate_sector
from .oracle import ResourceLimitError
from .schedules import PulseSchedule
from .spectrum import DressedLabel, dressed_state

PHOTON_ENDPOINT_RATIO = 20.0
DEFAULT_M_MAX = 10
MODES = ("photon", "A", "C")


class ProtocolConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class PhotonCode:
    coefficients: tuple

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise InvalidParameterError("photon code needs at least one coefficient")
        if abs(np.vdot(c, c).real - 1.0) > 1e-12:
            raise InvalidParameterError(f"photon code not normalized (norm^2 = {np.vdot(c, c).real!r})")

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex], normalize: bool = True) -> "PhotonCode":
        c = np.asarray(amps, dtype=complex)
        if normalize:
            c = c / np.linalg.norm(c)
        return cls(tuple(complex(x) for x in c))

    @classmethod
    def fock(cls, n: int) -> "PhotonCode":
        c = [0.0] * (n + 1)
        c[n] = 1.0
        return cls.from_amplitudes(c)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=complex)

    @property
    def n_max(self) -> int:
        return len(self.coefficients) - 1

    def support(self) -> List[int]:
        return [n for n, c in enumerate(self.coefficients) if abs(c) > 0]

    def signed(self, times: int = 1) -> np.ndarray:
        """Coefficients with the (-1)^n transport sign applied ``times`` times."""
        n = np.arange(self.n_max + 1)
        return self.array * (-1.0) ** (n * times)


@dataclass(frozen=True)
class PairedStateSpec:
    m: int = 0
    partner: str = "C"

    def __post_init__(self):
        if self.m < 0:
            raise InvalidParameterError("pairing order m must be >= 0")
        if self.partner not in ("C", "a"):
            raise InvalidParameterError(f"partner mode must be 'C' or 'a', got {self.partner!r}")


def paired_state(spec: PairedStateSpec) -> StateVector:
    """(A^dag^2 - P^dag^2)^m / (2^m m!) |0>."""
    model = get_model(Flavor.BOSONIC)
    partner = model["C_dag"] if spec.partner == "C" else model["a_dag"]
    pair = model["A_dag"] @ model["A_dag"] - partner @ partner
    psi = StateVector.basis(enumerate_sector(Flavor.BOSONIC, 0), (0, 0, 0))
    for _ in range(spec.m):
        psi = StateVector(model.sector(psi.sector.M + 2), pair.block(psi.sector.M).matrix @ psi.amplitudes)
    return psi * (1.0 / (2 ** spec.m * math.factorial(spec.m)))


class SectorFamily(dict):
    """Mapping M -> StateVector for a state spread over several sectors."""

    def norm2(self) -> float:
        return float(sum(np.vdot(v.amplitudes, v.amplitudes).real for v in self.values()))

    def inner(self, other: "SectorFamily") -> complex:
        return complex(sum(np.vdot(self[M].amplitudes, other[M].amplitudes)
                           for M in self.keys() & other.keys()))

    def occupation_grid(self, size: Optional[int] = None) -> np.ndarray:
        """Amplitude array psi[n_ph, n_1, n_2] over all sectors."""
        size = size or (max(self.keys(), default=0) + 1)
        grid = np.zeros((size, size, size), dtype=complex)
        for vec in self.values():
            for st, amp in zip(vec.sector.states, vec.amplitudes):
                grid[st.occupations] += amp
        return grid

    def copy(self):
        return SectorFamily(self)


def reduced_density_matrix(family: SectorFamily, mode: str) -> np.ndarray:
    """Partial trace onto ``mode`` ('photon', 'A' or 'C'; 'a'/'c' for Dicke)."""
    axis = {"photon": 0, "ph": 0, "A": 1, "a": 1, "C": 2, "c": 2}.get(mode)
    if axis is None:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    psi = np.moveaxis(family.occupation_grid(), axis, 0)
    flat = psi.reshape(psi.shape[0], -1)
    return flat @ flat.conj().T


def _bosonic_to(flavor: Flavor, N: Optional[int], vec: StateVector) -> StateVector:
    """Carry a bosonic vector onto the shared labels of another flavor."""
    if flavor is Flavor.BOSONIC:
        return vec
    target = enumerate_sector(flavor, vec.sector.M, N)
    amps = np.array([vec.amplitudes[vec.sector.index[s.occupations]] for s in target.states])
    return StateVector(target, amps)


def dark_family(code: PhotonCode, paired: PairedStateSpec, theta: float) -> SectorFamily:
    """sum_n c_n |d(m, n)> at angle ``theta`` (bosonic)."""
    fam = SectorFamily()
    for n in code.support():
        lab = DressedLabel(paired.m, paired.m, n)
        fam[lab.M] = dressed_state(lab, theta) * code.coefficients[n]
    return fam


def prepare_initial(code: PhotonCode, paired: PairedStateSpec = PairedStateSpec(),
                    theta: float = 0.0, flavor=Flavor.BOSONIC, N: Optional[int] = None,
                    G: float = 1.0, M_max: int = DEFAULT_M_MAX) -> SectorFamily:
    """Load ``code`` into the dark-state family at mixing angle ``theta``.

    At theta = 0 this is |A,C,m> (x) sum_n c_n |n>_L.  For the Dicke flavor
    each sector's bosonic image is projected onto the zero-energy space of
    the finite-N Hamiltonian at the matching Omega and rescaled to |c_n|.
    """
    flavor = Flavor.coerce(flavor)
    if code.n_max + 2 * paired.m > M_max:
        raise ResourceLimitError(
            f"code needs sector {code.n_max + 2 * paired.m}, budget is M_max = {M_max}"
        )
    fam = dark_family(code, paired, theta)
    if flavor is Flavor.BOSONIC:
        return fam
    model = get_model(flavor, N)
    out = SectorFamily()
    omega = G / math.tan(theta) if theta > 0 else math.inf
    for M, vec in fam.items():
        v = _bosonic_to(flavor, N, vec)
        weight = math.sqrt(np.vdot(vec.amplitudes, vec.amplitudes).real)
        if math.isfinite(omega):
            H = model.hamiltonian(ModelParams(G, omega, N)).block(M).toarray()
            P = zero_energy_projector(H, math.hypot(G, omega))
            amps = P @ v.amplitudes
        else:
            amps = v.amplitudes
        out[M] = StateVector(v.sector, amps * (weight / np.linalg.norm(amps)))
    return out


@dataclass(frozen=True)
class CycleSchedule:
    write: PulseSchedule
    hold: PulseSchedule
    read: PulseSchedule

    @classmethod
    def cosine(cls, G: float = 1.0, omega_high: Optional[float] = None,
               ramp_time: float = 3000.0, hold_time: float = 100.0) -> "CycleSchedule":
        omega_high = PHOTON_ENDPOINT_RATIO * G if omega_high is None else omega_high
        return cls(PulseSchedule.cosine(omega_high, 0.0, ramp_time),
                   PulseSchedule.hold(0.0, hold_time),
                   PulseSchedule.cosine(0.0, omega_high, ramp_time))

    @property
    def duration(self) -> float:
        return self.write.duration + self.hold.duration + self.read.duration

    def validate(self, G: float) -> None:
        high = PHOTON_ENDPOINT_RATIO * G * (1 - 1e-12)
        tol = 1e-9 * G
        problems = []
        if self.write.start_value < high:
            problems.append(f"write ramp starts at Omega={self.write.start_value!r} < {PHOTON_ENDPOINT_RATIO}G "
                            "(theta does not start near 0)")
        if abs(self.write.end_value) > tol:
            problems.append(f"write ramp ends at Omega={self.write.end_value!r} (theta does not reach pi/2)")
        if abs(self.hold.start_value) > tol or abs(self.hold.end_value) > tol:
            problems.append("hold stage must keep Omega = 0")
        if abs(self.read.start_value) > tol:
            problems.append(f"read ramp starts at Omega={self.read.start_value!r}, expected 0")
        if self.read.end_value < high:
            problems.append(f"read ramp ends at Omega={self.read.end_value!r} < {PHOTON_ENDPOINT_RATIO}G")
        if problems:
            raise ProtocolConfigurationError("; ".join(problems))

    def max_omega(self) -> float:
        return max(self.write.max_value, self.hold.max_value, self.read.max_value)


@dataclass
class MemoryResult:
    """Outcome of one write/hold/read cycle.

    ``f_cycle`` is <s| rho_photon |s> for the plain code s, so it includes
    the fixed exciton admixture of the dark state at the initial angle and
    saturates at (1 + cos theta0)/2 for m = 0.  ``f_return`` is the overlap
    with the prepared dark family itself and isolates the non-adiabatic
    loss of the round trip.
    """

    flavor: str
    code: PhotonCode
    paired: PairedStateSpec
    f_write: float
    f_cycle: float
    f_return: float
    rho_c_write: np.ndarray
    rho_photon_cycle: np.ndarray
    rho_c_target: np.ndarray
    write_overlap_signed: float
    write_overlap_plain: float
    cycle_overlap_signed: float
    cycle_overlap_plain: float
    max_eta: float
    peak_n_A_write: float
    norm_lost: float
    max_bright_fraction: float
    duration: float
    write_state: SectorFamily = field(repr=False)
    final_state: SectorFamily = field(repr=False)
    trajectories: Dict[str, Dict[int, Trajectory]] = field(repr=False)

    def stage_series(self, stage: str, attr: str) -> np.ndarray:
        trs = self.trajectories[stage]
        return sum(getattr(tr, attr) for tr in trs.values()) if trs else np.zeros(0)

    def to_dict(self) -> dict:
        def mat(rho):
            return {"real": rho.real.tolist(), "imag": rho.imag.tolist()}
        c = self.code.array
        return {
            "flavor": self.flavor,
            "code": {"real": c.real.tolist(), "imag": c.imag.tolist()},
            "paired": {"m": self.paired.m, "partner": self.paired.partner},
            "F_write": self.f_write,
            "F_cycle": self.f_cycle,
            "F_return": self.f_return,
            "write_overlap_signed": self.write_overlap_signed,
            "write_overlap_plain": self.write_overlap_plain,
            "cycle_overlap_signed": self.cycle_overlap_signed,
            "cycle_overlap_plain": self.cycle_overlap_plain,
            "max_eta": self.max_eta,
            "peak_n_A_write": self.peak_n_A_write,
            "norm_lost": self.norm_lost,
            "max_bright_fraction": self.max_bright_fraction,
            "duration": self.duration,
            "rho_C_write": mat(self.rho_c_write),
            "rho_photon_cycle": mat(self.rho_photon_cycle),
        }


def _expect(rho: np.ndarray, vec: np.ndarray) -> float:
    n = min(rho.shape[0], vec.size)
    v = np.zeros(rho.shape[0], dtype=complex)
    v[:n] = vec[:n]
    if np.linalg.norm(vec[n:]) > 0:
        raise InvalidParameterError("target state exceeds density-matrix support")
    return float(np.vdot(v, rho @ v).real)


def _evolve_family(flavor, params, schedule, family, dt, snapshots, decay):
    out, trs = SectorFamily(), {}
    for M, vec in sorted(family.items()):
        tr = evolve(flavor, params, schedule, vec, IntegratorConfig(dt=dt, snapshots=snapshots), decay)
        trs[M] = tr
        out[M] = tr.final
    return out, trs


def run_memory_cycle(flavor, params: ModelParams, code: PhotonCode,
                     paired: PairedStateSpec = PairedStateSpec(),
                     ramps: Optional[CycleSchedule] = None,
                     decay: Optional[DecayConfig] = None,
                     dt: Optional[float] = None, snapshots: int = 200) -> MemoryResult:
    flavor = Flavor.coerce(flavor)
    G = params.G
    ramps = ramps or CycleSchedule.cosine(G)
    ramps.validate(G)
    if dt is None:
        dt = 1.0 / (50.0 * math.hypot(G, ramps.max_omega()))
    theta0 = mixing_angle(G, ramps.write.start_value)
    psi0 = prepare_initial(code, paired, theta0, flavor, params.N, G)

    after_write, tr_w = _evolve_family(flavor, params, ramps.write, psi0, dt, snapshots, decay)
    after_hold, tr_h = _evolve_family(flavor, params, ramps.hold, after_write, dt, max(2, snapshots // 10), decay)
    after_read, tr_r = _evolve_family(flavor, params, ramps.read, after_hold, dt, snapshots, decay)

    target_write = SectorFamily({M: _bosonic_to(flavor, params.N, v)
                                 for M, v in dark_family(code, paired, math.pi / 2).items()})
    f_write = abs(target_write.inner(after_write)) ** 2

    rho_c = reduced_density_matrix(after_write, "C")
    rho_ph = reduced_density_matrix(after_read, "photon")
    rho_c_target = reduced_density_matrix(target_write, "C")
    plain = code.array
    f_cycle = _expect(rho_ph, plain)

    eta = max(adiabaticity_trace(params, ramps.write).max_eta,
              adiabaticity_trace(params, ramps.read).max_eta)
    stages = {"write": tr_w, "hold": tr_h, "read": tr_r}
    bright = 0.0
    for trs in stages.values():
        total = sum(tr.norm ** 2 for tr in trs.values())
        dark = sum(tr.p_dark for tr in trs.values())
        bright = max(bright, float(np.nanmax(total - dark)))
    peak_na = float(np.max(sum(tr.n_1 for tr in tr_w.values())))
    return MemoryResult(
        flavor=flavor.value,
        code=code,
        paired=paired,
        f_write=f_write,
        f_cycle=f_cycle,
        f_return=abs(psi0.inner(after_read)) ** 2 / psi0.norm2(),
        rho_c_write=rho_c,
        rho_photon_cycle=rho_ph,
        rho_c_target=rho_c_target,
        write_overlap_signed=_expect(rho_c, code.signed(1)),
        write_overlap_plain=_expect(rho_c, plain),
        cycle_overlap_signed=_expect(rho_ph, code.signed(2)),
        cycle_overlap_plain=f_cycle,
        max_eta=eta,
        peak_n_A_write=peak_na,
        norm_lost=psi0.norm2() - after_read.norm2(),
        max_bright_fraction=bright,
        duration=ramps.duration,
        write_state=after_write,
        final_state=after_read,
        trajectories=stages,
    )


@dataclass
class FiniteNRow:
    N: Optional[int]
    f_cycle: float
    deviation: float


def finite_N_comparison(code: PhotonCode, G: float, Ns: Sequence[int],
                        ramps: Optional[CycleSchedule] = None,
                        paired: PairedStateSpec = PairedStateSpec(),
                        dt: Optional[float] = None, snapshots: int = 20):
    """F_cycle for the Dicke model at each N and its distance to the bosonic run.

    Returns ``(boson_result, rows)``.
    """
    ramps = ramps or CycleSchedule.cosine(G)
    boson = run_memory_cycle(Flavor.BOSONIC, ModelParams(G), code, paired, ramps,
                             dt=dt, snapshots=snapshots)
    rows = []
    for N in Ns:
        res = run_memory_cycle(Flavor.DICKE, ModelParams(G, 0.0, N), code, paired, ramps,
                               dt=dt, snapshots=snapshots)
        rows.append(FiniteNRow(N, res.f_cycle, abs(res.f_cycle - boson.f_cycle)))
    return boson, rows
