"""Fixed-step RK4 integration of i d/dt psi = H(t) psi within one sector.

H(t) = G * coupling + Omega(t) * control - i (gamma_a / 2) n_A, where the
last term is an optional phenomenological decay of the excited-state
exciton.  Sectors are tiny, so the kernel works on dense matrices.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from numba import njit

from .algebra import ModelParams, dressed_gap, get_model, mixing_angle
from .fock import Flavor, InvalidParameterError, StateVector
from .schedules import PulseSchedule
from .spectrum import dark_projector

DEFAULT_STEPS_PER_PERIOD = 50
MIN_STEPS_PER_PERIOD = 20


class DivergenceError(RuntimeError):
    def __init__(self, time: float):
        super().__init__(f"non-finite amplitudes at t = {time!r}")
        self.time = time


@dataclass(frozen=True)
class DecayConfig:
    gamma_a: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if self.gamma_a < 0:
            raise InvalidParameterError("decay rate must be non-negative")

    @property
    def rate(self) -> float:
        return self.gamma_a if self.enabled else 0.0


@dataclass(frozen=True)
class IntegratorConfig:
    """``dt=None`` picks 1 / (50 eps_max).  ``snapshots`` is the number of
    equal intervals at which the state is recorded."""

    dt: Optional[float] = None
    snapshots: int = 200
    track_dark: bool = True


def max_gap(params: ModelParams, schedule: PulseSchedule) -> float:
    return math.hypot(params.G, schedule.max_value)


def default_dt(params: ModelParams, schedule: PulseSchedule) -> float:
    return 1.0 / (DEFAULT_STEPS_PER_PERIOD * max_gap(params, schedule))


@njit(cache=True)
def _rhs(out, ptr0, idx0, val0, ptr1, idx1, val1, damp, omega, psi):
    # out = -i (H0 + omega H1) psi - damp * psi, with real H0, H1, damp
    for i in range(psi.shape[0]):
        re = 0.0
        im = 0.0
        for p in range(ptr0[i], ptr0[i + 1]):
            v = psi[idx0[p]]
            re += val0[p] * v.real
            im += val0[p] * v.imag
        for p in range(ptr1[i], ptr1[i + 1]):
            v = psi[idx1[p]]
            re += omega * val1[p] * v.real
            im += omega * val1[p] * v.imag
        out[i] = complex(im - damp[i] * psi[i].real, -re - damp[i] * psi[i].imag)


@njit(cache=True)
def _rk4_chunk(psi, ptr0, idx0, val0, ptr1, idx1, val1, damp, omegas, dt, nsteps):
    dim = psi.shape[0]
    k1 = np.empty(dim, dtype=np.complex128)
    k2 = np.empty(dim, dtype=np.complex128)
    k3 = np.empty(dim, dtype=np.complex128)
    k4 = np.empty(dim, dtype=np.complex128)
    tmp = np.empty(dim, dtype=np.complex128)
    half = 0.5 * dt
    sixth = dt / 6.0
    for s in range(nsteps):
        o0 = omegas[2 * s]
        o1 = omegas[2 * s + 1]
        o2 = omegas[2 * s + 2]
        _rhs(k1, ptr0, idx0, val0, ptr1, idx1, val1, damp, o0, psi)
        for i in range(dim):
            tmp[i] = psi[i] + half * k1[i]
        _rhs(k2, ptr0, idx0, val0, ptr1, idx1, val1, damp, o1, tmp)
        for i in range(dim):
            tmp[i] = psi[i] + half * k2[i]
        _rhs(k3, ptr0, idx0, val0, ptr1, idx1, val1, damp, o1, tmp)
        for i in range(dim):
            tmp[i] = psi[i] + dt * k3[i]
        _rhs(k4, ptr0, idx0, val0, ptr1, idx1, val1, damp, o2, tmp)
        for i in range(dim):
            psi[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return psi


def _csr_parts(mat):
    m = sp.csr_matrix(mat)
    if m.nnz and np.max(np.abs(m.data.imag)) > 0:
        raise InvalidParameterError("integrator kernel expects a real Hamiltonian")
    m = sp.csr_matrix(m.real, dtype=float)
    m.sort_indices()
    return (m.indptr.astype(np.int64), m.indices.astype(np.int64),
            np.ascontiguousarray(m.data, dtype=float))


@dataclass
class Trajectory:
    flavor: Flavor
    M: int
    times: np.ndarray
    states: np.ndarray  # (n_snapshots, dim)
    omega: np.ndarray
    norm: np.ndarray
    n_ph: np.ndarray
    n_1: np.ndarray
    n_2: np.ndarray
    p_dark: np.ndarray
    dt: float
    steps: int
    sector: object = field(repr=False, default=None)

    @property
    def final(self) -> StateVector:
        return StateVector(self.sector, self.states[-1].copy())

    @property
    def initial(self) -> StateVector:
        return StateVector(self.sector, self.states[0].copy())

    def state_at(self, i: int) -> StateVector:
        return StateVector(self.sector, self.states[i].copy())

    @property
    def mode_names(self):
        if self.flavor is Flavor.BOSONIC:
            return ("n_ph", "n_A", "n_C")
        return ("n_ph", "n_a", "n_c")

    def rows(self):
        for i in range(len(self.times)):
            yield (self.times[i], self.norm[i], self.n_ph[i], self.n_1[i], self.n_2[i], self.p_dark[i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "norm") + self.mode_names + ("P_dark",))
            for row in self.rows():
                w.writerow([f"{x:.17g}" for x in row])

    def to_dict(self, include_states: bool = False) -> dict:
        out = {
            "flavor": self.flavor.value,
            "sector": self.M,
            "dt": self.dt,
            "steps": self.steps,
            "t": self.times.tolist(),
            "omega": self.omega.tolist(),
            "norm": self.norm.tolist(),
            self.mode_names[0]: self.n_ph.tolist(),
            self.mode_names[1]: self.n_1.tolist(),
            self.mode_names[2]: self.n_2.tolist(),
            "P_dark": self.p_dark.tolist(),
        }
        if include_states:
            out["labels"] = self.sector.labels().tolist()
            out["states_real"] = self.states.real.tolist()
            out["states_imag"] = self.states.imag.tolist()
        return out

    def to_json(self, path, include_states: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_states), fh, indent=1)


def zero_energy_projector(H: np.ndarray, epsilon: float, tol: float = 1e-9) -> np.ndarray:
    """Projector onto the numerical kernel of a Hermitian matrix."""
    w, v = np.linalg.eigh(H)
    keep = np.abs(w) < tol * max(epsilon, 1.0)
    V = v[:, keep]
    return V @ V.conj().T


def _dark_population(flavor, model, params, sector, omega, states) -> np.ndarray:
    out = np.empty(len(states))
    thetas = mixing_angle(params.G, np.asarray(omega))
    for i, (theta, psi) in enumerate(zip(thetas, states)):
        if flavor is Flavor.BOSONIC:
            P = dark_projector(float(theta), sector).toarray()
        else:
            H = model.hamiltonian(params.with_omega(float(omega[i]))).block(sector.M).toarray()
            P = zero_energy_projector(H, float(dressed_gap(params.G, omega[i])))
        out[i] = float(np.vdot(psi, P @ psi).real)
    return out


def evolve(flavor, params: ModelParams, schedule: PulseSchedule, psi0: StateVector,
           config: IntegratorConfig = IntegratorConfig(),
           decay: Optional[DecayConfig] = None) -> Trajectory:
    """Integrate ``psi0`` through ``schedule``; ``params.Omega`` is ignored."""
    flavor = Flavor.coerce(flavor)
    if psi0.sector.flavor is not flavor:
        raise InvalidParameterError(f"initial state is {psi0.sector.flavor.value}, evolving {flavor.value}")
    model = get_model(flavor, params.N if flavor is Flavor.DICKE else None)
    sector = psi0.sector
    M = sector.M
    eps_max = max_gap(params, schedule)
    dt = config.dt if config.dt is not None else default_dt(params, schedule)
    if not dt > 0 or dt > 1.0 / (MIN_STEPS_PER_PERIOD * eps_max) * (1 + 1e-12):
        raise InvalidParameterError(
            f"dt={dt!r} exceeds validity bound 1/(20 eps_max) = {1.0 / (MIN_STEPS_PER_PERIOD * eps_max)!r}"
        )
    T = schedule.duration
    nsteps = max(1, int(math.ceil(T / dt - 1e-9))) if T > 0 else 0
    dt = T / nsteps if nsteps else 0.0
    n_snap = max(1, min(config.snapshots, nsteps)) if nsteps else 1
    # snapshot step indices, equally spaced
    marks = np.unique(np.round(np.linspace(0, nsteps, n_snap + 1)).astype(np.int64))

    Hg = (params.G * model.coupling().block(M)).toarray()
    Hc = model.control().block(M).toarray()
    gamma = decay.rate if decay is not None else 0.0
    n_exc = sector.labels()[:, 1].astype(float) if sector.dim else np.zeros(0)
    K0 = _csr_parts(Hg)
    K1 = _csr_parts(Hc)
    damp = np.ascontiguousarray(0.5 * gamma * n_exc, dtype=float)

    psi = psi0.amplitudes.astype(np.complex128).copy()
    states = [psi.copy()]
    for lo, hi in zip(marks[:-1], marks[1:]):
        steps = int(hi - lo)
        tgrid = (lo + 0.5 * np.arange(2 * steps + 1)) * dt
        omegas = np.asarray(schedule.omega(tgrid), dtype=float)
        psi = _rk4_chunk(psi, *K0, *K1, damp, omegas, dt, steps)
        if not np.all(np.isfinite(psi)):
            raise DivergenceError(float(hi * dt))
        states.append(psi.copy())
    states_arr = np.array(states)
    times = marks * dt
    omega_t = np.asarray(schedule.omega(times), dtype=float)
    probs = np.abs(states_arr) ** 2
    labels = sector.labels().astype(float)
    pops = probs @ labels if sector.dim else np.zeros((len(times), 3))
    if config.track_dark:
        p_dark = _dark_population(flavor, model, params, sector, omega_t, states_arr)
    else:
        p_dark = np.full(len(times), np.nan)
    return Trajectory(flavor, M, times, states_arr, omega_t,
                      np.sqrt(probs.sum(axis=1)), pops[:, 0], pops[:, 1], pops[:, 2],
                      p_dark, dt, nsteps, sector)


def dark_population(trajectory: Trajectory, angle_of_t: Callable) -> np.ndarray:
    """P_dark(t) = |P(theta(t)) psi(t)|^2 for a bosonic trajectory."""
    if trajectory.flavor is not Flavor.BOSONIC:
        raise InvalidParameterError("dark population needs a bosonic trajectory")
    thetas = angle_of_t(trajectory.times) if callable(angle_of_t) else np.asarray(angle_of_t)
    out = np.empty(len(trajectory.times))
    for i, (theta, psi) in enumerate(zip(np.broadcast_to(thetas, trajectory.times.shape), trajectory.states)):
        P = dark_projector(float(theta), trajectory.sector).toarray()
        out[i] = float(np.vdot(psi, P @ psi).real)
    return out


@dataclass
class AdiabaticityTrace:
    times: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    epsilon: np.ndarray

    @property
    def max_eta(self) -> float:
        return float(np.max(self.eta)) if self.eta.size else 0.0


def adiabaticity_trace(params: ModelParams, schedule: PulseSchedule, grid=None) -> AdiabaticityTrace:
    """eta(t) = G |dOmega/dt| / eps(t)^3."""
    if grid is None:
        grid = np.linspace(0.0, schedule.duration, 2001)
    t = np.asarray(grid, dtype=float)
    omega = np.asarray(schedule.omega(t), dtype=float)
    omega_dot = np.asarray(schedule.omega_dot(t), dtype=float)
    eps = dressed_gap(params.G, omega)
    eta = params.G * np.abs(omega_dot) / eps ** 3
    return AdiabaticityTrace(t, eta, mixing_angle(params.G, omega), eps)
