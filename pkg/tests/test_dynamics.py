import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qsw_memory.algebra import ModelParams, get_model
from qsw_memory.dynamics import (
    DecayConfig,
    IntegratorConfig,
    adiabaticity_trace,
    dark_population,
    default_dt,
    evolve,
    max_gap,
)
from qsw_memory.fock import Flavor, InvalidParameterError, StateVector, enumerate_sector
from qsw_memory.schedules import PulseSchedule
from qsw_memory.spectrum import DressedLabel, dressed_state


def reference_solution(flavor, params, schedule, psi0, gamma=0.0):
    """High-order adaptive integration of the same equations."""
    model = get_model(flavor, params.N)
    M = psi0.sector.M
    Hg = params.G * model.coupling().block(M).toarray()
    Hc = model.control().block(M).toarray()
    n_exc = psi0.sector.labels()[:, 1]

    def rhs(t, y):
        return -1j * (Hg + schedule.omega(t) * Hc) @ y - 0.5 * gamma * n_exc * y

    sol = solve_ivp(rhs, (0.0, schedule.duration), psi0.amplitudes.astype(complex),
                    method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1]


def mixed_state(M, theta=0.4):
    labs = [lab for lab in (DressedLabel(0, 0, M), DressedLabel(1, 0, M - 1), DressedLabel(0, 1, M - 1))]
    psi = sum((dressed_state(l, theta) for l in labs[1:]), dressed_state(labs[0], theta))
    return psi.normalized()


@pytest.mark.parametrize("flavor,N", [(Flavor.BOSONIC, None), (Flavor.DICKE, 3)])
def test_matches_adaptive_reference(flavor, N):
    params = ModelParams(1.0, 0.0, N)
    sched = PulseSchedule.cosine(3.0, 0.5, 15.0)
    psi0 = mixed_state(2)
    if flavor is Flavor.DICKE:
        sec = enumerate_sector(flavor, 2, N)
        psi0 = StateVector(sec, np.array([psi0.amplitudes[psi0.sector.index[s.occupations]] for s in sec.states]))
    dt = 1.0 / (400 * max_gap(params, sched))
    tr = evolve(flavor, params, sched, psi0, IntegratorConfig(dt=dt, snapshots=5))
    ref = reference_solution(flavor, params, sched, psi0)
    assert np.linalg.norm(tr.final.amplitudes - ref) < 1e-9
    # the default step is coarser but still close
    coarse = evolve(flavor, params, sched, psi0, IntegratorConfig(snapshots=1))
    assert np.linalg.norm(coarse.final.amplitudes - ref) < 1e-6


def test_matches_reference_with_decay():
    params = ModelParams(1.0)
    sched = PulseSchedule.linear(0.0, 2.0, 8.0)
    psi0 = mixed_state(2)
    dt = 1.0 / (400 * max_gap(params, sched))
    tr = evolve(Flavor.BOSONIC, params, sched, psi0, IntegratorConfig(dt=dt, snapshots=3), DecayConfig(0.3))
    ref = reference_solution(Flavor.BOSONIC, params, sched, psi0, gamma=0.3)
    assert np.linalg.norm(tr.final.amplitudes - ref) < 1e-9
    assert tr.norm[-1] < tr.norm[0]


def test_conservation_laws():
    params = ModelParams(1.0)
    sched = PulseSchedule.composite([PulseSchedule.cosine(4.0, 1.0, 5.0), PulseSchedule.hold(1.0, 5.0)])
    psi0 = mixed_state(3)
    tr = evolve(Flavor.BOSONIC, params, sched, psi0, IntegratorConfig(snapshots=40))
    assert np.max(np.abs(tr.norm - 1.0)) < 1e-8
    # RK4 shrinks the norm slightly; the excitation number per unit norm stays M
    per_norm = (tr.n_ph + tr.n_1 + tr.n_2) / tr.norm ** 2
    assert np.max(np.abs(per_norm - 3.0)) < 1e-10
    # energy on the hold stretch
    H = get_model(Flavor.BOSONIC).hamiltonian(params.with_omega(1.0)).block(3).toarray()
    hold = tr.times >= 5.0
    energies = [np.vdot(s, H @ s).real for s in tr.states[hold]]
    eps = math.hypot(1.0, 1.0)
    assert max(abs(e - energies[0]) for e in energies) < 1e-8 * eps


def test_dt_bound_and_default():
    params = ModelParams(1.0)
    sched = PulseSchedule.hold(3.0, 1.0)
    eps = max_gap(params, sched)
    assert eps == pytest.approx(math.sqrt(10))
    assert default_dt(params, sched) == pytest.approx(1 / (50 * eps))
    psi0 = mixed_state(1)
    with pytest.raises(InvalidParameterError):
        evolve(Flavor.BOSONIC, params, sched, psi0, IntegratorConfig(dt=1.01 / (20 * eps)))
    evolve(Flavor.BOSONIC, params, sched, psi0, IntegratorConfig(dt=1.0 / (20 * eps)))


def test_flavor_mismatch():
    with pytest.raises(InvalidParameterError):
        evolve(Flavor.DICKE, ModelParams(1.0, 0.0, 4), PulseSchedule.hold(0.0, 1.0), mixed_state(1))


def test_snapshots_and_serialization(tmp_path):
    tr = evolve(Flavor.BOSONIC, ModelParams(1.0), PulseSchedule.hold(1.0, 2.0), mixed_state(1),
                IntegratorConfig(snapshots=4))
    assert len(tr.times) == 5
    assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(2.0)
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,norm,n_ph,n_A,n_C,P_dark"
    assert len(lines) == 6
    # full double precision survives the round trip
    assert float(lines[-1].split(",")[1]) == tr.norm[-1]
    d = tr.to_dict(include_states=True)
    assert np.array(d["states_real"]).shape == tr.states.shape


def test_adiabatic_following_of_dark_state():
    params = ModelParams(1.0)
    sched = PulseSchedule.cosine(10.0, 0.0, 400.0)
    psi0 = dressed_state(DressedLabel(0, 0, 1), math.atan2(1.0, 10.0))
    tr = evolve(Flavor.BOSONIC, params, sched, psi0, IntegratorConfig(snapshots=10))
    assert tr.p_dark[-1] > 1 - 1e-5
    # all population ends in the C exciton, with a minus sign
    target = dressed_state(DressedLabel(0, 0, 1), math.pi / 2).amplitudes
    assert abs(np.vdot(target, tr.final.amplitudes)) ** 2 > 1 - 1e-5
    thetas = np.arctan2(1.0, sched.omega(tr.times))
    np.testing.assert_allclose(dark_population(tr, thetas), tr.p_dark, atol=1e-12)


def test_diabatic_loss_shrinks_with_time():
    params = ModelParams(1.0)
    losses = []
    for T in (2.0, 8.0, 32.0):
        sched = PulseSchedule.cosine(10.0, 0.0, T)
        psi0 = dressed_state(DressedLabel(0, 0, 1), math.atan2(1.0, 10.0))
        tr = evolve(Flavor.BOSONIC, params, sched, psi0, IntegratorConfig(snapshots=1))
        losses.append(1 - tr.p_dark[-1])
    assert losses[0] > losses[1] > losses[2]


def test_adiabaticity_trace():
    params = ModelParams(1.0)
    sched = PulseSchedule.linear(0.0, 2.0, 10.0)
    tr = adiabaticity_trace(params, sched, np.array([0.0, 5.0]))
    # eta = G |dW/dt| / eps^3 with dW/dt = 0.2
    np.testing.assert_allclose(tr.eta, [0.2, 0.2 / 2 ** 1.5])
    assert tr.max_eta == pytest.approx(0.2)


def test_decay_config():
    with pytest.raises(InvalidParameterError, match="decay rate must be non-negative"):
        DecayConfig(-0.1)
    assert DecayConfig(0.2, enabled=False).rate == 0.0
