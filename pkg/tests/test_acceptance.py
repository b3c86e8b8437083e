"""Acceptance suite.  Each test records one PASS/FAIL line, printed in the
terminal summary, and then asserts the same condition."""

import math

import numpy as np
import pytest

from qsw_memory.algebra import EXACT_DICKE_RELATIONS, ModelParams, commutator_report, get_model, op_norm
from qsw_memory.dynamics import DecayConfig, IntegratorConfig, evolve, max_gap
from qsw_memory.fock import Flavor, enumerate_sector
from qsw_memory.oracle import tensor_oracle
from qsw_memory.protocol import (
    CycleSchedule,
    PairedStateSpec,
    PhotonCode,
    finite_N_comparison,
    run_memory_cycle,
)
from qsw_memory.schedules import PulseSchedule
from qsw_memory.spectrum import (
    DressedLabel,
    connection_matrix,
    dark_projector,
    dressed_state,
    sector_spectrum,
)

SEED = 7
DRAWS = 20
M_SPECTRUM = 8
THETAS = (0.1, 0.5, 1.0, 1.4)
T_LADDER = (250.0, 500.0, 1000.0, 2000.0, 4000.0)
N_LADDER = (4, 8, 16, 32, 64)
# long ramps push diabatic noise below the 1/N signal at M = 2
T_FINITE_N = 40000.0
GAMMA = 0.1

SUPERPOSITION = PhotonCode.from_amplitudes([1.0, 1.0])


def parameter_draws():
    rng = np.random.default_rng(SEED)
    return [(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.0, 3.0))) for _ in range(DRAWS)]


@pytest.fixture(scope="module")
def standard_cycle():
    return run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), SUPERPOSITION,
                            ramps=CycleSchedule.cosine(1.0, 20.0, 3000.0, 100.0), snapshots=100)


def final_norm_error(res):
    """Largest |norm - 1| of the whole sector family over all snapshots."""
    worst = 0.0
    for trs in res.trajectories.values():
        total = np.sqrt(sum(tr.norm ** 2 for tr in trs.values()))
        worst = max(worst, float(np.max(np.abs(total - 1.0))))
    return worst


def test_c01_algebra_closure(record):
    worst_bos = 0.0
    model = get_model(Flavor.BOSONIC)
    for M in range(M_SPECTRUM + 1):
        worst_bos = max(worst_bos, max(commutator_report(Flavor.BOSONIC, ModelParams(1.0), model.sector(M)).values()))
    worst_dicke = 0.0
    for N in (2, 5, 20, 100):
        dm = get_model(Flavor.DICKE, N)
        for M in range(M_SPECTRUM + 1):
            rep = commutator_report(Flavor.DICKE, ModelParams(1.0, 0.0, N), dm.sector(M))
            worst_dicke = max(worst_dicke, max(rep[k] for k in EXACT_DICKE_RELATIONS))
    ok = worst_bos < 1e-12 and worst_dicke < 1e-12
    record(1, ok, "algebra closure",
           f"bosonic max residual {worst_bos:.2e}, Dicke exact relations {worst_dicke:.2e} (< 1e-12)")
    assert ok


def test_c02_oracle_equivalence(record):
    G, W = 0.9, 1.3
    worst = 0.0
    for N in range(1, 6):
        orc = tensor_oracle(N, G, W, photon_cutoff=4)
        model = get_model(Flavor.DICKE, N)
        H = model.hamiltonian(ModelParams(G, W, N))
        for M in range(0, 4):
            for name in ("a_dag", "A_dag", "C_dag"):
                worst = max(worst, np.max(np.abs(model[name].block(M).toarray() - orc.block(name, M, M + 1)),
                                          initial=0.0))
            for name in ("T_plus", "T_minus", "T_3"):
                worst = max(worst, np.max(np.abs(model[name].block(M).toarray() - orc.block(name, M, M)),
                                          initial=0.0))
            worst = max(worst, np.max(np.abs(H.block(M).toarray() - orc.block("H", M, M)), initial=0.0))
    ok = worst < 1e-12
    record(2, ok, "oracle equivalence", f"max |Dicke - tensor product| = {worst:.2e} for N <= 5, M <= 3")
    assert ok


def test_c03_spectrum(record):
    failures, worst = [], 0.0
    for G, W in parameter_draws():
        for M in range(M_SPECTRUM + 1):
            rep = sector_spectrum(ModelParams(G, W), M, match_tol=1e-10)
            failures += rep.failures
            eps = rep.epsilon
            for v in rep.eigenvalues:
                worst = max(worst, abs(v - round(v / eps) * eps) / eps)
    ok = not failures
    record(3, ok, "spectrum (m-k) eps",
           f"{DRAWS} draws, M <= {M_SPECTRUM}: worst relative deviation {worst:.1e}, {len(failures)} failures")
    assert ok, failures[:5]


def test_c04_dark_annihilation(record):
    worst = 0.0
    model = get_model(Flavor.BOSONIC)
    for G, W in parameter_draws():
        H = model.hamiltonian(ModelParams(G, W))
        for M in range(M_SPECTRUM + 1):
            P = dark_projector(math.atan2(G, W), enumerate_sector(Flavor.BOSONIC, M))
            worst = max(worst, op_norm(H.block(M) @ P))
    ok = worst < 1e-10
    record(4, ok, "dark-space annihilation", f"max ||H P_dark|| = {worst:.2e} (< 1e-10)")
    assert ok


def test_c05_zero_connection(record):
    dd, halving = 0.0, 0.0
    for theta in THETAS:
        for M in range(0, 7):
            full = connection_matrix(theta, M, delta=1e-5)
            half = connection_matrix(theta, M, delta=5e-6)
            dd = max(dd, full.max_dark_dark, half.max_dark_dark)
            if full.matrix.size:
                halving = max(halving, float(np.max(np.abs(full.matrix - half.matrix))))
    cm = connection_matrix(0.7, 4, delta=1e-5)
    lab = DressedLabel(1, 1, 2)
    four = [DressedLabel(0, 1, 3), DressedLabel(1, 0, 3), DressedLabel(1, 2, 1), DressedLabel(2, 1, 1)]
    four_vals = [abs(cm.entry(t, lab)) for t in four]
    others = max(abs(cm.entry(r, lab)) for r in cm.rows if r not in four)
    ok = dd < 1e-8 and halving < 1e-8 and max(four_vals) > 1e-3 and others < 1e-8
    record(5, ok, "zero dark-dark connection",
           f"max dark-dark {dd:.1e}, delta-halving change {halving:.1e}, "
           f"four-term entries {min(four_vals):.3f}..{max(four_vals):.3f}, other entries {others:.1e}")
    assert ok


def test_c06_adiabatic_transfer(record, standard_cycle):
    res = standard_cycle
    ladder = []
    for T in T_LADDER:
        r = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), SUPERPOSITION,
                             ramps=CycleSchedule.cosine(1.0, 20.0, T, 100.0), snapshots=10)
        ladder.append(r.f_cycle)
    increasing = bool(np.all(np.diff(ladder) > 0))
    norm_err = final_norm_error(res)
    ok = (res.max_eta <= 0.01 and res.f_write >= 0.99 and res.f_cycle >= 0.99 and increasing
          and norm_err < 1e-8)
    record(6, ok, "adiabatic transfer",
           f"max eta {res.max_eta:.2e}, F_write {res.f_write:.7f}, F_cycle {res.f_cycle:.7f}, "
           f"|norm-1| {norm_err:.1e}; F_cycle over T={list(T_LADDER)}: "
           f"{[round(f, 9) for f in ladder]} increasing={increasing}")
    assert ok


def test_c07_integrator_order(record):
    params = ModelParams(1.0)
    sched = PulseSchedule.composite([PulseSchedule.hold(2.0, 10.0), PulseSchedule.cosine(2.0, 0.0, 20.0)])
    dt = 1.0 / (20.0 * max_gap(params, sched))
    psi0 = (dressed_state(DressedLabel(0, 0, 2), 0.3) + dressed_state(DressedLabel(1, 0, 1), 0.3)).normalized()

    def final(h):
        cfg = IntegratorConfig(dt=h, snapshots=1, track_dark=False)
        return evolve(Flavor.BOSONIC, params, sched, psi0, cfg).final.amplitudes

    ref = final(dt / 8)
    e1 = np.linalg.norm(final(dt) - ref)
    e2 = np.linalg.norm(final(dt / 2) - ref)
    ratio = e1 / e2
    ok = 8.0 <= ratio <= 32.0
    record(7, ok, "integrator order", f"error ratio dt -> dt/2 = {ratio:.2f} (16 within a factor 2)")
    assert ok


def test_c08_finite_N(record):
    ramps = CycleSchedule.cosine(1.0, 20.0, T_FINITE_N, 100.0)
    _, rows2 = finite_N_comparison(PhotonCode.fock(2), 1.0, N_LADDER, ramps=ramps, snapshots=2)
    dev = np.array([r.deviation for r in rows2])
    slope = float(np.polyfit(np.log(N_LADDER), np.log(dev), 1)[0])
    monotone = bool(np.all(np.diff(dev) < 0))
    short = CycleSchedule.cosine(1.0, 20.0, 3000.0, 100.0)
    _, rows1 = finite_N_comparison(PhotonCode.fock(1), 1.0, N_LADDER, ramps=short, snapshots=2)
    m1 = max(r.deviation for r in rows1)
    ok = monotone and abs(slope + 1.0) <= 0.15 and m1 < 1e-10
    record(8, ok, "finite-N convergence",
           f"M=2 deviations {[f'{d:.3e}' for d in dev]} monotone={monotone} slope {slope:.3f}; "
           f"M=1 max deviation {m1:.1e}")
    assert ok


def test_c09_decay_discrimination(record):
    ramps = CycleSchedule.cosine(1.0, 20.0, 3000.0, 100.0)
    decay = DecayConfig(GAMMA)
    dark = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), SUPERPOSITION, PairedStateSpec(0), ramps,
                            decay=decay, snapshots=100)
    paired = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), SUPERPOSITION, PairedStateSpec(1), ramps,
                              decay=decay, snapshots=100)
    not_dark = 0.0
    for trs in dark.trajectories.values():
        p_dark = sum(tr.p_dark for tr in trs.values())
        not_dark = max(not_dark, float(np.max(1.0 - p_dark)))
    bound = GAMMA * dark.duration * not_dark + 1e-6
    ok = paired.norm_lost > dark.norm_lost and dark.norm_lost <= bound
    record(9, ok, "decay discrimination",
           f"norm lost m=1 {paired.norm_lost:.4f} vs m=0 {dark.norm_lost:.2e} (bound {bound:.2e})")
    assert ok


def test_c10_sign_convention(record, standard_cycle):
    res = standard_cycle
    write_ok = res.write_overlap_signed > res.write_overlap_plain
    cycle_ok = abs(res.cycle_overlap_signed - res.cycle_overlap_plain) < 1e-12
    same = res.f_cycle == res.cycle_overlap_plain and res.f_cycle >= 0.99
    ok = write_ok and cycle_ok and same
    record(10, ok, "sign convention",
           f"write: signed {res.write_overlap_signed:.7f} vs plain {res.write_overlap_plain:.2e}; "
           f"cycle: signed {res.cycle_overlap_signed:.9f} plain {res.cycle_overlap_plain:.9f}")
    assert ok
