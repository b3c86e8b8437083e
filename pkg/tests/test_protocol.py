import math

import numpy as np
import pytest

from qsw_memory.algebra import ModelParams
from qsw_memory.dynamics import DecayConfig
from qsw_memory.fock import Flavor, InvalidParameterError
from qsw_memory.oracle import ResourceLimitError
from qsw_memory.protocol import (
    CycleSchedule,
    PairedStateSpec,
    PhotonCode,
    ProtocolConfigurationError,
    SectorFamily,
    dark_family,
    paired_state,
    prepare_initial,
    reduced_density_matrix,
    run_memory_cycle,
)
from qsw_memory.schedules import PulseSchedule

SHORT = CycleSchedule.cosine(1.0, ramp_time=300.0, hold_time=20.0)


def test_photon_code():
    code = PhotonCode.from_amplitudes([1, 1j])
    np.testing.assert_allclose(code.array, [1 / math.sqrt(2), 1j / math.sqrt(2)])
    assert code.support() == [0, 1]
    np.testing.assert_allclose(code.signed(1), [1 / math.sqrt(2), -1j / math.sqrt(2)])
    assert PhotonCode.fock(3).n_max == 3
    with pytest.raises(InvalidParameterError):
        PhotonCode((1.0, 1.0))


def test_paired_state_m1():
    psi = paired_state(PairedStateSpec(1, "C"))
    sec = psi.sector
    want = np.zeros(sec.dim)
    want[sec.index[(0, 2, 0)]] = 1 / math.sqrt(2)
    want[sec.index[(0, 0, 2)]] = -1 / math.sqrt(2)
    np.testing.assert_allclose(psi.amplitudes, want, atol=1e-15)
    with pytest.raises(InvalidParameterError):
        PairedStateSpec(0, "B")


def test_initial_state_at_zero_angle_is_the_code():
    code = PhotonCode.from_amplitudes([0.6, 0.0, 0.8])
    fam = prepare_initial(code, theta=0.0)
    rho = reduced_density_matrix(fam, "photon")
    np.testing.assert_allclose(rho, np.outer(code.array, code.array.conj()), atol=1e-14)


def test_initial_state_budget():
    with pytest.raises(ResourceLimitError):
        prepare_initial(PhotonCode.fock(7), PairedStateSpec(2), 0.1)


def test_dicke_initial_single_excitation_equals_bosonic():
    code = PhotonCode.from_amplitudes([1, 1])
    th = math.atan2(1.0, 20.0)
    b = prepare_initial(code, theta=th)
    d = prepare_initial(code, theta=th, flavor=Flavor.DICKE, N=5)
    for M in b:
        np.testing.assert_allclose(abs(np.vdot(b[M].amplitudes, d[M].amplitudes)), abs(code.array[M]) ** 2,
                                   atol=1e-12)


@pytest.mark.parametrize("mode", ["photon", "A", "C"])
def test_reduced_density_matrix_properties(mode):
    code = PhotonCode.from_amplitudes([0.3, 0.5j, -0.2, 0.4])
    fam = dark_family(code, PairedStateSpec(1), 0.8)
    rho = reduced_density_matrix(fam, mode)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
    with pytest.raises(InvalidParameterError):
        reduced_density_matrix(fam, "B")


def test_dark_family_at_right_angle_is_in_C_mode():
    code = PhotonCode.from_amplitudes([1, 2])
    fam = dark_family(code, PairedStateSpec(), math.pi / 2)
    rho = reduced_density_matrix(fam, "C")
    # transport sign (-1)^n appears in the stored coefficients
    c = code.signed(1)
    np.testing.assert_allclose(rho, np.outer(c, c.conj()), atol=1e-14)


def test_cycle_schedule_validation():
    SHORT.validate(1.0)
    bad = CycleSchedule(PulseSchedule.cosine(5.0, 0.0, 100.0), SHORT.hold, SHORT.read)
    with pytest.raises(ProtocolConfigurationError):
        bad.validate(1.0)
    bad = CycleSchedule(SHORT.write, PulseSchedule.hold(0.5, 10.0), SHORT.read)
    with pytest.raises(ProtocolConfigurationError):
        bad.validate(1.0)
    assert SHORT.duration == 620.0
    assert SHORT.max_omega() == 20.0


def test_memory_cycle_asymptote():
    # after a slow round trip the photon overlap is (1 + cos theta0)/2
    code = PhotonCode.from_amplitudes([1, 1])
    res = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), code, ramps=SHORT, snapshots=20)
    theta0 = math.atan2(1.0, 20.0)
    assert res.f_cycle == pytest.approx((1 + math.cos(theta0)) / 2, abs=2e-5)
    assert res.f_write > 0.9999
    assert res.write_overlap_signed > 0.999 > 0.01 > res.write_overlap_plain
    assert res.norm_lost == pytest.approx(0.0, abs=1e-10)
    d = res.to_dict()
    assert set(d) >= {"F_write", "F_cycle", "rho_C_write", "rho_photon_cycle"}


def test_memory_cycle_dicke_single_excitation_matches():
    code = PhotonCode.from_amplitudes([1, 1])
    b = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), code, ramps=SHORT, snapshots=5)
    d = run_memory_cycle(Flavor.DICKE, ModelParams(1.0, 0.0, 3), code, ramps=SHORT, snapshots=5)
    assert abs(b.f_cycle - d.f_cycle) < 1e-10


def test_memory_cycle_decay_spares_dark_family():
    code = PhotonCode.from_amplitudes([1, 1])
    dark = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), code, ramps=SHORT,
                            decay=DecayConfig(0.1), snapshots=10)
    paired = run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), code, PairedStateSpec(1), SHORT,
                              decay=DecayConfig(0.1), snapshots=10)
    assert dark.norm_lost <= 0.1 * dark.duration * dark.max_bright_fraction + 1e-6
    assert paired.norm_lost > 0.5 > 0.01 > dark.norm_lost


def test_memory_cycle_rejects_coarse_dt():
    with pytest.raises(InvalidParameterError):
        run_memory_cycle(Flavor.BOSONIC, ModelParams(1.0), PhotonCode.fock(1), ramps=SHORT, dt=0.01)


def test_sector_family_helpers():
    fam = dark_family(PhotonCode.from_amplitudes([1, 1]), PairedStateSpec(), 0.3)
    assert fam.norm2() == pytest.approx(1.0)
    assert fam.inner(fam) == pytest.approx(1.0)
    assert isinstance(fam.copy(), SectorFamily)
    assert fam.occupation_grid().shape == (2, 2, 2)
