"""Simulator for a collective-excitation (quasi-spin-wave) quantum memory.

Two representations of the exciton-photon model are provided: the exact
symmetric-sector (Dicke) form for N three-level atoms and its large-N
two-boson limit.  On top of them sit dressed-state spectra, the geometric
connection between dark and bright states, a fixed-step integrator for
time-dependent control fields and the write/hold/read storage cycle.
"""

from .algebra import ModelParams, PolaritonAngle, build_hamiltonian, build_operators, commutator_report
from .dynamics import DecayConfig, IntegratorConfig, Trajectory, adiabaticity_trace, evolve
from .fock import (
    BasisState,
    Flavor,
    FlavorError,
    InvalidParameterError,
    SectorBasis,
    ShapeError,
    SparseOperator,
    StateVector,
    enumerate_sector,
)
from .protocol import (
    CycleSchedule,
    PairedStateSpec,
    PhotonCode,
    finite_N_comparison,
    prepare_initial,
    reduced_density_matrix,
    run_memory_cycle,
)
from .schedules import PulseSchedule, ScheduleKind
from .spectrum import DressedLabel, connection_matrix, dark_projector, dressed_state, sector_spectrum

__version__ = "0.1.0"
