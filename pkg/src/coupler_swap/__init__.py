"""Coupler-mediated swap of multi-qubit states between two resonator registers."""

from .hilbert import (
    FrameHamiltonian,
    Operator,
    QuantumState,
    SpaceDescriptor,
    basis_state,
    coupler_sigma,
    expectation,
    make_space,
    mode_annihilator,
    mode_creator,
)
from .model import (
    DeviceParams,
    EffectiveParams,
    IsolationReport,
    build_crosstalk_hamiltonian,
    build_effective_hamiltonians,
    build_interaction_hamiltonian,
    build_swap_hamiltonian,
    check_isolation,
    effective_params,
    solve_detuning_matching,
)
from .dynamics import (
    EvolutionSpec,
    IntegrationError,
    Trajectory,
    analytic_effective_evolution,
    evolve_lindblad,
    evolve_schrodinger,
    verify_heisenberg_transform,
)
from .protocol import (
    LogicalState,
    ProtocolResult,
    StaggerSchedule,
    compute_stagger_schedule,
    embed_logical,
    fidelity,
    ideal_target,
    make_named_state,
    run_protocol,
    run_staggered,
)

__version__ = "0.1.0"
