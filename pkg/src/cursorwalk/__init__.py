"""Feynman cursor-model machines running Grover's search: compile, evolve, analyse."""

from .kernels import BACKEND
from .pathspec import (
    CursorGraph,
    EdgeLabel,
    LogicalPath,
    build_cnot_network,
    build_full_machine,
    build_linear_chain,
    build_subroutine_machine,
    enumerate_successors,
    oracle_call_indices,
    path_length,
    steps_approx,
    steps_exact,
)
from .spinops import apply_estimator, apply_oracle, grover_coefficients, grover_state
from .walkdyn import (
    LAMBDA,
    bessel_j,
    bessel_packet,
    chain_amplitude,
    chain_amplitudes,
    completion_peak,
    continuum_density,
    first_peak,
    pr_closed_chain,
    pr_closed_subroutine,
    pr_exact_chain,
    pr_exact_subroutine,
)
from .evolve import (
    SectorBasis,
    SectorState,
    SparseHamiltonian,
    assemble,
    audit_conservation,
    evolve_state,
    expectation_counter,
    expectation_cursor,
    initial_state,
    prob_completed_target,
    prob_register_target,
)

__version__ = "0.1.0"
