"""Exact simulation of W-state entanglement concentration with charge detection."""

from wecp.elements import (
    BranchOutcome,
    ChargeOutcome,
    ParityOutcome,
    PbsPorts,
    charge_detect,
    hadamard,
    measure_spin,
    parity_gate,
    pbs,
    phase_correct,
)
from wecp.errors import DegenerateInputError, EmptyBranchError, NormalizationError
from wecp.protocols import (
    IterationSchedule,
    ProtocolReport,
    StepProbabilities,
    ecp1_run,
    ecp1_step1_prob,
    ecp1_step2_prob,
    ecp1_total_prob,
    ecp2_run,
    ecp2_total_prob,
    p_step1_round,
    p_step2_round,
    recoeff_step1_failure,
    recoeff_step2_failure,
)
from wecp.state import (
    SYMMETRIC,
    QuantumState,
    Spin,
    WCoefficients,
    branch_probability,
    make_single_electron,
    make_w_state,
    project_and_normalize,
    tensor,
)

__version__ = "0.1.0"
