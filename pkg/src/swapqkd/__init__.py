"""Simulation of the entanglement-swapping key distribution protocol and an
eavesdropping attack on it that leaks the whole key without introducing errors."""

from .analysis import (
    BranchTree,
    Checkpoint,
    CorrespondenceTable,
    StrategyReport,
    enumerate_branches,
    evaluate,
    knowledge_audit,
    reconstruct_table,
    sample_runs,
)
from .bellalg import Side, SignedPauli, compose_pauli, pauli_action, sigma_for, swap_label, verify_tables
from .protocol import (
    InconsistentRunError,
    Party,
    ProtocolConfig,
    RunResult,
    Strategy,
    eve_infer_key,
    infer_alice,
    infer_bob,
    run,
    run_attack,
    run_honest,
)
from .qstate import (
    BELL_LABELS,
    BellLabel,
    MeasurementOutcome,
    Pauli,
    PureState,
    apply_pauli,
    bell_branches,
    make_bell,
    sample_bell,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "BELL_LABELS",
    "BellLabel",
    "BranchTree",
    "Checkpoint",
    "CorrespondenceTable",
    "InconsistentRunError",
    "MeasurementOutcome",
    "Party",
    "Pauli",
    "ProtocolConfig",
    "PureState",
    "RunResult",
    "Side",
    "SignedPauli",
    "Strategy",
    "StrategyReport",
    "apply_pauli",
    "bell_branches",
    "compose_pauli",
    "enumerate_branches",
    "evaluate",
    "eve_infer_key",
    "infer_alice",
    "infer_bob",
    "knowledge_audit",
    "make_bell",
    "pauli_action",
    "reconstruct_table",
    "run",
    "run_attack",
    "run_honest",
    "sample_bell",
    "sample_runs",
    "sigma_for",
    "swap_label",
    "tensor",
    "verify_tables",
]
