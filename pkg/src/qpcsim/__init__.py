"""Simulator for GHZ-based quantum private comparison and the twice-Hadamard-CNOT attack."""
from .attack import AttackReport, KnowledgeModel, MeasureResendAttack, TwiceHCnotAttack
from .ecc import BlockCode, LinearCode, hamming74, identity, repetition3
from .harness import ExperimentSpec, StatsReport, emit, run_experiment
from .protocol import (
    AnnouncementModel,
    Outcome,
    OutcomeKind,
    PermutationMode,
    ProtocolConfig,
    RoundTranscript,
    Variant,
    run,
)
from .qsim import Basis, Gate, QubitPool, StateVector

__version__ = "0.1.0"
