"""Shared-memory simulator for k-set agreement over swap objects."""

from .memory import BOT, ObjectStore, SwapCellValue, dominated, value_of
from .protocols import PairedKSet, ProtocolParams, SwapKSetAgreement, paired_kset
from .harness import (
    Configuration,
    Explicit,
    RoundRobin,
    SeededRandom,
    Solo,
    Trace,
    indistinguishable,
    initial_configuration,
    replay,
    run,
    solo_run,
)

__version__ = "0.1.0"
