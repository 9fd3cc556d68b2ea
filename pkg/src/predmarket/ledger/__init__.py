"""Colored-coin ledger with outcome split, combine and force transactions."""
from .assets import (
    EMPTY_HISTORY, UNBET, AssetKey, ColoredAsset, EventId, History, HistoryEntry,
    Outcome, OutcomeTag, SetIdError, Unbet, VectorLeg, VectorSpec, canonical_set_id,
    derive_event_id, extend_set_id, forced, history, no, yes,
)
from .state import (
    OPERATIONS, AuditReport, InsufficientBalance, InvalidTransaction, Ledger, LedgerError,
    SnapshotMismatch, Tx, Unauthorized, UnknownAddress, announce_ownership, burn, operation,
    outcome_combine, outcome_force, outcome_split, register, transfer,
)
